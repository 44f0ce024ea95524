"""Dense linear-algebra kernels shared by the recovery algorithms.

Matrices and vectors are plain ``float64`` NumPy arrays. Every routine here is
a pure function of its inputs (or of the matrix it was built from), so the
same objects can be used from several worker processes at once.
"""

import logging
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from recoverlab.utils import inf

__all__ = ["RANK_TOL", "DimensionMismatchError", "RankDeficientError",
           "FrameBounds", "as_matrix", "as_vector", "least_squares",
           "correlate", "frame_bounds", "row_space_project",
           "numerical_rank", "independent_prefix", "RowSpaceProjector",
           "IncrementalLeastSquares"]

logger = logging.getLogger(__name__)

#: Columns whose R-diagonal magnitude falls below ``RANK_TOL`` times the
#: largest diagonal magnitude are treated as linearly dependent.
RANK_TOL = 1e-12


class DimensionMismatchError(ValueError):
    """Raised when operand shapes do not agree."""
    pass


class RankDeficientError(np.linalg.LinAlgError):
    """Raised when a matrix that must have full rank is numerically rank
    deficient.
    """
    pass


class FrameBounds(NamedTuple):
    """Extreme gains :math:`A \\le ||\\Phi x||_2 / ||x||_2 \\le B` of a
    sensing matrix.
    """
    lower: float
    upper: float

    @property
    def ratio(self) -> float:
        """Condition ratio :math:`B/A`, infinite when :math:`A = 0`."""
        if self.lower == 0.0:
            return inf
        return self.upper / self.lower


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-D ``float64`` array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatchError(
            f"expected a non-empty matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def as_vector(v) -> np.ndarray:
    """Return ``v`` as a finite 1-D ``float64`` array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(
            f"expected a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector entries must be finite")
    return arr


def _first_small_pivot(r_diag: np.ndarray) -> int:
    d = np.abs(r_diag)
    if d.size == 0:
        return 0
    dmax = d.max()
    if dmax == 0.0:
        return 0
    small = np.flatnonzero(d < RANK_TOL * dmax)
    return int(small[0]) if small.size else d.size


def least_squares(A, b) -> np.ndarray:
    r"""Solve :math:`\min_c ||b - Ac||_2` for a full column rank ``A``.

    The solution is obtained from a Householder QR factorization,
    :math:`c = R^{-1} Q^T b`.

    :param A: ``m x k`` matrix with ``k <= m``.
    :type A: np.ndarray

    :param b: Right-hand side of length ``m``.
    :type b: np.ndarray

    :raises DimensionMismatchError: If ``b`` does not have ``m`` entries.
    :raises RankDeficientError: If ``A`` has numerical rank below ``k``.
    """
    A = as_matrix(A)
    b = as_vector(b)
    m, k = A.shape
    if b.shape[0] != m:
        raise DimensionMismatchError(
            f"right-hand side has {b.shape[0]} entries, expected {m}")
    if k > m:
        raise RankDeficientError(f"{k} columns cannot be independent in "
                                 f"{m} dimensions")

    q, r = sla.qr(A, mode="economic")
    if _first_small_pivot(np.diag(r)) < k:
        raise RankDeficientError("columns are numerically dependent")
    return sla.solve_triangular(r, q.T @ b)


def correlate(Phi, r) -> np.ndarray:
    r"""Return the correlations :math:`\langle r, \varphi_n \rangle` of ``r``
    with every column of ``Phi``.

    >>> import numpy as np
    >>> correlate(np.eye(3), np.array([5.0, 0.0, -1.0])).tolist()
    [5.0, 0.0, -1.0]
    """
    Phi = as_matrix(Phi)
    r = as_vector(r)
    if Phi.shape[0] != r.shape[0]:
        raise DimensionMismatchError(
            f"residual has {r.shape[0]} entries, matrix has "
            f"{Phi.shape[0]} rows")
    return Phi.T @ r


def frame_bounds(Phi) -> FrameBounds:
    r"""Frame bounds of ``Phi`` seen as a map on all of :math:`\mathbb{R}^N`.

    .. math:: A||x||_2 \le ||\Phi x||_2 \le B||x||_2

    ``B`` is the largest singular value. ``A`` is the smallest singular value
    when ``Phi`` is square; a wide matrix has a null space, so ``A = 0``.

    :raises DimensionMismatchError: If ``Phi`` has more rows than columns.
    :raises ValueError: If ``Phi`` is the zero matrix.
    """
    Phi = as_matrix(Phi)
    m, n = Phi.shape
    if m > n:
        raise DimensionMismatchError("frame bounds expect m <= N")

    svals = sla.svdvals(Phi)
    upper = float(svals[0])
    if upper == 0.0:
        raise ValueError("Phi must be nonzero")
    lower = float(svals[-1]) if m == n else 0.0
    return FrameBounds(lower=lower, upper=upper)


def numerical_rank(A) -> int:
    """Numerical rank of ``A`` from a column-pivoted QR factorization."""
    A = as_matrix(A)
    _, r, _ = sla.qr(A, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    if d.size == 0 or d[0] == 0.0:
        return 0
    return int(np.count_nonzero(d >= RANK_TOL * d[0]))


def independent_prefix(Phi, columns: Sequence[int]) -> int:
    """Length of the longest prefix of ``columns`` whose columns of ``Phi``
    are linearly independent.

    :param Phi: Sensing matrix.
    :type Phi: np.ndarray

    :param columns: Ordered column indices, most important first.
    :type columns: Sequence[int]
    """
    cols = list(columns)[:Phi.shape[0]]
    if not cols:
        return 0
    _, r = sla.qr(Phi[:, cols], mode="economic")
    return _first_small_pivot(np.diag(r))


class RowSpaceProjector:
    r"""Applies :math:`\Phi^\dagger = \Phi^T(\Phi\Phi^T)^{-1}` for a full row
    rank ``Phi``.

    ``Phi^T`` is factorized once as :math:`QR`, after which
    :math:`\Phi^\dagger v = Q R^{-T} v`.
    """

    def __init__(self, Phi) -> None:
        """
        :param Phi: ``m x N`` sensing matrix with full row rank.
        :type Phi: np.ndarray

        :raises RankDeficientError: If :math:`\Phi\Phi^T` is numerically
                                    singular.
        """
        self.Phi = as_matrix(Phi)
        m, n = self.Phi.shape
        if m > n:
            raise RankDeficientError("a tall matrix has no full row rank")
        self._q, self._r = sla.qr(self.Phi.T, mode="economic")
        if _first_small_pivot(np.diag(self._r)) < m:
            raise RankDeficientError("Phi Phi^T is numerically singular")

    def min_norm(self, u) -> np.ndarray:
        """Minimum :math:`\\ell_2`-norm solution of :math:`\\Phi x = u`."""
        u = as_vector(u)
        if u.shape[0] != self.Phi.shape[0]:
            raise DimensionMismatchError(
                f"measurement has {u.shape[0]} entries, expected "
                f"{self.Phi.shape[0]}")
        y = sla.solve_triangular(self._r, u, trans="T")
        return self._q @ y

    def project(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Project ``x`` onto :math:`\\{x : \\Phi x = u\\}`."""
        return x - self.min_norm(self.Phi @ x - u)


def row_space_project(Phi, u) -> np.ndarray:
    r"""Return :math:`\Phi^T(\Phi\Phi^T)^{-1}u`, the minimum-norm solution of
    :math:`\Phi x = u`.

    :raises RankDeficientError: If ``Phi`` does not have full row rank.
    """
    return RowSpaceProjector(Phi).min_norm(u)


class IncrementalLeastSquares:
    """Least squares on a growing set of columns of a fixed matrix.

    The QR factorization of the selected columns is updated with
    :func:`scipy.linalg.qr_insert` instead of being recomputed, which is what
    the greedy pursuits need when they add one atom per iteration.
    """

    def __init__(self, Phi: np.ndarray, b: np.ndarray) -> None:
        """
        :param Phi: ``m x N`` matrix whose columns are selected.
        :type Phi: np.ndarray

        :param b: Right-hand side of length ``m``.
        :type b: np.ndarray
        """
        self.Phi = Phi
        self.b = b
        self.columns: list[int] = []
        self._q: np.ndarray | None = None
        self._r: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.columns)

    def add(self, index: int) -> bool:
        """Append column ``index``.

        Returns False, leaving the factorization untouched, when the column
        is numerically dependent on the columns already selected.
        """
        m = self.Phi.shape[0]
        k = len(self.columns)
        if k >= m:
            return False

        col = self.Phi[:, index]
        if k == 0:
            q, r = sla.qr(col[:, np.newaxis])
        else:
            q, r = sla.qr_insert(self._q, self._r, col, k, which="col")

        d = np.abs(np.diag(r[:k + 1, :k + 1]))
        if d.max() == 0.0 or d[k] < RANK_TOL * d.max():
            return False

        self._q, self._r = q, r
        self.columns.append(int(index))
        return True

    def coefficients(self) -> np.ndarray:
        """Least-squares coefficients, ordered like :attr:`columns`."""
        k = len(self.columns)
        if k == 0:
            return np.empty(0)
        qtb = self._q[:, :k].T @ self.b
        return sla.solve_triangular(self._r[:k, :k], qtb)

    def solution(self, n: int) -> np.ndarray:
        """Length-``n`` vector holding the coefficients on the selected
        columns and zeros elsewhere.
        """
        x = np.zeros(n)
        if self.columns:
            x[self.columns] = self.coefficients()
        return x
