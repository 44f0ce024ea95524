"""Problem instances for the sparse-recovery experiments.

Sensing matrices come from the uniform spherical ensemble (i.i.d. Gaussian
columns scaled to unit norm), sparse vectors from one of seven coefficient
laws, and every draw is reproducible from an integer seed.
"""

import enum
import logging
import zlib
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from recoverlab import validators
from recoverlab.numerics import DimensionMismatchError, as_matrix, as_vector
from recoverlab.utils import round_half_away, support

__all__ = ["MAGNITUDE_FLOOR", "InvalidDimensionsError",
           "InvalidSparsityError", "derive_seed", "make_rng", "DistType",
           "DistributionSpec", "NormalDist", "LaplacianDist", "UniformDist",
           "BernoulliDist", "BimodalGaussianDist", "BimodalUniformDist",
           "BimodalRayleighDist", "create_distribution", "ProblemInstance",
           "SuiteGrid", "sample_sensing_matrix", "sample_sparse_vector",
           "build_problem"]

logger = logging.getLogger(__name__)

#: Nonzero coefficients are redrawn until their magnitude exceeds this.
MAGNITUDE_FLOOR = 1e-10

_UNIT_NORM_TOL = 1e-12


class InvalidDimensionsError(ValueError):
    pass


class InvalidSparsityError(ValueError):
    pass


def derive_seed(seed: int, tag: str, *indices: int) -> int:
    """Derive an independent 64-bit sub-seed from ``seed``.

    The role ``tag`` and the integer ``indices`` (cell and trial positions)
    are folded into the spawn key of a :class:`numpy.random.SeedSequence`,
    so sub-seeds do not depend on the order in which they are requested.

    >>> derive_seed(7, "phi") == derive_seed(7, "phi")
    True
    >>> derive_seed(7, "phi") == derive_seed(7, "x")
    False
    """
    key = (zlib.crc32(tag.encode("utf-8")), *(int(i) for i in indices))
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(int(seed)))


class DistType(enum.StrEnum):
    """Enumeration of the nonzero-coefficient laws."""
    NORMAL = enum.auto()
    LAPLACIAN = enum.auto()
    UNIFORM = enum.auto()
    BERNOULLI = enum.auto()
    BIMODAL_GAUSSIAN = enum.auto()
    BIMODAL_UNIFORM = enum.auto()
    BIMODAL_RAYLEIGH = enum.auto()


class DistributionSpec(ABC):
    """Law of the nonzero entries of a sparse vector."""

    @property
    @abstractmethod
    def kind(self) -> DistType: ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Raw i.i.d. draws from the law."""
        ...

    @abstractmethod
    def density_near_zero(self, width: float) -> float:
        """Probability that a draw lands in :math:`[-w, w]`."""
        ...

    def draw_nonzero(self, rng: np.random.Generator,
                     size: int) -> np.ndarray:
        """Draws whose magnitudes all exceed :data:`MAGNITUDE_FLOOR`.

        Offending entries are redrawn in place until none remain.
        """
        values = self.sample(rng, size)
        bad = np.flatnonzero(np.abs(values) <= MAGNITUDE_FLOOR)
        while bad.size:
            values[bad] = self.sample(rng, bad.size)
            bad = bad[np.abs(values[bad]) <= MAGNITUDE_FLOOR]
        return values

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


def _random_signs(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.choice(np.array([-1.0, 1.0]), size=size)


class NormalDist(DistributionSpec):
    """Zero-mean Gaussian law."""

    def __init__(self, scale: float = 1.0) -> None:
        """
        :param scale: Standard deviation, defaults to 1.0.
        :type scale: float, optional
        """
        self.scale = scale

    @property
    def scale(self) -> float:
        return self._scale

    @scale.setter
    @validators.gt(0.0)
    def scale(self, val: float) -> None:
        self._scale = val

    @property
    def kind(self) -> DistType:
        return DistType.NORMAL

    def sample(self, rng, size):
        return rng.normal(0.0, self.scale, size)

    def density_near_zero(self, width: float) -> float:
        return float(2.0 * stats.norm.cdf(width / self.scale) - 1.0)


class LaplacianDist(DistributionSpec):
    r"""Laplacian law with density :math:`\frac{\lambda}{2}e^{-\lambda|x|}`."""

    def __init__(self, rate: float = 10.0) -> None:
        """
        :param rate: Rate :math:`\\lambda`, defaults to 10.0. The scale of the
                     law is :math:`1/\\lambda`.
        :type rate: float, optional
        """
        self.rate = rate

    @property
    def rate(self) -> float:
        return self._rate

    @rate.setter
    @validators.gt(0.0)
    def rate(self, val: float) -> None:
        self._rate = val

    @property
    def kind(self) -> DistType:
        return DistType.LAPLACIAN

    def sample(self, rng, size):
        return rng.laplace(0.0, 1.0 / self.rate, size)

    def density_near_zero(self, width: float) -> float:
        return float(1.0 - np.exp(-self.rate * width))


class UniformDist(DistributionSpec):
    """Uniform law on ``[low, high]``."""

    def __init__(self, low: float = -1.0, high: float = 1.0) -> None:
        if not low < high:
            raise ValueError(f"low must be < high, got [{low}, {high}]")
        self.low = low
        self.high = high

    @property
    def kind(self) -> DistType:
        return DistType.UNIFORM

    def sample(self, rng, size):
        return rng.uniform(self.low, self.high, size)

    def density_near_zero(self, width: float) -> float:
        overlap = min(width, self.high) - max(-width, self.low)
        return float(max(overlap, 0.0) / (self.high - self.low))

    def __repr__(self) -> str:
        return f"UniformDist(low={self.low}, high={self.high})"


class BernoulliDist(DistributionSpec):
    """Constant amplitude with an equiprobable random sign."""

    def __init__(self, amplitude: float = 1.0) -> None:
        self.amplitude = amplitude

    @property
    def amplitude(self) -> float:
        return self._amplitude

    @amplitude.setter
    @validators.gt(0.0)
    def amplitude(self, val: float) -> None:
        self._amplitude = val

    @property
    def kind(self) -> DistType:
        return DistType.BERNOULLI

    def sample(self, rng, size):
        return self.amplitude * _random_signs(rng, size)

    def density_near_zero(self, width: float) -> float:
        return 1.0 if width >= self.amplitude else 0.0


class BimodalGaussianDist(DistributionSpec):
    """Equal mixture of Gaussians centred at ``+mean`` and ``-mean``."""

    def __init__(self, mean: float = 3.0, scale: float = 1.0) -> None:
        self.mean = mean
        self.scale = scale

    @property
    def mean(self) -> float:
        return self._mean

    @mean.setter
    @validators.gt(0.0)
    def mean(self, val: float) -> None:
        self._mean = val

    @property
    def scale(self) -> float:
        return self._scale

    @scale.setter
    @validators.gt(0.0)
    def scale(self, val: float) -> None:
        self._scale = val

    @property
    def kind(self) -> DistType:
        return DistType.BIMODAL_GAUSSIAN

    def sample(self, rng, size):
        return (self.mean * _random_signs(rng, size)
                + rng.normal(0.0, self.scale, size))

    def density_near_zero(self, width: float) -> float:
        # both components contribute the same mass by symmetry
        hi = stats.norm.cdf((width - self.mean) / self.scale)
        lo = stats.norm.cdf((-width - self.mean) / self.scale)
        return float(hi - lo)


class BimodalUniformDist(DistributionSpec):
    """Uniform law on :math:`[-b, -a] \\cup [a, b]`."""

    def __init__(self, low: float = 2.0, high: float = 4.0) -> None:
        if not 0.0 <= low < high:
            raise ValueError(
                f"expected 0 <= low < high, got [{low}, {high}]")
        self.low = low
        self.high = high

    @property
    def kind(self) -> DistType:
        return DistType.BIMODAL_UNIFORM

    def sample(self, rng, size):
        return _random_signs(rng, size) * rng.uniform(self.low, self.high,
                                                      size)

    def density_near_zero(self, width: float) -> float:
        frac = (width - self.low) / (self.high - self.low)
        return float(np.clip(frac, 0.0, 1.0))

    def __repr__(self) -> str:
        return f"BimodalUniformDist(low={self.low}, high={self.high})"


class BimodalRayleighDist(DistributionSpec):
    """Rayleigh magnitude with an independent equiprobable sign."""

    def __init__(self, scale: float = 3.0) -> None:
        self.scale = scale

    @property
    def scale(self) -> float:
        return self._scale

    @scale.setter
    @validators.gt(0.0)
    def scale(self, val: float) -> None:
        self._scale = val

    @property
    def kind(self) -> DistType:
        return DistType.BIMODAL_RAYLEIGH

    def sample(self, rng, size):
        return _random_signs(rng, size) * rng.rayleigh(self.scale, size)

    def density_near_zero(self, width: float) -> float:
        return float(1.0 - np.exp(-width ** 2 / (2.0 * self.scale ** 2)))


_DISTRIBUTIONS = {
    DistType.NORMAL: NormalDist,
    DistType.LAPLACIAN: LaplacianDist,
    DistType.UNIFORM: UniformDist,
    DistType.BERNOULLI: BernoulliDist,
    DistType.BIMODAL_GAUSSIAN: BimodalGaussianDist,
    DistType.BIMODAL_UNIFORM: BimodalUniformDist,
    DistType.BIMODAL_RAYLEIGH: BimodalRayleighDist,
}


def create_distribution(dist_type: DistType | str,
                        **params) -> DistributionSpec:
    """A factory function that encapsulates the creation of coefficient
    laws.

    :param dist_type: Law to create; strings are matched case-insensitively.
    :type dist_type: DistType | str

    :param params: Keyword parameters forwarded to the law, the defaults
                   being the laws used throughout the experiments.

    :raises ValueError: If ``dist_type`` is not a known law.
    """
    if isinstance(dist_type, str):
        try:
            dist_type = DistType(dist_type.casefold())
        except ValueError:
            raise ValueError(
                f"distribution {dist_type!r} is not supported") from None
    return _DISTRIBUTIONS[dist_type](**params)


class ProblemInstance:
    """A sensing matrix, a sparse vector and its measurement
    :math:`u = \\Phi x`.

    The arrays are stored read-only so that one instance (or one matrix) can
    be shared between algorithms.
    """

    def __init__(self, Phi: np.ndarray, x: np.ndarray,
                 u: np.ndarray) -> None:
        """
        :param Phi: ``m x N`` sensing matrix with unit-norm columns.
        :type Phi: np.ndarray

        :param x: True sparse vector of length ``N``.
        :type x: np.ndarray

        :param u: Measurement vector of length ``m``.
        :type u: np.ndarray

        :raises DimensionMismatchError: If the shapes do not agree.
        :raises ValueError: If a column of ``Phi`` is not unit norm or ``x``
                            has an entry of magnitude in
                            :math:`(0, 10^{-10}]`.
        """
        Phi = as_matrix(Phi)
        x = as_vector(x)
        u = as_vector(u)
        m, n = Phi.shape
        if x.shape[0] != n or u.shape[0] != m:
            raise DimensionMismatchError(
                f"Phi is {m}x{n} but x has {x.shape[0]} and u has "
                f"{u.shape[0]} entries")
        if m > n:
            raise InvalidDimensionsError(f"expected m <= N, got m={m}, N={n}")

        norms = np.linalg.norm(Phi, axis=0)
        if np.any(np.abs(norms - 1.0) > _UNIT_NORM_TOL):
            raise ValueError("columns of Phi must have unit l2 norm")

        mags = np.abs(x)
        if np.any((mags > 0.0) & (mags <= MAGNITUDE_FLOOR)):
            raise ValueError(
                f"nonzero entries of x must exceed {MAGNITUDE_FLOOR}")

        for arr in (Phi, x, u):
            arr.setflags(write=False)
        self._Phi, self._x, self._u = Phi, x, u
        self._support = support(x)
        self._support.setflags(write=False)

    @classmethod
    def from_parts(cls, Phi, x) -> "ProblemInstance":
        """Build an instance from an explicit matrix and vector."""
        Phi = as_matrix(Phi)
        x = as_vector(x)
        if Phi.shape[1] != x.shape[0]:
            raise DimensionMismatchError(
                f"Phi has {Phi.shape[1]} columns but x has {x.shape[0]} "
                f"entries")
        return cls(Phi, x, Phi @ x)

    @property
    def Phi(self) -> np.ndarray:
        return self._Phi

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def u(self) -> np.ndarray:
        return self._u

    @property
    def support(self) -> np.ndarray:
        """Sorted indices of the nonzero entries of :attr:`x`."""
        return self._support

    @property
    def N(self) -> int:
        return self._Phi.shape[1]

    @property
    def m(self) -> int:
        return self._Phi.shape[0]

    @property
    def s(self) -> int:
        return int(self._support.size)

    @property
    def delta(self) -> float:
        """Indeterminacy :math:`\\delta = m/N`."""
        return self.m / self.N

    @property
    def rho(self) -> float:
        """Sparsity :math:`\\rho = s/m`."""
        return self.s / self.m

    def __repr__(self) -> str:
        return f"ProblemInstance(N={self.N}, m={self.m}, s={self.s})"


def _explicit_grid(values, name: str,
                   upper_open: bool) -> Optional[tuple[float, ...]]:
    if values is None:
        return None
    grid = tuple(float(v) for v in values)
    if not grid:
        raise ValueError(f"{name} must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"{name} must be strictly ascending")
    top_ok = grid[-1] < 1.0 if upper_open else grid[-1] <= 1.0
    if grid[0] <= 0.0 or not top_ok:
        raise ValueError(f"{name} out of range: {grid}")
    return grid


class SuiteGrid:
    """The (δ, ρ) grid swept by an experiment.

    Either linearly spaced values over a range (the default grid has 30
    sparsities in [0.05, 1] and 16 indeterminacies in [0.05, 0.5414]) or
    explicit lists.
    """

    def __init__(self, N: int = 400, rho_count: int = 30,
                 delta_count: int = 16, trials: int = 50,
                 master_seed: int = 0, rho_range=(0.05, 1.0),
                 delta_range=(0.05, 0.5414),
                 deltas: Optional[Sequence[float]] = None,
                 rhos: Optional[Sequence[float]] = None) -> None:
        """
        :param N: Ambient dimension, defaults to 400.
        :type N: int, optional

        :param rho_count: Number of linearly spaced sparsities, defaults
                          to 30.
        :type rho_count: int, optional

        :param delta_count: Number of linearly spaced indeterminacies,
                            defaults to 16.
        :type delta_count: int, optional

        :param trials: Trials per cell, defaults to 50.
        :type trials: int, optional

        :param master_seed: Seed every sub-seed of the sweep derives from,
                            defaults to 0.
        :type master_seed: int, optional

        :param rho_range: Closed interval of sparsities, defaults to
                          ``(0.05, 1.0)``.

        :param delta_range: Closed interval of indeterminacies, defaults to
                            ``(0.05, 0.5414)``.

        :param deltas: Explicit ascending indeterminacies replacing the
                       linearly spaced ones, defaults to None.
        :type deltas: Sequence[float], optional

        :param rhos: Explicit ascending sparsities replacing the linearly
                     spaced ones, defaults to None.
        :type rhos: Sequence[float], optional
        """
        self.N = N
        self.rho_count = rho_count
        self.delta_count = delta_count
        self.trials = trials
        self.master_seed = master_seed
        self.rho_range = rho_range
        self.delta_range = delta_range
        self.deltas = deltas
        self.rhos = rhos

    @property
    def N(self) -> int:
        return self._N

    @N.setter
    @validators.ge(2)
    def N(self, val: int) -> None:
        self._N = int(val)

    @property
    def rho_count(self) -> int:
        return self._rho_count

    @rho_count.setter
    @validators.ge(1)
    def rho_count(self, val: int) -> None:
        self._rho_count = int(val)

    @property
    def delta_count(self) -> int:
        return self._delta_count

    @delta_count.setter
    @validators.ge(1)
    def delta_count(self, val: int) -> None:
        self._delta_count = int(val)

    @property
    def trials(self) -> int:
        return self._trials

    @trials.setter
    @validators.ge(1)
    def trials(self, val: int) -> None:
        self._trials = int(val)

    @property
    def master_seed(self) -> int:
        return self._master_seed

    @master_seed.setter
    @validators.ge(0)
    def master_seed(self, val: int) -> None:
        self._master_seed = int(val)

    @property
    def rho_range(self) -> tuple[float, float]:
        return self._rho_range

    @rho_range.setter
    def rho_range(self, val) -> None:
        lo, hi = map(float, val)
        if not 0.0 < lo <= hi <= 1.0:
            raise ValueError(f"expected 0 < rho_min <= rho_max <= 1, "
                             f"got {val}")
        self._rho_range = (lo, hi)

    @property
    def delta_range(self) -> tuple[float, float]:
        return self._delta_range

    @delta_range.setter
    def delta_range(self, val) -> None:
        lo, hi = map(float, val)
        if not 0.0 < lo <= hi < 1.0:
            raise ValueError(f"expected 0 < delta_min <= delta_max < 1, "
                             f"got {val}")
        self._delta_range = (lo, hi)

    @property
    def deltas(self) -> Optional[tuple[float, ...]]:
        return self._deltas

    @deltas.setter
    def deltas(self, val: Optional[Sequence[float]]) -> None:
        self._deltas = _explicit_grid(val, "deltas", upper_open=True)

    @property
    def rhos(self) -> Optional[tuple[float, ...]]:
        return self._rhos

    @rhos.setter
    def rhos(self, val: Optional[Sequence[float]]) -> None:
        self._rhos = _explicit_grid(val, "rhos", upper_open=False)

    @property
    def rho_values(self) -> np.ndarray:
        """
        >>> SuiteGrid().rho_values[[0, -1]].tolist()
        [0.05, 1.0]
        """
        if self.rhos is not None:
            return np.array(self.rhos)
        return np.linspace(*self.rho_range, self.rho_count)

    @property
    def delta_values(self) -> np.ndarray:
        """
        >>> SuiteGrid().delta_values[[0, -1]].tolist()
        [0.05, 0.5414]
        >>> SuiteGrid(deltas=[0.15, 0.34, 0.54]).delta_values.tolist()
        [0.15, 0.34, 0.54]
        """
        if self.deltas is not None:
            return np.array(self.deltas)
        return np.linspace(*self.delta_range, self.delta_count)

    def to_dict(self) -> dict:
        out = {"N": self.N, "rho_count": self.rho_count,
               "delta_count": self.delta_count, "trials": self.trials,
               "master_seed": self.master_seed,
               "rho_range": list(self.rho_range),
               "delta_range": list(self.delta_range)}
        if self.deltas is not None:
            out["deltas"] = list(self.deltas)
        if self.rhos is not None:
            out["rhos"] = list(self.rhos)
        return out

    def __repr__(self) -> str:
        return (f"SuiteGrid(N={self.N}, rho_count={self.rho_count}, "
                f"delta_count={self.delta_count}, trials={self.trials}, "
                f"master_seed={self.master_seed})")


def sample_sensing_matrix(m: int, N: int, seed: int) -> np.ndarray:
    """Draw an ``m x N`` matrix from the uniform spherical ensemble.

    Entries are i.i.d. standard Gaussian and each column is then scaled to
    unit :math:`\\ell_2` norm in :math:`\\mathbb{R}^m`.

    :raises InvalidDimensionsError: Unless ``1 <= m < N``.
    """
    if not 1 <= m < N:
        raise InvalidDimensionsError(
            f"expected 1 <= m < N, got m={m}, N={N}")
    rng = make_rng(seed)
    Phi = rng.standard_normal((m, N))
    Phi /= np.linalg.norm(Phi, axis=0)
    return Phi


def sample_sparse_vector(N: int, s: int, dist: DistributionSpec,
                         seed: int) -> np.ndarray:
    """Draw a vector with exactly ``s`` nonzeros at uniformly random
    distinct positions, the nonzeros drawn i.i.d. from ``dist``.

    :raises InvalidSparsityError: Unless ``1 <= s <= N``.
    """
    if not 1 <= s <= N:
        raise InvalidSparsityError(
            f"expected 1 <= s <= N, got s={s}, N={N}")
    rng = make_rng(seed)
    idx = rng.choice(N, size=s, replace=False)
    x = np.zeros(N)
    x[idx] = dist.draw_nonzero(rng, s)
    return x


def build_problem(N: int, delta: float, rho: float, dist: DistributionSpec,
                  seed: int, phi: np.ndarray | None = None
                  ) -> ProblemInstance:
    """Build the instance at indeterminacy ``delta`` and sparsity ``rho``.

    :math:`m = \\mathrm{round}(\\delta N)` and
    :math:`s = \\max(1, \\mathrm{round}(\\rho m))`, rounding halves away from
    zero. The matrix and the vector use sub-seeds derived from ``seed``.

    :param phi: Precomputed ``m x N`` sensing matrix shared by several
                trials, defaults to None (draw a fresh one).
    :type phi: np.ndarray, optional

    :raises InvalidDimensionsError: If ``delta`` is not in (0, 1).
    :raises InvalidSparsityError: If ``rho`` is not in (0, 1].

    >>> p = build_problem(400, 0.5414, 0.05, NormalDist(), seed=1)
    >>> (p.m, p.s)
    (217, 11)
    """
    if not 0.0 < delta < 1.0:
        raise InvalidDimensionsError(f"delta must be in (0, 1), got {delta}")
    if not 0.0 < rho <= 1.0:
        raise InvalidSparsityError(f"rho must be in (0, 1], got {rho}")

    m = round_half_away(delta * N)
    s = max(1, round_half_away(rho * m))
    if phi is None:
        phi = sample_sensing_matrix(m, N, derive_seed(seed, "phi"))
    elif phi.shape != (m, N):
        raise DimensionMismatchError(
            f"shared matrix is {phi.shape}, expected {(m, N)}")
    x = sample_sparse_vector(N, s, dist, derive_seed(seed, "x"))
    return ProblemInstance(phi, x, phi @ x)
