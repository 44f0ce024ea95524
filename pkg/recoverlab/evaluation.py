"""Debiasing, the two exact-recovery criteria, success probabilities and
empirical phase transitions.

A trial is judged after debiasing the raw estimate: the largest entries of
:math:`\\hat{x}` pick a full-rank support, least squares is solved on it and
magnitudes at or below :data:`DEBIAS_FLOOR` are zeroed. Recovery is then
tested with

.. math::

    (R_{\\ell_2}) \\quad \\frac{||x - \\hat{x}||_2}{||x||_2} \\le \\epsilon_x
    \\qquad (R_S) \\quad S(\\hat{x}) = S(x)
"""

import dataclasses
import enum
import logging
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from recoverlab import validators
from recoverlab.numerics import (frame_bounds, independent_prefix,
                                 least_squares)
from recoverlab.problem_suite import ProblemInstance
from recoverlab.utils import inf, top_k_indices

__all__ = ["DEBIAS_FLOOR", "ZeroTruthError", "EmptyCellError",
           "GridMismatchError", "CriterionType", "RecoveryCriterion",
           "TrialRecord", "PhaseTransitionCurve", "CriterionBound",
           "TrialOutcome", "debias", "check_l2", "check_support",
           "success_probability", "phase_transition",
           "criterion_bound_check", "partial_support_error",
           "single_entry_ratio_bound", "criterion_gap", "best_envelope",
           "evaluate_trial"]

logger = logging.getLogger(__name__)

#: Debiased magnitudes at or below this count as zero.
DEBIAS_FLOOR = 1e-10


class ZeroTruthError(ZeroDivisionError):
    pass


class EmptyCellError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


class CriterionType(enum.StrEnum):
    RELATIVE_L2 = enum.auto()
    SUPPORT_EQUALITY = enum.auto()


class RecoveryCriterion:
    """One of the two exact-recovery criteria."""

    def __init__(self, kind: CriterionType | str = CriterionType.RELATIVE_L2,
                 epsilon_x: float = 1e-2) -> None:
        """
        :param kind: Criterion to apply, defaults to relative
                     :math:`\\ell_2` error.
        :type kind: CriterionType | str, optional

        :param epsilon_x: Relative error tolerance of the :math:`\\ell_2`
                          criterion, defaults to 1e-2.
        :type epsilon_x: float, optional
        """
        if isinstance(kind, str):
            kind = CriterionType(kind.casefold())
        self.kind = kind
        self.epsilon_x = epsilon_x

    @property
    def epsilon_x(self) -> float:
        return self._epsilon_x

    @epsilon_x.setter
    @validators.gt(0.0)
    def epsilon_x(self, val: float) -> None:
        self._epsilon_x = val

    def __repr__(self) -> str:
        return (f"RecoveryCriterion(kind={self.kind!s}, "
                f"epsilon_x={self.epsilon_x})")


@dataclasses.dataclass(frozen=True, slots=True)
class TrialRecord:
    """Outcome of one (algorithm, distribution, δ, ρ, trial) run."""

    algorithm: str
    distribution: str
    delta_index: int
    rho_index: int
    trial_index: int
    seed: int
    success_l2: bool
    success_support: bool
    residual_norm: float
    iterations: int
    wall_time: float = 0.0
    delta: float = 0.0
    rho: float = 0.0
    error_tag: str = ""

    def __post_init__(self) -> None:
        if self.success_support and not self.success_l2:
            raise ValueError("support recovery implies l2 recovery; record "
                             f"{self.cell} trial {self.trial_index} "
                             "violates it")

    @property
    def cell(self) -> tuple[str, str, int, int]:
        return (self.algorithm, self.distribution, self.delta_index,
                self.rho_index)


class PhaseTransitionCurve(NamedTuple):
    """Per-δ sparsity at which recovery succeeds half the time."""
    algorithm: str
    distribution: str
    criterion: CriterionType
    points: tuple[tuple[float, Optional[float]], ...]


class CriterionBound(NamedTuple):
    """Whether :math:`(B/A)\\epsilon_u \\le \\epsilon_x`, with the frame
    bound ratio :math:`B/A`.
    """
    satisfied: bool
    condition_ratio: float

    def __bool__(self) -> bool:
        return self.satisfied


class TrialOutcome(NamedTuple):
    x_debiased: np.ndarray
    success_l2: bool
    success_support: bool


def debias(x_hat: np.ndarray, Phi: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Re-estimate ``x_hat`` by least squares on a full-rank support.

    The nonzero entries of ``x_hat`` are ranked by magnitude and the longest
    prefix of at most ``m`` of them whose columns of ``Phi`` are linearly
    independent is kept. The least-squares solution on those columns is
    hard-thresholded at :data:`DEBIAS_FLOOR`.

    :param x_hat: Raw estimate of length ``N``.
    :type x_hat: np.ndarray

    :param Phi: ``m x N`` sensing matrix.
    :type Phi: np.ndarray

    :param u: Measurement vector of length ``m``.
    :type u: np.ndarray
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    m = Phi.shape[0]
    order = top_k_indices(x_hat, min(np.count_nonzero(x_hat), m))
    if order.size == 0:
        return np.zeros_like(x_hat)

    order = order[:independent_prefix(Phi, order)]
    out = np.zeros_like(x_hat)
    if order.size:
        out[order] = least_squares(Phi[:, order], u)
    out[np.abs(out) <= DEBIAS_FLOOR] = 0.0
    return out


def check_l2(x: np.ndarray, x_hat: np.ndarray,
             c: Optional[RecoveryCriterion] = None) -> bool:
    """True iff :math:`||x - \\hat{x}||_2/||x||_2 \\le \\epsilon_x`.

    :raises ZeroTruthError: If ``x`` is the zero vector.
    """
    c = c or RecoveryCriterion()
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ZeroTruthError("relative error is undefined for x = 0")
    return bool(np.linalg.norm(x - x_hat) / norm <= c.epsilon_x)


def check_support(x: np.ndarray, x_hat: np.ndarray) -> bool:
    """True iff ``x`` and ``x_hat`` have the same nonzero indices.

    >>> import numpy as np
    >>> check_support(np.array([0, 1, 0, -2.0]), np.array([0, .9, 0, -2.1]))
    True
    """
    return bool(np.array_equal(np.flatnonzero(x), np.flatnonzero(x_hat)))


def evaluate_trial(problem: ProblemInstance, x_hat: np.ndarray,
                   criterion: Optional[RecoveryCriterion] = None
                   ) -> TrialOutcome:
    """Debias ``x_hat`` and test it against both criteria."""
    xd = debias(x_hat, problem.Phi, problem.u)
    ok_l2 = check_l2(problem.x, xd, criterion)
    ok_s = check_support(problem.x, xd)
    return TrialOutcome(xd, ok_l2, ok_s)


def success_probability(records: Sequence[TrialRecord],
                        criterion: CriterionType | str) -> float:
    """Fraction of ``records`` that succeed under ``criterion``.

    :raises EmptyCellError: If ``records`` is empty.
    :raises ValueError: If ``records`` span several cells.
    """
    if not records:
        raise EmptyCellError("no records in cell")
    if len({r.cell for r in records}) != 1:
        raise ValueError("records must belong to a single cell")
    criterion = CriterionType(criterion)
    if criterion is CriterionType.RELATIVE_L2:
        hits = sum(r.success_l2 for r in records)
    else:
        hits = sum(r.success_support for r in records)
    return hits / len(records)


def phase_transition(probabilities: Sequence[float],
                     rho_values: Sequence[float]) -> Optional[float]:
    """Sparsity at which the success curve first falls through 0.5.

    The curve is scanned from the sparsest ρ. The first downward crossing
    of 0.5 is located by linear interpolation between its grid neighbours.
    Returns None when the curve starts below 0.5 and the largest ρ when it
    never falls below 0.5.

    :raises GridMismatchError: If the two sequences differ in length, are
                               empty, or ``rho_values`` is not ascending.

    >>> phase_transition([1.0, 0.6, 0.2], [0.2, 0.3, 0.4])
    0.325
    """
    p = np.asarray(probabilities, dtype=np.float64)
    rho = np.asarray(rho_values, dtype=np.float64)
    if p.shape != rho.shape or p.ndim != 1 or p.size == 0:
        raise GridMismatchError(
            f"{p.size} probabilities for {rho.size} grid values")
    if np.any(np.diff(rho) <= 0.0):
        raise GridMismatchError("rho grid must be strictly ascending")

    if p[0] < 0.5:
        return None
    below = np.flatnonzero(p < 0.5)
    if below.size == 0:
        return float(rho[-1])
    j = int(below[0])
    frac = (p[j - 1] - 0.5) / (p[j - 1] - p[j])
    return float(rho[j - 1] + frac * (rho[j] - rho[j - 1]))


def criterion_bound_check(Phi: np.ndarray, eps_u: float,
                          eps_x: float) -> CriterionBound:
    """Whether the residual stopping rule certifies :math:`(R_{\\ell_2})`.

    From :math:`A||x - \\hat{x}||_2 \\le ||\\Phi(x - \\hat{x})||_2 \\le
    \\epsilon_u ||u||_2 \\le \\epsilon_u B ||x||_2` the criterion holds
    whenever :math:`(B/A)\\epsilon_u \\le \\epsilon_x`. A wide ``Phi`` has
    :math:`A = 0` and the bound is vacuous.
    """
    bounds = frame_bounds(Phi)
    ratio = bounds.ratio
    if ratio == inf:
        return CriterionBound(False, inf)
    return CriterionBound(bool(ratio * eps_u <= eps_x), ratio)


def partial_support_error(Phi: np.ndarray, x: np.ndarray,
                          subset: Sequence[int]) -> float:
    """Relative squared error :math:`||x - \\hat{x}||_2^2/||x||_2^2` of least
    squares restricted to ``subset`` of the support of ``x``.

    :raises ZeroTruthError: If ``x`` is the zero vector.
    """
    norm2 = float(x @ x)
    if norm2 == 0.0:
        raise ZeroTruthError("relative error is undefined for x = 0")
    x_hat = np.zeros_like(x)
    subset = list(subset)
    if subset:
        x_hat[subset] = least_squares(Phi[:, subset], Phi @ x)
    return float(np.sum((x - x_hat) ** 2)) / norm2


def single_entry_ratio_bound(s: int, eps_x: float) -> float:
    """Smallest :math:`\\alpha^2/\\beta^2` for which a vector with one entry
    of magnitude :math:`\\alpha` and ``s - 1`` entries of magnitude at most
    :math:`\\beta` passes :math:`(R_{\\ell_2})` when only the large entry is
    recovered,

    .. math:: \\frac{\\alpha^2}{\\beta^2} \\ge
              \\frac{(1 - \\epsilon_x^2)(s - 1)}{\\epsilon_x^2}
    """
    return (1.0 - eps_x ** 2) * (s - 1) / eps_x ** 2


def criterion_gap(curve_l2: PhaseTransitionCurve,
                  curve_s: PhaseTransitionCurve
                  ) -> list[tuple[float, Optional[float]]]:
    """Per-δ difference :math:`\\rho_{1/2}(R_{\\ell_2}) - \\rho_{1/2}(R_S)`,
    None where either transition is absent.
    """
    if ([d for d, _ in curve_l2.points] != [d for d, _ in curve_s.points]):
        raise GridMismatchError("curves are sampled at different deltas")
    gaps = []
    for (delta, a), (_, b) in zip(curve_l2.points, curve_s.points):
        gaps.append((delta, None if a is None or b is None else a - b))
    return gaps


def best_envelope(curves: Iterable[PhaseTransitionCurve]
                  ) -> dict[tuple[str, CriterionType, float],
                            tuple[float, list[str]]]:
    """Best algorithms per (distribution, criterion, δ).

    Maps each key to the highest :math:`\\rho_{1/2}` and the sorted names of
    the algorithms reaching it. Keys where no algorithm has a transition are
    left out.
    """
    best: dict = {}
    for curve in curves:
        for delta, rho in curve.points:
            if rho is None:
                continue
            key = (curve.distribution, curve.criterion, float(delta))
            top, names = best.get(key, (-inf, []))
            if rho > top:
                best[key] = (rho, [curve.algorithm])
            elif rho == top:
                names.append(curve.algorithm)
    return {k: (v, sorted(names)) for k, (v, names) in best.items()}
