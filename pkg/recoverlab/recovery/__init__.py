"""Sparse recovery algorithms.

Every algorithm is a :class:`RecoveryAlgorithm` that maps a
:class:`~recoverlab.problem_suite.ProblemInstance` to a
:class:`RecoverySolution`. Use :func:`create_recovery_algorithm` to build one
from its identifier.
"""

import enum
import logging
from abc import ABC, abstractmethod
from types import MappingProxyType
from typing import Any, ClassVar, Mapping, NamedTuple, Sequence

import numpy as np

from recoverlab.problem_suite import ProblemInstance

__all__ = ["Termination", "RecoverySolution", "make_solution",
           "zero_solution", "RecoveryAlgorithm", "AlgoType",
           "create_recovery_algorithm",
           "GreedyConfig", "OMP", "PrOMP", "ROMP", "StOMP",
           "omp_recover", "promp_recover", "romp_recover", "stomp_recover",
           "comparability_classes", "stagewise_selection",
           "ThresholdKind", "ThresholdFunction", "apply_threshold",
           "AmpThresholdSource", "ThresholdingConfig", "IHT", "IST",
           "CoSaMP", "SP", "TST", "AMP", "ALPS", "iht_recover",
           "ist_recover", "cosamp_recover", "sp_recover", "tst_recover",
           "amp_recover", "alps_recover", "recommended_threshold",
           "tst_sparsity_estimate", "alps_step_size",
           "LpSolverConfig", "LpResult", "solve_weighted_l1",
           "Sl0Config", "GpsrConfig", "BP", "IRL1", "GPSR", "SL0",
           "bp_recover", "irl1_recover", "gpsr_recover", "sl0_recover",
           "irl1_weights", "smoothed_l0", "sl0_sigma_ladder"]

logger = logging.getLogger(__name__)


class Termination(enum.StrEnum):
    """Reason a recovery algorithm stopped."""
    RESIDUAL_TOL = enum.auto()
    SUPPORT_BUDGET = enum.auto()
    ITERATION_CAP = enum.auto()
    RESIDUAL_INCREASE = enum.auto()
    CONVERGED = enum.auto()
    DIVERGENCE = enum.auto()
    STALLED = enum.auto()


class RecoverySolution(NamedTuple):
    """Estimate returned by a recovery algorithm."""

    x_hat: np.ndarray
    support: np.ndarray
    residual_norm: float
    iterations: int
    termination: Termination
    residual_history: tuple[float, ...] = ()
    diagnostics: Mapping[str, Any] = MappingProxyType({})


def make_solution(problem: ProblemInstance, x_hat: np.ndarray,
                  iterations: int, termination: Termination,
                  residual_history: Sequence[float] = (),
                  **diagnostics) -> RecoverySolution:
    """Package ``x_hat`` with its support and its true residual norm
    :math:`||u - \\Phi\\hat{x}||_2`.
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    residual = problem.u - problem.Phi @ x_hat
    return RecoverySolution(
        x_hat=x_hat,
        support=np.flatnonzero(x_hat),
        residual_norm=float(np.linalg.norm(residual)),
        iterations=int(iterations),
        termination=termination,
        residual_history=tuple(float(v) for v in residual_history),
        diagnostics=MappingProxyType(dict(diagnostics)))


def zero_solution(problem: ProblemInstance,
                  termination: Termination = Termination.RESIDUAL_TOL
                  ) -> RecoverySolution:
    """Solution returned when the measurement is identically zero."""
    return make_solution(problem, np.zeros(problem.N), 0, termination)


class RecoveryAlgorithm(ABC):
    """Base class of the recovery algorithms.

    Subclasses set :attr:`algo_type` and :attr:`config_class` and implement
    :meth:`recover`.
    """

    algo_type: ClassVar["AlgoType"]
    config_class: ClassVar[type]

    def __init__(self, config=None) -> None:
        self.config = config if config is not None else self.config_class()

    @abstractmethod
    def recover(self, problem: ProblemInstance,
                seed: int = 0) -> RecoverySolution:
        """Estimate the sparse vector behind ``problem.u``.

        :param problem: Instance to solve. Only ``Phi`` and ``u`` are used,
                        plus the true sparsity for the algorithms that need
                        it.
        :type problem: ProblemInstance

        :param seed: Seed of the algorithm's private random stream, ignored
                     by the deterministic algorithms, defaults to 0.
        :type seed: int, optional
        """
        ...

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.config!r})"


from .greedy import (OMP, GreedyConfig, PrOMP, ROMP, StOMP,
                     comparability_classes, omp_recover, promp_recover,
                     romp_recover, stagewise_selection, stomp_recover)
from .interior_point import LpResult, LpSolverConfig, solve_weighted_l1
from .relaxation import (BP, GPSR, IRL1, SL0, GpsrConfig, Sl0Config,
                         bp_recover, gpsr_recover, irl1_recover,
                         irl1_weights, sl0_recover, sl0_sigma_ladder,
                         smoothed_l0)
from .thresholding import (ALPS, AMP, IHT, IST, SP, TST, AmpThresholdSource,
                           CoSaMP, ThresholdFunction, ThresholdingConfig,
                           ThresholdKind, alps_recover, alps_step_size,
                           amp_recover, apply_threshold, cosamp_recover,
                           iht_recover, ist_recover, recommended_threshold,
                           sp_recover, tst_recover, tst_sparsity_estimate)


class AlgoType(enum.StrEnum):
    """Enumeration of the available recovery algorithms."""
    OMP = enum.auto()
    PROMP = enum.auto()
    ROMP = enum.auto()
    STOMP = enum.auto()
    IHT = enum.auto()
    IST = enum.auto()
    COSAMP = enum.auto()
    SP = enum.auto()
    TST = enum.auto()
    AMP = enum.auto()
    ALPS = enum.auto()
    BP = enum.auto()
    IRL1 = enum.auto()
    GPSR = enum.auto()
    SL0 = enum.auto()


_ALGORITHMS: dict[AlgoType, type[RecoveryAlgorithm]] = {
    AlgoType.OMP: OMP,
    AlgoType.PROMP: PrOMP,
    AlgoType.ROMP: ROMP,
    AlgoType.STOMP: StOMP,
    AlgoType.IHT: IHT,
    AlgoType.IST: IST,
    AlgoType.COSAMP: CoSaMP,
    AlgoType.SP: SP,
    AlgoType.TST: TST,
    AlgoType.AMP: AMP,
    AlgoType.ALPS: ALPS,
    AlgoType.BP: BP,
    AlgoType.IRL1: IRL1,
    AlgoType.GPSR: GPSR,
    AlgoType.SL0: SL0,
}

for _algo_type, _cls in _ALGORITHMS.items():
    _cls.algo_type = _algo_type
del _algo_type, _cls


def create_recovery_algorithm(algo_type: AlgoType | str,
                              residual_tol: float | None = None,
                              **config_overrides) -> RecoveryAlgorithm:
    """A factory function that encapsulates the creation of recovery
    algorithms.

    :param algo_type: Algorithm identifier, matched case-insensitively.
                      Available values are the members of :class:`AlgoType`.
    :type algo_type: AlgoType | str

    :param residual_tol: Relative residual tolerance :math:`\\epsilon_u`
                         applied to the algorithms whose configuration has
                         one; ignored by the others, defaults to None (keep
                         the configuration default).
    :type residual_tol: float, optional

    :param config_overrides: Fields of the algorithm's configuration class.

    :raises ValueError: If ``algo_type`` is unknown.
    :raises TypeError: If an override is not a field of the configuration.

    >>> create_recovery_algorithm("OMP").algo_type
    <AlgoType.OMP: 'omp'>
    """
    if isinstance(algo_type, str):
        try:
            algo_type = AlgoType(algo_type.casefold())
        except ValueError:
            raise ValueError(
                f"algo_type {algo_type!r} is not supported") from None

    algo_class = _ALGORITHMS[algo_type]
    config = algo_class.config_class(**config_overrides)
    if residual_tol is not None and hasattr(config, "residual_tol"):
        config.residual_tol = residual_tol
    return algo_class(config)
