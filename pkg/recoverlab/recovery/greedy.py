"""Greedy pursuits: OMP, PrOMP, ROMP and StOMP.

All four grow a support set :math:`\\Omega_k` from the correlations of the
residual with the columns of :math:`\\Phi` and re-solve least squares on it,

.. math::

    x_k = \\arg\\min_x ||u - \\Phi I_{\\Omega_k} x||_2

so the residual stays orthogonal to every selected column. They share the
stopping rules of :class:`GreedyConfig`.
"""

import logging
from types import MappingProxyType
from typing import Callable, Optional

import numpy as np

from recoverlab import validators
from recoverlab.numerics import IncrementalLeastSquares
from recoverlab.problem_suite import ProblemInstance, derive_seed, make_rng
from recoverlab.recovery import (RecoveryAlgorithm, RecoverySolution,
                                 Termination, make_solution, zero_solution)
from recoverlab.utils import top_k_indices

__all__ = ["GreedyConfig", "OMP", "PrOMP", "ROMP", "StOMP", "omp_recover",
           "promp_recover", "romp_recover", "stomp_recover",
           "comparability_classes", "stagewise_selection"]

logger = logging.getLogger(__name__)


class GreedyConfig:
    """Stopping rules and parameters of the greedy pursuits."""

    def __init__(self, residual_tol: float = 1e-5,
                 max_support_factor: float = 2.0,
                 promp_p: float = 0.001,
                 promp_l: int = 2,
                 max_candidates: int = 10,
                 stomp_t: float = 2.0,
                 max_stages: Optional[int] = None) -> None:
        """
        :param residual_tol: Stop once :math:`||r_k||_2 \\le \\epsilon_u
                             ||u||_2`, defaults to 1e-5.
        :type residual_tol: float, optional

        :param max_support_factor: Stop once the support holds more than
                                   this many times ``s`` atoms, defaults to
                                   2.0.
        :type max_support_factor: float, optional

        :param promp_p: Probability mass PrOMP spreads over the atoms outside
                        its top-``l`` set, defaults to 0.001.
        :type promp_p: float, optional

        :param promp_l: Number of top correlations PrOMP favours, defaults
                        to 2.
        :type promp_l: int, optional

        :param max_candidates: Number of PrOMP candidate solutions, defaults
                               to 10.
        :type max_candidates: int, optional

        :param stomp_t: StOMP threshold multiplier, defaults to 2.0.
        :type stomp_t: float, optional

        :param max_stages: StOMP stage cap, defaults to None (``2s``).
        :type max_stages: int, optional
        """
        self.residual_tol = residual_tol
        self.max_support_factor = max_support_factor
        self.promp_p = promp_p
        self.promp_l = promp_l
        self.max_candidates = max_candidates
        self.stomp_t = stomp_t
        self.max_stages = max_stages

    @property
    def residual_tol(self) -> float:
        return self._residual_tol

    @residual_tol.setter
    @validators.gt(0.0)
    def residual_tol(self, val: float) -> None:
        self._residual_tol = val

    @property
    def max_support_factor(self) -> float:
        return self._max_support_factor

    @max_support_factor.setter
    @validators.ge(1.0)
    def max_support_factor(self, val: float) -> None:
        self._max_support_factor = val

    @property
    def promp_p(self) -> float:
        return self._promp_p

    @promp_p.setter
    @validators.le(1.0)
    @validators.ge(0.0)
    def promp_p(self, val: float) -> None:
        self._promp_p = val

    @property
    def promp_l(self) -> int:
        return self._promp_l

    @promp_l.setter
    @validators.ge(1)
    def promp_l(self, val: int) -> None:
        self._promp_l = int(val)

    @property
    def max_candidates(self) -> int:
        return self._max_candidates

    @max_candidates.setter
    @validators.ge(1)
    def max_candidates(self, val: int) -> None:
        self._max_candidates = int(val)

    @property
    def stomp_t(self) -> float:
        return self._stomp_t

    @stomp_t.setter
    @validators.gt(0.0)
    def stomp_t(self, val: float) -> None:
        self._stomp_t = val

    @property
    def max_stages(self) -> Optional[int]:
        return self._max_stages

    @max_stages.setter
    def max_stages(self, val: Optional[int]) -> None:
        if val is not None and val < 1:
            raise ValueError(f"max_stages must be >= 1, got {val!r}")
        self._max_stages = val

    def __repr__(self) -> str:
        return (f"GreedyConfig(residual_tol={self.residual_tol}, "
                f"max_support_factor={self.max_support_factor})")


def comparability_classes(correlations: np.ndarray,
                          s: int) -> list[np.ndarray]:
    """Split the nonzero correlations into ROMP comparability classes.

    Classes are built greedily from the largest magnitude down: each takes
    every remaining entry within a factor 2 of the current maximum, capped
    at ``s`` entries.

    >>> import numpy as np
    >>> c = np.array([1.0, 0.6, 0.45, 0.2])
    >>> [cls.tolist() for cls in comparability_classes(c, 2)]
    [[0, 1], [2], [3]]
    """
    mags = np.abs(correlations)
    order = np.argsort(-mags, kind="stable")
    order = order[mags[order] > 0.0]

    classes = []
    start = 0
    while start < order.size:
        peak = mags[order[start]]
        stop = start
        while (stop < order.size and stop - start < s
               and mags[order[stop]] >= peak / 2.0):
            stop += 1
        classes.append(order[start:stop])
        start = stop
    return classes


def stagewise_selection(correlations: np.ndarray, residual_norm: float,
                        m: int, t: float = 2.0) -> np.ndarray:
    """Indices with :math:`|c_i| > t\\,||r||_2/\\sqrt{m}`, largest first.

    >>> import numpy as np
    >>> stagewise_selection(np.array([0.9, 0.3, 0.1]), 1.0, 4).tolist()
    []
    """
    threshold = t * residual_norm / np.sqrt(m)
    mags = np.abs(correlations)
    idx = np.flatnonzero(mags > threshold)
    return idx[np.argsort(-mags[idx], kind="stable")]


class _Pursuit:
    """Shared bookkeeping of one greedy path."""

    def __init__(self, problem: ProblemInstance, cfg: GreedyConfig) -> None:
        self.problem = problem
        self.cfg = cfg
        self.ls = IncrementalLeastSquares(problem.Phi, problem.u)
        self.x = np.zeros(problem.N)
        self.residual = problem.u.copy()
        self.history = [float(np.linalg.norm(problem.u))]
        self.tol = cfg.residual_tol * self.history[0]
        self.budget = cfg.max_support_factor * problem.s

    def correlations(self) -> np.ndarray:
        c = self.problem.Phi.T @ self.residual
        c[self.ls.columns] = 0.0
        return c

    def add(self, indices) -> int:
        """Add ``indices`` in order, skipping dependent columns. Returns the
        number of columns accepted.
        """
        added = 0
        for j in indices:
            if self.ls.add(int(j)):
                added += 1
        if added:
            self.x = self.ls.solution(self.problem.N)
            self.residual = self.problem.u - self.problem.Phi @ self.x
            self.history.append(float(np.linalg.norm(self.residual)))
        return added

    def stop_reason(self) -> Optional[Termination]:
        if self.history[-1] <= self.tol:
            return Termination.RESIDUAL_TOL
        if len(self.ls) > self.budget:
            return Termination.SUPPORT_BUDGET
        if len(self.ls) >= self.problem.m:
            return Termination.ITERATION_CAP
        return None

    def solution(self, iterations: int, termination: Termination,
                 **diagnostics) -> RecoverySolution:
        logger.debug("%s after %d iterations, support %d", termination,
                     iterations, len(self.ls))
        return make_solution(self.problem, self.x, iterations, termination,
                             self.history, **diagnostics)


def _single_path(problem: ProblemInstance, cfg: GreedyConfig,
                 select: Callable[[np.ndarray, int], Optional[int]]
                 ) -> RecoverySolution:
    pursuit = _Pursuit(problem, cfg)
    iterations = 0
    while True:
        j = select(pursuit.correlations(), iterations)
        if j is None or not pursuit.add([j]):
            return pursuit.solution(iterations, Termination.CONVERGED)
        iterations += 1
        reason = pursuit.stop_reason()
        if reason is not None:
            return pursuit.solution(iterations, reason)


def _argmax_selection(c: np.ndarray, k: int) -> Optional[int]:
    j = int(np.argmax(np.abs(c)))
    return j if c[j] != 0.0 else None


class OMP(RecoveryAlgorithm):
    """Orthogonal matching pursuit.

    Each iteration adds the atom most correlated with the residual,
    :math:`n_k = \\arg\\max_{n} |\\langle r_k, \\varphi_n \\rangle|`.
    """

    config_class = GreedyConfig

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem)
        return _single_path(problem, self.config, _argmax_selection)


class PrOMP(RecoveryAlgorithm):
    """Probabilistic OMP.

    The next atom is sampled: each of the ``l`` largest correlations gets
    probability :math:`(1-p)/l`, every other nonzero correlation
    :math:`p/(N-k-l)`, zero correlations nothing. Several candidate paths are
    run and the one with the smallest final residual wins. The first
    candidate always follows the OMP path.
    """

    config_class = GreedyConfig

    def _sampler(self, rng: np.random.Generator, n: int):
        p, l = self.config.promp_p, self.config.promp_l

        def select(c: np.ndarray, k: int) -> Optional[int]:
            nonzero = np.flatnonzero(c)
            if nonzero.size == 0:
                return None
            top = top_k_indices(c, l)
            rest = np.setdiff1d(nonzero, top)
            rest_count = max(n - k - l, 1)

            idx = np.concatenate([top, rest])
            probs = np.concatenate([np.full(top.size, (1.0 - p) / l),
                                    np.full(rest.size, p / rest_count)])
            total = probs.sum()
            if total <= 0.0:
                return int(top[0])
            return int(rng.choice(idx, p=probs / total))

        return select

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem)

        best = None
        residuals = []
        for cand in range(self.config.max_candidates):
            if cand == 0:
                select = _argmax_selection
            else:
                rng = make_rng(derive_seed(seed, "promp", cand))
                select = self._sampler(rng, problem.N)
            sol = _single_path(problem, self.config, select)
            residuals.append(sol.residual_norm)
            if best is None or sol.residual_norm < best.residual_norm:
                best = sol

        diagnostics = {**best.diagnostics,
                       "candidate_residuals": tuple(residuals)}
        return best._replace(diagnostics=MappingProxyType(diagnostics))


class ROMP(RecoveryAlgorithm):
    """Regularized OMP.

    Each stage splits the correlations into comparability classes (see
    :func:`comparability_classes`) and adds the class with the largest
    energy :math:`||\\Phi_J^T r_k||_2`.
    """

    config_class = GreedyConfig

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem)

        pursuit = _Pursuit(problem, self.config)
        stages = 0
        while True:
            c = pursuit.correlations()
            classes = comparability_classes(c, problem.s)
            if not classes:
                return pursuit.solution(stages, Termination.CONVERGED)
            energies = [float(np.sum(c[cls] ** 2)) for cls in classes]
            chosen = classes[int(np.argmax(energies))]
            if not pursuit.add(chosen):
                return pursuit.solution(stages, Termination.CONVERGED)
            stages += 1
            reason = pursuit.stop_reason()
            if reason is not None:
                return pursuit.solution(stages, reason)


class StOMP(RecoveryAlgorithm):
    """Stagewise OMP with false-discovery-rate thresholding.

    Each stage adds every atom whose correlation exceeds
    :math:`t\\,\\sigma_k`, :math:`\\sigma_k = ||r_k||_2/\\sqrt{m}`. An empty
    selection ends the run.
    """

    config_class = GreedyConfig

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem)

        cfg = self.config
        max_stages = cfg.max_stages or 2 * problem.s
        pursuit = _Pursuit(problem, cfg)
        stages = 0
        while stages < max_stages:
            selected = stagewise_selection(pursuit.correlations(),
                                           pursuit.history[-1], problem.m,
                                           cfg.stomp_t)
            if selected.size == 0 or not pursuit.add(selected):
                return pursuit.solution(stages, Termination.CONVERGED)
            stages += 1
            reason = pursuit.stop_reason()
            if reason is not None:
                return pursuit.solution(stages, reason)
        return pursuit.solution(stages, Termination.ITERATION_CAP)


def omp_recover(p: ProblemInstance,
                cfg: Optional[GreedyConfig] = None) -> RecoverySolution:
    return OMP(cfg).recover(p)


def promp_recover(p: ProblemInstance, cfg: Optional[GreedyConfig] = None,
                  seed: int = 0) -> RecoverySolution:
    return PrOMP(cfg).recover(p, seed)


def romp_recover(p: ProblemInstance,
                 cfg: Optional[GreedyConfig] = None) -> RecoverySolution:
    return ROMP(cfg).recover(p)


def stomp_recover(p: ProblemInstance,
                  cfg: Optional[GreedyConfig] = None) -> RecoverySolution:
    return StOMP(cfg).recover(p)
