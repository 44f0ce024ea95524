"""Iterative thresholding recovery.

Recommended IHT and IST, the two-stage family (CoSaMP, SP, recommended TST),
AMP and ALPS with one step of memory. All iterations start from
:math:`x_0 = 0`, :math:`r_0 = u` and are capped at
:attr:`ThresholdingConfig.max_iterations` refinements.
"""

import enum
import logging
from typing import Callable, Optional

import numpy as np
from scipy import stats

from recoverlab import validators
from recoverlab.numerics import (RankDeficientError, independent_prefix,
                                 least_squares, row_space_project)
from recoverlab.problem_suite import ProblemInstance
from recoverlab.recovery import (RecoveryAlgorithm, RecoverySolution,
                                 Termination, make_solution, zero_solution)
from recoverlab.utils import keep_top_k, support, top_k_indices

__all__ = ["ThresholdKind", "ThresholdFunction", "apply_threshold",
           "AmpThresholdSource", "ThresholdingConfig", "IHT", "IST",
           "CoSaMP", "SP", "TST", "AMP", "ALPS", "iht_recover",
           "ist_recover", "cosamp_recover", "sp_recover", "tst_recover",
           "amp_recover", "alps_recover", "recommended_threshold",
           "tst_sparsity_estimate", "alps_step_size",
           "default_false_alarm_rate"]

logger = logging.getLogger(__name__)

#: Median absolute deviation of a standard normal variable.
_MAD_SCALE = 0.6745

#: Coefficients of the recommended TST sparsity estimate, highest power
#: first.
_TST_POLY = (0.044417, 0.34142, 0.14844)


class ThresholdKind(enum.StrEnum):
    HARD = enum.auto()
    SOFT = enum.auto()


class ThresholdFunction:
    """Element-wise hard or soft thresholding at level ``tau``.

    .. math::

        T_{hard}(x; \\tau) &= x \\, [|x| > \\tau]

        T_{soft}(x; \\tau) &= \\mathrm{sgn}(x)(|x| - \\tau) \\, [|x| > \\tau]
    """

    def __init__(self, kind: ThresholdKind | str, tau: float) -> None:
        if isinstance(kind, str):
            kind = ThresholdKind(kind.casefold())
        self.kind = kind
        self.tau = tau

    @property
    def tau(self) -> float:
        return self._tau

    @tau.setter
    @validators.ge(0.0)
    def tau(self, val: float) -> None:
        self._tau = float(val)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        mags = np.abs(x)
        if self.kind is ThresholdKind.HARD:
            return np.where(mags > self.tau, x, 0.0)
        return np.sign(x) * np.maximum(mags - self.tau, 0.0)

    def __repr__(self) -> str:
        return f"ThresholdFunction(kind={self.kind!s}, tau={self.tau})"


def apply_threshold(x: np.ndarray, t: ThresholdFunction) -> np.ndarray:
    """Apply ``t`` element-wise to ``x``.

    >>> import numpy as np
    >>> x = np.array([0.5, 2.0, -3.0])
    >>> apply_threshold(x, ThresholdFunction("hard", 1.0)).tolist()
    [0.0, 2.0, -3.0]
    >>> apply_threshold(x, ThresholdFunction("soft", 1.0)).tolist()
    [0.0, 1.0, -2.0]
    """
    return t(np.asarray(x, dtype=np.float64))


def default_false_alarm_rate(delta: float) -> float:
    """False alarm rate of the recommended IHT/IST threshold at
    indeterminacy ``delta``.
    """
    return 0.02 * delta


def recommended_threshold(correlations: np.ndarray, far: float) -> float:
    """Threshold :math:`\\tau = z_{1 - FAR/2}\\,\\hat{\\sigma}`.

    :math:`\\hat{\\sigma}` is the robust scale estimate
    :math:`\\mathrm{median}(|\\Phi^T r|)/0.6745` of the correlations and
    :math:`z_q` the standard normal quantile.

    :param far: False alarm rate in (0, 1]. A rate of 1 gives
                :math:`\\tau = 0`.
    :type far: float
    """
    if not 0.0 < far <= 1.0:
        raise ValueError(f"false alarm rate must be in (0, 1], got {far}")
    sigma = np.median(np.abs(correlations)) / _MAD_SCALE
    return float(max(stats.norm.ppf(1.0 - far / 2.0), 0.0) * sigma)


def tst_sparsity_estimate(delta: float, m: int) -> int:
    """Sparsity assumed by recommended TST,
    :math:`\\lfloor (0.044417\\delta^2 + 0.34142\\delta + 0.14844) m
    \\rfloor`, at least 1.

    >>> tst_sparsity_estimate(0.25, 100)
    23
    >>> tst_sparsity_estimate(0.5414, 217)
    75
    """
    return max(1, int(np.floor(np.polyval(_TST_POLY, delta) * m)))


def alps_step_size(Phi: np.ndarray, gradient: np.ndarray,
                   indices: np.ndarray) -> float:
    """Optimal step along the gradient restricted to ``indices``,

    .. math:: \\kappa = \\frac{||g_I||_2^2}{||\\Phi g_I||_2^2}

    Returns 0.0 when the restricted gradient vanishes.
    """
    g = np.zeros_like(gradient)
    g[indices] = gradient[indices]
    num = float(g @ g)
    if num == 0.0:
        return 0.0
    den = float(np.sum((Phi @ g) ** 2))
    return num / den if den > 0.0 else 0.0


class AmpThresholdSource(enum.StrEnum):
    """Vector whose m-th largest magnitude sets the AMP threshold."""
    CANDIDATE = enum.auto()
    PREVIOUS = enum.auto()


class ThresholdingConfig:
    """Iteration limits and parameters of the thresholding algorithms."""

    def __init__(self, max_iterations: int = 300,
                 residual_tol: float = 1e-5,
                 kappa: Optional[float] = None,
                 far_schedule: Callable[[float], float] =
                 default_false_alarm_rate,
                 numeric_floor: float = 1e-12,
                 divergence_factor: float = 1e6,
                 tst_alpha: float = 1.0,
                 tst_beta: float = 1.0,
                 tst_sparsity: Optional[int] = None,
                 amp_threshold_source: AmpThresholdSource | str =
                 AmpThresholdSource.CANDIDATE) -> None:
        """
        :param max_iterations: Refinement cap, defaults to 300.
        :type max_iterations: int, optional

        :param residual_tol: Stop once :math:`||r_k||_2 \\le \\epsilon_u
                             ||u||_2`, defaults to 1e-5.
        :type residual_tol: float, optional

        :param kappa: Relaxation of the gradient step, defaults to None
                      (0.65 for IHT, 0.6 for IST and TST).
        :type kappa: float, optional

        :param far_schedule: Maps the indeterminacy to the false alarm rate
                             of the IHT/IST threshold, defaults to
                             :func:`default_false_alarm_rate`.
        :type far_schedule: Callable[[float], float], optional

        :param numeric_floor: Magnitudes at or below this are never selected
                              by the two-stage algorithms, defaults to 1e-12.
        :type numeric_floor: float, optional

        :param divergence_factor: An iterate whose norm exceeds this many
                                  times the minimum-norm solution's is
                                  declared divergent, defaults to 1e6.
        :type divergence_factor: float, optional

        :param tst_alpha: TST first-stage size factor, defaults to 1.0.
        :type tst_alpha: float, optional

        :param tst_beta: TST second-stage size factor, defaults to 1.0.
        :type tst_beta: float, optional

        :param tst_sparsity: Sparsity used by TST instead of its polynomial
                             estimate, defaults to None.
        :type tst_sparsity: int, optional

        :param amp_threshold_source: Defaults to the candidate
                                     :math:`x_{k-1} + \\Phi^T r_{k-1}`.
        :type amp_threshold_source: AmpThresholdSource | str, optional
        """
        self.max_iterations = max_iterations
        self.residual_tol = residual_tol
        self.kappa = kappa
        self.far_schedule = far_schedule
        self.numeric_floor = numeric_floor
        self.divergence_factor = divergence_factor
        self.tst_alpha = tst_alpha
        self.tst_beta = tst_beta
        self.tst_sparsity = tst_sparsity
        self.amp_threshold_source = amp_threshold_source

    @property
    def max_iterations(self) -> int:
        return self._max_iterations

    @max_iterations.setter
    @validators.ge(1)
    def max_iterations(self, val: int) -> None:
        self._max_iterations = int(val)

    @property
    def residual_tol(self) -> float:
        return self._residual_tol

    @residual_tol.setter
    @validators.gt(0.0)
    def residual_tol(self, val: float) -> None:
        self._residual_tol = val

    @property
    def kappa(self) -> Optional[float]:
        return self._kappa

    @kappa.setter
    def kappa(self, val: Optional[float]) -> None:
        if val is not None and not 0.0 < val <= 1.0:
            raise ValueError(f"kappa must be in (0, 1], got {val!r}")
        self._kappa = val

    @property
    def numeric_floor(self) -> float:
        return self._numeric_floor

    @numeric_floor.setter
    @validators.gt(0.0)
    def numeric_floor(self, val: float) -> None:
        self._numeric_floor = val

    @property
    def divergence_factor(self) -> float:
        return self._divergence_factor

    @divergence_factor.setter
    @validators.gt(1.0)
    def divergence_factor(self, val: float) -> None:
        self._divergence_factor = val

    @property
    def tst_alpha(self) -> float:
        return self._tst_alpha

    @tst_alpha.setter
    @validators.gt(0.0)
    def tst_alpha(self, val: float) -> None:
        self._tst_alpha = val

    @property
    def tst_beta(self) -> float:
        return self._tst_beta

    @tst_beta.setter
    @validators.gt(0.0)
    def tst_beta(self, val: float) -> None:
        self._tst_beta = val

    @property
    def tst_sparsity(self) -> Optional[int]:
        return self._tst_sparsity

    @tst_sparsity.setter
    def tst_sparsity(self, val: Optional[int]) -> None:
        if val is not None and val < 1:
            raise ValueError(f"tst_sparsity must be >= 1, got {val!r}")
        self._tst_sparsity = val

    @property
    def amp_threshold_source(self) -> AmpThresholdSource:
        return self._amp_threshold_source

    @amp_threshold_source.setter
    def amp_threshold_source(self, val: AmpThresholdSource | str) -> None:
        self._amp_threshold_source = AmpThresholdSource(val.casefold())

    def __repr__(self) -> str:
        return (f"ThresholdingConfig(max_iterations={self.max_iterations}, "
                f"residual_tol={self.residual_tol}, kappa={self.kappa})")


def _divergence_limit(problem: ProblemInstance, factor: float) -> float:
    try:
        base = np.linalg.norm(row_space_project(problem.Phi, problem.u))
    except RankDeficientError:
        base = np.linalg.norm(problem.u) / np.linalg.norm(problem.Phi, 2)
    return factor * float(base)


class _Tracker:
    """Residual history and best iterate of a thresholding run."""

    def __init__(self, problem: ProblemInstance, cfg: ThresholdingConfig):
        self.problem = problem
        self.unorm = float(np.linalg.norm(problem.u))
        self.tol = cfg.residual_tol * self.unorm
        self.limit = _divergence_limit(problem, cfg.divergence_factor)
        self.history = [self.unorm]
        self.best_x = np.zeros(problem.N)
        self.best_res = self.unorm

    def record(self, x: np.ndarray) -> float:
        res = float(np.linalg.norm(self.problem.u - self.problem.Phi @ x))
        self.history.append(res)
        if res < self.best_res:
            self.best_x, self.best_res = x.copy(), res
        return res

    def diverged(self, x: np.ndarray) -> bool:
        if np.linalg.norm(x) > self.limit:
            logger.warning("iterate norm exceeded %.3g, returning best "
                           "iterate", self.limit)
            return True
        return False

    def finish(self, x, iterations, termination, **diagnostics):
        logger.debug("%s after %d iterations", termination, iterations)
        return make_solution(self.problem, x, iterations, termination,
                             self.history, **diagnostics)


class _IterativeThresholding(RecoveryAlgorithm):
    """:math:`x_{k+1} = T(x_k + \\kappa \\Phi^T r_k; \\tau_k)` with the
    recommended false-alarm threshold, estimated from the scaled step
    :math:`\\kappa \\Phi^T r_k`.
    """

    config_class = ThresholdingConfig
    kind: ThresholdKind
    default_kappa: float

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem)

        cfg = self.config
        kappa = cfg.kappa or self.default_kappa
        far = cfg.far_schedule(problem.delta)
        Phi, u = problem.Phi, problem.u
        track = _Tracker(problem, cfg)
        taus = []

        x = np.zeros(problem.N)
        r = u.copy()
        for k in range(1, cfg.max_iterations + 1):
            step = kappa * (Phi.T @ r)
            tau = recommended_threshold(step, far)
            taus.append(tau)
            x = apply_threshold(x + step,
                                ThresholdFunction(self.kind, tau))
            r = u - Phi @ x
            res = track.record(x)
            if track.diverged(x):
                return track.finish(track.best_x, k, Termination.DIVERGENCE,
                                    thresholds=tuple(taus))
            if res <= track.tol:
                return track.finish(x, k, Termination.RESIDUAL_TOL,
                                    thresholds=tuple(taus))
        return track.finish(x, cfg.max_iterations, Termination.ITERATION_CAP,
                            thresholds=tuple(taus))


class IHT(_IterativeThresholding):
    """Recommended iterative hard thresholding (:math:`\\kappa = 0.65`)."""
    kind = ThresholdKind.HARD
    default_kappa = 0.65


class IST(_IterativeThresholding):
    """Recommended iterative soft thresholding (:math:`\\kappa = 0.6`)."""
    kind = ThresholdKind.SOFT
    default_kappa = 0.6


def _restricted_ls(Phi: np.ndarray, u: np.ndarray, indices, n: int):
    x = np.zeros(n)
    if len(indices):
        x[indices] = least_squares(Phi[:, indices], u)
    return x


class _TwoStage(RecoveryAlgorithm):
    """Candidate selection, least squares on the candidates, pruning to the
    second-stage size, least squares on the pruned support.

    A residual increase ends the run with the previous iterate. An unchanged
    support ends it as converged.
    """

    config_class = ThresholdingConfig

    def stage_sizes(self, problem: ProblemInstance) -> tuple[int, int]:
        raise NotImplementedError

    def candidates(self, x: np.ndarray, c: np.ndarray,
                   first: int) -> list[int]:
        """Ordered candidate support, most important first."""
        floor = self.config.numeric_floor
        current = top_k_indices(x, x.size, floor).tolist()
        seen = set(current)
        fresh = [int(j) for j in top_k_indices(c, first, floor)
                 if j not in seen]
        return current + fresh

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem)

        cfg = self.config
        Phi, u, n = problem.Phi, problem.u, problem.N
        first, second = self.stage_sizes(problem)
        track = _Tracker(problem, cfg)

        x = np.zeros(n)
        res = track.unorm
        for k in range(1, cfg.max_iterations + 1):
            c = Phi.T @ (u - Phi @ x)
            cand = self.candidates(x, c, first)[:problem.m]
            cand = cand[:independent_prefix(Phi, cand)]
            if not cand:
                return track.finish(x, k - 1, Termination.CONVERGED)

            b = _restricted_ls(Phi, u, cand, n)
            keep = top_k_indices(b, second, cfg.numeric_floor)
            x_new = _restricted_ls(Phi, u, keep, n)
            res_new = float(np.linalg.norm(u - Phi @ x_new))
            if res_new > res:
                logger.debug("residual increased at iteration %d", k)
                return track.finish(x, k - 1, Termination.RESIDUAL_INCREASE)

            same = np.array_equal(np.sort(keep), support(x))
            x, res = x_new, track.record(x_new)
            if res <= track.tol:
                return track.finish(x, k, Termination.RESIDUAL_TOL)
            if same:
                return track.finish(x, k, Termination.CONVERGED)
        return track.finish(x, cfg.max_iterations, Termination.ITERATION_CAP)


class CoSaMP(_TwoStage):
    """Compressive sampling matching pursuit: ``2s`` candidates from the
    residual correlations, pruned to ``s``.
    """

    def stage_sizes(self, problem):
        return 2 * problem.s, problem.s


class SP(_TwoStage):
    """Subspace pursuit: ``s`` candidates from the residual correlations,
    pruned to ``s``.
    """

    def stage_sizes(self, problem):
        return problem.s, problem.s


class TST(_TwoStage):
    """Recommended two-stage thresholding.

    The candidates are the current support joined with the
    :math:`\\alpha \\hat{s}` largest entries of
    :math:`x_k + \\kappa \\Phi^T r_k`; the pruned support keeps
    :math:`\\beta \\hat{s}`. :math:`\\hat{s}` is
    :func:`tst_sparsity_estimate` unless overridden.
    """

    default_kappa = 0.6

    def stage_sizes(self, problem):
        cfg = self.config
        s_est = cfg.tst_sparsity or tst_sparsity_estimate(problem.delta,
                                                          problem.m)
        return (max(1, round(cfg.tst_alpha * s_est)),
                max(1, round(cfg.tst_beta * s_est)))

    def candidates(self, x, c, first):
        kappa = self.config.kappa or self.default_kappa
        floor = self.config.numeric_floor
        current = top_k_indices(x, x.size, floor).tolist()
        seen = set(current)
        fresh = [int(j) for j in top_k_indices(x + kappa * c, first, floor)
                 if j not in seen]
        return current + fresh


def _mth_largest(values: np.ndarray, m: int) -> float:
    mags = np.abs(values)
    k = min(m, mags.size) - 1
    return float(np.partition(mags, mags.size - 1 - k)[mags.size - 1 - k])


class AMP(RecoveryAlgorithm):
    """Approximate message passing.

    .. math::

        x_{k+1} &= T_{soft}(x_k + \\Phi^T r_k; \\tau_k)

        r_{k+1} &= u - \\Phi x_{k+1} + \\frac{r_k}{m}
                   |\\{n : |[x_k + \\Phi^T r_k]_n| \\ge \\tau_k\\}|

    :math:`\\tau_k` is the m-th largest magnitude of the candidate (or of the
    previous iterate, see :class:`AmpThresholdSource`). Stopping uses the
    plain residual :math:`u - \\Phi x_k`. A run that hits the iteration cap
    returns the iterate with the smallest plain residual.
    """

    config_class = ThresholdingConfig

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem)

        cfg = self.config
        Phi, u, m = problem.Phi, problem.u, problem.m
        track = _Tracker(problem, cfg)
        taus = []

        x = np.zeros(problem.N)
        r = u.copy()
        for k in range(1, cfg.max_iterations + 1):
            pseudo = x + Phi.T @ r
            use_prev = (cfg.amp_threshold_source is
                        AmpThresholdSource.PREVIOUS and np.any(x))
            tau = _mth_largest(x if use_prev else pseudo, m)
            taus.append(tau)

            x = apply_threshold(pseudo, ThresholdFunction("soft", tau))
            onsager = np.count_nonzero(np.abs(pseudo) >= tau) / m
            r = u - Phi @ x + onsager * r

            res = track.record(x)
            if track.diverged(x):
                return track.finish(track.best_x, k, Termination.DIVERGENCE,
                                    thresholds=tuple(taus))
            if res <= track.tol:
                return track.finish(x, k, Termination.RESIDUAL_TOL,
                                    thresholds=tuple(taus))
        return track.finish(track.best_x, cfg.max_iterations,
                            Termination.ITERATION_CAP, thresholds=tuple(taus))


class ALPS(RecoveryAlgorithm):
    """Accelerated hard thresholding with one step of memory.

    Each iteration takes the optimal gradient step (:func:`alps_step_size`)
    on the support of :math:`x_k` extended by the ``s`` largest off-support
    gradient entries, hard-thresholds to ``s`` entries and adds FISTA
    momentum :math:`\\mu_k` on the thresholded iterates. The returned
    estimate is the ``s``-sparse thresholded iterate with the smallest
    residual.
    """

    config_class = ThresholdingConfig

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem)

        cfg = self.config
        Phi, u, s = problem.Phi, problem.u, problem.s
        track = _Tracker(problem, cfg)
        momentum = []

        x = np.zeros(problem.N)
        tb_prev = np.zeros(problem.N)
        t = 1.0
        for k in range(1, cfg.max_iterations + 1):
            g = Phi.T @ (u - Phi @ x)
            current = support(x)
            off = g.copy()
            off[current] = 0.0
            extended = np.union1d(current, top_k_indices(off, s))

            step = alps_step_size(Phi, g, extended)
            if step == 0.0:
                return track.finish(track.best_x, k - 1,
                                    Termination.CONVERGED,
                                    momentum=tuple(momentum))
            b = x.copy()
            b[extended] += step * g[extended]
            tb = keep_top_k(b, s)

            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            mu = float(np.clip((t - 1.0) / t_next, 0.0, 1.0))
            momentum.append(mu)
            x = tb + mu * (tb - tb_prev)
            tb_prev, t = tb, t_next

            res = track.record(tb)
            if track.diverged(x):
                return track.finish(track.best_x, k, Termination.DIVERGENCE,
                                    momentum=tuple(momentum))
            if res <= track.tol:
                return track.finish(tb, k, Termination.RESIDUAL_TOL,
                                    momentum=tuple(momentum))
        return track.finish(track.best_x, cfg.max_iterations,
                            Termination.ITERATION_CAP,
                            momentum=tuple(momentum))


def iht_recover(p: ProblemInstance,
                cfg: Optional[ThresholdingConfig] = None
                ) -> RecoverySolution:
    return IHT(cfg).recover(p)


def ist_recover(p: ProblemInstance,
                cfg: Optional[ThresholdingConfig] = None
                ) -> RecoverySolution:
    return IST(cfg).recover(p)


def cosamp_recover(p: ProblemInstance,
                   cfg: Optional[ThresholdingConfig] = None
                   ) -> RecoverySolution:
    return CoSaMP(cfg).recover(p)


def sp_recover(p: ProblemInstance,
               cfg: Optional[ThresholdingConfig] = None) -> RecoverySolution:
    return SP(cfg).recover(p)


def tst_recover(p: ProblemInstance,
                cfg: Optional[ThresholdingConfig] = None
                ) -> RecoverySolution:
    return TST(cfg).recover(p)


def amp_recover(p: ProblemInstance,
                cfg: Optional[ThresholdingConfig] = None
                ) -> RecoverySolution:
    return AMP(cfg).recover(p)


def alps_recover(p: ProblemInstance,
                 cfg: Optional[ThresholdingConfig] = None
                 ) -> RecoverySolution:
    return ALPS(cfg).recover(p)
