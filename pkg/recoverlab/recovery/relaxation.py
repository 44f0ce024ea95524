"""Convex relaxation and majorization: BP, IRl1, GPSR and SL0."""

import logging
from typing import Optional

import numpy as np

from recoverlab import validators
from recoverlab.numerics import RowSpaceProjector
from recoverlab.problem_suite import ProblemInstance
from recoverlab.recovery import (RecoveryAlgorithm, RecoverySolution,
                                 Termination, make_solution, zero_solution)
from recoverlab.recovery.interior_point import (LpSolverConfig,
                                                solve_weighted_l1)

__all__ = ["Sl0Config", "GpsrConfig", "BP", "IRL1", "GPSR", "SL0",
           "bp_recover", "irl1_recover", "gpsr_recover", "sl0_recover",
           "irl1_weights", "smoothed_l0", "sl0_sigma_ladder"]

logger = logging.getLogger(__name__)


class BP(RecoveryAlgorithm):
    """Basis pursuit, :math:`\\min ||x||_1` subject to :math:`u = \\Phi x`.

    The interior point dual vector and the final duality gap are kept in the
    solution diagnostics as an optimality certificate.
    """

    config_class = LpSolverConfig

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem, Termination.CONVERGED)

        res = solve_weighted_l1(problem.Phi, problem.u, cfg=self.config)
        termination = (Termination.CONVERGED if res.converged
                       else Termination.STALLED)
        return make_solution(problem, res.x, res.iterations, termination,
                             dual=res.dual, duality_gap=res.duality_gap)


def irl1_weights(x: np.ndarray, epsilon: float = 0.1) -> np.ndarray:
    """Diagonal of the next IRl1 weighting matrix,
    :math:`1/(|x_n| + \\epsilon)`.

    >>> import numpy as np
    >>> irl1_weights(np.array([2.0, 0.0])).round(5).tolist()
    [0.47619, 10.0]
    """
    return 1.0 / (np.abs(x) + epsilon)


class IRL1(RecoveryAlgorithm):
    """Iteratively reweighted :math:`\\ell_1` minimization.

    Starts from unit weights, so the first pass is basis pursuit, then
    re-solves with :func:`irl1_weights` of the previous solution. The
    majorized objective :math:`\\sum_n \\log(|x_n| + \\epsilon)` of every pass
    is kept in the diagnostics.
    """

    config_class = LpSolverConfig

    def recover(self, problem, seed=0):
        if not np.any(problem.u):
            return zero_solution(problem, Termination.CONVERGED)

        cfg = self.config
        eps = cfg.reweight_epsilon
        weights = np.ones(problem.N)
        x = np.zeros(problem.N)
        history, objective = [], []
        total = 0
        for k in range(1, cfg.reweight_iterations + 1):
            res = solve_weighted_l1(problem.Phi, problem.u, weights, cfg)
            total += res.iterations
            change = np.linalg.norm(res.x - x)
            x = res.x
            history.append(
                float(np.linalg.norm(problem.u - problem.Phi @ x)))
            objective.append(float(np.sum(np.log(np.abs(x) + eps))))
            if not res.converged:
                return make_solution(problem, x, k, Termination.STALLED,
                                     history, log_objective=tuple(objective),
                                     ipm_iterations=total)
            if k > 1 and change <= cfg.change_tol * np.linalg.norm(x):
                return make_solution(problem, x, k, Termination.CONVERGED,
                                     history, log_objective=tuple(objective),
                                     ipm_iterations=total)
            weights = irl1_weights(x, eps)
        return make_solution(problem, x, cfg.reweight_iterations,
                             Termination.ITERATION_CAP, history,
                             log_objective=tuple(objective),
                             ipm_iterations=total)


class GpsrConfig:
    """Parameters of GPSR-Basic."""

    def __init__(self, lambda_factor: float = 0.005,
                 tolerance: float = 1e-8,
                 max_iterations: int = 300,
                 beta: float = 0.5,
                 mu: float = 0.1,
                 alpha_min: float = 1e-30,
                 alpha_max: float = 1e30) -> None:
        """
        :param lambda_factor: :math:`\\lambda` as a fraction of
                              :math:`||\\Phi^T u||_\\infty`, defaults to
                              0.005.
        :type lambda_factor: float, optional

        :param tolerance: Relative objective change at which to stop,
                          defaults to 1e-8.
        :type tolerance: float, optional

        :param max_iterations: Defaults to 300.
        :type max_iterations: int, optional

        :param beta: Backtracking shrink factor, defaults to 0.5.
        :type beta: float, optional

        :param mu: Sufficient decrease constant, defaults to 0.1.
        :type mu: float, optional

        :param alpha_min: Lower clamp of the initial step, defaults to 1e-30.
        :type alpha_min: float, optional

        :param alpha_max: Upper clamp of the initial step, defaults to 1e30.
        :type alpha_max: float, optional
        """
        self.lambda_factor = lambda_factor
        self.tolerance = tolerance
        self.max_iterations = max_iterations
        self.beta = beta
        self.mu = mu
        self.alpha_min = alpha_min
        self.alpha_max = alpha_max

    @property
    def lambda_factor(self) -> float:
        return self._lambda_factor

    @lambda_factor.setter
    @validators.gt(0.0)
    def lambda_factor(self, val: float) -> None:
        self._lambda_factor = val

    @property
    def tolerance(self) -> float:
        return self._tolerance

    @tolerance.setter
    @validators.gt(0.0)
    def tolerance(self, val: float) -> None:
        self._tolerance = val

    @property
    def max_iterations(self) -> int:
        return self._max_iterations

    @max_iterations.setter
    @validators.ge(1)
    def max_iterations(self, val: int) -> None:
        self._max_iterations = int(val)

    @property
    def beta(self) -> float:
        return self._beta

    @beta.setter
    @validators.lt(1.0)
    @validators.gt(0.0)
    def beta(self, val: float) -> None:
        self._beta = val

    @property
    def mu(self) -> float:
        return self._mu

    @mu.setter
    @validators.lt(1.0)
    @validators.gt(0.0)
    def mu(self, val: float) -> None:
        self._mu = val

    def __repr__(self) -> str:
        return (f"GpsrConfig(lambda_factor={self.lambda_factor}, "
                f"tolerance={self.tolerance})")


class GPSR(RecoveryAlgorithm):
    """Gradient projection for sparse reconstruction, Basic variant.

    Solves

    .. math::

        \\min_{p, q \\ge 0} \\frac{1}{2}||u - \\Phi(p - q)||_2^2
        + \\lambda \\mathbf{1}^T(p + q)

    with :math:`\\lambda = 0.005||\\Phi^T u||_\\infty` by projected steepest
    descent and an Armijo backtracking search along the projection arc.
    """

    config_class = GpsrConfig

    def recover(self, problem, seed=0):
        Phi, u, n = problem.Phi, problem.u, problem.N
        cfg = self.config
        b = Phi.T @ u
        lam = cfg.lambda_factor * float(np.max(np.abs(b)))
        if lam == 0.0:
            return zero_solution(problem)

        def objective(z):
            r = u - Phi @ (z[:n] - z[n:])
            return 0.5 * float(r @ r) + lam * float(z.sum())

        def gradient(z):
            h = Phi.T @ (Phi @ (z[:n] - z[n:])) - b
            return np.concatenate([lam + h, lam - h])

        z = np.zeros(2 * n)
        f = objective(z)
        history, objectives = [float(np.linalg.norm(u))], [f]
        termination = Termination.ITERATION_CAP
        it = 0
        for it in range(1, cfg.max_iterations + 1):
            grad = gradient(z)
            g = np.where((z > 0.0) | (grad < 0.0), grad, 0.0)
            num = float(g @ g)
            den = float(np.sum((Phi @ (g[:n] - g[n:])) ** 2))
            alpha = num / den if den > 0.0 else cfg.alpha_max
            alpha = float(np.clip(alpha, cfg.alpha_min, cfg.alpha_max))

            while True:
                z_new = np.maximum(z - alpha * grad, 0.0)
                f_new = objective(z_new)
                if f_new <= f - cfg.mu * float(grad @ (z - z_new)):
                    break
                alpha *= cfg.beta
                if alpha < cfg.alpha_min:
                    z_new, f_new = z, f
                    break

            change = abs(f_new - f) / f if f > 0.0 else 0.0
            z, f = z_new, f_new
            x = z[:n] - z[n:]
            history.append(float(np.linalg.norm(u - Phi @ x)))
            objectives.append(f)
            if change < cfg.tolerance:
                termination = Termination.CONVERGED
                break

        x = z[:n] - z[n:]
        logger.debug("GPSR %s after %d iterations", termination, it)
        return make_solution(problem, x, it, termination, history,
                             objective=tuple(objectives), lam=lam)


class Sl0Config:
    """Parameters of smoothed :math:`\\ell_0` minimization."""

    def __init__(self, sigma_decay: float = 0.95, sigma_min: float = 4e-5,
                 inner_iterations: int = 3, step_scale: float = 2.0) -> None:
        """
        :param sigma_decay: Ratio :math:`d` between consecutive widths,
                            defaults to 0.95.
        :type sigma_decay: float, optional

        :param sigma_min: Largest allowed final width, defaults to 4e-5.
        :type sigma_min: float, optional

        :param inner_iterations: Steepest ascent steps per width, defaults
                                 to 3.
        :type inner_iterations: int, optional

        :param step_scale: Step :math:`\\mu` (the gradient step is
                           :math:`\\mu\\sigma^2`), defaults to 2.0.
        :type step_scale: float, optional
        """
        self.sigma_decay = sigma_decay
        self.sigma_min = sigma_min
        self.inner_iterations = inner_iterations
        self.step_scale = step_scale

    @property
    def sigma_decay(self) -> float:
        return self._sigma_decay

    @sigma_decay.setter
    @validators.lt(1.0)
    @validators.gt(0.0)
    def sigma_decay(self, val: float) -> None:
        self._sigma_decay = val

    @property
    def sigma_min(self) -> float:
        return self._sigma_min

    @sigma_min.setter
    @validators.gt(0.0)
    def sigma_min(self, val: float) -> None:
        self._sigma_min = val

    @property
    def inner_iterations(self) -> int:
        return self._inner_iterations

    @inner_iterations.setter
    @validators.ge(1)
    def inner_iterations(self, val: int) -> None:
        self._inner_iterations = int(val)

    @property
    def step_scale(self) -> float:
        return self._step_scale

    @step_scale.setter
    @validators.gt(0.0)
    def step_scale(self, val: float) -> None:
        self._step_scale = val

    def __repr__(self) -> str:
        return (f"Sl0Config(sigma_decay={self.sigma_decay}, "
                f"sigma_min={self.sigma_min})")


def smoothed_l0(x: np.ndarray, sigma: float) -> float:
    """:math:`J(x; \\sigma) = \\sum_n \\exp(-x_n^2 / 2\\sigma^2)`, summed over
    every entry of ``x``.

    >>> import numpy as np
    >>> smoothed_l0(np.zeros(5), 0.3)
    5.0
    """
    return float(np.sum(np.exp(-x ** 2 / (2.0 * sigma ** 2))))


def sl0_sigma_ladder(sigma0: float, cfg: Optional[Sl0Config] = None
                     ) -> np.ndarray:
    """Decreasing widths :math:`\\sigma_0 d^j` whose last entry is the first
    one at or below ``cfg.sigma_min``.

    The ladder has :math:`\\lceil \\log(\\sigma_{min}/\\sigma_0)/\\log d
    \\rceil + 1` entries (at least one).

    >>> len(sl0_sigma_ladder(1.0))
    199
    """
    cfg = cfg or Sl0Config()
    ratio = np.log(cfg.sigma_min / sigma0) / np.log(cfg.sigma_decay)
    length = max(1, int(np.ceil(ratio)) + 1)
    return sigma0 * cfg.sigma_decay ** np.arange(length)


class SL0(RecoveryAlgorithm):
    """Smoothed :math:`\\ell_0` minimization.

    Starting from the minimum-norm solution, maximizes
    :func:`smoothed_l0` for each width of :func:`sl0_sigma_ladder` by a few
    steepest ascent steps, each followed by reprojection onto
    :math:`\\{x : \\Phi x = u\\}`. The worst relative feasibility seen after
    a reprojection is kept in the diagnostics.
    """

    config_class = Sl0Config

    def recover(self, problem, seed=0):
        cfg = self.config
        Phi, u = problem.Phi, problem.u
        projector = RowSpaceProjector(Phi)
        x = projector.min_norm(u)
        sigma0 = 2.0 * float(np.max(np.abs(x)))
        if sigma0 == 0.0:
            return zero_solution(problem)

        unorm = float(np.linalg.norm(u))
        ladder = sl0_sigma_ladder(sigma0, cfg)
        history = [float(np.linalg.norm(u - Phi @ x))]
        worst = 0.0
        steps = 0
        for sigma in ladder:
            for _ in range(cfg.inner_iterations):
                x = x - cfg.step_scale * x * np.exp(-x ** 2
                                                    / (2.0 * sigma ** 2))
                x = projector.project(x, u)
                feas = float(np.linalg.norm(Phi @ x - u))
                worst = max(worst, feas / unorm)
                steps += 1
            history.append(feas)

        return make_solution(problem, x, steps, Termination.ITERATION_CAP,
                             history, sigma_ladder=tuple(ladder),
                             worst_feasibility=worst)


def bp_recover(p: ProblemInstance,
               cfg: Optional[LpSolverConfig] = None) -> RecoverySolution:
    return BP(cfg).recover(p)


def irl1_recover(p: ProblemInstance,
                 cfg: Optional[LpSolverConfig] = None) -> RecoverySolution:
    return IRL1(cfg).recover(p)


def gpsr_recover(p: ProblemInstance,
                 cfg: Optional[GpsrConfig] = None) -> RecoverySolution:
    return GPSR(cfg).recover(p)


def sl0_recover(p: ProblemInstance,
                cfg: Optional[Sl0Config] = None) -> RecoverySolution:
    return SL0(cfg).recover(p)
