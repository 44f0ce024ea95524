"""Primal-dual interior point solver for weighted equality-constrained
:math:`\\ell_1` minimization.

.. math::

    \\min_x \\sum_n w_n |x_n| \\quad \\text{s.t.} \\quad \\Phi x = u

is solved as the linear program

.. math::

    \\min_{z \\ge 0} [w; w]^T z \\ \\text{s.t.} \\ [\\Phi, -\\Phi] z = u

with :math:`x = z^+ - z^-`, using Mehrotra's predictor-corrector method. The
Newton systems reduce to the :math:`m \\times m` Schur complement
:math:`\\Phi \\, \\mathrm{diag}(d^+ + d^-) \\, \\Phi^T`.
"""

import logging
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from recoverlab import validators
from recoverlab.numerics import as_matrix, as_vector

__all__ = ["LpSolverConfig", "LpResult", "solve_weighted_l1"]

logger = logging.getLogger(__name__)


class LpSolverConfig:
    """Interior point tolerances, plus the reweighting loop of IRl1."""

    def __init__(self, duality_gap_tol: float = 1e-9,
                 max_ipm_iterations: int = 100,
                 step_fraction: float = 0.99,
                 feasibility_tol: float = 1e-10,
                 reweight_iterations: int = 4,
                 reweight_epsilon: float = 0.1,
                 change_tol: float = 1e-5) -> None:
        """
        :param duality_gap_tol: Relative duality gap at which the solver
                                stops, defaults to 1e-9.
        :type duality_gap_tol: float, optional

        :param max_ipm_iterations: Defaults to 100.
        :type max_ipm_iterations: int, optional

        :param step_fraction: Fraction of the step to the boundary of the
                              positive orthant, defaults to 0.99.
        :type step_fraction: float, optional

        :param feasibility_tol: Relative primal and dual residual required
                                at termination, defaults to 1e-10.
        :type feasibility_tol: float, optional

        :param reweight_iterations: IRl1 outer iterations, defaults to 4.
        :type reweight_iterations: int, optional

        :param reweight_epsilon: IRl1 weight offset :math:`\\epsilon`,
                                 defaults to 0.1.
        :type reweight_epsilon: float, optional

        :param change_tol: IRl1 stops once successive iterates differ by
                           less than this, relative to the iterate norm,
                           defaults to 1e-5. Every pass is feasible, so the
                           measurement residual cannot serve as the test.
        :type change_tol: float, optional
        """
        self.duality_gap_tol = duality_gap_tol
        self.max_ipm_iterations = max_ipm_iterations
        self.step_fraction = step_fraction
        self.feasibility_tol = feasibility_tol
        self.reweight_iterations = reweight_iterations
        self.reweight_epsilon = reweight_epsilon
        self.change_tol = change_tol

    @property
    def duality_gap_tol(self) -> float:
        return self._duality_gap_tol

    @duality_gap_tol.setter
    @validators.gt(0.0)
    def duality_gap_tol(self, val: float) -> None:
        self._duality_gap_tol = val

    @property
    def max_ipm_iterations(self) -> int:
        return self._max_ipm_iterations

    @max_ipm_iterations.setter
    @validators.ge(1)
    def max_ipm_iterations(self, val: int) -> None:
        self._max_ipm_iterations = int(val)

    @property
    def step_fraction(self) -> float:
        return self._step_fraction

    @step_fraction.setter
    @validators.lt(1.0)
    @validators.gt(0.0)
    def step_fraction(self, val: float) -> None:
        self._step_fraction = val

    @property
    def feasibility_tol(self) -> float:
        return self._feasibility_tol

    @feasibility_tol.setter
    @validators.gt(0.0)
    def feasibility_tol(self, val: float) -> None:
        self._feasibility_tol = val

    @property
    def reweight_iterations(self) -> int:
        return self._reweight_iterations

    @reweight_iterations.setter
    @validators.ge(1)
    def reweight_iterations(self, val: int) -> None:
        self._reweight_iterations = int(val)

    @property
    def reweight_epsilon(self) -> float:
        return self._reweight_epsilon

    @reweight_epsilon.setter
    @validators.gt(0.0)
    def reweight_epsilon(self, val: float) -> None:
        self._reweight_epsilon = val

    @property
    def change_tol(self) -> float:
        return self._change_tol

    @change_tol.setter
    @validators.gt(0.0)
    def change_tol(self, val: float) -> None:
        self._change_tol = val

    def __repr__(self) -> str:
        return (f"LpSolverConfig(duality_gap_tol={self.duality_gap_tol}, "
                f"max_ipm_iterations={self.max_ipm_iterations})")


class LpResult(NamedTuple):
    """Outcome of :func:`solve_weighted_l1`.

    ``dual`` is the equality multiplier :math:`\\nu`; at optimality
    :math:`|\\varphi_n^T \\nu| \\le w_n` and :math:`u^T\\nu` equals the
    weighted norm of ``x``.
    """
    x: np.ndarray
    dual: np.ndarray
    duality_gap: float
    iterations: int
    converged: bool


class _SchurSolver:
    """Solves :math:`\\Phi \\, \\mathrm{diag}(d) \\, \\Phi^T y = b` for one
    scaling ``d``.
    """

    def __init__(self, Phi: np.ndarray, d: np.ndarray) -> None:
        M = (Phi * d) @ Phi.T
        try:
            self._chol = sla.cho_factor(M, check_finite=False)
            self._M = None
        except np.linalg.LinAlgError:
            logger.debug("Schur complement not positive definite, falling "
                         "back to least squares")
            self._chol = None
            self._M = M

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self._chol is not None:
            return sla.cho_solve(self._chol, b, check_finite=False)
        return sla.lstsq(self._M, b)[0]


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0.0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _starting_point(Phi: np.ndarray, u: np.ndarray, c: np.ndarray):
    # A = [Phi, -Phi] gives A A^T = 2 Phi Phi^T and A c = Phi (w - w) = 0
    gram = 2.0 * (Phi @ Phi.T)
    half = Phi.T @ sla.solve(gram, u, assume_a="pos")
    z = np.concatenate([half, -half])
    y = np.zeros(Phi.shape[0])
    s = c.copy()

    z += max(-1.5 * z.min(), 0.0)
    s += max(-1.5 * s.min(), 0.0)
    zs = float(z @ s)
    if zs <= 0.0:
        z += 1.0
        zs = float(z @ s)
    z += 0.5 * zs / s.sum()
    s += 0.5 * zs / z.sum()
    return z, y, s


def solve_weighted_l1(Phi, u, weights=None,
                      cfg: LpSolverConfig | None = None) -> LpResult:
    """Minimize :math:`\\sum_n w_n|x_n|` subject to :math:`\\Phi x = u`.

    :param Phi: ``m x N`` matrix with full row rank.
    :type Phi: np.ndarray

    :param u: Measurement vector of length ``m``.
    :type u: np.ndarray

    :param weights: Positive weights, defaults to None (all ones).
    :type weights: np.ndarray, optional

    :param cfg: Solver configuration, defaults to None.
    :type cfg: LpSolverConfig, optional

    :raises ValueError: If a weight is not positive.
    """
    cfg = cfg or LpSolverConfig()
    Phi = as_matrix(Phi)
    u = as_vector(u)
    m, n = Phi.shape
    w = np.ones(n) if weights is None else as_vector(weights)
    if np.any(w <= 0.0):
        raise ValueError("weights must be positive")

    if not np.any(u):
        return LpResult(np.zeros(n), np.zeros(m), 0.0, 0, True)

    c = np.concatenate([w, w])
    z, y, s = _starting_point(Phi, u, c)
    unorm = float(np.linalg.norm(u))
    cnorm = float(np.linalg.norm(c))

    def A(v):
        return Phi @ (v[:n] - v[n:])

    def At(v):
        p = Phi.T @ v
        return np.concatenate([p, -p])

    gap = np.inf
    for it in range(1, cfg.max_ipm_iterations + 1):
        rb = A(z) - u
        rc = At(y) + s - c
        primal, dual = float(c @ z), float(u @ y)
        gap = abs(primal - dual) / (1.0 + abs(primal))
        if (gap <= cfg.duality_gap_tol
                and np.linalg.norm(rb) <= cfg.feasibility_tol * unorm
                and np.linalg.norm(rc) <= cfg.feasibility_tol * (1 + cnorm)):
            logger.debug("interior point converged in %d iterations, "
                         "gap %.2e", it - 1, gap)
            return LpResult(z[:n] - z[n:], y, gap, it - 1, True)

        d = z / s
        schur = _SchurSolver(Phi, d[:n] + d[n:])

        def newton(rxs):
            # rxs is the right-hand side of S dz + Z ds = rxs
            t = (rxs + z * rc) / s
            dy = schur.solve(-rb - A(t))
            ds = -rc - At(dy)
            dz = (rxs - z * ds) / s
            return dz, dy, ds

        mu = float(z @ s) / z.size
        dz_a, dy_a, ds_a = newton(-z * s)
        ap = min(1.0, _max_step(z, dz_a))
        ad = min(1.0, _max_step(s, ds_a))
        mu_aff = float((z + ap * dz_a) @ (s + ad * ds_a)) / z.size
        sigma = (mu_aff / mu) ** 3

        dz, dy, ds = newton(-z * s - dz_a * ds_a + sigma * mu)
        ap = min(1.0, cfg.step_fraction * _max_step(z, dz))
        ad = min(1.0, cfg.step_fraction * _max_step(s, ds))
        z = z + ap * dz
        y = y + ad * dy
        s = s + ad * ds

    logger.warning("interior point stalled after %d iterations, gap %.2e",
                   cfg.max_ipm_iterations, gap)
    return LpResult(z[:n] - z[n:], y, gap, cfg.max_ipm_iterations, False)
