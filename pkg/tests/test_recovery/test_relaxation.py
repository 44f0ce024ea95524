import unittest

import numpy as np
import pytest

from recoverlab.evaluation import evaluate_trial
from recoverlab.problem_suite import ProblemInstance, sample_sensing_matrix
from recoverlab.recovery import (BP, GPSR, IRL1, SL0, GpsrConfig,
                                 LpSolverConfig, Sl0Config, Termination,
                                 bp_recover, gpsr_recover, irl1_recover,
                                 irl1_weights, sl0_recover, sl0_sigma_ladder,
                                 smoothed_l0)


class TestBP(unittest.TestCase):
    def test_identity_has_a_single_feasible_point(self):
        x = np.zeros(6)
        x[[1, 4]] = [2.0, -1.5]
        sol = bp_recover(ProblemInstance.from_parts(np.eye(6), x))
        self.assertEqual(sol.termination, Termination.CONVERGED)
        np.testing.assert_allclose(sol.x_hat, x, atol=1e-8)

    def test_zero_measurement(self):
        Phi = sample_sensing_matrix(4, 8, seed=0)
        sol = BP().recover(ProblemInstance.from_parts(Phi, np.zeros(8)))
        self.assertEqual(np.count_nonzero(sol.x_hat), 0)
        self.assertEqual(sol.termination, Termination.CONVERGED)


def test_bp_recovers_desk_problem(desk_problem):
    sol = bp_recover(desk_problem)
    assert sol.termination == Termination.CONVERGED
    assert evaluate_trial(desk_problem, sol.x_hat).success_support


def test_bp_dual_certificate(desk_problem):
    sol = bp_recover(desk_problem)
    y = sol.diagnostics["dual"]
    l1 = np.sum(np.abs(sol.x_hat))
    # weak duality sandwich: u^T y <= ||x||_1 with equality at the optimum
    assert np.max(np.abs(desk_problem.Phi.T @ y)) <= 1.0 + 1e-6
    assert abs(desk_problem.u @ y - l1) <= 1e-6 * (1.0 + l1)
    assert sol.diagnostics["duality_gap"] <= 1e-9


def test_irl1_weights():
    w = irl1_weights(np.array([2.0, -0.5, 0.0]), epsilon=0.5)
    np.testing.assert_allclose(w, [0.4, 1.0, 2.0])


class TestIRL1(unittest.TestCase):
    def setUp(self):
        Phi = sample_sensing_matrix(40, 100, seed=12)
        x = np.zeros(100)
        x[[7, 19, 52, 61, 88, 95]] = [1.0, -0.4, 2.2, 0.9, -1.3, 0.6]
        self.problem = ProblemInstance.from_parts(Phi, x)

    def test_diagnostics(self):
        sol = irl1_recover(self.problem)
        self.assertIn(sol.termination, (Termination.CONVERGED,
                                        Termination.ITERATION_CAP))
        objective = sol.diagnostics["log_objective"]
        self.assertEqual(len(objective), sol.iterations)
        self.assertEqual(len(sol.residual_history), sol.iterations)
        self.assertGreaterEqual(sol.diagnostics["ipm_iterations"],
                                sol.iterations)

    def test_log_objective_never_increases(self):
        sol = IRL1(LpSolverConfig(reweight_iterations=4,
                                  change_tol=1e-12)).recover(self.problem)
        objective = np.array(sol.diagnostics["log_objective"])
        self.assertTrue(np.all(np.diff(objective) <= 1e-6))

    def test_single_pass_is_basis_pursuit(self):
        sol = IRL1(LpSolverConfig(reweight_iterations=1)).recover(
            self.problem)
        bp = bp_recover(self.problem)
        self.assertEqual(sol.termination, Termination.ITERATION_CAP)
        np.testing.assert_allclose(sol.x_hat, bp.x_hat, atol=1e-10)

    def test_iterates_are_feasible(self):
        sol = irl1_recover(self.problem)
        self.assertLessEqual(sol.residual_norm,
                             1e-8 * np.linalg.norm(self.problem.u))


class TestGPSR(unittest.TestCase):
    def setUp(self):
        Phi = sample_sensing_matrix(50, 120, seed=13)
        x = np.zeros(120)
        x[[0, 25, 60, 90, 119]] = [1.5, -2.0, 1.0, 0.8, -1.2]
        self.problem = ProblemInstance.from_parts(Phi, x)

    def test_objective_never_increases(self):
        sol = gpsr_recover(self.problem)
        objective = np.array(sol.diagnostics["objective"])
        self.assertTrue(np.all(np.diff(objective) <= 0.0))
        self.assertEqual(len(objective), sol.iterations + 1)

    def test_regularization_weight(self):
        sol = GPSR(GpsrConfig(lambda_factor=0.01)).recover(self.problem)
        b = self.problem.Phi.T @ self.problem.u
        self.assertAlmostEqual(sol.diagnostics["lam"],
                               0.01 * np.max(np.abs(b)))

    def test_identity_shrinks_by_the_weight(self):
        problem = ProblemInstance.from_parts(np.eye(2),
                                             np.array([10.0, 0.001]))
        sol = gpsr_recover(problem)
        self.assertAlmostEqual(sol.diagnostics["lam"], 0.05)
        np.testing.assert_allclose(sol.x_hat, [9.95, 0.0], atol=1e-9)
        self.assertEqual(sol.support.tolist(), [0])

    def test_fits_the_measurement(self):
        sol = gpsr_recover(self.problem)
        self.assertLess(sol.residual_norm,
                        0.1 * np.linalg.norm(self.problem.u))

    def test_zero_measurement(self):
        Phi = sample_sensing_matrix(4, 8, seed=0)
        sol = GPSR().recover(ProblemInstance.from_parts(Phi, np.zeros(8)))
        self.assertEqual(np.count_nonzero(sol.x_hat), 0)
        self.assertEqual(sol.iterations, 0)


class TestSmoothedL0(unittest.TestCase):
    def test_smoothed_l0(self):
        self.assertEqual(smoothed_l0(np.zeros(7), 0.1), 7.0)
        self.assertAlmostEqual(smoothed_l0(np.array([0.0, 100.0]), 0.1), 1.0)
        self.assertAlmostEqual(smoothed_l0(np.array([1.0]), 1.0),
                               np.exp(-0.5))

    def test_sigma_ladder(self):
        ladder = sl0_sigma_ladder(1.0)
        self.assertEqual(len(ladder), 199)
        self.assertLessEqual(ladder[-1], 4e-5)
        self.assertGreater(ladder[-2], 4e-5)
        self.assertTrue(np.all(np.diff(ladder) < 0.0))

    def test_sigma_ladder_below_minimum(self):
        ladder = sl0_sigma_ladder(1e-6)
        self.assertEqual(ladder.tolist(), [1e-6])

    def test_custom_decay(self):
        ladder = sl0_sigma_ladder(1.0, Sl0Config(sigma_decay=0.5,
                                                 sigma_min=0.1))
        np.testing.assert_allclose(ladder, [1.0, 0.5, 0.25, 0.125, 0.0625])


class TestSL0(unittest.TestCase):
    def test_iterates_stay_feasible(self):
        Phi = sample_sensing_matrix(30, 80, seed=14)
        x = np.zeros(80)
        x[[3, 33, 63]] = [1.0, -1.5, 0.5]
        problem = ProblemInstance.from_parts(Phi, x)
        sol = SL0().recover(problem)
        self.assertLessEqual(sol.diagnostics["worst_feasibility"], 1e-9)
        ladder = sol.diagnostics["sigma_ladder"]
        self.assertEqual(sol.iterations, 3 * len(ladder))
        self.assertEqual(len(sol.residual_history), len(ladder) + 1)
        self.assertEqual(sol.termination, Termination.ITERATION_CAP)

    def test_zero_measurement(self):
        Phi = sample_sensing_matrix(4, 8, seed=0)
        sol = sl0_recover(ProblemInstance.from_parts(Phi, np.zeros(8)))
        self.assertEqual(np.count_nonzero(sol.x_hat), 0)


def test_sl0_recovers_desk_problem(desk_problem):
    sol = sl0_recover(desk_problem)
    assert evaluate_trial(desk_problem, sol.x_hat).success_l2


class TestConfigs(unittest.TestCase):
    def test_lp_errors(self):
        with self.assertRaises(ValueError):
            LpSolverConfig(duality_gap_tol=0.0)

        with self.assertRaises(ValueError):
            LpSolverConfig(step_fraction=1.0)

        with self.assertRaises(ValueError):
            LpSolverConfig(reweight_iterations=0)

        with self.assertRaises(ValueError):
            LpSolverConfig(reweight_epsilon=-0.1)

    def test_gpsr_errors(self):
        with self.assertRaises(ValueError):
            GpsrConfig(lambda_factor=0.0)

        with self.assertRaises(ValueError):
            GpsrConfig(beta=1.0)

        with self.assertRaises(ValueError):
            GpsrConfig(mu=0.0)

    def test_sl0_errors(self):
        with self.assertRaises(ValueError):
            Sl0Config(sigma_decay=1.0)

        with self.assertRaises(ValueError):
            Sl0Config(sigma_min=0.0)

        with self.assertRaises(ValueError):
            Sl0Config(inner_iterations=0)


@pytest.mark.slow
@pytest.mark.parametrize("algo", [BP, IRL1, SL0])
def test_relaxation_majority_recovery(algo, easy_problems):
    problems = easy_problems(20)
    wins = sum(evaluate_trial(p, algo().recover(p).x_hat).success_support
               for p in problems)
    assert wins >= 15
