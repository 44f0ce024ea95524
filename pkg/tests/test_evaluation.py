import unittest

import numpy as np
import pytest

from recoverlab.evaluation import (DEBIAS_FLOOR, CriterionType,
                                   EmptyCellError, GridMismatchError,
                                   PhaseTransitionCurve, RecoveryCriterion,
                                   TrialRecord, ZeroTruthError, best_envelope,
                                   check_l2, check_support,
                                   criterion_bound_check, criterion_gap,
                                   debias, evaluate_trial,
                                   partial_support_error, phase_transition,
                                   single_entry_ratio_bound,
                                   success_probability)
from recoverlab.problem_suite import ProblemInstance, sample_sensing_matrix


def _record(success_l2=True, success_support=True, trial=0, algo="omp",
            rho_index=0):
    return TrialRecord(algorithm=algo, distribution="normal", delta_index=0,
                       rho_index=rho_index, trial_index=trial, seed=trial,
                       success_l2=success_l2,
                       success_support=success_support, residual_norm=0.0,
                       iterations=1)


class TestDebias(unittest.TestCase):
    def setUp(self):
        self.Phi = sample_sensing_matrix(10, 30, seed=40)
        self.x = np.zeros(30)
        self.x[[2, 9, 21]] = [1.0, -0.5, 2.0]
        self.u = self.Phi @ self.x

    def test_restores_exact_values_on_true_support(self):
        x_hat = 0.9 * self.x
        x_hat[5] = 1e-3
        xd = debias(x_hat, self.Phi, self.u)
        # the spurious entry is fitted to zero and then floored
        np.testing.assert_allclose(xd, self.x, atol=1e-12)
        self.assertEqual(np.flatnonzero(xd).tolist(), [2, 9, 21])

    def test_zero_estimate(self):
        xd = debias(np.zeros(30), self.Phi, self.u)
        self.assertEqual(np.count_nonzero(xd), 0)

    def test_keeps_at_most_m_entries(self):
        x_hat = np.linspace(1.0, 2.0, 30)
        xd = debias(x_hat, self.Phi, self.u)
        self.assertLessEqual(np.count_nonzero(xd), 10)

    def test_floor(self):
        self.assertEqual(DEBIAS_FLOOR, 1e-10)


class TestCriteria(unittest.TestCase):
    def test_check_l2(self):
        x = np.array([1.0, 0.0, 0.0])
        self.assertTrue(check_l2(x, np.array([1.005, 0.0, 0.0])))
        self.assertFalse(check_l2(x, np.array([1.02, 0.0, 0.0])))
        self.assertTrue(check_l2(x, np.array([1.02, 0.0, 0.0]),
                                 RecoveryCriterion(epsilon_x=0.05)))

    def test_check_support(self):
        x = np.array([0.0, 1.0, -1.0])
        self.assertTrue(check_support(x, np.array([0.0, 5.0, -0.1])))
        self.assertFalse(check_support(x, np.array([1e-12, 1.0, -1.0])))
        self.assertFalse(check_support(x, np.array([0.0, 1.0, 0.0])))

    def test_errors(self):
        with self.assertRaises(ZeroTruthError):
            check_l2(np.zeros(3), np.ones(3))

        with self.assertRaises(ValueError):
            RecoveryCriterion(epsilon_x=0.0)

        with self.assertRaises(ValueError):
            RecoveryCriterion("linf")


class TestEvaluateTrial(unittest.TestCase):
    def test_support_success_implies_l2_success(self):
        Phi = sample_sensing_matrix(10, 30, seed=41)
        x = np.zeros(30)
        x[[0, 15]] = [3.0, -1.0]
        p = ProblemInstance.from_parts(Phi, x)
        outcome = evaluate_trial(p, x + 0.01 * (x != 0))
        self.assertTrue(outcome.success_support)
        self.assertTrue(outcome.success_l2)

    def test_l2_success_without_support_success(self):
        # tiny entry is lost but the relative error stays below 1e-2
        x = np.zeros(6)
        x[[0, 3]] = [10.0, 1e-3]
        p = ProblemInstance.from_parts(np.eye(6), x)
        x_hat = np.zeros(6)
        x_hat[0] = 10.0
        outcome = evaluate_trial(p, x_hat)
        self.assertTrue(outcome.success_l2)
        self.assertFalse(outcome.success_support)

    def test_failure(self):
        x = np.zeros(6)
        x[[0, 3]] = [1.0, 1.0]
        p = ProblemInstance.from_parts(np.eye(6), x)
        outcome = evaluate_trial(p, np.eye(6)[5])
        self.assertFalse(outcome.success_l2)
        self.assertFalse(outcome.success_support)


class TestTrialRecord(unittest.TestCase):
    def test_cell(self):
        rec = _record(algo="bp", rho_index=4)
        self.assertEqual(rec.cell, ("bp", "normal", 0, 4))

    def test_errors(self):
        with self.assertRaises(ValueError):
            _record(success_l2=False, success_support=True)


class TestSuccessProbability(unittest.TestCase):
    def test_fractions(self):
        records = [_record(True, True, 0), _record(True, False, 1),
                   _record(False, False, 2), _record(True, True, 3)]
        self.assertEqual(success_probability(records, "relative_l2"), 0.75)
        self.assertEqual(success_probability(
            records, CriterionType.SUPPORT_EQUALITY), 0.5)

    def test_errors(self):
        with self.assertRaises(EmptyCellError):
            success_probability([], "relative_l2")

        with self.assertRaises(ValueError):
            success_probability([_record(rho_index=0),
                                 _record(rho_index=1)], "relative_l2")

        with self.assertRaises(ValueError):
            success_probability([_record()], "sup")


@pytest.mark.parametrize("probs,rhos,expected",
                         [([1.0, 0.6, 0.2], [0.2, 0.3, 0.4], 0.325),
                          ([1.0, 0.5, 0.0], [0.1, 0.2, 0.3], 0.2),
                          ([1.0, 0.9, 0.7], [0.1, 0.2, 0.3], 0.3),
                          ([0.4, 0.9, 1.0], [0.1, 0.2, 0.3], None),
                          ([1.0, 0.0], [0.1, 0.2], 0.15)])
def test_phase_transition(probs, rhos, expected):
    result = phase_transition(probs, rhos)
    if expected is None:
        assert result is None
    else:
        assert result == pytest.approx(expected)


def test_phase_transition_errors():
    with pytest.raises(GridMismatchError):
        phase_transition([1.0, 0.0], [0.1, 0.2, 0.3])

    with pytest.raises(GridMismatchError):
        phase_transition([], [])

    with pytest.raises(GridMismatchError):
        phase_transition([1.0, 0.0], [0.2, 0.1])


class TestCriterionBound(unittest.TestCase):
    def test_square_matrix(self):
        Phi = np.diag([2.0, 1.0, 1.0]) / 2.0
        bound = criterion_bound_check(Phi, 1e-3, 1e-2)
        self.assertTrue(bound)
        self.assertAlmostEqual(bound.condition_ratio, 2.0)
        self.assertFalse(criterion_bound_check(Phi, 1e-2, 1e-2))

    def test_wide_matrix_is_vacuous(self):
        bound = criterion_bound_check(sample_sensing_matrix(5, 10, seed=0),
                                      1e-5, 1e-2)
        self.assertFalse(bound.satisfied)
        self.assertEqual(bound.condition_ratio, np.inf)


class TestPartialSupport(unittest.TestCase):
    def test_identity(self):
        x = np.array([3.0, 4.0, 0.0])
        self.assertAlmostEqual(partial_support_error(np.eye(3), x, [1]),
                               9.0 / 25.0)
        self.assertAlmostEqual(partial_support_error(np.eye(3), x, [0, 1]),
                               0.0)
        self.assertAlmostEqual(partial_support_error(np.eye(3), x, []), 1.0)

    def test_full_support_is_exact(self):
        Phi = sample_sensing_matrix(20, 40, seed=42)
        x = np.zeros(40)
        x[[1, 5, 9, 13]] = [4.0, 2.0, 1.0, 0.5]
        self.assertAlmostEqual(partial_support_error(Phi, x, []), 1.0)
        self.assertAlmostEqual(
            partial_support_error(Phi, x, [1, 5, 9, 13]), 0.0)
        self.assertLess(partial_support_error(Phi, x, [1, 5, 9]), 1.0)

    def test_errors(self):
        with self.assertRaises(ZeroTruthError):
            partial_support_error(np.eye(2), np.zeros(2), [0])


def test_single_entry_ratio_bound():
    assert single_entry_ratio_bound(1, 0.01) == 0.0
    assert single_entry_ratio_bound(11, 0.1) == pytest.approx(990.0)


def test_single_entry_ratio_bound_is_tight():
    s, eps = 5, 0.1
    ratio = single_entry_ratio_bound(s, eps)
    x = np.zeros(s)
    x[0] = np.sqrt(ratio)
    x[1:] = 1.0
    x_hat = np.zeros(s)
    x_hat[0] = x[0]
    rel = np.linalg.norm(x - x_hat) / np.linalg.norm(x)
    assert rel == pytest.approx(eps)


def _curve(algo, criterion, points, dist="normal"):
    return PhaseTransitionCurve(algo, dist, CriterionType(criterion),
                                tuple(points))


class TestCurves(unittest.TestCase):
    def test_criterion_gap(self):
        l2 = _curve("omp", "relative_l2", [(0.1, 0.3), (0.2, None),
                                          (0.3, 0.4)])
        s = _curve("omp", "support_equality", [(0.1, 0.2), (0.2, 0.1),
                                               (0.3, 0.4)])
        gaps = criterion_gap(l2, s)
        self.assertEqual([d for d, _ in gaps], [0.1, 0.2, 0.3])
        self.assertAlmostEqual(gaps[0][1], 0.1)
        self.assertIsNone(gaps[1][1])
        self.assertEqual(gaps[2][1], 0.0)

    def test_criterion_gap_errors(self):
        l2 = _curve("omp", "relative_l2", [(0.1, 0.3)])
        s = _curve("omp", "support_equality", [(0.2, 0.2)])
        with self.assertRaises(GridMismatchError):
            criterion_gap(l2, s)

    def test_best_envelope(self):
        curves = [
            _curve("omp", "relative_l2", [(0.1, 0.3), (0.2, 0.35)]),
            _curve("bp", "relative_l2", [(0.1, 0.3), (0.2, 0.4)]),
            _curve("sl0", "relative_l2", [(0.1, 0.2), (0.2, None)]),
            _curve("sl0", "support_equality", [(0.1, 0.25), (0.2, None)]),
        ]
        env = best_envelope(curves)
        key = ("normal", CriterionType.RELATIVE_L2, 0.1)
        self.assertEqual(env[key], (0.3, ["bp", "omp"]))
        self.assertEqual(env[("normal", CriterionType.RELATIVE_L2, 0.2)],
                         (0.4, ["bp"]))
        self.assertEqual(
            env[("normal", CriterionType.SUPPORT_EQUALITY, 0.1)],
            (0.25, ["sl0"]))
        self.assertNotIn(("normal", CriterionType.SUPPORT_EQUALITY, 0.2),
                         env)
