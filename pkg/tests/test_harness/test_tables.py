import csv
import json
import math
import unittest

import pytest

from recoverlab.evaluation import CriterionType, TrialRecord
from recoverlab.harness import (ResultStore, cell_probabilities, emit_tables,
                                phase_rows, read_trials)
from recoverlab.harness.tables import phase_curves
from recoverlab.problem_suite import SuiteGrid

GRID = SuiteGrid(N=20, trials=2, deltas=[0.3, 0.5], rhos=[0.1, 0.2, 0.3])

# (success_l2, success_support) of the two trials at each rho of delta 0.3
OUTCOMES = [((True, True), (True, True)),
            ((True, False), (False, False)),
            ((False, False), (False, False))]


def _store(algo="omp", tag=""):
    store = ResultStore(GRID)
    for r, trials in enumerate(OUTCOMES):
        store.append_cell([
            TrialRecord(algorithm=algo, distribution="normal",
                        delta_index=0, rho_index=r, trial_index=t,
                        seed=t, success_l2=l2, success_support=sup,
                        residual_norm=math.nan if tag else 0.0,
                        iterations=1, wall_time=0.5,
                        delta=GRID.delta_values[0], rho=GRID.rho_values[r],
                        error_tag=tag if not l2 else "")
            for t, (l2, sup) in enumerate(trials)])
    # a single record, leaving the second delta incomplete
    store.append_cell([
        TrialRecord(algorithm=algo, distribution="normal", delta_index=1,
                    rho_index=0, trial_index=0, seed=0, success_l2=True,
                    success_support=True, residual_norm=0.0, iterations=1,
                    delta=0.5, rho=0.1)])
    return store


class TestCellProbabilities(unittest.TestCase):
    def test_probabilities(self):
        probs = cell_probabilities(_store())
        self.assertEqual([(p.p_l2, p.p_support) for p in probs[:3]],
                         [(1.0, 1.0), (0.5, 0.0), (0.0, 0.0)])
        self.assertEqual(probs[0].trials, 2)
        self.assertEqual(probs[3].trials, 1)


class TestPhaseRows(unittest.TestCase):
    def test_relative_l2(self):
        rows = phase_rows(_store(), "relative_l2")
        self.assertEqual(len(rows), 2)
        self.assertAlmostEqual(rows[0].rho_half, 0.2)
        self.assertFalse(rows[0].non_monotone)
        # the second delta holds a single incomplete cell
        self.assertIsNone(rows[1].rho_half)

    def test_support_equality(self):
        rows = phase_rows(_store(), CriterionType.SUPPORT_EQUALITY)
        self.assertAlmostEqual(rows[0].rho_half, 0.15)

    def test_curves(self):
        rows = [*phase_rows(_store(), "relative_l2"),
                *phase_rows(_store(), "support_equality")]
        curves = phase_curves(rows)
        self.assertEqual(len(curves), 2)
        self.assertEqual([d for d, _ in curves[0].points], [0.3, 0.5])


def _read_csv(path):
    with path.open(encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def test_emit_tables(tmp_path):
    store = _store()
    paths = emit_tables(store, tmp_path, config={"algorithms": ["omp"]})
    assert [p.name for p in paths] == ["trials.csv", "success.csv",
                                       "phase.csv", "gap.csv", "best.csv",
                                       "summary.json"]

    trials = read_trials(tmp_path / "trials.csv", GRID)
    assert trials == store.sorted_records()

    success = _read_csv(tmp_path / "success.csv")
    assert len(success) == 4
    assert float(success[1]["p_l2"]) == 0.5

    phase = _read_csv(tmp_path / "phase.csv")
    assert len(phase) == 4
    l2 = [r for r in phase if r["criterion"] == "relative_l2"]
    assert float(l2[0]["rho_half"]) == pytest.approx(0.2)
    assert l2[1]["rho_half"] == ""

    gap = _read_csv(tmp_path / "gap.csv")
    assert float(gap[0]["gap"]) == pytest.approx(0.05)
    assert gap[1]["gap"] == ""

    best = _read_csv(tmp_path / "best.csv")
    assert {r["algorithms"] for r in best} == {"omp"}

    summary = json.loads((tmp_path / "summary.json").read_text("utf-8"))
    assert summary["config"] == {"algorithms": ["omp"]}
    assert summary["timing"]["trials"] == 7
    assert summary["timing"]["total_wall_time_s"] == pytest.approx(3.0)
    assert summary["failures"]["count"] == 0
    assert "numpy" in summary["versions"]


def test_best_table_lists_ties(tmp_path):
    store = _store("omp")
    store.extend(_store("bp"))
    emit_tables(store, tmp_path)
    best = _read_csv(tmp_path / "best.csv")
    assert {r["algorithms"] for r in best} == {"bp;omp"}


def test_summary_counts_failures(tmp_path):
    emit_tables(_store(tag="LinAlgError"), tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text("utf-8"))
    assert summary["failures"] == {"count": 3,
                                   "by_error": {"LinAlgError": 3}}


def test_emit_tables_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_tables(ResultStore(GRID), tmp_path)
