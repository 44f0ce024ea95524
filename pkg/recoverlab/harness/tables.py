"""Derived tables of a sweep.

:func:`emit_tables` turns the trial records of a :class:`ResultStore` into
the CSV tables consumed by plotting scripts, plus a JSON summary.
"""

import collections
import csv
import json
import logging
import platform
from pathlib import Path
from typing import Any, Iterable, NamedTuple, Optional

import numpy as np
import scipy

import recoverlab
from recoverlab.evaluation import (CriterionType, PhaseTransitionCurve,
                                   best_envelope, criterion_gap,
                                   phase_transition, success_probability)

from .store import TRIALS_FILE, ResultStore, write_trials

__all__ = ["SUCCESS_COLUMNS", "PHASE_COLUMNS", "GAP_COLUMNS", "BEST_COLUMNS",
           "CellProbability", "PhaseRow", "cell_probabilities", "phase_rows",
           "phase_curves", "emit_tables"]

logger = logging.getLogger(__name__)

SUCCESS_COLUMNS = ("algorithm", "distribution", "delta", "rho", "trials",
                   "p_l2", "p_support")
PHASE_COLUMNS = ("algorithm", "distribution", "criterion", "delta",
                 "rho_half", "non_monotone")
GAP_COLUMNS = ("algorithm", "distribution", "delta", "gap")
BEST_COLUMNS = ("distribution", "criterion", "delta", "rho_half",
                "algorithms")


class CellProbability(NamedTuple):
    algorithm: str
    distribution: str
    delta_index: int
    rho_index: int
    trials: int
    p_l2: float
    p_support: float


class PhaseRow(NamedTuple):
    algorithm: str
    distribution: str
    criterion: CriterionType
    delta: float
    rho_half: Optional[float]
    non_monotone: bool


def _fmt(val: Optional[float]) -> str:
    return "" if val is None else repr(float(val))


def cell_probabilities(store: ResultStore) -> list[CellProbability]:
    """Success probability of every non-empty cell under both criteria."""
    out = []
    for cell in store.cells():
        recs = store.records_for(cell)
        out.append(CellProbability(
            *cell, trials=len(recs),
            p_l2=success_probability(recs, CriterionType.RELATIVE_L2),
            p_support=success_probability(recs,
                                          CriterionType.SUPPORT_EQUALITY)))
    return out


def _pairs(store: ResultStore) -> list[tuple[str, str]]:
    return sorted({(c[0], c[1]) for c in store.cells()})


def phase_rows(store: ResultStore,
               criterion: CriterionType | str) -> list[PhaseRow]:
    """One row per (algorithm, distribution, δ) under ``criterion``.

    ``rho_half`` is None when the ρ column of that δ lacks a complete cell
    or the curve starts below one half. ``non_monotone`` flags columns whose
    success probabilities rise somewhere along ρ.
    """
    criterion = CriterionType(criterion)
    grid = store.grid
    deltas, rhos = grid.delta_values, grid.rho_values
    rows = []
    for algo, dist in _pairs(store):
        for d, delta in enumerate(deltas):
            cells = [(algo, dist, d, r) for r in range(rhos.size)]
            if not all(store.is_complete(c) for c in cells):
                rows.append(PhaseRow(algo, dist, criterion, float(delta),
                                     None, False))
                continue
            p = [success_probability(store.records_for(c), criterion)
                 for c in cells]
            rows.append(PhaseRow(algo, dist, criterion, float(delta),
                                 phase_transition(p, rhos),
                                 bool(np.any(np.diff(p) > 0.0))))
    return rows


def phase_curves(rows: Iterable[PhaseRow]) -> list[PhaseTransitionCurve]:
    """Group phase rows into one curve per (algorithm, distribution,
    criterion).
    """
    grouped: dict[tuple, list] = collections.defaultdict(list)
    for row in rows:
        key = (row.algorithm, row.distribution, row.criterion)
        grouped[key].append((row.delta, row.rho_half))
    return [PhaseTransitionCurve(*key, tuple(points))
            for key, points in sorted(grouped.items())]


def _write_csv(path: Path, columns: tuple[str, ...],
               rows: Iterable[dict[str, Any]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _summary(store: ResultStore, config: Optional[dict]) -> dict[str, Any]:
    failures = store.failures()
    return {"config": config,
            "versions": {"recoverlab": recoverlab.__version__,
                         "numpy": np.__version__,
                         "scipy": scipy.__version__,
                         "python": platform.python_version()},
            "timing": {"trials": len(store),
                       "total_wall_time_s": store.total_wall_time()},
            "failures": {"count": len(failures),
                         "by_error": dict(sorted(collections.Counter(
                             r.error_tag for r in failures).items()))}}


def emit_tables(store: ResultStore, out: str | Path,
                config: Optional[dict] = None) -> list[Path]:
    """Write the sorted trial table and every derived table to ``out``.

    :param store: Records to tabulate.
    :type store: ResultStore

    :param out: Destination directory, created if missing.
    :type out: str | Path

    :param config: Configuration echoed in ``summary.json``, defaults to
                   None.
    :type config: dict, optional

    :raises ValueError: If ``store`` is empty.
    :raises OSError: If a file cannot be written.

    :return: Paths of the written files.
    """
    if len(store) == 0:
        raise ValueError("cannot tabulate an empty store")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    deltas, rhos = store.grid.delta_values, store.grid.rho_values

    trials_path = out / TRIALS_FILE
    write_trials(store.sorted_records(), trials_path)

    success_path = out / "success.csv"
    _write_csv(success_path, SUCCESS_COLUMNS, (
        {"algorithm": c.algorithm, "distribution": c.distribution,
         "delta": _fmt(deltas[c.delta_index]),
         "rho": _fmt(rhos[c.rho_index]), "trials": c.trials,
         "p_l2": _fmt(c.p_l2), "p_support": _fmt(c.p_support)}
        for c in cell_probabilities(store)))

    rows = [*phase_rows(store, CriterionType.RELATIVE_L2),
            *phase_rows(store, CriterionType.SUPPORT_EQUALITY)]
    rows.sort(key=lambda r: (r.algorithm, r.distribution, r.criterion,
                             r.delta))
    phase_path = out / "phase.csv"
    _write_csv(phase_path, PHASE_COLUMNS, (
        {"algorithm": r.algorithm, "distribution": r.distribution,
         "criterion": str(r.criterion), "delta": _fmt(r.delta),
         "rho_half": _fmt(r.rho_half), "non_monotone": int(r.non_monotone)}
        for r in rows))

    curves = phase_curves(rows)
    by_key = {(c.algorithm, c.distribution, c.criterion): c for c in curves}
    gap_rows = []
    for algo, dist in _pairs(store):
        gaps = criterion_gap(
            by_key[(algo, dist, CriterionType.RELATIVE_L2)],
            by_key[(algo, dist, CriterionType.SUPPORT_EQUALITY)])
        gap_rows.extend({"algorithm": algo, "distribution": dist,
                         "delta": _fmt(delta), "gap": _fmt(gap)}
                        for delta, gap in gaps)
    gap_path = out / "gap.csv"
    _write_csv(gap_path, GAP_COLUMNS, gap_rows)

    best_path = out / "best.csv"
    _write_csv(best_path, BEST_COLUMNS, (
        {"distribution": dist, "criterion": str(crit), "delta": _fmt(delta),
         "rho_half": _fmt(rho), "algorithms": ";".join(names)}
        for (dist, crit, delta), (rho, names)
        in sorted(best_envelope(curves).items())))

    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(_summary(store, config), indent=2, sort_keys=True),
        encoding="utf-8")

    logger.info("wrote tables for %d trials to %s", len(store), out)
    return [trials_path, success_path, phase_path, gap_path, best_path,
            summary_path]
