"""Append-only persistence of trial records.

Records live in ``trials.csv`` inside the output directory. A cell's records
are appended and flushed together, so after a crash the file holds every
completed cell plus at most one partially written one, which
:meth:`ResultStore.open` discards on resume.
"""

import csv
import io
import logging
import math
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from recoverlab.evaluation import TrialRecord
from recoverlab.problem_suite import SuiteGrid

__all__ = ["TRIALS_FILE", "TRIAL_COLUMNS", "ResultStore", "record_to_row",
           "read_trials", "write_trials"]

logger = logging.getLogger(__name__)

TRIALS_FILE = "trials.csv"

TRIAL_COLUMNS = ("algorithm", "distribution", "delta", "rho", "trial",
                 "seed", "success_l2", "success_support", "residual_norm",
                 "iterations", "wall_time_s", "error_tag")

Cell = tuple[str, str, int, int]


def _fmt_float(val: float) -> str:
    return repr(float(val))


def record_to_row(rec: TrialRecord) -> dict[str, str]:
    return {"algorithm": rec.algorithm,
            "distribution": rec.distribution,
            "delta": _fmt_float(rec.delta),
            "rho": _fmt_float(rec.rho),
            "trial": str(rec.trial_index),
            "seed": str(rec.seed),
            "success_l2": str(int(rec.success_l2)),
            "success_support": str(int(rec.success_support)),
            "residual_norm": _fmt_float(rec.residual_norm),
            "iterations": str(rec.iterations),
            "wall_time_s": _fmt_float(rec.wall_time),
            "error_tag": rec.error_tag}


def write_trials(records: Iterable[TrialRecord], path: Path) -> None:
    """Write ``records`` to ``path`` in the order given, header first."""
    with Path(path).open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=TRIAL_COLUMNS,
                                lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow(record_to_row(rec))


def _grid_index(values: np.ndarray, val: float, name: str) -> int:
    hits = np.flatnonzero(np.isclose(values, val, rtol=0.0, atol=1e-12))
    if hits.size != 1:
        raise ValueError(f"{name} {val} is not on the suite grid")
    return int(hits[0])


def _parse_row(row: dict, deltas: np.ndarray,
               rhos: np.ndarray) -> TrialRecord:
    if None in row.values() or None in row:
        raise ValueError("wrong number of fields")
    for key in ("success_l2", "success_support"):
        if row[key] not in ("0", "1"):
            raise ValueError(f"{key} must be 0 or 1, got {row[key]!r}")
    delta, rho = float(row["delta"]), float(row["rho"])
    return TrialRecord(algorithm=row["algorithm"],
                       distribution=row["distribution"],
                       delta_index=_grid_index(deltas, delta, "delta"),
                       rho_index=_grid_index(rhos, rho, "rho"),
                       trial_index=int(row["trial"]),
                       seed=int(row["seed"]),
                       success_l2=row["success_l2"] == "1",
                       success_support=row["success_support"] == "1",
                       residual_norm=float(row["residual_norm"]),
                       iterations=int(row["iterations"]),
                       wall_time=float(row["wall_time_s"]),
                       delta=delta,
                       rho=rho,
                       error_tag=row["error_tag"])


def read_trials(path: Path, grid: SuiteGrid,
                allow_torn_tail: bool = False) -> list[TrialRecord]:
    """Parse ``trials.csv``, mapping δ and ρ back to their grid indices.

    :param allow_torn_tail: Drop a malformed or unterminated last row
                            instead of raising. A run killed while appending
                            leaves at most one such row, and its cell is
                            then incomplete.
    :type allow_torn_tail: bool, optional

    :raises ValueError: If the header differs from :data:`TRIAL_COLUMNS`, a
                        row is malformed or a value is off the grid.
    """
    deltas, rhos = grid.delta_values, grid.rho_values
    with path.open("r", encoding="utf-8", newline="") as f:
        text = f.read()
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TRIAL_COLUMNS:
        raise ValueError(f"unexpected header in {path}")
    rows = list(reader)
    # every complete write ends with a newline
    if allow_torn_tail and rows and not text.endswith("\n"):
        logger.warning("dropping unterminated last row of %s", path)
        rows.pop()

    records = []
    for i, row in enumerate(rows):
        try:
            records.append(_parse_row(row, deltas, rhos))
        except (TypeError, ValueError) as exc:
            if allow_torn_tail and i == len(rows) - 1:
                logger.warning("dropping torn last row of %s: %s", path, exc)
                break
            raise ValueError(
                f"malformed row {i + 2} in {path}: {exc}") from None
    return records


class ResultStore:
    """Trial records of one sweep, indexed by cell."""

    def __init__(self, grid: SuiteGrid,
                 out_dir: Optional[Path] = None) -> None:
        """
        :param grid: Grid the records belong to; a cell is complete once it
                     holds ``grid.trials`` records.
        :type grid: SuiteGrid

        :param out_dir: Directory of ``trials.csv``, defaults to None (keep
                        records in memory only).
        :type out_dir: Path, optional
        """
        self.grid = grid
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self._cells: dict[Cell, list[TrialRecord]] = {}

    @classmethod
    def open(cls, grid: SuiteGrid, out_dir: Path,
             resume: bool = False) -> "ResultStore":
        """Store backed by ``out_dir/trials.csv``.

        Without ``resume`` any existing file is replaced by an empty one.
        With it, complete cells are loaded and the file is rewritten
        without the incomplete ones.
        """
        store = cls(grid, out_dir)
        path = store.trials_path
        path.parent.mkdir(parents=True, exist_ok=True)
        if resume and path.exists():
            dropped = 0
            for rec in read_trials(path, grid, allow_torn_tail=True):
                store._cells.setdefault(rec.cell, []).append(rec)
            for cell in [c for c in store._cells
                         if not store.is_complete(c)]:
                dropped += len(store._cells.pop(cell))
            logger.info("resuming with %d complete cells, %d partial "
                        "records dropped", len(store._cells), dropped)
        store._rewrite()
        return store

    @property
    def trials_path(self) -> Path:
        if self.out_dir is None:
            raise ValueError("store has no output directory")
        return self.out_dir / TRIALS_FILE

    def _rewrite(self) -> None:
        write_trials(self.sorted_records(), self.trials_path)

    def append_cell(self, records: Sequence[TrialRecord]) -> None:
        """Add the records of one cell and flush them to disk.

        :raises ValueError: If the cell already holds records or the
                            records span several cells.
        """
        if not records:
            return
        cells = {r.cell for r in records}
        if len(cells) != 1:
            raise ValueError("append_cell expects the records of one cell")
        cell = cells.pop()
        if cell in self._cells:
            raise ValueError(f"cell {cell} already recorded")
        self._cells[cell] = list(records)

        if self.out_dir is not None:
            with self.trials_path.open("a", encoding="utf-8",
                                       newline="") as f:
                writer = csv.DictWriter(f, fieldnames=TRIAL_COLUMNS,
                                        lineterminator="\n")
                for rec in records:
                    writer.writerow(record_to_row(rec))
                f.flush()

    def is_complete(self, cell: Cell) -> bool:
        recs = self._cells.get(cell, ())
        return len({r.trial_index for r in recs}) == self.grid.trials

    @property
    def completed_cells(self) -> set[Cell]:
        return {c for c in self._cells if self.is_complete(c)}

    def records_for(self, cell: Cell) -> list[TrialRecord]:
        return list(self._cells.get(cell, ()))

    def cells(self) -> Iterator[Cell]:
        return iter(sorted(self._cells))

    def sorted_records(self) -> list[TrialRecord]:
        return sorted(self, key=lambda r: (*r.cell, r.trial_index))

    def failures(self) -> list[TrialRecord]:
        return [r for r in self if r.error_tag]

    def __iter__(self) -> Iterator[TrialRecord]:
        for recs in self._cells.values():
            yield from recs

    def __len__(self) -> int:
        return sum(len(r) for r in self._cells.values())

    def total_wall_time(self) -> float:
        return math.fsum(r.wall_time for r in self)

    def extend(self, records: Iterable[TrialRecord]) -> None:
        """Group ``records`` by cell and append each cell."""
        grouped: dict[Cell, list[TrialRecord]] = {}
        for rec in records:
            grouped.setdefault(rec.cell, []).append(rec)
        for cell in sorted(grouped):
            self.append_cell(grouped[cell])
