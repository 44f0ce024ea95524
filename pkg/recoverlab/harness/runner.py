"""Grid sweeps over (algorithm, distribution, δ, ρ) cells.

A cell is the unit of work: all of its trials run in one worker and reach
the store together. Seeds depend only on the master seed and the position of
the cell on the grid, so a sweep gives the same records whatever the worker
count or completion order.
"""

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Iterator, NamedTuple, Optional

import numpy as np
from tqdm import tqdm

from recoverlab.evaluation import (RecoveryCriterion, TrialRecord,
                                   evaluate_trial)
from recoverlab.problem_suite import (DistType, build_problem,
                                      create_distribution, derive_seed,
                                      sample_sensing_matrix)
from recoverlab.recovery import AlgoType, create_recovery_algorithm
from recoverlab.utils import round_half_away

from .config import ConfigError, ExperimentConfig, PhiPolicy
from .store import ResultStore

__all__ = ["CONFIG_FILE", "CellTask", "cell_tasks", "run_cell", "run_trial",
           "run_suite"]

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"


class CellTask(NamedTuple):
    """Everything a worker needs to run one cell."""
    algorithm: AlgoType
    distribution: DistType
    delta_index: int
    rho_index: int
    delta: float
    rho: float
    N: int
    trials: int
    master_seed: int
    phi_policy: PhiPolicy
    epsilon_u: float
    epsilon_x: float
    record_wall_time: bool

    @property
    def cell(self) -> tuple[str, str, int, int]:
        return (str(self.algorithm), str(self.distribution),
                self.delta_index, self.rho_index)

    @property
    def dist_index(self) -> int:
        # Position in the enum, so seeds do not depend on the config list.
        return list(DistType).index(self.distribution)

    def trial_seed(self, trial: int) -> int:
        return derive_seed(self.master_seed, "trial", self.dist_index,
                           self.delta_index, self.rho_index, trial)

    def phi_seed(self) -> int:
        return derive_seed(self.master_seed, "phi", self.dist_index,
                           self.delta_index, self.rho_index)


def cell_tasks(cfg: ExperimentConfig) -> Iterator[CellTask]:
    """Cells of ``cfg`` in (algorithm, distribution, δ, ρ) order."""
    deltas, rhos = cfg.suite.delta_values, cfg.suite.rho_values
    for algo in cfg.algorithms:
        for dist in cfg.distributions:
            for d, delta in enumerate(deltas):
                for r, rho in enumerate(rhos):
                    yield CellTask(algo, dist, d, r, float(delta), float(rho),
                                   cfg.suite.N, cfg.suite.trials,
                                   cfg.master_seed, cfg.phi_policy,
                                   cfg.epsilon_u, cfg.epsilon_x,
                                   cfg.record_wall_time)


def _failed_record(task: CellTask, trial: int, seed: int,
                   exc: BaseException) -> TrialRecord:
    return TrialRecord(algorithm=str(task.algorithm),
                       distribution=str(task.distribution),
                       delta_index=task.delta_index,
                       rho_index=task.rho_index,
                       trial_index=trial,
                       seed=seed,
                       success_l2=False,
                       success_support=False,
                       residual_norm=math.nan,
                       iterations=0,
                       wall_time=0.0,
                       delta=task.delta,
                       rho=task.rho,
                       error_tag=type(exc).__name__)


def run_trial(task: CellTask, trial: int,
              phi: Optional[np.ndarray] = None,
              seed: Optional[int] = None) -> TrialRecord:
    """Build, recover, debias and evaluate one trial.

    Any exception raised along the way is turned into a failed record whose
    ``error_tag`` is the exception class name.

    :param phi: Sensing matrix shared by the cell, defaults to None (draw
                one from the trial seed).
    :type phi: np.ndarray, optional

    :param seed: Trial seed, defaults to None (derive it from the task).
    :type seed: int, optional
    """
    if seed is None:
        seed = task.trial_seed(trial)
    start = time.perf_counter()
    try:
        dist = create_distribution(task.distribution)
        problem = build_problem(task.N, task.delta, task.rho, dist, seed,
                                phi=phi)
        algo = create_recovery_algorithm(task.algorithm,
                                         residual_tol=task.epsilon_u)
        sol = algo.recover(problem, seed=seed)
        outcome = evaluate_trial(problem, sol.x_hat,
                                 RecoveryCriterion(epsilon_x=task.epsilon_x))
        elapsed = time.perf_counter() - start
        return TrialRecord(algorithm=str(task.algorithm),
                           distribution=str(task.distribution),
                           delta_index=task.delta_index,
                           rho_index=task.rho_index,
                           trial_index=trial,
                           seed=seed,
                           success_l2=outcome.success_l2,
                           success_support=outcome.success_support,
                           residual_norm=float(sol.residual_norm),
                           iterations=int(sol.iterations),
                           wall_time=elapsed if task.record_wall_time else 0.0,
                           delta=task.delta,
                           rho=task.rho)
    except Exception as exc:
        logger.warning("%s on %s/%s delta=%.4f rho=%.4f trial %d failed: "
                       "%s: %s", task.algorithm, task.distribution,
                       task.delta, task.rho, trial, type(exc).__name__, exc)
        return _failed_record(task, trial, seed, exc)


def run_cell(task: CellTask) -> list[TrialRecord]:
    """Top-level picklable worker running every trial of a cell."""
    phi = None
    if task.phi_policy is PhiPolicy.PER_CELL:
        m = round_half_away(task.delta * task.N)
        try:
            phi = sample_sensing_matrix(m, task.N, task.phi_seed())
        except Exception as exc:
            logger.warning("cannot draw the matrix of cell %s: %s",
                           task.cell, exc)
            return [_failed_record(task, t, task.trial_seed(t), exc)
                    for t in range(task.trials)]
    return [run_trial(task, t, phi) for t in range(task.trials)]


def _check_resume(cfg: ExperimentConfig, path: Path) -> None:
    try:
        stored = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    fresh = json.loads(cfg.to_json())
    keys = cfg.numerical_settings().keys()
    if any(stored.get(k) != fresh[k] for k in keys):
        raise ConfigError(f"configuration differs from the one recorded in "
                          f"{path}; refusing to resume")


def run_suite(cfg: ExperimentConfig, resume: bool = False,
              progress: bool = True) -> ResultStore:
    """Run every cell of ``cfg`` and return the populated store.

    :param resume: Keep the complete cells already in ``cfg.output_dir``
                   and only run the rest, defaults to False.
    :type resume: bool, optional

    :param progress: Show a progress bar over cells, defaults to True.
    :type progress: bool, optional

    :raises ConfigError: If resuming with settings that differ from the
                         recorded ones.
    :raises OSError: If the output directory is not writable.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_path = out / CONFIG_FILE
    if resume and config_path.exists():
        _check_resume(cfg, config_path)
    config_path.write_text(cfg.to_json(), encoding="utf-8")

    store = ResultStore.open(cfg.suite, out, resume=resume)
    done = store.completed_cells
    tasks = [t for t in cell_tasks(cfg) if t.cell not in done]
    logger.info("%d cells to run, %d already complete, %d workers",
                len(tasks), len(done), cfg.worker_count)

    with tqdm(total=len(tasks), unit="cell", disable=not progress) as pbar:
        if cfg.worker_count == 1:
            for task in tasks:
                store.append_cell(run_cell(task))
                pbar.update()
        else:
            with ProcessPoolExecutor(max_workers=cfg.worker_count) as ex:
                futures = {ex.submit(run_cell, t): t for t in tasks}
                for fut in as_completed(futures):
                    store.append_cell(fut.result())
                    pbar.update()

    failed = len(store.failures())
    if failed:
        logger.warning("%d of %d trials failed", failed, len(store))
    return store
