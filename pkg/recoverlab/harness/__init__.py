from .config import ConfigError, ExperimentConfig, PhiPolicy, load_config
from .runner import CellTask, cell_tasks, run_cell, run_suite, run_trial
from .store import TRIAL_COLUMNS, ResultStore, read_trials, write_trials
from .tables import cell_probabilities, emit_tables, phase_rows

__all__ = ["ConfigError", "ExperimentConfig", "PhiPolicy", "load_config",
           "CellTask", "cell_tasks", "run_cell", "run_suite", "run_trial",
           "TRIAL_COLUMNS", "ResultStore", "read_trials", "write_trials",
           "cell_probabilities", "emit_tables", "phase_rows"]
