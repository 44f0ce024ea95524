import pytest

from recoverlab.harness import ExperimentConfig
from recoverlab.problem_suite import SuiteGrid


def make_config(out_dir, **overrides) -> ExperimentConfig:
    """One algorithm, one law, 2 x 3 cells of 5 trials at N = 20."""
    suite = SuiteGrid(N=20, trials=5, master_seed=7, deltas=[0.3, 0.5],
                      rhos=[0.1, 0.2, 0.3])
    kwargs = dict(algorithms=["omp"], distributions=["normal"], suite=suite,
                  output_dir=out_dir, worker_count=1,
                  record_wall_time=False)
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


@pytest.fixture
def tiny_config(tmp_path):
    return make_config(tmp_path / "run")


@pytest.fixture
def config_factory():
    return make_config
