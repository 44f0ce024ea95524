import numpy as np
import pytest

from recoverlab.evaluation import evaluate_trial
from recoverlab.problem_suite import ProblemInstance, sample_sensing_matrix
from recoverlab.recovery import (AlgoType, GpsrConfig, GreedyConfig,
                                 LpSolverConfig, RecoveryAlgorithm, Sl0Config,
                                 ThresholdingConfig,
                                 create_recovery_algorithm)


@pytest.mark.parametrize("algo_type", list(AlgoType))
def test_create_recovery_algorithm(algo_type):
    algo = create_recovery_algorithm(str(algo_type).upper())
    assert isinstance(algo, RecoveryAlgorithm)
    assert algo.algo_type is algo_type
    assert isinstance(algo.config, algo.config_class)


@pytest.mark.parametrize("algo_type,config_class",
                         [("omp", GreedyConfig), ("stomp", GreedyConfig),
                          ("cosamp", ThresholdingConfig),
                          ("amp", ThresholdingConfig),
                          ("bp", LpSolverConfig), ("irl1", LpSolverConfig),
                          ("gpsr", GpsrConfig), ("sl0", Sl0Config)])
def test_config_classes(algo_type, config_class):
    assert create_recovery_algorithm(algo_type).config_class is config_class


def test_residual_tol_override():
    assert create_recovery_algorithm("OMP", 1e-3).config.residual_tol == 1e-3
    assert create_recovery_algorithm("IHT",
                                     1e-4).config.residual_tol == 1e-4
    # the relaxations have no residual tolerance
    assert not hasattr(create_recovery_algorithm("SL0", 1e-3).config,
                       "residual_tol")
    irl1 = create_recovery_algorithm("IRL1", 1e-3)
    assert not hasattr(irl1.config, "residual_tol")
    assert irl1.config.change_tol == 1e-5


def test_config_overrides():
    algo = create_recovery_algorithm("promp", max_candidates=3)
    assert algo.config.max_candidates == 3


def test_create_recovery_algorithm_errors():
    with pytest.raises(ValueError):
        create_recovery_algorithm("lasso")

    with pytest.raises(TypeError):
        create_recovery_algorithm("omp", sigma_decay=0.9)

    with pytest.raises(ValueError):
        create_recovery_algorithm("omp", residual_tol=-1.0)


@pytest.mark.parametrize("algo_type", list(AlgoType))
def test_zero_measurement_gives_zero_estimate(algo_type):
    Phi = sample_sensing_matrix(5, 12, seed=2)
    problem = ProblemInstance.from_parts(Phi, np.zeros(12))
    sol = create_recovery_algorithm(algo_type).recover(problem)
    assert sol.x_hat.shape == (12,)
    assert np.count_nonzero(sol.x_hat) == 0
    assert sol.residual_norm == 0.0


@pytest.mark.parametrize("algo_type", list(AlgoType))
def test_solution_shape(algo_type, tiny_problem):
    sol = create_recovery_algorithm(algo_type).recover(tiny_problem, seed=1)
    assert sol.x_hat.shape == (tiny_problem.N,)
    assert sol.support.tolist() == np.flatnonzero(sol.x_hat).tolist()
    assert sol.residual_norm == pytest.approx(
        np.linalg.norm(tiny_problem.u - tiny_problem.Phi @ sol.x_hat))
    assert sol.iterations >= 0


@pytest.mark.slow
@pytest.mark.parametrize("algo_type", ["omp", "bp", "sl0", "cosamp", "sp"])
def test_agrees_with_brute_force_oracle(algo_type, easy_problems, oracle):
    problems = easy_problems(200)
    algo = create_recovery_algorithm(algo_type)
    agree = 0
    for p in problems:
        truth = oracle(p, p.s)
        outcome = evaluate_trial(p, algo.recover(p).x_hat)
        if np.allclose(outcome.x_debiased, truth, atol=1e-8):
            agree += 1
        else:
            # every disagreement is reported as a failed trial
            assert not outcome.success_support
    assert agree >= 190
