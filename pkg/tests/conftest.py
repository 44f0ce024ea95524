import itertools

import numpy as np
import pytest

from recoverlab.numerics import least_squares
from recoverlab.problem_suite import (NormalDist, ProblemInstance,
                                      build_problem, create_distribution)


def brute_force_recover(problem: ProblemInstance, max_s: int,
                        tol: float = 1e-9) -> np.ndarray:
    """Sparsest exact solution found by trying every support of size up to
    ``max_s``, smallest sizes first.
    """
    Phi, u = problem.Phi, problem.u
    unorm = np.linalg.norm(u)
    for k in range(1, max_s + 1):
        for cols in itertools.combinations(range(problem.N), k):
            cols = list(cols)
            coef = least_squares(Phi[:, cols], u)
            if np.linalg.norm(u - Phi[:, cols] @ coef) <= tol * unorm:
                x = np.zeros(problem.N)
                x[cols] = coef
                return x
    return np.zeros(problem.N)


def easy_instances(count: int, dist: str = "normal") -> list[ProblemInstance]:
    """Seeded instances with N = 10, m = 8 and s = 2."""
    law = create_distribution(dist)
    return [build_problem(10, 0.8, 0.25, law, seed=seed)
            for seed in range(count)]


@pytest.fixture
def tiny_problem() -> ProblemInstance:
    """N = 8, m = 6, s = 2 instance."""
    return build_problem(8, 0.75, 1 / 3, NormalDist(), seed=3)


@pytest.fixture
def identity_problem() -> ProblemInstance:
    x = np.zeros(6)
    x[[1, 4]] = [2.0, -1.5]
    return ProblemInstance.from_parts(np.eye(6), x)


@pytest.fixture
def desk_problem() -> ProblemInstance:
    """N = 200 instance at δ = 0.5, ρ = 0.1, well inside every algorithm's
    success region.
    """
    return build_problem(200, 0.5, 0.1, NormalDist(), seed=11)


@pytest.fixture
def oracle():
    return brute_force_recover


@pytest.fixture
def easy_problems():
    return easy_instances
