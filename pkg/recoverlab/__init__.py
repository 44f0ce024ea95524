from . import evaluation, numerics, problem_suite, recovery, utils

__version__ = "0.1.0"
