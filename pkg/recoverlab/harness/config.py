"""Experiment configuration.

A sweep is described by a TOML file whose top-level keys mirror
:class:`ExperimentConfig`::

    algorithms = ["bp", "omp", "sl0"]
    distributions = ["normal", "laplacian", "bernoulli"]
    master_seed = 2024
    output_dir = "runs/desk"
    worker_count = 4
    phi_policy = "per_cell"

    [suite]
    N = 400
    trials = 20
    deltas = [0.15, 0.34, 0.54]

Unknown keys are rejected.
"""

import enum
import json
import logging
import tomllib
from pathlib import Path
from typing import Any, Optional, Sequence

from recoverlab import validators
from recoverlab.problem_suite import DistType, SuiteGrid
from recoverlab.recovery import AlgoType

__all__ = ["ConfigError", "PhiPolicy", "ExperimentConfig", "load_config"]

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class PhiPolicy(enum.StrEnum):
    """Whether the trials of a cell share one sensing matrix."""
    PER_CELL = enum.auto()
    PER_TRIAL = enum.auto()


class _Field:
    """A field that references an attribute of another attribute."""

    def __init__(self, *, ref_attr: str, ref_obj: str,
                 doc: Optional[str] = None):
        self.ref_attr = ref_attr
        self.ref_obj = ref_obj
        self.__doc__ = doc

    def __get__(self, obj, objtype=None):
        if obj is None:
            return self
        return getattr(getattr(obj, self.ref_obj), self.ref_attr)

    def __set__(self, obj, value) -> None:
        setattr(getattr(obj, self.ref_obj), self.ref_attr, value)


_SUITE_KEYS = {"N", "rho_count", "delta_count", "trials", "rho_range",
               "delta_range", "deltas", "rhos", "master_seed"}
_TOP_KEYS = {"suite", "algorithms", "distributions", "master_seed",
             "output_dir", "worker_count", "phi_policy", "epsilon_u",
             "epsilon_x", "record_wall_time"}


def _parse_enum_list(values, enum_type, name: str) -> tuple:
    if isinstance(values, str) or not isinstance(values, Sequence):
        raise ConfigError(f"{name} must be a list")
    if not values:
        raise ConfigError(f"{name} must not be empty")
    parsed = []
    for v in values:
        try:
            item = enum_type(str(v).casefold())
        except ValueError:
            raise ConfigError(f"unknown entry {v!r} in {name}") from None
        if item in parsed:
            raise ConfigError(f"duplicate entry {v!r} in {name}")
        parsed.append(item)
    return tuple(parsed)


class ExperimentConfig:
    """Everything that determines the numbers a sweep produces, plus where
    and how fast to produce them.
    """

    master_seed = _Field(ref_attr="master_seed", ref_obj="suite",
                         doc="Refers to the master seed of the suite grid.")

    def __init__(self, algorithms: Sequence[AlgoType | str],
                 distributions: Sequence[DistType | str],
                 suite: Optional[SuiteGrid] = None,
                 output_dir: str | Path = "results",
                 worker_count: int = 1,
                 phi_policy: PhiPolicy | str = PhiPolicy.PER_CELL,
                 epsilon_u: float = 1e-5,
                 epsilon_x: float = 1e-2,
                 record_wall_time: bool = True) -> None:
        """
        :param algorithms: Recovery algorithms to sweep.
        :type algorithms: Sequence[AlgoType | str]

        :param distributions: Coefficient laws to sweep.
        :type distributions: Sequence[DistType | str]

        :param suite: Grid, trial count and master seed, defaults to None
                      (the full default grid).
        :type suite: SuiteGrid, optional

        :param output_dir: Directory receiving the result files, defaults
                           to ``"results"``.
        :type output_dir: str | Path, optional

        :param worker_count: Number of worker processes, defaults to 1.
        :type worker_count: int, optional

        :param phi_policy: Defaults to one matrix per cell.
        :type phi_policy: PhiPolicy | str, optional

        :param epsilon_u: Relative residual tolerance handed to the
                          algorithms, defaults to 1e-5.
        :type epsilon_u: float, optional

        :param epsilon_x: Tolerance of the relative :math:`\\ell_2`
                          criterion, defaults to 1e-2.
        :type epsilon_x: float, optional

        :param record_wall_time: Write measured trial times; when False
                                 every time is written as 0.0, defaults to
                                 True.
        :type record_wall_time: bool, optional

        :raises ConfigError: If a list is empty or names an unknown entry.
        """
        self.suite = suite if suite is not None else SuiteGrid()
        self.algorithms = _parse_enum_list(algorithms, AlgoType,
                                           "algorithms")
        self.distributions = _parse_enum_list(distributions, DistType,
                                              "distributions")
        self.output_dir = Path(output_dir)
        self.worker_count = worker_count
        try:
            self.phi_policy = PhiPolicy(str(phi_policy).casefold())
        except ValueError:
            raise ConfigError(
                f"phi_policy {phi_policy!r} is not supported") from None
        self.epsilon_u = epsilon_u
        self.epsilon_x = epsilon_x
        self.record_wall_time = bool(record_wall_time)

    @property
    def worker_count(self) -> int:
        return self._worker_count

    @worker_count.setter
    @validators.ge(1, exc_type=ConfigError)
    def worker_count(self, val: int) -> None:
        self._worker_count = int(val)

    @property
    def epsilon_u(self) -> float:
        return self._epsilon_u

    @epsilon_u.setter
    @validators.gt(0.0, exc_type=ConfigError)
    def epsilon_u(self, val: float) -> None:
        self._epsilon_u = float(val)

    @property
    def epsilon_x(self) -> float:
        return self._epsilon_x

    @epsilon_x.setter
    @validators.gt(0.0, exc_type=ConfigError)
    def epsilon_x(self, val: float) -> None:
        self._epsilon_x = float(val)

    def numerical_settings(self) -> dict[str, Any]:
        """The part of the configuration that determines the results."""
        return {"suite": self.suite.to_dict(),
                "algorithms": [str(a) for a in self.algorithms],
                "distributions": [str(d) for d in self.distributions],
                "phi_policy": str(self.phi_policy),
                "epsilon_u": self.epsilon_u,
                "epsilon_x": self.epsilon_x}

    def to_dict(self) -> dict[str, Any]:
        out = self.numerical_settings()
        out.update(master_seed=self.master_seed,
                   output_dir=str(self.output_dir),
                   worker_count=self.worker_count,
                   record_wall_time=self.record_wall_time)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        """Build a configuration from parsed TOML or JSON.

        :raises ConfigError: On unknown keys, missing lists or invalid
                             values.
        """
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown keys: {sorted(unknown)}")
        for key in ("algorithms", "distributions"):
            if key not in data:
                raise ConfigError(f"missing required key {key!r}")

        suite_data = dict(data.get("suite", {}))
        unknown = set(suite_data) - _SUITE_KEYS
        if unknown:
            raise ConfigError(f"unknown suite keys: {sorted(unknown)}")
        if "master_seed" in data:
            suite_data["master_seed"] = data["master_seed"]

        try:
            suite = SuiteGrid(**suite_data)
            return cls(suite=suite,
                       **{k: v for k, v in data.items()
                          if k not in ("suite", "master_seed")})
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def __repr__(self) -> str:
        return (f"ExperimentConfig(algorithms={len(self.algorithms)}, "
                f"distributions={len(self.distributions)}, "
                f"suite={self.suite!r})")


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an :class:`ExperimentConfig` from a TOML or JSON file.

    :raises ConfigError: If the file cannot be parsed or holds an invalid
                         configuration.
    :raises OSError: If the file cannot be read.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    logger.debug("loaded configuration from %s", path)
    return ExperimentConfig.from_dict(data)
