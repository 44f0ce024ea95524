"""Command line entry point ``recover-lab``.

Exit codes: 0 on success, 1 on an invalid configuration, 2 when some trials
failed, 3 on an I/O error.
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import recoverlab
from recoverlab.problem_suite import DistType
from recoverlab.recovery import AlgoType

from .config import ExperimentConfig, PhiPolicy, load_config
from .runner import CONFIG_FILE, CellTask, run_suite, run_trial
from .store import TRIALS_FILE, ResultStore, read_trials
from .tables import emit_tables

__all__ = ["EXIT_OK", "EXIT_CONFIG", "EXIT_PARTIAL", "EXIT_IO",
           "build_parser", "main"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recover-lab",
        description="Empirical phase transitions of sparse recovery "
                    "algorithms.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {recoverlab.__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress messages, -vv for solver "
                             "details")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep and write its tables")
    run.add_argument("--config", required=True, type=Path,
                     help="TOML or JSON experiment file")
    run.add_argument("--out", type=Path, default=None,
                     help="output directory, overrides the config")
    run.add_argument("--workers", type=int, default=None,
                     help="worker processes, overrides the config")
    run.add_argument("--resume", action="store_true",
                     help="keep complete cells of an earlier run")
    run.add_argument("--no-progress", action="store_true",
                     help="hide the progress bar")

    phase = sub.add_parser("phase",
                           help="rebuild the tables of a finished run")
    phase.add_argument("--in", dest="in_dir", required=True, type=Path,
                       help="output directory of a run")

    single = sub.add_parser("single", help="run one trial and print it")
    single.add_argument("--algo", required=True,
                        choices=[str(a) for a in AlgoType],
                        type=str.casefold)
    single.add_argument("--dist", required=True,
                        choices=[str(d) for d in DistType],
                        type=str.casefold)
    single.add_argument("--n", type=int, default=400)
    single.add_argument("--delta", type=float, required=True)
    single.add_argument("--rho", type=float, required=True)
    single.add_argument("--seed", type=int, default=0)
    single.add_argument("--eps-u", type=float, default=1e-5)
    single.add_argument("--eps-x", type=float, default=1e-2)
    return parser


def _exit_status(store: ResultStore) -> int:
    failed = len(store.failures())
    if failed:
        logger.warning("%d trials failed", failed)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg.output_dir = args.out
    if args.workers is not None:
        cfg.worker_count = args.workers
    store = run_suite(cfg, resume=args.resume,
                      progress=not args.no_progress)
    emit_tables(store, cfg.output_dir, cfg.to_dict())
    return _exit_status(store)


def _cmd_phase(args: argparse.Namespace) -> int:
    in_dir = args.in_dir
    data = json.loads((in_dir / CONFIG_FILE).read_text(encoding="utf-8"))
    cfg = ExperimentConfig.from_dict(data)
    store = ResultStore(cfg.suite)
    store.extend(read_trials(in_dir / TRIALS_FILE, cfg.suite,
                             allow_torn_tail=True))
    emit_tables(store, in_dir, cfg.to_dict())
    return _exit_status(store)


def _cmd_single(args: argparse.Namespace) -> int:
    task = CellTask(algorithm=AlgoType(args.algo),
                    distribution=DistType(args.dist),
                    delta_index=0, rho_index=0,
                    delta=args.delta, rho=args.rho, N=args.n, trials=1,
                    master_seed=args.seed, phi_policy=PhiPolicy.PER_TRIAL,
                    epsilon_u=args.eps_u, epsilon_x=args.eps_x,
                    record_wall_time=True)
    rec = run_trial(task, 0, seed=args.seed)
    print(json.dumps(dataclasses.asdict(rec), indent=2))
    return EXIT_PARTIAL if rec.error_tag else EXIT_OK


_COMMANDS = {"run": _cmd_run, "phase": _cmd_phase, "single": _cmd_single}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose,
                                                      logging.DEBUG)
    logging.basicConfig(level=level,
                        format="%(asctime)s %(levelname)s %(name)s: "
                               "%(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
