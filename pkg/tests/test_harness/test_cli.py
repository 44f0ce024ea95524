import json

import pytest

from recoverlab.harness.cli import (EXIT_CONFIG, EXIT_IO, EXIT_OK,
                                    EXIT_PARTIAL, build_parser, main)

TINY_TOML = """\
algorithms = ["omp", "cosamp"]
distributions = ["normal"]
master_seed = 5
record_wall_time = false

[suite]
N = 20
trials = 3
deltas = [0.5]
rhos = [0.1, 0.2]
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML, encoding="utf-8")
    return path


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_single_prints_a_record(capsys):
    code = main(["single", "--algo", "OMP", "--dist", "normal", "--n", "40",
                 "--delta", "0.5", "--rho", "0.1", "--seed", "3"])
    assert code == EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["algorithm"] == "omp"
    assert rec["distribution"] == "normal"
    assert rec["seed"] == 3
    assert rec["error_tag"] == ""


def test_single_reports_failed_trial(capsys):
    code = main(["single", "--algo", "bp", "--dist", "bernoulli", "--n",
                 "2", "--delta", "0.9", "--rho", "0.5"])
    assert code == EXIT_PARTIAL
    rec = json.loads(capsys.readouterr().out)
    assert rec["error_tag"] == "InvalidDimensionsError"


def test_single_rejects_unknown_algorithm():
    with pytest.raises(SystemExit):
        main(["single", "--algo", "lasso", "--dist", "normal",
              "--delta", "0.5", "--rho", "0.1"])


def test_run_then_phase(config_path, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--config", str(config_path), "--out", str(out),
                 "--no-progress"])
    assert code == EXIT_OK
    for name in ("config.json", "trials.csv", "success.csv", "phase.csv",
                 "gap.csv", "best.csv", "summary.json"):
        assert (out / name).exists(), name
    first = (out / "phase.csv").read_text(encoding="utf-8")
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["timing"]["trials"] == 2 * 2 * 3

    (out / "phase.csv").unlink()
    assert main(["phase", "--in", str(out)]) == EXIT_OK
    assert (out / "phase.csv").read_text(encoding="utf-8") == first


def test_run_resume(config_path, tmp_path):
    out = tmp_path / "out"
    args = ["run", "--config", str(config_path), "--out", str(out),
            "--no-progress"]
    assert main(args) == EXIT_OK
    first = (out / "trials.csv").read_text(encoding="utf-8")
    assert main([*args, "--resume", "--workers", "2"]) == EXIT_OK
    assert (out / "trials.csv").read_text(encoding="utf-8") == first


def test_run_with_failed_trials(tmp_path):
    path = tmp_path / "fail.toml"
    path.write_text('algorithms = ["omp"]\ndistributions = ["normal"]\n'
                    '[suite]\nN = 2\ntrials = 2\ndeltas = [0.9]\n'
                    'rhos = [0.5]\n', encoding="utf-8")
    code = main(["run", "--config", str(path), "--out",
                 str(tmp_path / "out"), "--no-progress"])
    assert code == EXIT_PARTIAL


def test_invalid_config_exits_1(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('algorithms = ["omp"]\ndistributions = ["normal"]\n'
                    'colour = "red"\n', encoding="utf-8")
    assert main(["run", "--config", str(path)]) == EXIT_CONFIG


def test_bad_worker_count_exits_1(config_path, tmp_path):
    assert main(["run", "--config", str(config_path), "--out",
                 str(tmp_path / "out"), "--workers", "0"]) == EXIT_CONFIG


def test_missing_files_exit_3(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.toml")]) == EXIT_IO
    assert main(["phase", "--in", str(tmp_path / "nowhere")]) == EXIT_IO


def test_run_resume_after_torn_write(config_path, tmp_path):
    out = tmp_path / "out"
    args = ["run", "--config", str(config_path), "--out", str(out),
            "--no-progress"]
    assert main(args) == EXIT_OK
    first = (out / "trials.csv").read_text(encoding="utf-8")
    lines = first.splitlines(keepends=True)
    # keep one complete cell, then half of the next row
    torn = "".join(lines[:4]) + lines[4][:len(lines[4]) // 2]
    (out / "trials.csv").write_text(torn, encoding="utf-8")

    assert main([*args, "--resume"]) == EXIT_OK
    assert (out / "trials.csv").read_text(encoding="utf-8") == first
