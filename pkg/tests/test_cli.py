import json

import pytest

from cogsec.cli import main


def test_concentration_cli(tmp_path, capsys):
    out = tmp_path / "c"
    assert main(["concentration-table", "--seed", "1", "--out", str(out)]) == 0
    assert "interval_low[n=1000,q=0.25,mass=0.999998]\t0.185" in capsys.readouterr().out
    assert (out / "result.json").exists() and (out / "config.json").exists()


def test_samples_override(tmp_path):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"kind": "stats-verify", "seed": 3,
                               "stats": {"dims": [4], "published_dims": [100],
                                         "published_v": [0.5], "divergence_pairs": 10}}))
    out = tmp_path / "s"
    assert main(["stats-verify", "--config", str(cfg), "--samples", "500", "--out", str(out)]) == 0
    written = json.loads((out / "config.json").read_text())
    assert written["stats"]["samples"] == 500 and written["seed"] == 3


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"kind": "defend", "seed": 1, "defend": {"lamdas": [1]}}))
    assert main(["defend", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "lamdas" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["concentration-table", "--samples", "10"],
    ["attack", "--seed", "-4"],
])
def test_config_errors_exit_2(argv, tmp_path):
    assert main([*argv, "--out", str(tmp_path / "o")]) == 2


def test_kind_mismatch_exit_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "attack", "seed": 1}))
    assert main(["defend", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_runtime_failure_exit_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["concentration-table", "--seed", "1", "--out", str(blocker / "x")]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_config_file_exit_1(tmp_path):
    assert main(["defend", "--config", str(tmp_path / "absent.json")]) == 1


def test_ledger_command(tmp_path, capsys):
    run = tmp_path / "run"
    assert main(["concentration-table", "--seed", "1", "--out", str(run)]) == 0
    capsys.readouterr()
    assert main(["ledger", str(run), "--out", str(tmp_path / "l")]) == 0
    md = capsys.readouterr().out
    assert "## interval-0.26-4.0" in md
    assert (tmp_path / "l" / "ledger.md").read_text() == md
    assert (tmp_path / "l" / "ledger.csv").read_text().startswith("scenario,topic")


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "cogsec", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
