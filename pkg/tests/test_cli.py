from __future__ import annotations

import json
import subprocess
import sys

import pytest

from pcprmhd.cli import main
from pcprmhd.output import read_table


def write_config(tmp_path, **data):
    path = tmp_path / "config.json"
    data.setdefault("output_dir", str(tmp_path / "out"))
    path.write_text(json.dumps(data))
    return path


def test_run_ok(tmp_path):
    cfg = write_config(tmp_path, preset="rp1", n_cells=40, t_final=0.05)
    assert main(["run", str(cfg)]) == 0
    _, data = read_table(tmp_path / "out" / "rp1_final.csv")
    assert data.shape == (40, 14)


def test_run_output_dir_override(tmp_path):
    cfg = write_config(tmp_path, preset="rotor", nx=10, max_steps=2)
    assert main(["run", str(cfg), "--output-dir", str(tmp_path / "other")]) == 0
    assert (tmp_path / "other" / "rotor_diagnostics.csv").exists()


def test_run_admissibility_failure(tmp_path):
    cfg = write_config(tmp_path, preset="rp3", n_cells=200, eps="off")
    assert main(["run", str(cfg)]) == 2
    assert (tmp_path / "out" / "rp3_steplog.csv").exists()


@pytest.mark.parametrize("text", ["{broken", '{"preset": "rp1", "unknown_key": 1}', '{"preset": "mars"}'])
def test_run_config_error(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert main(["run", str(path)]) == 1


def test_run_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == 1


def test_convergence(tmp_path, capsys):
    cfg = write_config(tmp_path, preset="alfven1d", scheme="lxf1", t_final=0.05)
    assert main(["convergence", str(cfg), "--cells", "16", "32"]) == 0
    header, data = read_table(tmp_path / "out" / "convergence_alfven1d_lxf1.csv")
    assert header[:4] == ["N", "l1", "l2", "order_l1"]
    assert data[:, 0].tolist() == [16, 32]
    assert len(capsys.readouterr().out.strip().splitlines()) == 2


def test_convergence_rejects_non_smooth_preset(tmp_path):
    cfg = write_config(tmp_path, preset="rp1")
    assert main(["convergence", str(cfg)]) == 1


def test_verify_ok(tmp_path):
    out = tmp_path / "report.jsonl"
    assert main(["verify", "--seed", "2", "--trials", "50", "--output", str(out)]) == 0
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(lines) == 19 and all(line["passed"] for line in lines)


def test_verify_zero_trials(tmp_path):
    assert main(["verify", "--trials", "0", "--output", str(tmp_path / "r.jsonl")]) == 1


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    from pcprmhd import verify

    def failing(seed, trials, glf_trials):
        return [verify.TrialReport("broken", trials, 1, -1.0, seed)]

    monkeypatch.setattr(verify, "run_suite", failing)
    assert main(["verify", "--trials", "5", "--output", str(tmp_path / "r.jsonl")]) == 3


def test_module_entry_point_and_threads(tmp_path):
    env = {"RMHD_THREADS": "1", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run([sys.executable, "-m", "pcprmhd", "verify", "--trials", "0"],
                          capture_output=True, text=True, env=env, cwd=tmp_path)
    assert proc.returncode == 1
    assert "trials" in proc.stderr
