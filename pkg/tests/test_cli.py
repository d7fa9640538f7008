import json
import subprocess
import sys

import pytest

from homtree.cli import main, parse_config
from homtree.errors import ConfigError


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_selftest_passes(tmp_path):
    assert main(["selftest", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "selftest.json").read_text())
    assert doc["passed"] and doc["meta"]["command"] == "selftest"
    assert len(doc["invariants"]) == 11


def test_selftest_detects_fault(tmp_path, capsys):
    assert main(["selftest", "--out", str(tmp_path), "--inject-fault", "plancherel"]) == 1
    err = capsys.readouterr().err
    assert "plancherel_roundtrip" in err and "normalization_audit" in err


def test_unknown_key_reports_line(tmp_path, capsys):
    cfg = write(tmp_path, "[tree]\nQ = 2\n\n[kernel]\nn_maxx = 4\n")
    assert main(["kernel", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "run.ini:5" in err and "n_maxx" in err


def test_bad_values_exit_2(tmp_path):
    assert main(["kernel", "--config", write(tmp_path, "[tree]\nQ = two\n"), "--out", str(tmp_path)]) == 2
    assert main(["kernel", "--config", write(tmp_path, "[bogus]\nx = 1\n"), "--out", str(tmp_path)]) == 2
    assert main(["kernel", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
    assert main(["kernel", "--tol", "-1", "--out", str(tmp_path)]) == 2


def test_inadmissible_pair_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, "[strichartz]\npairs = 4:2\n")
    assert main(["strichartz", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "admissible" in capsys.readouterr().err


def test_parse_config_defaults_and_digest():
    a = parse_config("", "kernel")
    b = parse_config("[tree]\nQ = 2\n", "kernel")
    assert a.digest == b.digest
    assert parse_config("[tree]\nQ = 3\n", "kernel").digest != a.digest
    with pytest.raises(ConfigError):
        parse_config("[nls]\ngamma = 1\n", "evolve")


def test_kernel_output_deterministic(tmp_path):
    cfg = write(tmp_path, "[kernel]\nt = 0.5, 3\nn_max = 12\n")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["kernel", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["kernel", "--config", cfg, "--out", str(out2)]) == 0
    b1 = (out1 / "kernel.csv").read_bytes()
    assert b1 == (out2 / "kernel.csv").read_bytes()
    assert b"\r\n" not in b1
    lines = b1.decode().splitlines()
    assert lines[0].startswith("# homtree ") and "command=kernel" in lines[0]
    assert lines[1] == "t,n,re,im,abs,bound_ratio"
    assert len(lines) == 2 + 2 * 13


def test_evolve_small_run(tmp_path):
    cfg = write(tmp_path, "[evolve]\ndt = 0.01\nT = 1\nstride = 10\ndump_states = yes\n")
    assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "evolve.csv").read_text().splitlines()
    assert rows[1] == "t,mass,energy,l4norm" and len(rows) == 2 + 11
    assert (tmp_path / "evolve_states.csv").exists()


def test_evolve_blowup_exit_3(tmp_path):
    # data above the default blow-up guard trips it at the first record
    cfg = write(tmp_path, "[nls]\namplitude = 1e7\n[evolve]\ndt = 0.01\nT = 0.2\nstride = 1\n")
    assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_strichartz_command(tmp_path):
    cfg = write(tmp_path, "[strichartz]\npairs = 4:4, inf:2\nT = 40\nwindows = 10, 20\n")
    assert main(["strichartz", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "strichartz.csv").read_text().splitlines()[2:]
    assert rows[0].startswith("4:4,0:40,")
    energy = [r.split(",") for r in rows if r.startswith("inf:2,0:40,")]
    assert float(energy[0][2]) == pytest.approx(1.0, abs=1e-10)


def test_dispersive_command_Q3(tmp_path):
    cfg = write(tmp_path, "[tree]\nQ = 3\n")
    assert main(["dispersive", "--config", cfg, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "dispersive.json").read_text())
    assert all(v["in_expected_range"] for v in doc["fits"].values())


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "homtree", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("homtree ")
