from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from sstiep import io
from sstiep.cli import main
from sstiep.errors import FormatError


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def trivial(tmp_path):
    return write(tmp_path / "trivial.json", {"n": 2, "lambda": [0.5, 0.2], "beta": [0.6, 0.4]})


def test_solve_table_row_tilde(tmp_path):
    inp = write(tmp_path / "p.json", {"lambda": [0.6, 0.3, 0.1], "beta": [0.4960, 0.2835, 0.2205]})
    assert main(["solve", inp, "--init", "tilde"]) == 0


def test_solve_unsolvable_row(tmp_path):
    inp = write(tmp_path / "p.json", {"lambda": [0.6, 0.4, -0.2], "beta": [0.2727, 0.1818, 0.5455]})
    assert main(["solve", inp, "--init", "tilde"]) == 2


def test_input_errors(tmp_path, capsys):
    assert main(["solve", write(tmp_path / "a.json", {"lambda": [0.6, 0.3, 0.1]})]) == 1
    assert "beta" in capsys.readouterr().err
    assert main(["solve", write(tmp_path / "b.json", {"lambda": [0.5, 0.2], "beta": [0.6, 0.4], "colour": 1})]) == 1
    assert "colour" in capsys.readouterr().err
    bad = tmp_path / "c.json"
    bad.write_text('{"lambda": [0.5,\n 0.2,,]}')
    assert main(["solve", str(bad)]) == 1
    assert "c.json:2" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    assert main(["solve", write(tmp_path / "d.json", {"n": 3, "lambda": [0.5, 0.2], "beta": [0.6, 0.4]})]) == 1


def test_bad_flags_exit_1(trivial):
    with pytest.raises(SystemExit) as e:
        main(["campaign", "--n", "x"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["solve", trivial, "--tol", "abc"])
    assert e.value.code == 1


def test_solve_verify_roundtrip(tmp_path, trivial, capsys):
    out = tmp_path / "r.json"
    assert main(["solve", trivial, "--out", str(out)]) == 0
    doc = io.read_result(out)
    raw = json.loads(out.read_text())
    assert raw["status"] == "solution_found"
    assert set(raw["kkt"]) == {"stationarity_P", "stationarity_A", "complementarity", "feasibility"}
    assert set(raw["bounds"]) == {"rho_bar", "rho_log", "prop1_bound", "det_BBt"}
    assert raw["bounds"]["det_BBt"] >= raw["bounds"]["prop1_bound"]
    capsys.readouterr()
    assert main(["verify", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PASS det(BB') >= lower bound" in text
    assert "FAIL" not in text
    assert doc["A"].shape == (2, 2)


def test_verify_detects_row_sum_fault(tmp_path, trivial, capsys):
    out = tmp_path / "r.json"
    main(["solve", trivial, "--out", str(out)])
    raw = json.loads(out.read_text())
    raw["A"][1] = [0.7, 0.6]
    out.write_text(json.dumps(raw))
    capsys.readouterr()
    assert main(["verify", str(out)]) == 3
    assert "FAIL A row 2 sum" in capsys.readouterr().out


def test_roundtrip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    M = rng.normal(size=(4, 4)) * 10.0 ** rng.integers(-300, 300, size=(4, 4))
    path = tmp_path / "m.json"
    io.write_json(path, {"M": M})
    back = np.asarray(json.loads(path.read_text())["M"])
    assert np.array_equal(back, M)


def test_atomic_write_leaves_no_temp_files(tmp_path, monkeypatch):
    path = tmp_path / "x.json"
    io.write_json(path, {"a": 1})
    io.write_json(path, {"a": 2})
    assert json.loads(path.read_text()) == {"a": 2}
    assert [p.name for p in tmp_path.iterdir()] == ["x.json"]

    def interrupted(*args):
        raise KeyboardInterrupt

    monkeypatch.setattr(io.os, "replace", interrupted)
    with pytest.raises(KeyboardInterrupt):
        io.write_json(path, {"a": 3})
    assert json.loads(path.read_text()) == {"a": 2}
    assert [p.name for p in tmp_path.iterdir()] == ["x.json"]


def test_read_problem_errors(tmp_path):
    with pytest.raises(FormatError) as e:
        io.read_problem(write(tmp_path / "p.json", {"lambda": [0.5, 0.2], "beta": "x"}))
    assert "beta" in str(e.value)
    with pytest.raises(FormatError):
        io.read_problem(write(tmp_path / "q.json", [1, 2]))


def test_initial_matrix_from_file(tmp_path):
    inp = write(tmp_path / "p.json", {"lambda": [0.5, 0.2], "beta": [0.6, 0.4], "initial_A": [[0.5, 0], [0, 0.2]]})
    data, opts = io.read_problem(inp)
    assert opts["initial_A"].shape == (2, 2)
    assert main(["solve", inp]) == 0


def test_bounds_command(trivial, capsys):
    assert main(["bounds", trivial]) == 0
    assert "rho_bar" in capsys.readouterr().out


def test_phasetype_unrealizable(tmp_path, capsys):
    lam = [0.6, 0.3, 0.1]
    beta = [4.7015, -5.3731, 1.6716]
    res = [(1 - l) * b for l, b in zip(lam, beta)]
    inp = write(tmp_path / "s.json", {"lambda": lam, "residues": res})
    assert main(["phasetype", inp]) == 4
    assert "= -0.3761" in capsys.readouterr().out


def test_phasetype_five_pole(tmp_path, capsys):
    inp = write(tmp_path / "s.json", {
        "lambda": [0.8, 0.7095, 0.3473, 0.3246, 0.2132],
        "residues": [0.2927, -0.0376, -0.0523, -0.0673, -0.1213],
    })
    assert main(["phasetype", inp]) == 1  # rounded residues: f(1) != 1
    out = tmp_path / "r.json"
    assert main(["phasetype", inp, "--renormalize", "--check-mgf", "--out", str(out)]) == 0
    raw = json.loads(out.read_text())
    assert len(raw["alpha"]) == 5
    assert len(raw["mgf_check"]) == 9
    for row in raw["mgf_check"]:
        assert abs(row["mgf"] - row["partial_fraction"]) <= 1e-3


def test_campaign_command(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["campaign", "--n", "3", "--group-size", "2", "--seed", "7", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "group-1" in text and "group-2" in text
    raw = json.loads(out.read_text())
    assert raw["group1"]["count"] == 2 and raw["group2"]["count"] == 2
    assert "aborted_count" in raw


def test_console_entry_point(trivial):
    proc = subprocess.run([sys.executable, "-m", "sstiep.cli", "solve", trivial], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "solution_found" in proc.stdout
