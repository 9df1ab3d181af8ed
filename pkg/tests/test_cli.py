import json
import math

import numpy as np
import pytest

from mhdpol import symbols
from mhdpol.cli import main


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


TANH = {"background": {"rho": "1 + 0.1*tanh(x2)", "p": 1.0, "H": [1.0, 0.5, 0.2], "gamma": 1.6667},
        "point": {"xi": [0.3, 1.0, 0.4]}, "ray": {"sheet": 3, "span": 1.0}}


def test_speeds_field_free(tmp_path, capsys):
    cfg = write(tmp_path, {"background": {"rho": 1, "p": 1, "H": [0, 0, 0], "gamma": 1}})
    assert main(["speeds", "--config", cfg, "--xi", "0.3,0.4,1"]) == 0
    head, data = rows(capsys.readouterr().out)
    r = dict(zip(head, data[0]))
    assert r["c_s"] == 0.0
    assert r["c_f"] == pytest.approx(r["c"])


def test_speeds_parallel_sound_dominated(tmp_path, capsys):
    cfg = write(tmp_path, {"background": {"rho": 1, "p": 4, "H": [1, 0, 0], "gamma": 1}})
    assert main(["speeds", "--config", cfg, "--xi", "1,0,0"]) == 0
    head, data = rows(capsys.readouterr().out)
    r = dict(zip(head, data[0]))
    assert r["c_f"] == pytest.approx(2.0) and r["c_s"] == pytest.approx(1.0)


def test_speeds_sweep_ordering(tmp_path, capsys):
    xi = np.random.default_rng(0).normal(size=(40, 3)).tolist()
    cfg = write(tmp_path, {"background": {"rho": 1.3, "p": 0.7, "H": [1, -2, 0.5], "gamma": 1.4}, "xi": xi})
    assert main(["speeds", "--config", cfg]) == 0
    head, data = rows(capsys.readouterr().out)
    cs, cf, ca = data[:, 3], data[:, 4], data[:, 5]
    assert np.all(cs <= ca + 1e-12) and np.all(ca <= cf + 1e-12)


def test_header_and_precision(tmp_path, capsys):
    cfg = write(tmp_path, {})
    main(["speeds", "--config", cfg, "--xi", "1,1,0"])
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("# mhdpol ")
    assert out[1] == f"# command: mhdpol speeds --config {cfg} --xi 1,1,0"
    assert out[2].startswith("# scenario-sha256: ") and len(out[2].split()[-1]) == 64
    assert "0.70710678118654746" in out[4]


def test_friedrichs_table_and_svg(tmp_path):
    svg = tmp_path / "f.svg"
    out = tmp_path / "f.csv"
    cfg = write(tmp_path, {"background": {"rho": 1, "p": 0.6, "H": [0, 0, 1], "gamma": 1.5}})
    assert main(["friedrichs", "--config", cfg, "--ntheta", "8", "--svg", str(svg), "--out", str(out)]) == 0
    head, data = rows(out.read_text())
    assert head == ["theta", "c_s", "c_A", "c_f"]
    c = math.sqrt(0.9)
    assert data[0, 2] == pytest.approx(1.0)
    assert data[0, 1] == pytest.approx(min(c, 1.0)) and data[0, 3] == pytest.approx(max(c, 1.0))
    assert data[2, 0] == pytest.approx(math.pi / 2)
    assert abs(data[2, 1]) < 1e-15 and abs(data[2, 2]) < 1e-15
    assert np.all(data[:, 1] <= data[:, 2] + 1e-12) and np.all(data[:, 2] <= data[:, 3] + 1e-12)
    first = svg.read_bytes()
    assert first.startswith(b"<?xml")
    main(["friedrichs", "--config", cfg, "--ntheta", "8", "--svg", str(svg), "--out", str(out)])
    assert svg.read_bytes() == first


def test_friedrichs_needs_field(tmp_path):
    cfg = write(tmp_path, {"background": {"H": [0, 0, 0]}})
    assert main(["friedrichs", "--config", cfg]) == 2


@pytest.mark.parametrize("point,regime,kdim", [
    ("0,0,0,0,0,0,1,0", "MHDTypeSigma2", "6"),
    ("0,0,0,0,1,1,0,0", "UniaxialSigma2", "2"),
])
def test_classify(point, regime, kdim, capsys, tmp_path):
    cfg = write(tmp_path, {"background": {"rho": 1, "p": 4 if regime.startswith("Uni") else 1,
                                          "H": [1, 0, 0], "gamma": 1}})
    assert main(["classify", "--config", cfg, "--point", point]) == 0
    out = capsys.readouterr().out
    assert f"regime: {regime}" in out
    assert f"kernel_dim: {kdim}" in out


def test_ray_constant_background_affine(tmp_path, capsys):
    cfg = write(tmp_path, {"background": {"rho": 1, "p": 1, "H": [1, 0.3, 0], "gamma": 1.4},
                           "point": {"xi": [0.2, 1, 0.5]}, "ray": {"sheet": 2, "span": 2.0}})
    assert main(["ray", "--config", cfg]) == 0
    head, data = rows(capsys.readouterr().out)
    assert head[:2] == ["s", "t"] and head[-1] == "q_residual"
    s, X = data[:, 0], data[:, 2:5]
    A = np.column_stack([np.ones_like(s), s])
    coef, *_ = np.linalg.lstsq(A, X, rcond=None)
    assert np.max(np.abs(A @ coef - X)) <= 1e-9
    assert len(data) == 64


def test_transport_kernel_residual_column(tmp_path):
    out = tmp_path / "t.csv"
    cfg = write(tmp_path, TANH)
    assert main(["transport", "--config", cfg, "--out", str(out)]) == 0
    head, data = rows(out.read_text())
    assert np.max(data[:, head.index("kernel_residual")]) <= 1e-6
    assert "w1_re" in head and "dir3_im" in head


def test_transport_warns_off_equilibrium(tmp_path, capsys):
    doc = dict(TANH, background={"rho": 1.0, "p": "2 + 0.1*x2", "H": [1.0, 0.5, 0.2], "gamma": 1.6667})
    cfg = write(tmp_path, doc)
    assert main(["transport", "--config", cfg]) == 0
    captured = capsys.readouterr()
    assert "# warning: background is not a static equilibrium" in captured.out
    assert "warning" in captured.err


def test_ray_stopped_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, {"background": {"rho": 1, "p": 1, "H": ["cos(x1)", "sin(x1)", 0], "gamma": 1.6667},
                           "point": {"xi": [0.05, 1, 0]}, "ray": {"sheet": 3, "span": 20}})
    assert main(["ray", "--config", cfg]) == 3
    out = capsys.readouterr().out
    assert "# stopped: xi.H reached zero" in out
    head, data = rows(out)
    assert len(data) >= 64 and data[-1, 0] < 20


def test_deterministic_output(tmp_path):
    cfg = write(tmp_path, TANH)
    a = tmp_path / "a.csv"
    main(["transport", "--config", cfg, "--out", str(a)])
    first = a.read_bytes()
    main(["transport", "--config", cfg, "--out", str(a)])
    assert a.read_bytes() == first


def test_samples_zero_means_default(tmp_path, capsys):
    cfg = write(tmp_path, TANH)
    assert main(["ray", "--config", cfg, "--samples", "0"]) == 0
    _, data = rows(capsys.readouterr().out)
    assert len(data) == 64


@pytest.mark.parametrize("argv", [
    ["verify", "--samples", "0"],
    ["nonsense"],
    ["speeds", "--xi", "1,2"],
    ["ray", "--sheet", "4"],
])
def test_usage_errors(argv):
    assert main(argv) == 64


@pytest.mark.parametrize("doc", [
    {"background": {"rho": -1}},
    {"background": {"rho": "1 +"}},
    {"background": {"rho": "y"}},
    {"bogus": 1},
    {"ray": {"sheet": 5}},
])
def test_invalid_config(doc, tmp_path):
    assert main(["speeds", "--config", write(tmp_path, doc)]) == 2


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["speeds", "--config", str(path)]) == 2
    assert main(["speeds", "--config", str(tmp_path / "missing.json")]) == 2


def test_not_on_sheet_without_projection(tmp_path):
    doc = dict(TANH, point={"xi": [0.3, 1.0, 0.4], "tau": 9.0}, ray={"sheet": 1, "project": False})
    assert main(["ray", "--config", write(tmp_path, doc)]) == 2


def test_verify_small_run_and_csv(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert main(["verify", "--seed", "5", "--samples", "100", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "overall: PASS" in text
    assert out.read_text().splitlines()[0] == "check,name,samples,max_residual,tolerance,pass"


def test_verify_mutated_build_exits_one(monkeypatch, capsys):
    monkeypatch.setattr(symbols, "_P2_CROSS_SIGN", -1.0)
    assert main(["verify", "--seed", "5", "--samples", "100"]) == 1
    assert "overall: FAIL" in capsys.readouterr().out
