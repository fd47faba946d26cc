import json
import os

import pytest

from rdsconley.cli import dispatch, render_json
from rdsconley.config import parse_config
from rdsconley.errors import ConfigurationError

MINIMAL = "system.family = example1\nsystem.lambda = -0.09\n"


def test_parse_minimal_with_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.get("system.family") == "example1"
    assert cfg.get("system.lambda") == -0.09
    assert cfg.get("grid.width") == 0.05
    assert cfg.get("noise.k") == 32
    assert cfg.get("noise.kind") == "constant"
    resolved = cfg.resolved()
    assert resolved["grid.refine_rounds"] == 3
    assert "sweep.tol" in resolved


def test_parse_grid_width_error_message():
    with pytest.raises(ConfigurationError, match="grid.width must be > 0"):
        parse_config(MINIMAL + "grid.width = -1\n")


def test_parse_duplicate_key_names_line():
    text = MINIMAL + "grid.width = 0.05\ngrid.width = 0.1\n"
    with pytest.raises(ConfigurationError, match="line 4: duplicate key"):
        parse_config(text)


def test_parse_unknown_key_names_line():
    with pytest.raises(ConfigurationError, match="line 3: unknown key"):
        parse_config(MINIMAL + "grid.wdith = 0.05\n")


def test_parse_missing_family():
    with pytest.raises(ConfigurationError, match="system.family"):
        parse_config("grid.width = 0.05\n")


def test_parse_lambdas_ordering():
    with pytest.raises(ConfigurationError, match="strictly increasing"):
        parse_config("system.family = example1\nsystem.lambdas = 0.2,0.1\n")


def test_parse_noise_requirements():
    with pytest.raises(ConfigurationError, match="noise.lo"):
        parse_config("system.family = example1\nnoise.kind = uniform\n")


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_dispatch_primes_stdout_json(tmp_path, capsys):
    cfg = _write(tmp_path, "ex1.cfg", MINIMAL)
    status = dispatch(["primes", "--config", cfg])
    assert status == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["M"] == 2
    assert doc["config"]["system.family"] == "example1"
    assert doc["seeds"] == [20260808]
    assert doc["primes"][0]["l_flags"] == "empty"


def test_dispatch_unknown_subcommand_usage(tmp_path, capsys):
    cfg = _write(tmp_path, "ex1.cfg", MINIMAL)
    assert dispatch(["frobnicate", "--config", cfg]) == 2


def test_dispatch_missing_config_file():
    assert dispatch(["primes", "--config", "/nonexistent/x.cfg"]) == 2


def test_dispatch_config_error_exit_code(tmp_path):
    cfg = _write(tmp_path, "bad.cfg", MINIMAL + "bogus = 1\n")
    assert dispatch(["primes", "--config", cfg]) == 2


def test_simulate_orbit_csv(tmp_path, capsys):
    cfg = _write(tmp_path, "ex1.cfg", MINIMAL + "system.x0 = -0.4\nsim.steps = 3\n")
    assert dispatch(["simulate", "--config", cfg]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,x"
    assert lines[1] == "0,-0.4"
    assert abs(float(lines[2].split(",")[1]) + 0.33) < 1e-12
    assert abs(float(lines[3].split(",")[1]) + 0.3111) < 1e-12


def test_invariant_emits_fiber_spans(tmp_path, capsys):
    cfg = _write(tmp_path, "ex1.cfg", MINIMAL)
    assert dispatch(["invariant", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    spans = doc["fibers"]["0"]
    assert len(spans) == 1
    assert spans[0][0] <= -0.3 and spans[0][1] >= 0.3


def test_index_emits_fingerprint_fields(tmp_path, capsys):
    cfg = _write(tmp_path, "ex1.cfg", MINIMAL)
    assert dispatch(["index", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    fps = doc["fingerprints"]
    assert len(fps) == 2
    for entry in fps:
        assert entry["available"]
        assert set(entry) >= {"counts", "l_flags", "trivial", "horizon"}
    assert fps[0]["trivial"] is False


def test_check_cocycle_cli(tmp_path, capsys):
    cfg = _write(tmp_path, "ex1.cfg", MINIMAL)
    assert dispatch(["check-cocycle", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] and doc["max_defect"] == 0.0


def test_check_conjugacy_cli_pass_and_fail(tmp_path, capsys):
    cfg = _write(tmp_path, "c.cfg", MINIMAL + "conj.a = 2.0\nconj.b = 0.3\n")
    assert dispatch(["check-conjugacy", "--config", cfg]) == 0
    capsys.readouterr()
    cfg2 = _write(tmp_path, "c2.cfg", MINIMAL + "conj.lambda2 = 0.01\n")
    assert dispatch(["check-conjugacy", "--config", cfg2]) == 1


def test_sweep_files_and_roundtrip(tmp_path, capsys):
    text = (
        "system.family = example1\n"
        "system.lambdas = -0.2,-0.1,0.1\n"
        "noise.realizations = 1\n"
    )
    cfg = _write(tmp_path, "sweep.cfg", text)
    out = str(tmp_path / "out")
    status = dispatch(["sweep", "--config", cfg, "--out", out, "--threads", "1"])
    capsys.readouterr()
    assert status == 0 or status == 1
    report_text = open(os.path.join(out, "report.json")).read()
    doc = json.loads(report_text)
    # re-serializing the parsed report reproduces the bytes
    assert render_json(doc) == report_text
    assert [r["M"] for r in doc["runs"]] == [2, 2, 0]
    assert doc["changes"][0]["lo"] == -0.1
    csv = open(os.path.join(out, "sweep.csv")).read().splitlines()
    assert csv[0] == "lambda,seed,M"
    assert len(csv) == 4


def test_seed_list_override(tmp_path, capsys):
    cfg = _write(tmp_path, "ex1.cfg", MINIMAL)
    assert dispatch(["primes", "--config", cfg, "--seed-list", "5,6"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["seed"] == 5 and doc["seeds"] == [5]


def test_primes_unresolved_exit_code(tmp_path, capsys):
    # lambda = -0.4 carries coexisting attracting 2- and 3-cycles that only
    # separate at width 0.00625; a two-round budget leaves them unresolved
    text = (
        "system.family = example1\n"
        "system.lambda = -0.4\n"
        "grid.refine_rounds = 2\n"
    )
    cfg = _write(tmp_path, "unres.cfg", text)
    status = dispatch(["primes", "--config", cfg])
    doc = json.loads(capsys.readouterr().out)
    assert status == 3
    assert doc["M_range"] == [1, 2] and doc["unresolved"]


def test_tabulated_family_cli(tmp_path, capsys):
    import numpy as np

    xs = np.linspace(-1.0, 1.0, 401)
    fx = np.where(xs >= -0.5, xs + xs * xs - 0.09, -0.5 * xs - 0.09)
    piece = np.where(xs >= -0.5, 1, 0)
    tdir = tmp_path / "tables"
    tdir.mkdir()
    lines = ["x,fx,piece"] + [
        "%r,%r,%d" % (float(x), float(f), int(p)) for x, f, p in zip(xs, fx, piece)
    ]
    (tdir / "table_lam-0.09_xi1.0.csv").write_text("\n".join(lines) + "\n")
    text = (
        "system.family = tabulated\n"
        "system.lambda = -0.09\n"
        "system.table_dir = %s\n"
        "system.x0 = -0.4\n"
        "sim.steps = 2\n" % tdir
    )
    cfg = _write(tmp_path, "tab.cfg", text)
    assert dispatch(["simulate", "--config", cfg]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert abs(float(lines[2].split(",")[1]) + 0.33) < 1e-5
