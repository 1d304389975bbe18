import json
import math

import numpy as np
import pytest

from logbound import field_from_csv, m_level
from logbound.cli import (EXIT_ERROR, EXIT_OK, build_problem, load_config,
                          main, strip_json_comments)
from logbound.errors import ConfigError


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload) if isinstance(payload, dict) else payload)
    return str(path)


SOLVE_CFG = {
    "potential": "-r^2",
    "omega": {"ball": 1.0},
    "r0": "auto",
    "eps": 0.25,
    "grid": {"mode": "full", "dim": 1, "n": 1024, "half_width": "auto"},
    "solver": {"tol_residual": 1e-8,
               "seed": {"center": [0.0], "width": 1.0, "amplitude": 1.0}},
}


def test_strip_json_comments():
    src = '{"a": 1, // line\n "b": "//not a comment", /* block\n */ "c": 2}'
    out = json.loads(strip_json_comments(src))
    assert out == {"a": 1, "b": "//not a comment", "c": 2}


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = write_config(tmp_path, '{"a": ')
    with pytest.raises(ConfigError):
        load_config(bad)
    arr = write_config(tmp_path, "[1, 2]")
    with pytest.raises(ConfigError):
        load_config(arr)


def test_build_problem_auto_rules(tmp_path):
    spec = build_problem(SOLVE_CFG, 0.25)
    assert spec.cfg.r0 == 3.0  # 2 * circumradius + 1
    assert spec.grid.half_width == 24.0  # max(2 R0/eps, 12)
    assert spec.cfg.gauge_c == pytest.approx(10.0, rel=1e-2)  # 1 + R0^2 from nodes
    cfg2 = dict(SOLVE_CFG)
    cfg2["eps"] = 0.9
    spec2 = build_problem(cfg2, 0.9)
    assert spec2.grid.half_width == 12.0


def test_build_problem_competing_builtin():
    cfg = {"potential": {"builtin": "competing", "params": {"a": 1.0, "b": 0.5, "kappa": 0.5}},
           "omega": {"ball": 1.0}, "eps": 0.2,
           "grid": {"mode": "full", "dim": 1, "n": 1024}}
    spec = build_problem(cfg, 0.2)
    assert spec.k_potential is not None
    assert spec.cfg.kappa == 0.5  # inherited from the builtin family
    assert spec.cfg.gauge_c == 0.0  # V = 1 already admissible


def test_cmd_solve_artifacts_and_roundtrip(tmp_path):
    cfg_path = write_config(tmp_path, SOLVE_CFG)
    out = tmp_path / "out"
    rc = main(["solve", "--config", cfg_path, "--out", str(out)])
    assert rc == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert sorted(report.keys()) == ["config_echo", "decay", "energy", "flags",
                                     "profile", "residuals", "solver", "x_eps"]
    assert report["flags"]["penalization_active"] is False
    assert report["flags"]["nehari_floor"] is True
    assert set(report["residuals"]) == {"penalized", "original"}
    assert set(report["decay"]) == {"slope", "intercept", "r2"}
    assert set(report["profile"]) == {"a", "b", "distance"}
    # artifacts round-trip through the loaders
    spec = build_problem(SOLVE_CFG, 0.25)
    field = field_from_csv(spec.grid, out / "field.csv")
    assert field.values.max() > 1.0
    decay = np.loadtxt(out / "decay.csv", delimiter=",", skiprows=1)
    assert decay.shape[1] == 2


def test_cmd_solve_deterministic(tmp_path):
    cfg_path = write_config(tmp_path, SOLVE_CFG)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["solve", "--config", cfg_path, "--out", str(out1)]) == EXIT_OK
    assert main(["solve", "--config", cfg_path, "--out", str(out2)]) == EXIT_OK
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "field.csv").read_bytes() == (out2 / "field.csv").read_bytes()


def test_cmd_solve_seed_from_csv(tmp_path):
    cfg_path = write_config(tmp_path, SOLVE_CFG)
    out = tmp_path / "o1"
    assert main(["solve", "--config", cfg_path, "--out", str(out)]) == EXIT_OK
    out2 = tmp_path / "o2"
    rc = main(["solve", "--config", cfg_path, "--out", str(out2),
               "--seed", str(out / "field.csv")])
    assert rc == EXIT_OK
    r2 = json.loads((out2 / "report.json").read_text())
    assert r2["solver"]["iterations"] <= 40  # warm start


def test_cmd_solve_malformed_config(tmp_path, capsys):
    bad = write_config(tmp_path, '{"potential": ')
    assert main(["solve", "--config", bad, "--out", str(tmp_path / "o")]) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err


def test_cmd_solve_requires_eps(tmp_path):
    cfg = dict(SOLVE_CFG)
    del cfg["eps"]
    path = write_config(tmp_path, cfg)
    assert main(["solve", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_ERROR


def test_cmd_sweep(tmp_path):
    cfg = {"potential": {"builtin": "local-min-unbounded"},
           "omega": {"ball": 1.75},
           "eps_list": [0.5, 0.25],
           "grid": {"mode": "full", "dim": 1, "n": 1024},
           "solver": {"tol_residual": 1e-8}}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "sweep"
    rc = main(["sweep", "--config", path, "--out", str(out)])
    assert rc == EXIT_OK
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "eps,d_eps,x_eps_1,decay_slope,profile_dist,penalization_active,status"
    assert len(lines) == 3
    assert (out / "report_000.json").exists()
    # d_eps decreases toward the limit level
    m0 = m_level(0.0, 1.0, 1)
    d = [abs(float(l.split(",")[1]) - m0) for l in lines[1:]]
    assert d[1] < d[0]


def test_cmd_sweep_constant_potential_level(tmp_path):
    cfg = {"potential": {"builtin": "constant", "params": {"a": 0.0}},
           "omega": {"ball": 1.0},
           "eps_list": [0.5, 0.25],
           "grid": {"mode": "full", "dim": 1, "n": 1024}}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "csweep"
    assert main(["sweep", "--config", path, "--out", str(out)]) == EXIT_OK
    lines = (out / "sweep.csv").read_text().splitlines()[1:]
    m0 = m_level(0.0, 1.0, 1)
    for line in lines:
        d = float(line.split(",")[1])
        assert abs(d - m0) / m0 <= 1e-3


def test_cmd_sweep_empty_list(tmp_path):
    cfg = {"potential": "-r^2", "omega": {"ball": 1.0}, "eps_list": [],
           "grid": {"mode": "full", "dim": 1, "n": 1024}}
    path = write_config(tmp_path, cfg)
    assert main(["sweep", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_ERROR


def test_cmd_saddle(tmp_path):
    cfg = {"potential": {"builtin": "saddle-unbounded"},
           "omega": {"ball": 1.0}, "eps": 0.25,
           "grid": {"mode": "full", "dim": 1, "n": 1024},
           "saddle_points": [[-0.3], [0.0], [0.3]]}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "saddle"
    rc = main(["saddle", "--config", path, "--out", str(out)])
    assert rc == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert abs(report["x_eps"][0]) < 0.05
    assert report["solver"]["grad_v_norm"] <= 0.1


def test_cmd_limit_profile(tmp_path, capsys):
    rc = main(["limit-profile", "0", "1", "1", "--out", str(tmp_path / "lp")])
    assert rc == EXIT_OK
    outtext = capsys.readouterr().out
    level = float(outtext.split("=")[-1])
    assert level == pytest.approx(0.5 * math.e * math.sqrt(math.pi), rel=1e-10)
    prof = np.loadtxt(tmp_path / "lp" / "profile.csv", delimiter=",", skiprows=1)
    assert prof[0, 1] == pytest.approx(math.exp(0.5), rel=1e-12)
    # level ratio across the shift is e^a
    rc = main(["limit-profile", "1", "1", "2", "--out", str(tmp_path / "lp2")])
    lvl_1 = float(capsys.readouterr().out.split("=")[-1])
    assert lvl_1 / m_level(0.0, 1.0, 2) == pytest.approx(math.e, rel=1e-9)
    assert main(["limit-profile", "0", "0", "1", "--out", str(tmp_path / "lp3")]) == EXIT_ERROR


def test_cmd_solve_snapshots(tmp_path):
    cfg = dict(SOLVE_CFG)
    cfg["solver"] = dict(cfg["solver"], snapshot_every=2)
    path = write_config(tmp_path, cfg)
    out = tmp_path / "snap"
    assert main(["solve", "--config", path, "--out", str(out),
                 "--dump-fields"]) == EXIT_OK
    snaps = sorted(out.glob("field_iter*.csv"))
    assert len(snaps) >= 1


def test_cmd_saddle_threads_deterministic(tmp_path):
    cfg = {"potential": {"builtin": "saddle-unbounded"},
           "omega": {"ball": 1.0}, "eps": 0.25,
           "grid": {"mode": "full", "dim": 1, "n": 1024},
           "saddle_points": [[-0.3], [0.0], [0.3]]}
    path = write_config(tmp_path, cfg)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["saddle", "--config", path, "--out", str(out1)]) == EXIT_OK
    assert main(["saddle", "--config", path, "--out", str(out2),
                 "--threads", "3"]) == EXIT_OK
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_cmd_validate(tmp_path, capsys):
    rc = main(["validate", "--out", str(tmp_path / "v")])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "FAIL" not in out
    payload = json.loads((tmp_path / "v" / "validate.json").read_text())
    assert all(r["passed"] for r in payload["results"])


def test_cmd_validate_mutation_fails(capsys):
    rc = main(["validate", "--inject-eta-sign-error"])
    out = capsys.readouterr().out
    assert rc == EXIT_ERROR
    assert "envelope-bounds-linear" in out
    assert "FAIL" in out
