"""Tests for config parsing, the run driver, outputs, sweeps, and the CLI."""

import json
import math
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dmm import cli
from dmm.harness import (ConfigError, RunConfig, RunRecord, canned_config,
                         emit_csv, emit_json, envelope_horizon, parse_config,
                         reproduce_fig1, run, sweep)


def write_config(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


BASIC = """
# simple bilinear run
problem   = bilinear
dim       = 1
algorithm = dgda
schedule  = zero
alpha     = 0.1
T         = 10
z1        = 1,1
"""


# -- config parsing ------------------------------------------------------------

def test_parse_config_basic(tmp_path):
    cfg = parse_config(write_config(tmp_path, BASIC))
    assert cfg.problem == "bilinear"
    assert cfg.alpha == 0.1 and cfg.rule is None
    assert cfg.T == 10
    assert cfg.name == "exp"


def test_parse_config_rule_alpha(tmp_path):
    text = BASIC.replace("alpha     = 0.1", "alpha     = thm2")
    text = text.replace("dim       = 1", "dim       = 2\ndomain = ball:1")
    cfg = parse_config(write_config(tmp_path, text))
    assert cfg.rule == "thm2" and cfg.alpha is None


def test_parse_config_overrides(tmp_path):
    cfg = parse_config(write_config(tmp_path, BASIC), overrides={"T": "25"})
    assert cfg.T == 25


@pytest.mark.parametrize("line,field", [
    ("problem = nope", "problem"),
    ("algorithm = newton", "algorithm"),
    ("T = 0", "T"),
    ("stride = 0", "stride"),
    ("alpha = thmX", "alpha"),
    ("alpha = -1", "alpha"),
    ("bogus_key = 1", "bogus_key"),
    ("T = twelve", "T"),
])
def test_config_errors_name_the_field(tmp_path, line, field):
    key = line.split("=")[0].strip()
    text = "\n".join(l for l in BASIC.splitlines()
                     if not l.strip().startswith(key)) + "\n" + line
    with pytest.raises(ConfigError) as err:
        parse_config(write_config(tmp_path, text))
    assert err.value.field == field


def test_missing_required_key(tmp_path):
    text = "\n".join(l for l in BASIC.splitlines() if "alpha" not in l)
    with pytest.raises(ConfigError, match="alpha"):
        parse_config(write_config(tmp_path, text))


def test_rule_compatibility_validation():
    with pytest.raises(ConfigError, match="thm1"):
        run(RunConfig(problem="bilinear", dim=2, algorithm="dgda", T=10,
                      rule="thm1", domain="ball:1"))
    with pytest.raises(ConfigError, match="bounded"):
        run(RunConfig(problem="bilinear", dim=2, algorithm="deg", T=10,
                      rule="thm1"))
    with pytest.raises(ConfigError, match="mu"):
        run(RunConfig(problem="quadratic_scsc", dim=1, algorithm="dgda", T=10,
                      rule="thm2"))
    with pytest.raises(ConfigError, match="T >= L"):
        run(RunConfig(problem="quadratic_cc", dim=2, algorithm="deg", T=1,
                      rule="thm1", matrix="scale:3", domain="ball:1"))


def test_scsc_rejects_domains():
    for field in ("domain", "domain_x"):
        cfg = RunConfig(problem="quadratic_scsc", dim=1, algorithm="dgda",
                        T=5, alpha=0.01, **{field: "ball:1"})
        with pytest.raises(ConfigError, match="unconstrained"):
            cfg.build_problem()


def test_domain_and_matrix_parsing():
    cfg = RunConfig(problem="quadratic_cc", dim=2, algorithm="dgda", T=5,
                    alpha=0.1, matrix="diag:1,2", domain="box:0.5,1.5@0,0")
    p = cfg.build_problem()
    assert p.domain_x.kind == "box"
    assert_allclose(p.domain_x.halfwidth, [0.5, 1.5])
    assert_allclose(p.lipschitz_raw, 2.0)
    with pytest.raises(ConfigError, match="matrix"):
        RunConfig(problem="bilinear", dim=2, algorithm="dgda", T=5, alpha=0.1,
                  matrix="diag:1,2").build_problem()
    with pytest.raises(ConfigError, match="domain"):
        RunConfig(problem="bilinear", dim=2, algorithm="dgda", T=5, alpha=0.1,
                  domain="hexagon:1").build_problem()


# -- run ------------------------------------------------------------------------

def test_run_row_example():
    record = run(RunConfig(problem="bilinear", dim=1, algorithm="dgda",
                           schedule="zero", alpha=0.1, T=10, z1="1,1"))
    row_k2 = record.rows[1]
    assert row_k2[0] == 2
    assert_allclose(row_k2[1:3], [0.9, 1.1])
    assert record.status == "completed"
    assert len(record.rows) == 10


def test_run_divergence_status():
    record = run(RunConfig(problem="bilinear", dim=2, algorithm="deg",
                           schedule="const:1", alpha=0.2, T=2000))
    assert record.status == "diverged"
    assert record.diverged_at is not None
    last = record.rows[-1]
    r_col = record.columns.index("r")
    assert not (last[r_col] < 1e12) or not math.isfinite(last[r_col])


def test_run_zero_delay_converges():
    record = run(RunConfig(problem="bilinear", dim=2, algorithm="deg",
                           schedule="zero", alpha=0.2, T=2000))
    assert record.status == "completed"
    assert np.linalg.norm(record.final_iterate) < 1e-3


def test_run_stride_row_count():
    for T, stride in ((100, 1), (100, 7), (101, 7), (5, 10)):
        record = run(RunConfig(problem="bilinear", dim=1, algorithm="dgda",
                               schedule="zero", alpha=0.05, T=T, stride=stride,
                               z1="1,1"))
        assert len(record.rows) == math.ceil(T / stride)


def test_run_attaches_reports_only_for_rules():
    explicit = run(RunConfig(problem="bilinear", dim=2, algorithm="dgda",
                             domain="ball:1", schedule="const:2", alpha=0.001,
                             T=50))
    assert explicit.bound_reports == []
    ruled = run(RunConfig(problem="bilinear", dim=2, algorithm="dgda",
                          domain="ball:1", schedule="const:2", rule="thm2",
                          T=200))
    assert {r.name for r in ruled.bound_reports} == \
        {"dgda-delay-error", "iterate-bound", "dgda-restricted-gap"}
    assert all(r.satisfied for r in ruled.bound_reports)


def test_run_gap_column_blank_when_undefined():
    record = run(RunConfig(problem="bilinear", dim=2, algorithm="deg",
                           schedule="zero", alpha=0.2, T=20))
    gap_col = record.columns.index("gap")
    assert all(row[gap_col] is None for row in record.rows)


def test_run_gap_column_defined_for_scsc():
    record = run(RunConfig(problem="quadratic_scsc", dim=1, algorithm="dgda",
                           schedule="zero", alpha=0.01, T=20))
    gap_col = record.columns.index("gap")
    assert all(row[gap_col] >= 0.0 for row in record.rows)


# -- emission ----------------------------------------------------------------------

def small_record():
    return run(RunConfig(problem="bilinear", dim=1, algorithm="dgda",
                         schedule="zero", alpha=0.1, T=10, z1="1,1",
                         name="small"))


def test_emit_csv_layout(tmp_path):
    record = small_record()
    path = tmp_path / "out.csv"
    emit_csv(record, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "k,z_0,z_1,r,e_norm,gap"
    assert len(lines) == 1 + math.ceil(10 / 1)
    first = lines[1].split(",")
    assert first[0] == "1"
    assert float(first[1]) == 1.0
    assert first[-1] == ""  # undefined gap is blank


def test_csv_floats_are_lossless(tmp_path):
    record = small_record()
    path = tmp_path / "out.csv"
    emit_csv(record, path)
    lines = path.read_text().strip().split("\n")[1:]
    r_col = record.columns.index("r")
    for line, row in zip(lines, record.rows):
        assert float(line.split(",")[r_col]) == row[r_col]


def test_emit_json_round_trip(tmp_path):
    record = small_record()
    path = tmp_path / "out.json"
    emit_json(record, path)
    loaded = json.loads(path.read_text())
    assert loaded == record.to_dict()
    rebuilt = RunRecord.from_dict(loaded)
    assert rebuilt.to_dict() == record.to_dict()


def test_end_to_end_determinism(tmp_path):
    cfg_path = write_config(tmp_path, BASIC.replace("zero", "rand:3"))
    blobs = []
    for attempt in range(2):
        record = run(parse_config(cfg_path))
        csv_path = tmp_path / f"run{attempt}.csv"
        json_path = tmp_path / f"run{attempt}.json"
        emit_csv(record, csv_path)
        emit_json(record, json_path)
        blobs.append((csv_path.read_bytes(), json_path.read_bytes()))
    assert blobs[0] == blobs[1]


# -- figures --------------------------------------------------------------------------

def test_reproduce_fig1_outputs(tmp_path):
    delayed, nodelay, series = reproduce_fig1(out_dir=str(tmp_path))
    assert delayed.status == "diverged"
    assert nodelay.status == "completed"
    assert np.linalg.norm(nodelay.final_iterate) < 1e-3
    # both series start from the same ||z_1||
    assert series[0][2][0] == series[1][2][0]
    # delayed tail is monotone increasing
    tail = series[0][2][100:]
    assert np.all(np.diff(tail) > 0)
    for fname in ("fig1_delayed.csv", "fig1_nodelay.csv", "fig1.svg", "fig1.png"):
        assert (tmp_path / fname).exists()


def test_svg_is_valid_xml_one_polyline_per_series(tmp_path):
    reproduce_fig1(out_dir=str(tmp_path))
    tree = ET.parse(tmp_path / "fig1.svg")
    polylines = [el for el in tree.iter()
                 if el.tag.endswith("polyline")]
    assert len(polylines) == 2


# -- sweep ----------------------------------------------------------------------------

def base_sweep_config():
    return RunConfig(problem="bilinear", dim=2, algorithm="dgda",
                     domain="ball:1", schedule="rand:2", rule="thm2", T=250,
                     name="swp")


def test_sweep_tau_axis_bound_scaling():
    table = sweep(base_sweep_config(), "tau_max", [1, 2, 4])
    bounds = [row["theoretical_bound"] for row in table]
    assert_allclose(bounds[1] / bounds[0], math.sqrt(2.0), rtol=1e-12)
    assert_allclose(bounds[2] / bounds[0], 2.0, rtol=1e-12)


def test_sweep_T_axis_gap_non_increasing_10_seeds():
    table = sweep(base_sweep_config(), "T", [250, 1000, 4000],
                  seeds_per_cell=10)
    gaps = [row["gap_mean"] for row in table]
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_sweep_alpha_axis_and_empty_values():
    table = sweep(base_sweep_config(), "alpha", [0.001, 0.01])
    assert [row["value"] for row in table] == [0.001, 0.01]
    with pytest.raises(ConfigError, match="non-empty"):
        sweep(base_sweep_config(), "T", [])
    with pytest.raises(ConfigError, match="axis"):
        sweep(base_sweep_config(), "gamma", [1])


def test_sweep_seeds_offset_deterministically():
    t1 = sweep(base_sweep_config(), "T", [100], seeds_per_cell=3)
    t2 = sweep(base_sweep_config(), "T", [100], seeds_per_cell=3)
    assert t1 == t2


# -- canned configs ---------------------------------------------------------------------

def test_canned_configs():
    thm1 = canned_config("thm1")
    assert (thm1.algorithm, thm1.rule, thm1.T) == ("deg", "thm1", 1000)
    thm2 = canned_config("thm2", tau_max=3)
    assert thm2.schedule == "rand:3"
    thm3 = canned_config("thm3")
    assert thm3.T == envelope_horizon(1.0, 2.0, 1)
    with pytest.raises(ConfigError):
        canned_config("thm9")


def test_envelope_horizon_halves_envelope():
    mu, L, tau = 1.0, 2.0, 1
    T = envelope_horizon(mu, L, tau)
    rho = 1.0 - mu ** 4 / (3072.0 * L ** 6 * tau ** 2)
    assert rho ** (T / (6.0 * tau)) <= 0.5
    assert rho ** ((T - 2) / (6.0 * tau)) > 0.5


# -- CLI -------------------------------------------------------------------------------

def test_cli_run_and_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path, BASIC)
    code = cli.main(["run", str(cfg), "--out", str(tmp_path / "out")])
    assert code == 0
    for ext in (".csv", ".json", ".svg", ".png"):
        assert (tmp_path / "out" / f"exp{ext}").exists()


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, BASIC.replace("T         = 10", "T = 0"))
    assert cli.main(["run", str(cfg)]) == 1
    assert "config error" in capsys.readouterr().err


def test_cli_check_bounds_pass(tmp_path, capsys):
    code = cli.main(["check-bounds", "thm2", "--T", "500",
                     "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3


def test_cli_check_bounds_thm1(tmp_path, capsys):
    code = cli.main(["check-bounds", "thm1", "--T", "500", "--tau-max", "2",
                     "--seed", "3", "--out", str(tmp_path)])
    assert code == 0
    assert capsys.readouterr().out.count("PASS") == 2


def test_cli_reproduce_fig1(tmp_path, capsys):
    code = cli.main(["reproduce-fig1", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "diverged" in out and "completed" in out


def test_cli_sweep(tmp_path, capsys):
    cfg = write_config(tmp_path, """
problem = bilinear
dim = 2
domain = ball:1
algorithm = dgda
schedule = rand:2
alpha = thm2
T = 200
""", name="swp.cfg")
    code = cli.main(["sweep", str(cfg), "--axis", "T", "--values", "100,200",
                     "--out", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "swp_sweep.csv").exists()
    assert cli.main(["sweep", str(cfg), "--axis", "T", "--values", "x,y",
                     "--out", str(tmp_path / "out")]) == 1


def test_canned_experiments_within_runtime_budget(tmp_path, capsys):
    import time

    t0 = time.perf_counter()
    assert cli.main(["reproduce-fig1", "--out", str(tmp_path / "fig")]) == 0
    assert time.perf_counter() - t0 < 60.0
    for rule in ("thm1", "thm2", "thm3"):
        t0 = time.perf_counter()
        assert cli.main(["check-bounds", rule, "--out",
                         str(tmp_path / rule)]) == 0
        assert time.perf_counter() - t0 < 60.0, rule


def test_cli_exit_code_2_on_failed_bound(capsys):
    from dmm.metrics import BoundReport

    failing = BoundReport(name="x", empirical=2.0, theoretical=1.0,
                          satisfied=False, worst_margin=1.0, checked=1)
    record = small_record()
    record.bound_reports = [failing]
    assert cli._report_exit([record]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_cli_env_var_overrides_out_dir(tmp_path, monkeypatch, capsys):
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv("DMM_OUT_DIR", str(env_dir))
    cfg = write_config(tmp_path, BASIC)
    code = cli.main(["run", str(cfg), "--out", str(tmp_path / "ignored")])
    assert code == 0
    assert (env_dir / "exp.csv").exists()
    assert not (tmp_path / "ignored").exists()
