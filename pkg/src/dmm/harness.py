"""Experiment harness: flat key-value configs, run execution, CSV/JSON output.

Config grammar (one ``key = value`` per line, ``#`` comments)::

    problem      = bilinear | quadratic_cc | quadratic_scsc
    dim          = <int>                      # block dimension (default 2)
    mu           = <float>                    # quadratic_scsc only
    matrix       = identity | scale:<s> | diag:<v1,v2,...> | rows:<a b;c d>
    domain       = all | ball:<r>[@c1,c2] | box:<h1[,h2,...]>[@c1,c2]
    domain_x     = ...                        # per-block overrides of `domain`
    domain_y     = ...
    algorithm    = dgda | deg
    schedule     = zero | const:<t> | cycle:<a,b,c> | rand:<t>[:seed=<s>]
    schedule_mid = ...                        # deg second stage; defaults to `schedule`
    alpha        = <float> | thm1 | thm2 | thm3
    T            = <int>
    z1           = default | <v1,v2,...>      # default: 0.5 * project(ones)
    seed         = <int>                      # feeds unseeded rand schedules
    stride       = <int>                      # log every stride-th iteration
    name         = <str>
    out_dir      = <path>                     # DMM_OUT_DIR env overrides

Every run is deterministic: the same config (and seed) reproduces the same
trajectory, CSV and JSON byte for byte.  Wall-clock duration is kept on the
in-memory record only, never serialized.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import metrics
from .algorithms import (STEP_RULES, Trajectory, averaged_iterates, run_deg,
                         run_dgda, stepsize_deg_cc, stepsize_dgda_cc,
                         stepsize_dgda_scsc)
from .delays import DelaySchedule
from .problems import (BilinearProblem, DomainSet, QuadraticCC, QuadraticSCSC,
                       SaddleProblem)

__all__ = [
    "ConfigError",
    "RunConfig",
    "RunRecord",
    "parse_config",
    "run",
    "sweep",
    "reproduce_fig1",
    "canned_config",
    "envelope_horizon",
    "emit_csv",
    "emit_json",
    "resolve_out_dir",
]

PROBLEMS = ("bilinear", "quadratic_cc", "quadratic_scsc")
ALGORITHMS = ("dgda", "deg")
SWEEP_AXES = ("T", "tau_max", "alpha")


class ConfigError(ValueError):
    """Invalid run configuration; carries the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class RunConfig:
    problem: str
    algorithm: str
    T: int
    alpha: float | None = None
    rule: str | None = None
    dim: int = 2
    mu: float = 1.0
    matrix: str = "identity"
    domain: str = "all"
    domain_x: str | None = None
    domain_y: str | None = None
    schedule: str = "zero"
    schedule_mid: str | None = None
    z1: str = "default"
    seed: int = 0
    stride: int = 1
    name: str = "run"
    out_dir: str | None = None

    _COERCE = {"T": int, "dim": int, "seed": int, "stride": int, "mu": float}

    @classmethod
    def from_mapping(cls, mapping: dict, name: str | None = None) -> "RunConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in fields:
                raise ConfigError(key, "unknown config key")
            value = raw
            if key in cls._COERCE and isinstance(raw, str):
                try:
                    value = cls._COERCE[key](raw)
                except ValueError:
                    raise ConfigError(key, f"expected a number, got {raw!r}") from None
            if key == "alpha" and isinstance(raw, str) and raw not in STEP_RULES:
                try:
                    value = float(raw)
                except ValueError:
                    raise ConfigError(
                        "alpha", f"expected a number or one of {sorted(STEP_RULES)}, "
                        f"got {raw!r}") from None
            kwargs[key] = value
        if name is not None:
            kwargs.setdefault("name", name)
        alpha = kwargs.pop("alpha", None)
        if isinstance(alpha, str):
            kwargs["rule"] = alpha
            kwargs["alpha"] = None
        else:
            kwargs["alpha"] = alpha
        missing = [k for k in ("problem", "algorithm", "T") if k not in kwargs]
        if missing:
            raise ConfigError(missing[0], "required key is missing")
        if kwargs.get("alpha") is None and kwargs.get("rule") is None:
            raise ConfigError("alpha", "required key is missing")
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError("problem", f"must be one of {PROBLEMS}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm", f"must be one of {ALGORITHMS}")
        if self.T < 1:
            raise ConfigError("T", "must be >= 1")
        if self.stride < 1:
            raise ConfigError("stride", "must be >= 1")
        if self.dim < 1:
            raise ConfigError("dim", "must be >= 1")
        if self.rule is not None and self.rule not in STEP_RULES:
            raise ConfigError("alpha", f"unknown step-size rule {self.rule!r}")
        if self.alpha is not None and self.rule is not None:
            raise ConfigError("alpha", "give either a numeric step size or a "
                              "rule name, not both")
        if self.alpha is not None and not self.alpha > 0:
            raise ConfigError("alpha", "step size must be positive")

    # -- resolution ---------------------------------------------------------

    def build_problem(self) -> SaddleProblem:
        A = _parse_matrix(self.matrix, self.dim)
        try:
            if self.problem == "bilinear":
                if A is not None:
                    raise ConfigError(
                        "matrix", "bilinear uses the identity coupling; "
                        "use quadratic_cc for a general matrix")
                dx = _parse_domain(self.domain_x or self.domain, self.dim)
                dy = _parse_domain(self.domain_y or self.domain, self.dim)
                return BilinearProblem(self.dim, dx, dy)
            if self.problem == "quadratic_cc":
                A = np.eye(self.dim) if A is None else A
                dx = _parse_domain(self.domain_x or self.domain, A.shape[0])
                dy = _parse_domain(self.domain_y or self.domain, A.shape[1])
                return QuadraticCC(A, dx, dy)
            if any(s not in (None, "all")
                   for s in (self.domain, self.domain_x, self.domain_y)):
                raise ConfigError("domain", "quadratic_scsc is unconstrained")
            return QuadraticSCSC(self.dim, self.mu, A)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("problem", str(exc)) from exc

    def build_schedules(self):
        try:
            main = DelaySchedule.parse(self.schedule, default_seed=self.seed)
        except ValueError as exc:
            raise ConfigError("schedule", str(exc)) from exc
        if self.algorithm != "deg":
            return main, None
        spec = self.schedule_mid or self.schedule
        try:
            mid = DelaySchedule.parse(spec, default_seed=self.seed)
        except ValueError as exc:
            raise ConfigError("schedule_mid", str(exc)) from exc
        return main, mid

    def resolve_alpha(self, problem: SaddleProblem, tau_max: int) -> float:
        if self.rule is None:
            return float(self.alpha)
        tau = max(tau_max, 1)
        try:
            if self.rule == "thm1":
                if self.algorithm != "deg":
                    raise ValueError("rule thm1 applies to deg runs")
                if not problem.bounded_domains:
                    raise ValueError("rule thm1 requires bounded domains")
                return stepsize_deg_cc(problem.grad_bound, problem.lipschitz,
                                       tau, self.T)
            if self.rule == "thm2":
                if self.algorithm != "dgda":
                    raise ValueError("rule thm2 applies to dgda runs")
                if problem.mu != 0.0:
                    raise ValueError("rule thm2 applies to convex-concave "
                                     "instances (mu = 0)")
                return stepsize_dgda_cc(problem.grad_bound, problem.lipschitz,
                                        tau, self.T)
            if self.algorithm != "dgda":
                raise ValueError("rule thm3 applies to dgda runs")
            return stepsize_dgda_scsc(problem.mu, problem.lipschitz, tau)
        except ValueError as exc:
            raise ConfigError("alpha", str(exc)) from exc

    def resolve_z1(self, problem: SaddleProblem) -> np.ndarray:
        if self.z1 == "default":
            return problem.default_start()
        try:
            vec = np.asarray([float(v) for v in str(self.z1).split(",")])
        except ValueError:
            raise ConfigError("z1", f"expected 'default' or comma-separated "
                              f"floats, got {self.z1!r}") from None
        if vec.shape != (problem.dim,):
            raise ConfigError("z1", f"expected {problem.dim} components, "
                              f"got {vec.shape[0]}")
        return vec


def _parse_domain(spec: str, dim: int) -> DomainSet:
    spec = spec.strip()
    if spec == "all":
        return DomainSet.all_space(dim)
    body, _, center_part = spec.partition("@")
    center = None
    if center_part:
        center = np.asarray([float(v) for v in center_part.split(",")])
        if center.shape != (dim,):
            raise ConfigError("domain", f"center needs {dim} components")
    kind, _, params = body.partition(":")
    try:
        if kind == "ball":
            return DomainSet.ball(float(params), dim, center=center)
        if kind == "box":
            vals = [float(v) for v in params.split(",")]
            hw = np.full(dim, vals[0]) if len(vals) == 1 else np.asarray(vals)
            if hw.shape != (dim,):
                raise ConfigError("domain", f"box needs 1 or {dim} half-widths")
            return DomainSet.box(hw, center=center)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("domain", str(exc)) from exc
    raise ConfigError("domain", f"cannot parse domain spec {spec!r}")


def _parse_matrix(spec: str, dim: int):
    spec = spec.strip()
    if spec == "identity":
        return None
    kind, _, params = spec.partition(":")
    try:
        if kind == "scale":
            return float(params) * np.eye(dim)
        if kind == "diag":
            vals = np.asarray([float(v) for v in params.split(",")])
            if vals.shape != (dim,):
                raise ConfigError("matrix", f"diag needs {dim} values")
            return np.diag(vals)
        if kind == "rows":
            rows = [[float(v) for v in row.split()] for row in params.split(";")]
            A = np.asarray(rows)
            if A.ndim != 2:
                raise ConfigError("matrix", "rows must form a rectangular matrix")
            return A
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("matrix", str(exc)) from exc
    raise ConfigError("matrix", f"cannot parse matrix spec {spec!r}")


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Read a flat key-value config file, applying ``overrides`` on top."""
    mapping: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise ConfigError(f"line {lineno}",
                                  f"expected 'key = value', got {line!r}")
            mapping[key.strip()] = value.strip()
    if overrides:
        mapping.update(overrides)
    stem = os.path.splitext(os.path.basename(str(path)))[0]
    return RunConfig.from_mapping(mapping, name=stem)


# -- run records -------------------------------------------------------------

CSV_BASE_COLUMNS = ("k", "r", "e_norm", "gap")


@dataclass
class RunRecord:
    """Serializable outcome of one run (rows at the configured stride)."""

    config: dict
    columns: list
    rows: list
    status: str
    diverged_at: int | None
    averaged_sequence: str
    averaged_x: list
    averaged_y: list
    final_iterate: list
    final_gap: float | None
    bound_reports: list
    duration_s: float | None = None          # not serialized
    trajectory: Trajectory | None = None     # not serialized

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "columns": list(self.columns),
            "rows": [list(row) for row in self.rows],
            "status": self.status,
            "diverged_at": self.diverged_at,
            "averaged_sequence": self.averaged_sequence,
            "averaged_x": list(self.averaged_x),
            "averaged_y": list(self.averaged_y),
            "final_iterate": list(self.final_iterate),
            "final_gap": self.final_gap,
            "bound_reports": [r.to_dict() for r in self.bound_reports],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(config=d["config"], columns=list(d["columns"]),
                   rows=[list(r) for r in d["rows"]], status=d["status"],
                   diverged_at=d["diverged_at"],
                   averaged_sequence=d["averaged_sequence"],
                   averaged_x=list(d["averaged_x"]),
                   averaged_y=list(d["averaged_y"]),
                   final_iterate=list(d["final_iterate"]),
                   final_gap=d["final_gap"],
                   bound_reports=[metrics.BoundReport.from_dict(b)
                                  for b in d["bound_reports"]])

    def row_series(self):
        """(k, r) arrays from the logged rows, for plotting."""
        ks = np.asarray([row[0] for row in self.rows], dtype=float)
        r_col = self.columns.index("r")
        rs = np.asarray([row[r_col] for row in self.rows], dtype=float)
        return ks, rs


def _gap_of(problem: SaddleProblem, traj: Trajectory, x, y,
            restriction) -> float | None:
    """Closed-form gap under the run's gap mode; None when undefined."""
    try:
        if traj.algorithm == "deg" and problem.bounded_domains:
            return problem.duality_gap(x, y)
        if problem.mu > 0:
            return problem.duality_gap(x, y)
        if restriction is not None:
            return problem.duality_gap(x, y, restriction=restriction)
    except ValueError:
        return None
    return None


def run(config: RunConfig) -> RunRecord:
    """Execute one configured run; deterministic for a fixed config."""
    t_start = time.perf_counter()
    problem = config.build_problem()
    sched_main, sched_mid = config.build_schedules()
    tau_declared = sched_main.tau_max if sched_mid is None else \
        max(sched_main.tau_max, sched_mid.tau_max)
    alpha = config.resolve_alpha(problem, tau_declared)
    z1 = config.resolve_z1(problem)

    if config.algorithm == "dgda":
        traj = run_dgda(problem, sched_main, alpha, config.T, z1=z1)
    else:
        traj = run_deg(problem, sched_main, sched_mid, alpha, config.T, z1=z1)
    traj.rule = config.rule

    restriction = None
    if traj.algorithm == "dgda" and problem.mu == 0.0 \
            and math.isfinite(problem.grad_bound):
        restriction = metrics.restriction_for_run(problem, z1)

    n = traj.n_steps
    ks = list(range(1, n + 1, config.stride))
    if traj.status == "diverged" and (not ks or ks[-1] != n + 1):
        ks.append(n + 1)
    columns = ["k"] + [f"z_{i}" for i in range(problem.dim)] + ["r", "e_norm", "gap"]
    rows = []
    for k in ks:
        i = k - 1
        z = traj.Z[i]
        e = float(traj.err_norms[min(i, n - 1)])
        x, y = problem.split(z)
        gap = _gap_of(problem, traj, x, y, restriction)
        rows.append([int(k), *(float(v) for v in z), float(traj.r[i]), e, gap])

    xbar, ybar = averaged_iterates(traj)
    final_gap = _gap_of(problem, traj, xbar, ybar, restriction)
    reports = metrics.reports_for_rule(traj)

    echo = problem.config_echo()
    echo.update({
        "name": config.name,
        "algorithm": config.algorithm,
        "T": config.T,
        "alpha": alpha,
        "rule": config.rule,
        "schedule": sched_main.spec_string(),
        "schedule_mid": sched_mid.spec_string() if sched_mid else None,
        "tau_max": tau_declared,
        "z1": [float(v) for v in z1],
        "seed": config.seed,
        "stride": config.stride,
        "averaged_sequence": "midpoints" if traj.algorithm == "deg" else "iterates",
    })
    return RunRecord(
        config=echo, columns=columns, rows=rows, status=traj.status,
        diverged_at=traj.diverged_at,
        averaged_sequence=echo["averaged_sequence"],
        averaged_x=[float(v) for v in xbar], averaged_y=[float(v) for v in ybar],
        final_iterate=[float(v) for v in traj.Z[-1]], final_gap=final_gap,
        bound_reports=reports, duration_s=time.perf_counter() - t_start,
        trajectory=traj)


# -- output ------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(record: RunRecord, path) -> None:
    """Columns exactly ``k, z_0..z_{d-1}, r, e_norm, gap`` at 17 significant
    digits; gap is blank when undefined."""
    lines = [",".join(record.columns)]
    for row in record.rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_json(record: RunRecord, path) -> None:
    """Full record as JSON (sorted keys; wall-clock duration excluded so
    reruns are byte-identical)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(record.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def resolve_out_dir(cli_out: str | None, config_out: str | None = None) -> str:
    """Output directory: DMM_OUT_DIR env overrides CLI, which overrides config."""
    out = os.environ.get("DMM_OUT_DIR") or cli_out or config_out or "dmm_out"
    os.makedirs(out, exist_ok=True)
    return out


def write_run_outputs(record: RunRecord, out_dir: str, figures: bool = True):
    """CSV + JSON (+ SVG/PNG distance plots) for one record."""
    from . import plotting

    base = os.path.join(out_dir, record.config["name"])
    emit_csv(record, base + ".csv")
    emit_json(record, base + ".json")
    paths = [base + ".csv", base + ".json"]
    if figures:
        ks, rs = record.row_series()
        series = [(record.config["name"], ks, rs)]
        plotting.emit_svg(series, base + ".svg", title=record.config["name"],
                          xlabel="k", ylabel="distance to saddle")
        plotting.save_png(series, base + ".png", title=record.config["name"],
                          xlabel="k", ylabel="distance to saddle")
        paths += [base + ".svg", base + ".png"]
    return paths


# -- canned experiments ------------------------------------------------------

def envelope_horizon(mu: float, L: float, tau_max: int, target: float = 0.5) -> int:
    """Smallest T whose linear-rate envelope at k = T+1 falls below
    ``target * r_1``."""
    rho = 1.0 - mu ** 4 / (3072.0 * L ** 6 * tau_max ** 2)
    return 1 + math.ceil(6.0 * tau_max * math.log(target) / math.log(rho))


def reproduce_fig1(out_dir: str | None = None):
    """The divergence demonstration: DEG on the unconstrained bilinear game
    (dim 2, alpha = 0.2) with a one-step delay versus no delay.

    Returns (delayed record, zero-delay record, plot series); when
    ``out_dir`` is given also writes CSV/JSON per run plus combined
    SVG/PNG figures.
    """
    base = dict(problem="bilinear", dim=2, algorithm="deg", alpha=0.2,
                T=2000, stride=1)
    delayed = run(RunConfig(schedule="const:1", name="fig1_delayed", **base))
    nodelay = run(RunConfig(schedule="zero", name="fig1_nodelay", **base))
    series = [("delay 1", *delayed.row_series()),
              ("no delay", *nodelay.row_series())]
    if out_dir is not None:
        from . import plotting

        for rec in (delayed, nodelay):
            emit_csv(rec, os.path.join(out_dir, rec.config["name"] + ".csv"))
            emit_json(rec, os.path.join(out_dir, rec.config["name"] + ".json"))
        plotting.emit_svg(series, os.path.join(out_dir, "fig1.svg"),
                          title="extra-gradient on <x, y>: unit delay vs none",
                          xlabel="k", ylabel="distance to saddle")
        plotting.save_png(series, os.path.join(out_dir, "fig1.png"),
                          title="extra-gradient on <x, y>: unit delay vs none",
                          xlabel="k", ylabel="distance to saddle")
    return delayed, nodelay, series


_CANNED_DEFAULTS = {
    "thm1": dict(tau_max=1, T=1000),
    "thm2": dict(tau_max=2, T=2000),
    "thm3": dict(tau_max=1, T=None),
}


def canned_config(rule: str, T: int | None = None, tau_max: int | None = None,
                  seed: int = 0) -> RunConfig:
    """Default experiment exercising one step-size rule's bound suite."""
    if rule not in _CANNED_DEFAULTS:
        raise ConfigError("rule", f"must be one of {sorted(_CANNED_DEFAULTS)}")
    defaults = _CANNED_DEFAULTS[rule]
    tau = tau_max if tau_max is not None else defaults["tau_max"]
    if tau < 1:
        raise ConfigError("tau_max", "must be >= 1")
    horizon = T if T is not None else defaults["T"]
    if rule == "thm3":
        problem_kwargs = dict(problem="quadratic_scsc", dim=1, mu=1.0)
        if horizon is None:
            # L = mu + sigma_max(I) = 2 for this instance
            horizon = envelope_horizon(1.0, 2.0, tau)
        algorithm = "dgda"
    else:
        problem_kwargs = dict(problem="bilinear", dim=2, domain="ball:1")
        algorithm = "dgda" if rule == "thm2" else "deg"
    stride = max(1, horizon // 5000)
    return RunConfig(algorithm=algorithm, T=horizon, rule=rule,
                     schedule=f"rand:{tau}", seed=seed, stride=stride,
                     name=f"check_{rule}", **problem_kwargs)


# -- sweeps ------------------------------------------------------------------

def _with_tau(spec: str, tau: int) -> str:
    kind, _, rest = spec.partition(":")
    if kind == "const":
        return f"const:{tau}"
    if kind == "rand":
        seed_part = rest.partition(":")[2]
        return f"rand:{tau}" + (f":{seed_part}" if seed_part else "")
    raise ConfigError("values",
                      f"cannot sweep tau_max over a {kind!r} schedule")


def _cell_config(base: RunConfig, axis: str, value, cell: int,
                 seed_offset: int) -> RunConfig:
    updates = {"seed": base.seed + 101 * cell + seed_offset,
               "name": f"{base.name}_{axis}{value}_s{seed_offset}"}
    if axis == "T":
        updates["T"] = int(value)
    elif axis == "tau_max":
        updates["schedule"] = _with_tau(base.schedule, int(value))
        if base.schedule_mid is not None:
            updates["schedule_mid"] = _with_tau(base.schedule_mid, int(value))
    else:
        updates.update(alpha=float(value), rule=None)
    return dataclasses.replace(base, **updates)


def sweep(base: RunConfig, axis: str, values, seeds_per_cell: int = 1):
    """One cell per value along ``axis``; cell seeds offset deterministically
    (base.seed + 101*cell + j).  Returns the aggregated table."""
    if axis not in SWEEP_AXES:
        raise ConfigError("axis", f"must be one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ConfigError("values", "must be non-empty")
    table = []
    for cell, value in enumerate(values):
        gaps, finals, statuses = [], [], []
        bound = None
        for j in range(seeds_per_cell):
            cfg = _cell_config(base, axis, value, cell, j)
            rec = run(cfg)
            statuses.append(rec.status)
            finals.append(rec.rows[-1][rec.columns.index("r")])
            if rec.final_gap is not None:
                gaps.append(rec.final_gap)
            if bound is None and cfg.rule is not None:
                problem = cfg.build_problem()
                main, mid = cfg.build_schedules()
                tau = main.tau_max if mid is None else max(main.tau_max,
                                                           mid.tau_max)
                bound = metrics.rule_bound(cfg.rule, problem, max(tau, 1),
                                           cfg.T, cfg.resolve_z1(problem))
        table.append({
            "axis": axis,
            "value": value,
            "runs": seeds_per_cell,
            "status": ("diverged" if any(s == "diverged" for s in statuses)
                       else "completed"),
            "gap_mean": float(np.mean(gaps)) if gaps else None,
            "r_final_mean": float(np.mean(finals)),
            "theoretical_bound": bound,
        })
    return table


def emit_sweep_csv(table, path) -> None:
    cols = ["axis", "value", "runs", "status", "gap_mean", "r_final_mean",
            "theoretical_bound"]
    lines = [",".join(cols)]
    for row in table:
        lines.append(",".join(
            row["axis"] if c == "axis"
            else row["status"] if c == "status"
            else _fmt(row[c]) for c in cols))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
