"""Per-run convergence metrics and executable inequality checks.

Each check compares an empirical quantity from a trajectory against the
bound guaranteed for the rule-stepped algorithm and reports the outcome as
a :class:`BoundReport`: satisfied iff empirical <= theoretical at every
checked index, up to a relative slack of 1e-9 for floating-point ties.
The bounds are evaluated with the clamped instance constants (G, L >= 1)
and with an effective delay bound of at least one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .algorithms import (Trajectory, averaged_iterates, stepsize_deg_cc,
                         stepsize_dgda_cc, stepsize_dgda_scsc)
from .problems import RestrictionBall, SaddleProblem

__all__ = [
    "REL_SLACK",
    "BoundReport",
    "distance_to_saddle",
    "bound_B",
    "restriction_for_run",
    "check_deg_delay_errors",
    "check_dgda_delay_errors",
    "check_iterate_bound",
    "check_deg_gap",
    "check_dgda_gap",
    "check_linear_rate",
    "check_scsc_delay_errors",
    "check_scsc_recursion",
    "check_delayed_recursion",
    "reports_for_rule",
    "rule_bound",
]

REL_SLACK = 1e-9
_SERIES_CAP = 2048


@dataclass
class BoundReport:
    """Outcome of one executable bound check."""

    name: str
    empirical: float | np.ndarray
    theoretical: float | np.ndarray
    satisfied: bool
    worst_margin: float              # max(empirical - theoretical); <= 0 is comfortable
    checked: int                     # number of indices compared
    precondition_ok: bool = True
    note: str = ""
    # full lengths before serialization subsampling (set on deserialized reports)
    empirical_n_full: int | None = field(default=None, repr=False)
    theoretical_n_full: int | None = field(default=None, repr=False)

    @staticmethod
    def _encode(value, n_full):
        if isinstance(value, np.ndarray):
            n = int(n_full if n_full is not None else value.shape[0])
            series = value
            if series.shape[0] > _SERIES_CAP:
                idx = np.unique(np.linspace(0, series.shape[0] - 1,
                                            _SERIES_CAP).round().astype(int))
                series = series[idx]
            return {"n_full": n, "series": [float(v) for v in series]}
        return float(value)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "empirical": self._encode(self.empirical, self.empirical_n_full),
            "theoretical": self._encode(self.theoretical, self.theoretical_n_full),
            "satisfied": self.satisfied,
            "worst_margin": self.worst_margin,
            "checked": self.checked,
            "precondition_ok": self.precondition_ok,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        def decode(v):
            if isinstance(v, dict):
                return np.asarray(v["series"], dtype=float), int(v["n_full"])
            return float(v), None

        emp, emp_n = decode(d["empirical"])
        theo, theo_n = decode(d["theoretical"])
        return cls(name=d["name"], empirical=emp, theoretical=theo,
                   satisfied=bool(d["satisfied"]),
                   worst_margin=float(d["worst_margin"]),
                   checked=int(d["checked"]),
                   precondition_ok=bool(d["precondition_ok"]),
                   note=d.get("note", ""),
                   empirical_n_full=emp_n, theoretical_n_full=theo_n)

    def summary(self) -> str:
        state = "PASS" if self.satisfied else "FAIL"
        extra = "" if self.precondition_ok else " [precondition violated]"
        return (f"{state}  {self.name}: worst margin {self.worst_margin:.3e} "
                f"over {self.checked} indices{extra}")


def _report(name, empirical, theoretical, precondition_ok=True, note=""):
    emp = np.asarray(empirical, dtype=float)
    theo = np.asarray(theoretical, dtype=float)
    satisfied = bool(np.all(emp <= theo * (1.0 + REL_SLACK)))
    worst = float(np.max(emp - theo)) if emp.size else 0.0
    checked = int(max(emp.size, theo.size))
    return BoundReport(
        name=name,
        empirical=empirical if isinstance(empirical, np.ndarray) else float(empirical),
        theoretical=theoretical if isinstance(theoretical, np.ndarray) else float(theoretical),
        satisfied=satisfied, worst_margin=worst, checked=checked,
        precondition_ok=precondition_ok, note=note)


def _trailing_max(a: np.ndarray, window: int) -> np.ndarray:
    """max over the trailing window [i - window + 1, i] at each position i."""
    if window <= 1:
        return a.copy()
    padded = np.concatenate([np.full(window - 1, -np.inf), a])
    return sliding_window_view(padded, window).max(axis=1)


def distance_to_saddle(problem: SaddleProblem, z) -> float:
    """Euclidean distance of ``z = [x; y]`` to the known saddle point."""
    z = np.asarray(z, dtype=float)
    if z.shape != (problem.dim,):
        raise ValueError(f"iterate must have shape ({problem.dim},)")
    return float(np.linalg.norm(z - problem.saddle))


def bound_B(problem: SaddleProblem, z1) -> float:
    """B = max(||z_1 - z*||^2, G) with the clamped gradient bound."""
    if not math.isfinite(problem.grad_bound):
        raise ValueError("B requires a finite gradient bound G")
    r1 = distance_to_saddle(problem, z1)
    return max(r1 * r1, problem.grad_bound)


def restriction_for_run(problem: SaddleProblem, z1) -> RestrictionBall:
    """Ball of squared radius 10*B around the saddle; under the dgda_cc
    step-size rule every DGDA iterate provably stays inside it."""
    return RestrictionBall(center=problem.saddle,
                           radius_sq=10.0 * bound_B(problem, z1))


def _effective_tau(traj: Trajectory, tau_max) -> int:
    if tau_max is None:
        return max(traj.tau_max, 1)
    tau_max = int(tau_max)
    if tau_max < 1:
        raise ValueError("bound checks require tau_max >= 1")
    return tau_max


def _require_algorithm(traj: Trajectory, expected: str, what: str):
    if traj.algorithm != expected:
        raise ValueError(f"{what} applies to {expected} runs, got {traj.algorithm}")


def _rule_precondition(traj: Trajectory, expected_alpha, checks=()):
    ok = math.isclose(traj.alpha, expected_alpha, rel_tol=1e-12)
    notes = [] if ok else [
        f"alpha={traj.alpha!r} does not match the rule value {expected_alpha!r}"]
    for passed, msg in checks:
        if not passed:
            ok = False
            notes.append(msg)
    return ok, "; ".join(notes)


def check_deg_delay_errors(traj: Trajectory, tau_max=None) -> BoundReport:
    """Every DEG stage error norm is at most 6*alpha*G*L*tau_max."""
    _require_algorithm(traj, "deg", "the DEG delay-error bound")
    p = traj.problem
    if not math.isfinite(p.grad_bound):
        raise ValueError("the DEG delay-error bound requires a finite gradient "
                         "bound (bounded domains)")
    tau = _effective_tau(traj, tau_max)
    ok, note = True, ""
    if traj.alpha > 0.5 / p.lipschitz * (1.0 + REL_SLACK):
        ok, note = False, "alpha exceeds 1/(2L)"
    theoretical = 6.0 * traj.alpha * p.grad_bound * p.lipschitz * tau
    return _report("deg-delay-error", traj.err_norms, theoretical,
                   precondition_ok=ok, note=note)


def check_dgda_delay_errors(traj: Trajectory, tau_max=None) -> BoundReport:
    """Every DGDA operator error ||e_k|| is at most 2*alpha*L*G*tau_max."""
    _require_algorithm(traj, "dgda", "the DGDA delay-error bound")
    p = traj.problem
    if not math.isfinite(p.grad_bound):
        raise ValueError("the DGDA delay-error bound requires a finite gradient bound")
    tau = _effective_tau(traj, tau_max)
    ok = traj.status == "completed"
    theoretical = 2.0 * traj.alpha * p.lipschitz * p.grad_bound * tau
    return _report("dgda-delay-error", traj.err_norms, theoretical,
                   precondition_ok=ok, note="" if ok else "run diverged")


def check_iterate_bound(traj: Trajectory,
                        restriction: RestrictionBall | None = None) -> BoundReport:
    """Squared distance to the saddle stays within 10*B at every iterate."""
    _require_algorithm(traj, "dgda", "the iterate-boundedness check")
    ball = restriction if restriction is not None else \
        restriction_for_run(traj.problem, traj.Z[0])
    d = traj.Z - ball.center
    emp = np.einsum("ij,ij->i", d, d)
    return _report("iterate-bound", emp, ball.radius_sq)


def check_deg_gap(traj: Trajectory, tau_max=None) -> BoundReport:
    """Domain duality gap of the averaged DEG midpoints is at most
    10*D^2*sqrt(G*L*tau_max/T)."""
    _require_algorithm(traj, "deg", "the DEG gap bound")
    p = traj.problem
    if not p.bounded_domains:
        raise ValueError("the DEG gap bound requires bounded domains")
    T = traj.n_steps
    if T < p.lipschitz:
        raise ValueError(f"the DEG gap bound requires T >= L "
                         f"(got T={T}, L={p.lipschitz})")
    tau = _effective_tau(traj, tau_max)
    ok, note = _rule_precondition(
        traj, stepsize_deg_cc(p.grad_bound, p.lipschitz, tau, T))
    xbar, ybar = averaged_iterates(traj)
    gap = p.duality_gap(xbar, ybar)
    theoretical = 10.0 * p.diameter ** 2 * math.sqrt(
        p.grad_bound * p.lipschitz * tau / T)
    return _report("deg-gap", gap, theoretical, precondition_ok=ok, note=note)


def check_dgda_gap(traj: Trajectory, tau_max=None) -> BoundReport:
    """Restricted duality gap of the averaged DGDA iterates is at most
    44*B*sqrt(G*L*tau_max/T), maximized over the 10B-ball slices."""
    _require_algorithm(traj, "dgda", "the DGDA gap bound")
    p = traj.problem
    if not math.isfinite(p.grad_bound):
        raise ValueError("the DGDA gap bound requires a finite gradient bound")
    T = traj.n_steps
    tau = _effective_tau(traj, tau_max)
    ok, note = _rule_precondition(
        traj, stepsize_dgda_cc(p.grad_bound, p.lipschitz, tau, T),
        checks=[(traj.status == "completed", "run diverged")])
    ball = restriction_for_run(p, traj.Z[0])
    B = ball.radius_sq / 10.0
    xbar, ybar = averaged_iterates(traj)
    gap = p.duality_gap(xbar, ybar, restriction=ball)
    theoretical = 44.0 * B * math.sqrt(p.grad_bound * p.lipschitz * tau / T)
    return _report("dgda-restricted-gap", gap, theoretical,
                   precondition_ok=ok, note=note)


def check_linear_rate(traj: Trajectory, tau_max=None) -> BoundReport:
    """Distance to the saddle decays inside the geometric envelope
    (1 - mu^4/(3072*L^6*tau_max^2))^((k-1)/(6*tau_max)) * r_1 at every k."""
    _require_algorithm(traj, "dgda", "the linear-rate check")
    p = traj.problem
    if p.mu <= 0:
        raise ValueError("the linear-rate check requires a strongly "
                         "convex-concave instance (mu > 0)")
    tau = _effective_tau(traj, tau_max)
    ok, note = _rule_precondition(
        traj, stepsize_dgda_scsc(p.mu, p.lipschitz, tau),
        checks=[(traj.status == "completed", "run diverged")])
    rho = 1.0 - p.mu ** 4 / (3072.0 * p.lipschitz ** 6 * tau ** 2)
    exponents = np.arange(traj.Z.shape[0]) / (6.0 * tau)
    envelope = rho ** exponents * traj.r[0]
    return _report("scsc-linear-rate", traj.r, envelope,
                   precondition_ok=ok, note=note)


def check_scsc_delay_errors(traj: Trajectory, tau_max=None) -> BoundReport:
    """||e_k|| <= 2*alpha*M_k where M_k = L*tau_max*(4L^2/mu + 4L) times the
    running max of r_t over t in [k - 2*tau_max, k]."""
    _require_algorithm(traj, "dgda", "the SC-SC delay-error bound")
    p = traj.problem
    if p.mu <= 0:
        raise ValueError("the SC-SC delay-error bound requires mu > 0")
    tau = _effective_tau(traj, tau_max)
    n = traj.n_steps
    window_max = _trailing_max(traj.r[:n], 2 * tau + 1)
    L = p.lipschitz
    M = L * tau * (4.0 * L * L / p.mu + 4.0 * L) * window_max
    return _report("scsc-delay-error", traj.err_norms, 2.0 * traj.alpha * M,
                   precondition_ok=traj.status == "completed",
                   note="" if traj.status == "completed" else "run diverged")


def check_scsc_recursion(traj: Trajectory, tau_max=None) -> BoundReport:
    """r_{k+1}^2 <= (1 - alpha*mu)*r_k^2 + alpha^2*C*max-window(r^2) with
    C = 768*L^6*tau_max^2/mu^2, pointwise along the trajectory."""
    _require_algorithm(traj, "dgda", "the SC-SC recursion check")
    p = traj.problem
    if p.mu <= 0:
        raise ValueError("the SC-SC recursion check requires mu > 0")
    tau = _effective_tau(traj, tau_max)
    ok, note = True, ""
    if traj.alpha > p.mu / (8.0 * p.lipschitz ** 2) * (1.0 + REL_SLACK):
        ok, note = False, "alpha exceeds mu/(8*L^2)"
    n = traj.n_steps
    r_sq = traj.r ** 2
    C = 768.0 * p.lipschitz ** 6 * tau ** 2 / p.mu ** 2
    window_max = _trailing_max(r_sq[:n], 2 * tau + 1)
    rhs = (1.0 - traj.alpha * p.mu) * r_sq[:n] \
        + traj.alpha ** 2 * C * window_max
    return _report("scsc-recursion", r_sq[1:], rhs,
                   precondition_ok=ok, note=note)


def check_delayed_recursion(values, p: float, q: float, d_max: int) -> BoundReport:
    """For V_{k+1} <= p*V_k + q*max window(V), verify the geometric envelope
    V_k <= r^k * V_0 with r = (p + q)^(1/(1 + d_max)); requires p + q < 1."""
    if p < 0 or q < 0:
        raise ValueError("p and q must be non-negative")
    if p + q >= 1:
        raise ValueError("the delayed recursion bound requires p + q < 1")
    if d_max < 0:
        raise ValueError("d_max must be non-negative")
    V = np.asarray(values, dtype=float)
    if V.ndim != 1 or V.shape[0] == 0:
        raise ValueError("values must be a non-empty one-dimensional sequence")
    rate = (p + q) ** (1.0 / (1.0 + d_max))
    envelope = rate ** np.arange(V.shape[0]) * V[0]
    return _report("delayed-recursion", V, envelope)


def reports_for_rule(traj: Trajectory) -> list[BoundReport]:
    """Bound reports guaranteed for a rule-stepped run (empty when the run
    used an explicit step size)."""
    if traj.rule is None or traj.status != "completed":
        return []
    tau = max(traj.tau_max, 1)
    if traj.rule == "thm1":
        return [check_deg_delay_errors(traj, tau), check_deg_gap(traj, tau)]
    if traj.rule == "thm2":
        return [check_dgda_delay_errors(traj, tau), check_iterate_bound(traj),
                check_dgda_gap(traj, tau)]
    if traj.rule == "thm3":
        return [check_scsc_delay_errors(traj, tau), check_scsc_recursion(traj, tau),
                check_linear_rate(traj, tau)]
    raise ValueError(f"unknown step-size rule {traj.rule!r}")


def rule_bound(rule: str, problem: SaddleProblem, tau_max: int, T: int, z1) -> float:
    """Theoretical end-of-run bound for a rule: the gap bound for thm1/thm2,
    the distance envelope at k = T + 1 for thm3."""
    tau = max(int(tau_max), 1)
    if rule == "thm1":
        return 10.0 * problem.diameter ** 2 * math.sqrt(
            problem.grad_bound * problem.lipschitz * tau / T)
    if rule == "thm2":
        return 44.0 * bound_B(problem, z1) * math.sqrt(
            problem.grad_bound * problem.lipschitz * tau / T)
    if rule == "thm3":
        rho = 1.0 - problem.mu ** 4 / (3072.0 * problem.lipschitz ** 6 * tau ** 2)
        r1 = distance_to_saddle(problem, z1)
        return rho ** (T / (6.0 * tau)) * r1
    raise ValueError(f"unknown step-size rule {rule!r}")
