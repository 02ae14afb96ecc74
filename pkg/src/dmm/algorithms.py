"""Delayed gradient descent-ascent (DGDA) and delayed extra-gradient (DEG).

Both algorithms act on the stacked iterate ``z = [x; y]`` through the saddle
operator ``phi``:

* DGDA:  ``z_{k+1} = z_k - alpha * phi(z_{k - tau_k})``.
* DEG:   midpoint ``zh_k = proj(z_k - alpha * phi(z_{k - tau_k}))`` followed by
  the endpoint ``z_{k+1} = proj(z_k - alpha * phi(zh_{k - tauh_k}))``, with
  block-wise projection onto X x Y.  Both stages ascend the y block along
  ``grad_y f`` (the phi convention carries the sign).

Zero-delay schedules recover vanilla GDA/EG exactly, iterate for iterate.
A run halts with status "diverged" once ``||z|| > 1e12`` or any coordinate
turns non-finite; divergence is captured in the trajectory, not raised.

Two equivalent surfaces are provided: a step-level API
(:class:`AlgorithmState`, :func:`dgda_step`, :func:`deg_step`) backed by the
ring-buffer history, and array-based runners (:func:`run_dgda`,
:func:`run_deg`) that produce identical iterates and are cheap enough for
multi-million-step runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .delays import DelaySchedule, IterateHistory
from .problems import SaddleProblem

__all__ = [
    "DIVERGENCE_NORM",
    "AlgorithmState",
    "StepRecord",
    "Trajectory",
    "dgda_step",
    "deg_step",
    "run_dgda",
    "run_deg",
    "gda_reference",
    "eg_reference",
    "stepsize_deg_cc",
    "stepsize_dgda_cc",
    "stepsize_dgda_scsc",
    "STEP_RULES",
    "ergodic_average",
    "averaged_iterates",
]

DIVERGENCE_NORM = 1e12
_DIVERGE_SQ = DIVERGENCE_NORM * DIVERGENCE_NORM


# -- step-size rules ---------------------------------------------------------

def _check_cc_constants(G, L, tau_max):
    if not math.isfinite(G):
        raise ValueError("step-size rule requires a finite gradient bound G; "
                         "this instance has unbounded gradients")
    if G < 1.0 or L < 1.0:
        raise ValueError("step-size rules assume G >= 1 and L >= 1 "
                         "(use the clamped instance constants)")
    if tau_max < 1:
        raise ValueError("step-size rules require tau_max >= 1")


def stepsize_deg_cc(G, L, tau_max, T) -> float:
    """Step size sqrt(1 / (24*G*L*tau_max*T)) for DEG on bounded
    convex-concave instances; requires T >= L."""
    _check_cc_constants(G, L, tau_max)
    if T < L:
        raise ValueError(f"rule requires T >= L (got T={T}, L={L})")
    alpha = math.sqrt(1.0 / (24.0 * G * L * tau_max * T))
    # the analysis additionally needs alpha <= 1/(2L); implied by T >= L
    assert alpha <= 0.5 / L * (1.0 + 1e-12)
    return alpha


def stepsize_dgda_cc(G, L, tau_max, T) -> float:
    """Step size 1 / (2*sqrt(L*G*tau_max*T)) for DGDA on convex-concave
    instances with finite gradient bound."""
    _check_cc_constants(G, L, tau_max)
    if T < 1:
        raise ValueError("rule requires T >= 1")
    return 1.0 / (2.0 * math.sqrt(L * G * tau_max * T))


def stepsize_dgda_scsc(mu, L, tau_max) -> float:
    """Step size mu^3 / (1536 * L^6 * tau_max^2) for DGDA on strongly
    convex-strongly concave instances."""
    if not 0.0 < mu <= L:
        raise ValueError(f"rule requires 0 < mu <= L (got mu={mu}, L={L})")
    if tau_max < 1:
        raise ValueError("step-size rules require tau_max >= 1")
    alpha = mu ** 3 / (1536.0 * L ** 6 * tau_max ** 2)
    # linear-rate analysis needs alpha <= mu/(8 L^2); implied by mu <= L
    assert alpha <= mu / (8.0 * L * L) * (1.0 + 1e-12)
    return alpha


#: config/CLI rule tokens
STEP_RULES = {
    "thm1": stepsize_deg_cc,
    "thm2": stepsize_dgda_cc,
    "thm3": stepsize_dgda_scsc,
}


# -- step-level API ----------------------------------------------------------

@dataclass(frozen=True)
class StepRecord:
    """Outcome of one algorithm step at iteration ``k``."""

    k: int
    z: np.ndarray                      # iterate the step started from (z_k)
    z_next: np.ndarray                 # z_{k+1}
    tau: int                           # delay used for the main lookup
    err_norm: float                    # ||e_k|| (DGDA) / max stage error (DEG)
    midpoint: np.ndarray | None = None
    tau_mid: int | None = None
    err_stage: tuple | None = None     # DEG: (ex, ey, ex_mid, ey_mid)
    diverged: bool = False


class AlgorithmState:
    """Mutable single-run state for the step-level API.

    Holds the iteration counter, the current iterate and the bounded
    iterate histories enabling stale lookups.  One instance per run,
    single-threaded mutation.
    """

    def __init__(self, problem: SaddleProblem, alpha: float, z1, tau_max: int,
                 midpoints: bool = False):
        if alpha <= 0:
            raise ValueError("step size must be positive")
        z1 = np.array(z1, dtype=float)
        if z1.shape != (problem.dim,):
            raise ValueError(f"initial iterate must have shape ({problem.dim},)")
        self.alpha = float(alpha)
        self.k = 1
        self.z = z1
        self.history_main = IterateHistory(tau_max + 1)
        self.history_main.push(1, z1)
        self.history_mid = IterateHistory(tau_max + 1) if midpoints else None


def _is_diverged(z: np.ndarray) -> bool:
    # NaN fails the comparison, so this also catches non-finite iterates.
    return not bool(z @ z < _DIVERGE_SQ)


def dgda_step(problem: SaddleProblem, state: AlgorithmState,
              schedule: DelaySchedule) -> StepRecord:
    """One DGDA step: ``z_{k+1} = z_k - alpha * phi(z_{k - tau_k})``."""
    k = state.k
    tau = schedule.next_delay(k)
    z_stale = state.history_main.stale(k, tau)
    g = problem.phi(z_stale)
    z_next = state.z - state.alpha * g
    err = float(np.linalg.norm(problem.phi(state.z) - g))
    record = StepRecord(k=k, z=state.z, z_next=z_next, tau=tau,
                        err_norm=err, diverged=_is_diverged(z_next))
    state.history_main.push(k + 1, z_next)
    state.z = z_next
    state.k = k + 1
    return record


def deg_step(problem: SaddleProblem, state: AlgorithmState,
             sched_main: DelaySchedule, sched_mid: DelaySchedule) -> StepRecord:
    """One DEG step: stale-gradient midpoint, then stale-midpoint endpoint."""
    if state.history_mid is None:
        raise ValueError("state was not created with midpoints=True")
    k = state.k
    tau = sched_main.next_delay(k)
    z_stale = state.history_main.stale(k, tau)
    g_main = problem.phi(z_stale)
    zh = problem.project(state.z - state.alpha * g_main)
    state.history_mid.push(k, zh)

    tau_mid = sched_mid.next_delay(k)
    zh_stale = state.history_mid.stale(k, tau_mid)
    g_mid = problem.phi(zh_stale)
    z_next = problem.project(state.z - state.alpha * g_mid)

    d_main = g_main - problem.phi(state.z)
    d_mid = g_mid - problem.phi(zh)
    nx = problem.dim_x
    stage = (float(np.linalg.norm(d_main[:nx])), float(np.linalg.norm(d_main[nx:])),
             float(np.linalg.norm(d_mid[:nx])), float(np.linalg.norm(d_mid[nx:])))
    record = StepRecord(k=k, z=state.z, z_next=z_next, tau=tau,
                        err_norm=max(stage), midpoint=zh, tau_mid=tau_mid,
                        err_stage=stage, diverged=_is_diverged(z_next))
    state.history_main.push(k + 1, z_next)
    state.z = z_next
    state.k = k + 1
    return record


# -- trajectories ------------------------------------------------------------

@dataclass(eq=False)
class Trajectory:
    """Full record of one run: iterates z_1..z_{n+1} plus per-step data."""

    problem: SaddleProblem
    algorithm: str                       # "dgda" | "deg"
    alpha: float
    tau_max: int                         # declared bound over all schedules
    Z: np.ndarray                        # (n+1, dim)
    taus: np.ndarray                     # (n,)
    err_norms: np.ndarray                # (n,)
    status: str                          # "completed" | "diverged"
    T_requested: int
    midpoints: np.ndarray | None = None  # (n, dim), DEG only
    taus_mid: np.ndarray | None = None
    err_stage: np.ndarray | None = None  # (n, 4), DEG only
    diverged_at: int | None = None       # 1-based index of first bad iterate
    rule: str | None = None              # step-size rule used, if any

    @property
    def n_steps(self) -> int:
        return self.taus.shape[0]

    @cached_property
    def r(self) -> np.ndarray:
        """Distances ||z_k - z*|| for every stored iterate (k = 1..n+1)."""
        with np.errstate(over="ignore", invalid="ignore"):
            return np.linalg.norm(self.Z - self.problem.saddle, axis=1)


def _stale_indices(taus: np.ndarray) -> np.ndarray:
    n = taus.shape[0]
    steps = np.arange(n)
    return steps - np.minimum(taus, steps)


def _fast_phi(problem: SaddleProblem):
    """Validation-free phi for the hot loops; bitwise-identical values.

    The built-in instances apply a fixed matrix, so the per-step argument
    checks in ``problem.phi`` can be skipped (the runners control shapes).
    """
    P = getattr(problem, "_P", None)
    if P is None:
        return problem.phi
    return lambda z: P @ z


def run_dgda(problem: SaddleProblem, schedule: DelaySchedule, alpha: float,
             T: int, z1=None) -> Trajectory:
    """Run DGDA for up to ``T`` steps (stops early on divergence)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if alpha <= 0:
        raise ValueError("step size must be positive")
    z1 = problem.default_start() if z1 is None else np.array(z1, dtype=float)
    if z1.shape != (problem.dim,):
        raise ValueError(f"initial iterate must have shape ({problem.dim},)")

    taus = schedule.sequence(T)
    stale = _stale_indices(taus).tolist()
    Z = np.empty((T + 1, problem.dim))
    Z[0] = z1
    phi = _fast_phi(problem)
    a = float(alpha)

    n = T
    status = "completed"
    zi = Z[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for i, j in enumerate(stale):
            # same values as z_{k+1} = z_k - a*phi(z_stale), written in place
            g = phi(Z[j])
            g *= a
            out = Z[i + 1]
            np.subtract(zi, g, out=out)
            zi = out
            if not (zi @ zi < _DIVERGE_SQ):
                n = i + 1
                status = "diverged"
                break

        Z = Z[: n + 1]
        taus = taus[:n]
        idx = _stale_indices(taus)
        PHI = problem.phi_many(Z[:n])
        err = np.linalg.norm(PHI - PHI[idx], axis=1)

    return Trajectory(problem=problem, algorithm="dgda", alpha=a,
                      tau_max=schedule.tau_max, Z=Z, taus=taus, err_norms=err,
                      status=status, T_requested=T,
                      diverged_at=(n + 1 if status == "diverged" else None))


def run_deg(problem: SaddleProblem, sched_main: DelaySchedule,
            sched_mid: DelaySchedule, alpha: float, T: int, z1=None) -> Trajectory:
    """Run DEG for up to ``T`` steps (stops early on divergence)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if alpha <= 0:
        raise ValueError("step size must be positive")
    z1 = problem.default_start() if z1 is None else np.array(z1, dtype=float)
    if z1.shape != (problem.dim,):
        raise ValueError(f"initial iterate must have shape ({problem.dim},)")

    taus = sched_main.sequence(T)
    taus_mid = sched_mid.sequence(T)
    stale_main = _stale_indices(taus).tolist()
    stale_mid = _stale_indices(taus_mid).tolist()
    Z = np.empty((T + 1, problem.dim))
    Zh = np.empty((T, problem.dim))
    Z[0] = z1
    phi = _fast_phi(problem)
    proj = problem.project if problem.constrained else None
    a = float(alpha)

    n = T
    status = "completed"
    zi = Z[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(T):
            zh = zi - a * phi(Z[stale_main[i]])
            if proj is not None:
                zh = proj(zh)
            Zh[i] = zh
            z_next = zi - a * phi(Zh[stale_mid[i]])
            if proj is not None:
                z_next = proj(z_next)
            Z[i + 1] = z_next
            zi = z_next
            if not (zi @ zi < _DIVERGE_SQ):
                n = i + 1
                status = "diverged"
                break

        Z = Z[: n + 1]
        Zh = Zh[:n]
        taus = taus[:n]
        taus_mid = taus_mid[:n]
        idx_main = _stale_indices(taus)
        idx_mid = _stale_indices(taus_mid)
        PHI = problem.phi_many(Z[:n])
        PHIh = problem.phi_many(Zh)
        d_main = PHI[idx_main] - PHI
        d_mid = PHIh[idx_mid] - PHIh
        nx = problem.dim_x
        err_stage = np.column_stack([
            np.linalg.norm(d_main[:, :nx], axis=1),
            np.linalg.norm(d_main[:, nx:], axis=1),
            np.linalg.norm(d_mid[:, :nx], axis=1),
            np.linalg.norm(d_mid[:, nx:], axis=1),
        ])
        err = err_stage.max(axis=1) if n else np.empty(0)

    return Trajectory(problem=problem, algorithm="deg", alpha=a,
                      tau_max=max(sched_main.tau_max, sched_mid.tau_max),
                      Z=Z, taus=taus, err_norms=err, status=status,
                      T_requested=T, midpoints=Zh, taus_mid=taus_mid,
                      err_stage=err_stage,
                      diverged_at=(n + 1 if status == "diverged" else None))


# -- vanilla references (used for the zero-delay equivalence checks) ---------

def gda_reference(problem: SaddleProblem, alpha: float, T: int, z1) -> np.ndarray:
    """Plain gradient descent-ascent: z <- z - alpha * phi(z)."""
    z = np.array(z1, dtype=float)
    Z = np.empty((T + 1, problem.dim))
    Z[0] = z
    for i in range(T):
        z = z - alpha * problem.phi(z)
        Z[i + 1] = z
    return Z


def eg_reference(problem: SaddleProblem, alpha: float, T: int, z1):
    """Plain extra-gradient with block projections; returns (Z, midpoints)."""
    z = np.array(z1, dtype=float)
    proj = problem.project if problem.constrained else None
    Z = np.empty((T + 1, problem.dim))
    Zh = np.empty((T, problem.dim))
    Z[0] = z
    for i in range(T):
        zh = z - alpha * problem.phi(z)
        if proj is not None:
            zh = proj(zh)
        Zh[i] = zh
        z = z - alpha * problem.phi(zh)
        if proj is not None:
            z = proj(z)
        Z[i + 1] = z
    return Z, Zh


# -- ergodic averaging -------------------------------------------------------

def ergodic_average(points: np.ndarray) -> np.ndarray:
    """Arithmetic mean over the rows of ``points``."""
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 0:
        raise ValueError("cannot average an empty sequence")
    return points.mean(axis=0)


def averaged_iterates(traj: Trajectory):
    """Ergodic average pair (xbar, ybar): DEG averages the midpoints,
    DGDA the main iterates z_1..z_n."""
    seq = traj.midpoints if traj.midpoints is not None else traj.Z[:-1]
    zbar = ergodic_average(seq)
    nx = traj.problem.dim_x
    return zbar[:nx], zbar[nx:]
