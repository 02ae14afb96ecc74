"""Tests for the DGDA/DEG steps, runners, references, and step-size rules."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dmm.algorithms import (AlgorithmState, averaged_iterates, deg_step,
                            dgda_step, eg_reference, ergodic_average,
                            gda_reference, run_deg, run_dgda, stepsize_deg_cc,
                            stepsize_dgda_cc, stepsize_dgda_scsc)
from dmm.delays import DelaySchedule
from dmm.problems import BilinearProblem, DomainSet, QuadraticCC, QuadraticSCSC

RNG = np.random.default_rng(7)


def ball2():
    return DomainSet.ball(1.0, 2)


def builtin_instances():
    return [
        BilinearProblem(2),
        BilinearProblem(2, ball2(), ball2()),
        BilinearProblem(1, DomainSet.box([1.0]), DomainSet.box([1.0])),
        QuadraticCC(np.array([[1.0, 0.5], [0.0, 2.0]]), ball2(), ball2()),
        QuadraticSCSC(2, 1.0),
    ]


# -- single steps --------------------------------------------------------------

def test_dgda_step_bilinear_example():
    p = BilinearProblem(1)
    state = AlgorithmState(p, alpha=0.1, z1=[1.0, 1.0], tau_max=0)
    rec = dgda_step(p, state, DelaySchedule.zero())
    assert_allclose(rec.z_next, [0.9, 1.1])
    assert rec.k == 1 and state.k == 2


def test_dgda_step_scsc_contraction_example():
    p = QuadraticSCSC(1, 1.0, A=np.zeros((1, 1)))
    state = AlgorithmState(p, alpha=0.5, z1=[1.0, 1.0], tau_max=0)
    rec = dgda_step(p, state, DelaySchedule.zero())
    assert_allclose(rec.z_next, [0.5, 0.5])


def test_saddle_is_fixed_point():
    for p in builtin_instances():
        state = AlgorithmState(p, alpha=0.3, z1=p.saddle, tau_max=2)
        sched = DelaySchedule.constant(2)
        for _ in range(5):
            rec = dgda_step(p, state, sched)
        assert_allclose(rec.z_next, p.saddle, atol=1e-15)
        assert rec.err_norm == 0.0

    p = BilinearProblem(2, ball2(), ball2())
    state = AlgorithmState(p, alpha=0.3, z1=p.saddle, tau_max=1, midpoints=True)
    for _ in range(5):
        rec = deg_step(p, state, DelaySchedule.constant(1), DelaySchedule.constant(1))
    assert_allclose(rec.z_next, p.saddle, atol=1e-15)


def test_step_error_norms_nonnegative():
    p = BilinearProblem(2)
    state = AlgorithmState(p, alpha=0.2, z1=[0.5, 0.5, 0.5, 0.5], tau_max=1,
                           midpoints=True)
    sched = DelaySchedule.constant(1)
    for _ in range(10):
        rec = deg_step(p, state, sched, sched)
        assert rec.err_norm >= 0.0
        assert all(e >= 0.0 for e in rec.err_stage)
        assert rec.tau == 1 and rec.tau_mid == 1


# -- runners vs step API (bitwise) ----------------------------------------------

def test_run_dgda_matches_step_api_bitwise():
    p = QuadraticSCSC(2, 1.0)
    sched_spec = "rand:3:seed=5"
    traj = run_dgda(p, DelaySchedule.parse(sched_spec), alpha=0.01, T=200,
                    z1=[1.0, -0.5, 0.2, 0.3])
    state = AlgorithmState(p, alpha=0.01, z1=[1.0, -0.5, 0.2, 0.3], tau_max=3)
    sched = DelaySchedule.parse(sched_spec)
    zs = [np.array([1.0, -0.5, 0.2, 0.3])]
    errs = []
    for _ in range(200):
        rec = dgda_step(p, state, sched)
        zs.append(rec.z_next)
        errs.append(rec.err_norm)
    assert np.array_equal(traj.Z, np.stack(zs))
    assert_allclose(traj.err_norms, errs, rtol=1e-13, atol=1e-15)


def test_run_deg_matches_step_api_bitwise():
    p = BilinearProblem(2, ball2(), ball2())
    traj = run_deg(p, DelaySchedule.parse("rand:2:seed=3"),
                   DelaySchedule.parse("rand:2:seed=9"), alpha=0.05, T=150)
    z1 = p.default_start()
    state = AlgorithmState(p, alpha=0.05, z1=z1, tau_max=2, midpoints=True)
    main = DelaySchedule.parse("rand:2:seed=3")
    mid = DelaySchedule.parse("rand:2:seed=9")
    zs, mids = [z1], []
    for _ in range(150):
        rec = deg_step(p, state, main, mid)
        zs.append(rec.z_next)
        mids.append(rec.midpoint)
    assert np.array_equal(traj.Z, np.stack(zs))
    assert np.array_equal(traj.midpoints, np.stack(mids))


# -- zero-delay reduction --------------------------------------------------------

def test_zero_delay_dgda_equals_gda_bitwise():
    for p in builtin_instances():
        z1 = p.default_start()
        traj = run_dgda(p, DelaySchedule.zero(), alpha=0.07, T=100, z1=z1)
        ref = gda_reference(p, alpha=0.07, T=100, z1=z1)
        assert np.array_equal(traj.Z, ref), p.name


def test_zero_delay_deg_equals_eg_bitwise():
    for p in builtin_instances():
        z1 = p.default_start()
        traj = run_deg(p, DelaySchedule.zero(), DelaySchedule.zero(),
                       alpha=0.07, T=100, z1=z1)
        ref_Z, ref_mid = eg_reference(p, alpha=0.07, T=100, z1=z1)
        assert np.array_equal(traj.Z, ref_Z), p.name
        assert np.array_equal(traj.midpoints, ref_mid), p.name


def test_zero_delay_stale_is_current():
    sched = DelaySchedule.zero()
    p = BilinearProblem(2)
    traj = run_dgda(p, sched, alpha=0.1, T=50)
    assert np.all(traj.taus == 0)
    assert np.all(traj.err_norms == 0.0)


def test_deg_zero_delay_average_matches_reference():
    p = BilinearProblem(2, ball2(), ball2())
    z1 = p.default_start()
    traj = run_deg(p, DelaySchedule.zero(), DelaySchedule.zero(),
                   alpha=0.05, T=100, z1=z1)
    _, ref_mid = eg_reference(p, alpha=0.05, T=100, z1=z1)
    xbar, ybar = averaged_iterates(traj)
    ref_avg = ref_mid.mean(axis=0)
    assert np.array_equal(np.concatenate([xbar, ybar]), ref_avg)


# -- projections keep DEG feasible ----------------------------------------------

def test_deg_iterates_and_midpoints_stay_in_domain():
    p = BilinearProblem(2, ball2(), ball2())
    traj = run_deg(p, DelaySchedule.parse("rand:3:seed=2"),
                   DelaySchedule.parse("rand:3:seed=4"), alpha=0.4, T=300)
    for z in traj.Z:
        x, y = p.split(z)
        assert p.domain_x.contains(x, tol=1e-12)
        assert p.domain_y.contains(y, tol=1e-12)
    for zh in traj.midpoints:
        x, y = p.split(zh)
        assert p.domain_x.contains(x, tol=1e-12)
        assert p.domain_y.contains(y, tol=1e-12)


# -- divergence handling ----------------------------------------------------------

def test_deg_unit_delay_diverges_and_is_captured():
    p = BilinearProblem(2)
    traj = run_deg(p, DelaySchedule.constant(1), DelaySchedule.constant(1),
                   alpha=0.2, T=5000, z1=[0.5, 0.5, 0.5, 0.5])
    assert traj.status == "diverged"
    assert traj.diverged_at == traj.n_steps + 1
    assert traj.n_steps < 5000
    assert np.all(np.isfinite(traj.Z[:-1]))
    final_sq = traj.Z[-1] @ traj.Z[-1]
    assert not final_sq < 1e24  # huge or non-finite


def test_dgda_divergence_status():
    p = BilinearProblem(2)
    # GDA on the unconstrained bilinear game expands at any fixed step size
    traj = run_dgda(p, DelaySchedule.zero(), alpha=2.0, T=10_000,
                    z1=[1.0, 1.0, 1.0, 1.0])
    assert traj.status == "diverged"
    assert traj.Z.shape[0] == traj.n_steps + 1


# -- step-size rules ---------------------------------------------------------------

def test_stepsize_deg_cc_values():
    assert_allclose(stepsize_deg_cc(1, 1, 1, 24), 1.0 / 24.0)
    assert_allclose(stepsize_deg_cc(2, 1, 4, 48), 1.0 / 96.0)


def test_stepsize_deg_cc_errors():
    with pytest.raises(ValueError, match="T >= L"):
        stepsize_deg_cc(1, 2, 1, 0)
    with pytest.raises(ValueError, match="finite"):
        stepsize_deg_cc(math.inf, 1, 1, 100)
    with pytest.raises(ValueError, match="tau_max"):
        stepsize_deg_cc(1, 1, 0, 100)


def test_stepsize_dgda_cc_values():
    assert_allclose(stepsize_dgda_cc(1, 1, 1, 1), 0.5)
    assert_allclose(stepsize_dgda_cc(1, 1, 4, 16), 1.0 / 16.0)
    with pytest.raises(ValueError, match="finite"):
        stepsize_dgda_cc(math.inf, 1, 1, 1)


def test_stepsize_dgda_scsc_values():
    assert_allclose(stepsize_dgda_scsc(1, 1, 1), 1.0 / 1536.0)
    assert_allclose(stepsize_dgda_scsc(1, 2, 1), 1.0 / (1536.0 * 64.0))
    with pytest.raises(ValueError, match="mu <= L"):
        stepsize_dgda_scsc(2, 1, 1)


# -- delay-error bounds along trajectories -----------------------------------------

def test_deg_delay_error_bound_along_trajectories():
    p = BilinearProblem(2, ball2(), ball2())
    G, L = p.grad_bound, p.lipschitz
    for tau in (1, 3, 5):
        for seed in range(3):
            alpha = stepsize_deg_cc(G, L, tau, 500)
            traj = run_deg(p, DelaySchedule.uniform_random(tau, seed),
                           DelaySchedule.uniform_random(tau, seed + 1000),
                           alpha=alpha, T=500)
            bound = 6.0 * alpha * G * L * tau
            assert np.all(traj.err_stage <= bound * (1 + 1e-9))


def test_dgda_delay_error_bound_along_trajectories():
    p = BilinearProblem(2, ball2(), ball2())
    G, L = p.grad_bound, p.lipschitz
    for tau in (1, 2, 4):
        alpha = stepsize_dgda_cc(G, L, tau, 1000)
        traj = run_dgda(p, DelaySchedule.uniform_random(tau, 3), alpha=alpha,
                        T=1000)
        bound = 2.0 * alpha * L * G * tau
        assert np.all(traj.err_norms <= bound * (1 + 1e-9))


# -- determinism ---------------------------------------------------------------------

def test_identical_runs_are_bitwise_equal():
    p = QuadraticSCSC(2, 1.0)
    a = run_dgda(p, DelaySchedule.uniform_random(3, 5), alpha=0.01, T=500)
    b = run_dgda(p, DelaySchedule.uniform_random(3, 5), alpha=0.01, T=500)
    assert np.array_equal(a.Z, b.Z)
    assert np.array_equal(a.taus, b.taus)
    assert np.array_equal(a.err_norms, b.err_norms)


# -- averaging -----------------------------------------------------------------------

def test_ergodic_average_examples():
    assert_allclose(ergodic_average(np.full((7, 2), 3.0)), [3.0, 3.0])
    assert_allclose(ergodic_average(np.array([[0.0], [2.0]])), [1.0])
    with pytest.raises(ValueError, match="empty"):
        ergodic_average(np.empty((0, 2)))


def test_averaged_iterates_uses_main_sequence_for_dgda():
    p = BilinearProblem(1)
    traj = run_dgda(p, DelaySchedule.zero(), alpha=0.1, T=3, z1=[1.0, 1.0])
    xbar, ybar = averaged_iterates(traj)
    expected = traj.Z[:-1].mean(axis=0)
    assert_allclose(np.concatenate([xbar, ybar]), expected)
