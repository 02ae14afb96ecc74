"""Tests for delay schedules and the stale-iterate history."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dmm.delays import DelaySchedule, IterateHistory, next_delay, stale_lookup


def test_schedule_examples():
    assert next_delay(DelaySchedule.constant(1), 5) == 1
    assert next_delay(DelaySchedule.constant(3), 2) == 3  # clipped downstream
    zero = DelaySchedule.zero()
    assert all(next_delay(zero, k) == 0 for k in (1, 7, 100))


def test_cyclic_pattern():
    sched = DelaySchedule.cyclic([0, 1, 2])
    assert [sched.next_delay(k) for k in range(1, 8)] == [0, 1, 2, 0, 1, 2, 0]
    assert sched.tau_max == 2


def test_bounds_hold_for_any_schedule():
    schedules = [DelaySchedule.zero(), DelaySchedule.constant(4),
                 DelaySchedule.cyclic([1, 3, 0]),
                 DelaySchedule.uniform_random(5, seed=7)]
    for sched in schedules:
        taus = sched.sequence(2000)
        assert taus.min() >= 0
        assert taus.max() <= sched.tau_max


def test_uniform_random_replay_determinism():
    a = DelaySchedule.uniform_random(5, seed=42).sequence(500)
    b = DelaySchedule.uniform_random(5, seed=42).sequence(500)
    assert np.array_equal(a, b)
    c = DelaySchedule.uniform_random(5, seed=43).sequence(500)
    assert not np.array_equal(a, c)


def test_uniform_random_next_matches_sequence():
    sched = DelaySchedule.uniform_random(3, seed=11)
    taus = [sched.next_delay(k) for k in range(1, 101)]
    assert np.array_equal(DelaySchedule.uniform_random(3, seed=11).sequence(100),
                          taus)


def test_uniform_random_covers_range():
    taus = DelaySchedule.uniform_random(3, seed=1).sequence(4000)
    assert set(np.unique(taus)) == {0, 1, 2, 3}


def test_parse_specs():
    assert DelaySchedule.parse("zero").kind == "zero"
    const = DelaySchedule.parse("const:3")
    assert (const.kind, const.tau_max) == ("constant", 3)
    cyc = DelaySchedule.parse("cycle:0,1,2")
    assert cyc.pattern == (0, 1, 2)
    rnd = DelaySchedule.parse("rand:5:seed=42")
    assert (rnd.tau_max, rnd.seed) == (5, 42)
    rnd2 = DelaySchedule.parse("rand:5", default_seed=9)
    assert rnd2.seed == 9
    for bad in ("const", "rand:5:sd=1", "cycle:", "wat:3"):
        with pytest.raises(ValueError):
            DelaySchedule.parse(bad)
    with pytest.raises(ValueError, match="seed"):
        DelaySchedule.parse("rand:5")


def test_spec_string_round_trip():
    for text in ("zero", "const:3", "cycle:0,1,2", "rand:5:seed=42"):
        assert DelaySchedule.parse(text).spec_string() == text


def test_history_lookup():
    hist = IterateHistory(capacity=3)
    for k in range(1, 6):
        hist.push(k, [float(k), 0.0])
    assert_allclose(stale_lookup(hist, 5, 2), [3.0, 0.0])
    assert_allclose(stale_lookup(hist, 5, 0), [5.0, 0.0])


def test_history_startup_clipping():
    hist = IterateHistory(capacity=4)
    hist.push(1, [1.0])
    assert_allclose(stale_lookup(hist, 1, 3), [1.0])


def test_history_eviction_error():
    hist = IterateHistory(capacity=2)
    for k in range(1, 6):
        hist.push(k, [float(k)])
    with pytest.raises(KeyError, match="history"):
        stale_lookup(hist, 5, 3)


def test_history_memory_bounded():
    hist = IterateHistory(capacity=3)
    for k in range(1, 10_001):
        hist.push(k, [float(k)])
    assert len(hist._slots) == 3
    assert_allclose(hist.lookup(10_000), [10_000.0])


def test_history_rejects_gaps():
    hist = IterateHistory(capacity=3)
    hist.push(1, [1.0])
    with pytest.raises(ValueError, match="consecutively"):
        hist.push(3, [3.0])
