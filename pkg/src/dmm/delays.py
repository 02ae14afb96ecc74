"""Bounded delay sequences and the stale-iterate history they act on.

A schedule emits the staleness ``tau_k`` used at iteration ``k``; every value
satisfies ``0 <= tau_k <= tau_max``.  The effective delay applied downstream
is ``min(tau_k, k - 1)`` so that the referenced index never drops below one
(start-up clipping).  Random schedules draw from a seeded PCG64 generator and
materialize their stream in chunks, so ``tau_k`` is a pure function of
``(seed, k)`` and replays are bitwise identical.
"""

from __future__ import annotations

import numpy as np

__all__ = ["DelaySchedule", "IterateHistory", "next_delay", "stale_lookup"]

_CHUNK = 65536


class DelaySchedule:
    """Generator of bounded delays; create via the classmethod constructors
    or :meth:`parse`.

    A schedule instance holds stream state for its random variant and is
    meant to be confined to a single run; distinct runs use distinct
    instances.
    """

    def __init__(self, kind, tau_max, pattern=None, seed=None):
        self.kind = kind
        self.tau_max = int(tau_max)
        self.pattern = pattern
        self.seed = seed
        if self.tau_max < 0:
            raise ValueError("tau_max must be non-negative")
        if kind == "uniform_random":
            if seed is None:
                raise ValueError("uniform_random schedule requires a seed")
            self._rng = np.random.Generator(np.random.PCG64(seed))
            self._stream = np.empty(0, dtype=np.int64)

    @classmethod
    def zero(cls) -> "DelaySchedule":
        return cls("zero", 0)

    @classmethod
    def constant(cls, tau: int) -> "DelaySchedule":
        return cls("constant", tau)

    @classmethod
    def cyclic(cls, pattern) -> "DelaySchedule":
        pattern = tuple(int(t) for t in pattern)
        if not pattern:
            raise ValueError("cyclic pattern must be non-empty")
        if any(t < 0 for t in pattern):
            raise ValueError("delays must be non-negative")
        return cls("cyclic", max(pattern), pattern=pattern)

    @classmethod
    def uniform_random(cls, tau_max: int, seed: int) -> "DelaySchedule":
        return cls("uniform_random", tau_max, seed=int(seed))

    @classmethod
    def parse(cls, text: str, default_seed: int | None = None) -> "DelaySchedule":
        """Parse a schedule spec: ``zero``, ``const:3``, ``cycle:0,1,2``,
        ``rand:5:seed=42`` (or ``rand:5`` with ``default_seed``)."""
        parts = text.strip().split(":")
        kind = parts[0]
        try:
            if kind == "zero" and len(parts) == 1:
                return cls.zero()
            if kind == "const" and len(parts) == 2:
                return cls.constant(int(parts[1]))
            if kind == "cycle" and len(parts) == 2:
                return cls.cyclic(int(v) for v in parts[1].split(","))
            if kind == "rand" and len(parts) in (2, 3):
                tau_max = int(parts[1])
                if len(parts) == 3:
                    key, _, val = parts[2].partition("=")
                    if key != "seed":
                        raise ValueError
                    seed = int(val)
                else:
                    if default_seed is None:
                        raise ValueError(
                            f"schedule {text!r} needs an explicit or default seed")
                    seed = int(default_seed)
                return cls.uniform_random(tau_max, seed)
        except ValueError as exc:
            if exc.args and "seed" in str(exc):
                raise
        raise ValueError(f"cannot parse schedule spec {text!r}")

    def spec_string(self) -> str:
        if self.kind == "zero":
            return "zero"
        if self.kind == "constant":
            return f"const:{self.tau_max}"
        if self.kind == "cyclic":
            return "cycle:" + ",".join(str(t) for t in self.pattern)
        return f"rand:{self.tau_max}:seed={self.seed}"

    def _ensure_stream(self, n: int):
        if self._stream.shape[0] >= n:
            return
        # Always draw in fixed-size chunks: numpy's bounded-integer sampling
        # is not batch-split invariant, so a fixed chunking keeps the stream
        # identical for every access pattern (and across next_delay/sequence).
        chunks = [self._stream] if self._stream.size else []
        have = self._stream.shape[0]
        while have < n:
            chunks.append(self._rng.integers(0, self.tau_max + 1, size=_CHUNK,
                                             dtype=np.int64))
            have += _CHUNK
        self._stream = chunks[0] if len(chunks) == 1 else np.concatenate(chunks)

    def next_delay(self, k: int) -> int:
        """Delay tau_k at iteration ``k >= 1``."""
        if k < 1:
            raise ValueError("iteration index must be >= 1")
        if self.kind == "zero":
            return 0
        if self.kind == "constant":
            return self.tau_max
        if self.kind == "cyclic":
            return self.pattern[(k - 1) % len(self.pattern)]
        self._ensure_stream(k)
        return int(self._stream[k - 1])

    def sequence(self, T: int) -> np.ndarray:
        """Delays for k = 1..T as an int array (same values as next_delay)."""
        if T < 0:
            raise ValueError("T must be non-negative")
        if self.kind == "zero":
            return np.zeros(T, dtype=np.int64)
        if self.kind == "constant":
            return np.full(T, self.tau_max, dtype=np.int64)
        if self.kind == "cyclic":
            reps = -(-T // len(self.pattern))
            return np.tile(np.asarray(self.pattern, dtype=np.int64), reps)[:T]
        self._ensure_stream(T)
        return self._stream[:T].copy()

    def __repr__(self):
        return f"DelaySchedule({self.spec_string()!r})"


class IterateHistory:
    """Ring buffer of the last ``capacity`` iterates, indexed by iteration.

    Supports the stale lookup ``z_{k - min(tau, k-1)}``; looking up an index
    that has been evicted signals a schedule/capacity mismatch.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._idx = np.zeros(self.capacity, dtype=np.int64)
        self._slots: list = [None] * self.capacity
        self.latest = 0

    def push(self, index: int, z):
        if self.latest and index != self.latest + 1:
            raise ValueError(
                f"indices must be pushed consecutively (got {index} after {self.latest})")
        slot = index % self.capacity
        self._idx[slot] = index
        self._slots[slot] = np.array(z, dtype=float, copy=True)
        self.latest = index

    def lookup(self, index: int) -> np.ndarray:
        slot = index % self.capacity
        if index < 1 or self._slots[slot] is None or self._idx[slot] != index:
            raise KeyError(
                f"iterate {index} is not in the history (capacity {self.capacity}, "
                f"latest {self.latest}); delay exceeds the history window")
        return self._slots[slot]

    def stale(self, k: int, tau: int) -> np.ndarray:
        """Iterate at index ``k - min(tau, k - 1)``."""
        return self.lookup(k - min(tau, k - 1))


def next_delay(schedule: DelaySchedule, k: int) -> int:
    """Delay tau_k emitted by ``schedule`` at iteration ``k``."""
    return schedule.next_delay(k)


def stale_lookup(history: IterateHistory, k: int, tau: int) -> np.ndarray:
    """Stale iterate z_{k - min(tau, k-1)} from ``history``."""
    return history.stale(k, tau)
