"""Continuous-time blocking/pushing dynamics on interlacing patterns.

Every particle carries a rate-one clock. The chain is sampled by
uniformization: waiting times are exponential with the total rate
``N(N+1)/2`` and the ringing label is uniform, which is distributionally the
same as independent clocks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import GTPattern, interlacing_violation


@dataclass(frozen=True)
class SimConfig:
    N: int
    t_end: float
    seed: int = 0
    replicas: int = 1

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")


@dataclass
class EventLog:
    """``(time, k, m, chain_length)`` per clock ring; chain_length 0 is a blocked attempt."""

    events: list = field(default_factory=list)

    def append(self, time, k, m, chain):
        self.events.append((time, k, m, chain))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


def init_packed(N: int) -> GTPattern:
    return GTPattern.packed(N)


def _jump(levels: list[list[int]], k: int, m: int) -> int:
    """Apply one ring of clock (k, m) in place; returns the number of particles moved."""
    N = len(levels)
    pos = levels[m - 1][k - 1]
    if k <= m - 1 and pos == levels[m - 2][k - 1] - 1:
        return 0
    c = 1
    while m + c <= N and levels[m + c - 1][k + c - 1] == pos:
        c += 1
    for i in range(c):
        levels[m + i - 1][k + i - 1] += 1
    return c


def attempt_jump(p: GTPattern, k: int, m: int) -> tuple[GTPattern, int]:
    """Ring the clock of particle (k, m); returns the new pattern and the push-chain length."""
    if not (1 <= m <= p.N and 1 <= k <= m):
        raise IndexError(f"no particle ({k}, {m}) in a depth-{p.N} pattern")
    levels = [list(r) for r in p.levels]
    c = _jump(levels, k, m)
    if c == 0:
        return p, 0
    return GTPattern(tuple(tuple(r) for r in levels)), c


def _labels(N):
    return [(k, m) for m in range(1, N + 1) for k in range(1, m + 1)]


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Independent stream for one replica, derived by hashing (seed, replica)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), replica])))


def _run(levels, rng, t_end, log=None, check=False):
    N = len(levels)
    labels = _labels(N)
    rate = len(labels)
    t = 0.0
    while True:
        t += rng.exponential(1.0 / rate)
        if t > t_end:
            return
        k, m = labels[rng.integers(rate)]
        c = _jump(levels, k, m)
        if log is not None:
            log.append(t, k, m, c)
        if check and c and interlacing_violation(levels) is not None:
            raise AssertionError(f"interlacing broken at t={t} after ring ({k}, {m})")


def simulate(cfg: SimConfig, replica: int = 0, check: bool = False) -> tuple[GTPattern, EventLog]:
    """Sample the pattern at ``cfg.t_end`` from the packed start, with its event log."""
    levels = [list(r) for r in init_packed(cfg.N).levels]
    log = EventLog()
    _run(levels, replica_rng(cfg.seed, replica), cfg.t_end, log, check)
    return GTPattern(tuple(tuple(r) for r in levels)), log


def trajectory(cfg: SimConfig, times, replica: int = 0):
    """Patterns at the increasing ``times`` along one sample path."""
    times = list(times)
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise ValueError("snapshot times must be nonnegative and increasing")
    levels = [list(r) for r in init_packed(cfg.N).levels]
    rng = replica_rng(cfg.seed, replica)
    labels = _labels(cfg.N)
    rate = len(labels)
    t = rng.exponential(1.0 / rate)
    for ts in times:
        while t <= ts:
            k, m = labels[rng.integers(rate)]
            _jump(levels, k, m)
            t += rng.exponential(1.0 / rate)
        yield GTPattern(tuple(tuple(r) for r in levels))


def write_jsonl(patterns, fh):
    for p in patterns:
        fh.write(json.dumps({"N": p.N, "levels": [list(r) for r in p.levels]}) + "\n")


def height(p: GTPattern, x: int, n: int) -> int:
    """Number of level-n particles strictly to the right of x."""
    if not 1 <= n <= p.N:
        raise IndexError(f"level {n} outside 1..{p.N}")
    return sum(1 for y in p.levels[n - 1] if y > x)


def speed_observable(occupied, x: int, n: int) -> int:
    """Rate at which the particle at (x, n) moves right, given the occupation function.

    It either jumps itself (needs (x+1, n-1) empty) or is pushed by a column
    of particles below it; a column reaching level 1 is never blocked.
    """
    total = 0
    column = True
    for ell in range(1, n + 1):
        column = column and occupied(x, n - ell + 1)
        if not column:
            break
        if ell == n:
            total += 1
        elif not occupied(x + 1, n - ell):
            total += 1
    return total


def mc_speed(x: int, n: int, t: float, cfg: SimConfig) -> tuple[float, float]:
    """Mean and standard error of the speed observable over ``cfg.replicas`` samples at time t."""
    if not 1 <= n <= cfg.N:
        raise IndexError(f"level {n} outside 1..{cfg.N}")
    # Levels above n never influence levels <= n.
    N = n
    values = np.empty(cfg.replicas)
    for r in range(cfg.replicas):
        levels = [list(row) for row in init_packed(N).levels]
        _run(levels, replica_rng(cfg.seed, r), t)
        sets = [set(row) for row in levels]

        def occ(xx, nn):
            return 1 <= nn <= N and xx in sets[nn - 1]

        values[r] = speed_observable(occ, x, n)
    mean = float(values.mean())
    if cfg.replicas == 1:
        return mean, math.inf
    return mean, float(values.std(ddof=1) / math.sqrt(cfg.replicas))
