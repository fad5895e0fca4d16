import io
import json
import math

import numpy as np
import pytest

from growthlab.dynamics import (
    SimConfig,
    attempt_jump,
    height,
    init_packed,
    mc_speed,
    replica_rng,
    simulate,
    speed_observable,
    trajectory,
    write_jsonl,
)
from growthlab.lattice import GTPattern

PUSH_FIXTURE = GTPattern(((0,), (-1, 1), (-2, -1, 1), (-3, -2, 0, 1)))


def test_init_packed():
    assert init_packed(1).levels == ((-1,),)
    assert init_packed(3).levels == ((-1,), (-2, -1), (-3, -2, -1))
    with pytest.raises(ValueError):
        init_packed(0)


def test_blocked_jump_is_logged_as_zero():
    p, c = attempt_jump(PUSH_FIXTURE, 1, 3)
    assert c == 0 and p == PUSH_FIXTURE


def test_push_moves_the_whole_chain():
    p, c = attempt_jump(PUSH_FIXTURE, 2, 2)
    assert c == 3
    assert p.levels == ((0,), (-1, 2), (-2, -1, 2), (-3, -2, 0, 2))
    assert p.is_interlacing()


def test_free_particle_jumps():
    p, c = attempt_jump(init_packed(1), 1, 1)
    assert c == 1 and p.levels == ((0,),)


def test_attempt_jump_rejects_bad_label():
    with pytest.raises(IndexError):
        attempt_jump(PUSH_FIXTURE, 3, 2)


def test_only_chain_labels_change():
    p = PUSH_FIXTURE
    for m in range(1, p.N + 1):
        for k in range(1, m + 1):
            q, c = attempt_jump(p, k, m)
            changed = {(kk, mm) for mm in range(1, p.N + 1) for kk in range(1, mm + 1) if q[kk, mm] != p[kk, mm]}
            assert changed == {(k + i, m + i) for i in range(c)}
            assert all(q[kk, mm] == p[kk, mm] + 1 for kk, mm in changed)


def test_simulate_zero_time():
    p, log = simulate(SimConfig(N=4, t_end=0.0, seed=1))
    assert p == init_packed(4) and len(log) == 0


def test_simulate_is_reproducible_and_checked():
    cfg = SimConfig(N=6, t_end=3.0, seed=42)
    p1, log1 = simulate(cfg, check=True)
    p2, log2 = simulate(cfg)
    assert p1 == p2 and log1.events == log2.events
    times = [e[0] for e in log1]
    assert all(a < b for a, b in zip(times, times[1:]))
    assert all(0 <= c <= cfg.N - m + 1 for _, _, m, c in log1)


def test_replica_streams_differ():
    a = replica_rng(5, 0).random(4)
    b = replica_rng(5, 1).random(4)
    assert not np.allclose(a, b)
    assert np.array_equal(a, replica_rng(5, 0).random(4))


def test_single_particle_is_poisson():
    t, reps = 1.5, 20000
    vals = np.array([simulate(SimConfig(N=1, t_end=t, seed=11), replica=r)[0][1, 1] + 1 for r in range(reps)])
    se = vals.std(ddof=1) / math.sqrt(reps)
    assert abs(vals.mean() - t) < 4 * se
    assert abs(vals.var(ddof=1) - t) < 0.1


@pytest.mark.parametrize("bad", [dict(N=0, t_end=1.0), dict(N=2, t_end=-1.0), dict(N=2, t_end=1.0, replicas=0)])
def test_simconfig_validation(bad):
    with pytest.raises(ValueError):
        SimConfig(**bad)


def test_height_examples():
    p = init_packed(5)
    assert height(p, -2, 3) == 1
    assert all(height(p, x, n) == 0 for x in (-1, 0, 4) for n in range(1, 6))
    assert all(height(p, -n - 1, n) == n for n in range(1, 6))
    with pytest.raises(IndexError):
        height(p, 0, 6)


def test_height_gradients_along_trajectory():
    cfg = SimConfig(N=5, t_end=4.0, seed=9)
    for p in trajectory(cfg, [0.5, 1.0, 2.0, 4.0]):
        for n in range(1, 6):
            for x in range(-8, 8):
                assert height(p, x - 1, n) - height(p, x, n) in (0, 1)
                if n < 5:
                    # level n+1 holds one more particle, interlaced with level n
                    assert height(p, x, n + 1) - height(p, x, n) in (0, 1)


def test_trajectory_ends_at_simulate_state():
    cfg = SimConfig(N=4, t_end=2.5, seed=3)
    *_, last = trajectory(cfg, [1.0, 2.5])
    assert last == simulate(cfg)[0]
    with pytest.raises(ValueError):
        list(trajectory(cfg, [2.0, 1.0]))


def test_write_jsonl():
    buf = io.StringIO()
    write_jsonl([init_packed(2), PUSH_FIXTURE], buf)
    lines = buf.getvalue().splitlines()
    assert [GTPattern.from_json(s) for s in lines] == [init_packed(2), PUSH_FIXTURE]
    assert json.loads(lines[0]) == {"N": 2, "levels": [[-1], [-2, -1]]}


def test_speed_observable_packed():
    p = init_packed(4)
    for n in range(1, 5):
        assert speed_observable(p.occupied, -1, n) == n
        assert speed_observable(p.occupied, 0, n) == 0


def test_mc_speed_at_time_zero():
    for n in (1, 3, 5):
        mean, se = mc_speed(-1, n, 0.0, SimConfig(N=5, t_end=0.0, replicas=5))
        assert mean == n and se == 0.0
    mean, _ = mc_speed(0, 3, 0.0, SimConfig(N=3, t_end=0.0, replicas=3))
    assert mean == 0.0
    assert mc_speed(-1, 2, 0.0, SimConfig(N=2, t_end=0.0))[1] == math.inf
    with pytest.raises(IndexError):
        mc_speed(-1, 4, 0.0, SimConfig(N=3, t_end=0.0))
