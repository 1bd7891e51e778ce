import math

import numpy as np
import pytest
from scipy import stats

from extremal_linkage.coalescence import (
    SCAN_LIMIT, WalkerState, coalescence_time, coalescence_times, default_cap,
    limit_walker_trajectory, one_step_fitness, start_right, step_offset_moments,
    torus_scope_path, walker_step, write_trace_csv)
from extremal_linkage.fitness import FieldSpec, LOG_MU, scope
from extremal_linkage.layers import arrow
from extremal_linkage.seeds import derive_seed


def _reference_meeting(spec, cap):
    a, b = 0, start_right(spec)
    if a == b:
        return 0
    for h in range(cap):
        a, b = arrow(spec, a, h), arrow(spec, b, h)
        if a == b:
            return h + 1
    return None


@pytest.mark.parametrize("n,delta", [(2, 1.0), (16, 0.5), (64, 1.0), (100, 1.5), (50, 3.0)])
def test_coalescence_matches_step_by_step_arrows(n, delta):
    for k in range(20):
        spec = FieldSpec(derive_seed(n, k), delta, n)
        res = coalescence_time(spec)
        assert res.h_n == _reference_meeting(spec, res.cap)


def test_walker_step_follows_arrow():
    spec = FieldSpec(3, 1.0, 500)
    s = WalkerState.start(spec, 7)
    for _ in range(10):
        nxt = walker_step(spec, s)
        assert nxt.position == arrow(spec, s.position, s.layer)
        assert nxt.layer == s.layer + 1
        s = nxt


def test_single_node_torus_meets_immediately():
    res = coalescence_time(FieldSpec(1, 1.0, 1))
    assert res.h_n == 0 and res.start_right == 0


def test_censoring_is_reported():
    spec = FieldSpec(0, 3.0, 256)
    res = coalescence_time(spec, cap=1, start_b=128)
    assert res.censored and res.h_n is None
    h, cens = coalescence_times(3.0, 256, [derive_seed(0, k) for k in range(50)], cap=1)
    assert cens.any() and np.all(h[cens] == 1)


def test_vectorised_times_match_single_runs():
    seeds = [derive_seed(2, k) for k in range(30)]
    h, cens = coalescence_times(1.0, 1024, seeds)
    for s, hv, c in zip(seeds, h, cens):
        res = coalescence_time(FieldSpec(s, 1.0, 1024))
        assert not c and res.h_n == hv


def test_trace_records_both_walkers(tmp_path):
    spec = FieldSpec(9, 1.0, 300)
    res = coalescence_time(spec, trace=True)
    tr = res.trace
    assert tr.shape == (res.h_n + 1, 4)
    assert tr[0, 0] == 0 and tr[0, 1] == res.start_right
    assert tr[-1, 0] == tr[-1, 1] == res.meet_position
    p = tmp_path / "t.csv"
    write_trace_csv(p, res)
    lines = p.read_text().splitlines()
    assert lines[0] == "layer,pos_left,pos_right,fit_left,fit_right"
    assert len(lines) == res.h_n + 2


def test_start_is_uniform():
    n = 1000
    starts = [start_right(FieldSpec(derive_seed(1, k), 1.0, n)) for k in range(20000)]
    assert stats.kstest(np.array(starts) / n, "uniform").statistic < 0.015


@pytest.mark.parametrize("delta,n,want", [(1.0, 1024, int(16 * math.log(1024) / LOG_MU) + 64),
                                          (3.0, 32, 64 * 32 ** 2 + 64),
                                          (1.5, 64, int(64 * 64 ** 1.5) + 64)])
def test_default_cap(delta, n, want):
    assert default_cap(delta, n) == want


def test_cap_must_be_positive():
    with pytest.raises(ValueError):
        coalescence_time(FieldSpec(0, 1.0, 10), cap=0)


@pytest.mark.parametrize("f", [0.5, 1.5, 9.5, 40.0])
def test_step_offsets_uniform_on_scope(f):
    phi = scope(f)
    mean, var = step_offset_moments(f, 50000, seed=3)
    assert abs(mean) < 5 * math.sqrt((phi ** 2 - 1) / 12 / 50000)
    assert var == pytest.approx((phi ** 2 - 1) / 12, rel=0.05)


def test_one_step_fitness_law():
    # max of phi fitnesses with phi = scope(5) = 11: (11 F)**(1/delta) in law
    delta = 0.5
    x = one_step_fitness(5.0, delta, 20000, seed=1)
    cdf = lambda s: np.exp(-11 * np.power(s, -delta))
    assert stats.kstest(x, cdf).statistic < 0.015


def test_one_step_fitness_torus_agrees_with_limit_when_window_fits():
    a = one_step_fitness(5.0, 1.0, 5000, seed=2)
    b = one_step_fitness(5.0, 1.0, 5000, seed=2, n=1000)
    assert np.array_equal(a, b)


def test_torus_scope_path_caps_at_n():
    path = torus_scope_path(FieldSpec(5, 0.5, 200), 30)
    assert len(path) == 31 and path.max() <= 200 and path.min() >= 3


def test_limit_walker_scans_then_recurses():
    rec = limit_walker_trajectory(0.5, 4, 30)
    assert rec.scanned[0]
    assert not rec.scanned[-1]
    assert np.all(np.isfinite(rec.log_f))
    assert np.all(np.diff(rec.G[10:]) > 0)


def test_limit_walker_scanned_steps_match_walker_step():
    spec = FieldSpec(12, 1.0)
    rec = limit_walker_trajectory(1.0, 12, 40)
    s = WalkerState.start(spec, 0)
    for h in range(40):
        if not rec.scanned[h + 1]:
            break
        s = walker_step(spec, s)
        assert rec.position[h + 1] == s.position
        assert rec.log_f[h + 1] == pytest.approx(math.log(s.fitness), rel=1e-12)


def test_walker_step_refuses_huge_windows():
    spec = FieldSpec(0, 1.0)
    with pytest.raises(ValueError):
        walker_step(spec, WalkerState(0, float(SCAN_LIMIT) * 4, 0))


def test_recursion_matches_scanning_in_law():
    # force early recursion and compare the law of G at a fixed layer
    h = 12
    a = [limit_walker_trajectory(1.0, derive_seed(3, k), h).G[h] for k in range(1500)]
    b = [limit_walker_trajectory(1.0, derive_seed(4, k), h, scan_limit=1).G[h] for k in range(1500)]
    assert stats.ks_2samp(a, b).pvalue > 0.001


def test_trajectory_rejects_bad_h():
    with pytest.raises(ValueError):
        limit_walker_trajectory(1.0, 0, 0)
