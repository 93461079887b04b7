import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from clmm_ledger import kernels
from clmm_ledger.core import DomainError
from clmm_ledger.metrics import (
    SWAP_SYMMETRY, WinScoreInput, classify, position_metrics, width_bucket, win_score, win_score_detail,
)

from oracles import classify_by_inequalities, win_score_exact


def ws(times, pnls, t0, t1):
    return win_score(WinScoreInput(times, pnls, t0, t1))


# -- win-score ---------------------------------------------------------------------

def test_no_positions_is_neutral():
    assert ws([], [], 0, 10) == 0.5


def test_single_loss_hand_integrated():
    d = win_score_detail(WinScoreInput([1], [-5], 0, 2))
    assert (d.omega, d.s, d.a_plus, d.a_minus) == (0.0, 5.0, 0.0, 1.0)


def test_gain_then_loss_hand_integrated():
    d = win_score_detail(WinScoreInput([1, 2], [1, -1], 0, 3))
    assert (d.omega, d.s, d.a_plus, d.a_minus) == (1.0, 1.0, 1.0, 0.0)


def test_mixed_path_hand_integrated():
    # cum: 0 on [0,1), +2 on [1,3), -2 on [3,4]; A+ = 4/2, A- = 2/2
    d = win_score_detail(WinScoreInput([1, 3], [2, -4], 0, 4))
    assert (d.s, d.a_plus, d.a_minus) == (2.0, 2.0, 1.0)
    assert d.omega == 2.0 / 3.0


def test_equal_close_times_jump_together():
    # a transient +5 inside one instant must not set S
    assert win_score_detail(WinScoreInput([1, 1], [5, -6], 0, 2)).s == 1.0


def test_close_at_window_end_uses_terminal_sign():
    assert ws([5], [3.0], 0, 5) == 1.0
    assert ws([5], [-3.0], 0, 5) == 0.0
    assert ws([5, 5], [3.0, -3.0], 0, 5) == 0.5


def test_degenerate_window_is_flagged():
    d = win_score_detail(WinScoreInput([7], [1.0], 7, 7))
    assert d.degenerate_window and d.omega == 1.0


def test_rounding_level_cancellation_counts_as_flat():
    # 0.1 + 0.2 - 0.3 is not 0.0 in binary64, but it is zero in real arithmetic
    assert ws([1, 1, 1], [0.1, 0.2, -0.3], 0, 3) == 0.5


@pytest.mark.parametrize("bad", [
    dict(close_times=[1], pnls=[1, 2], t_start=0, t_end=3),
    dict(close_times=[2, 1], pnls=[1, 2], t_start=0, t_end=3),
    dict(close_times=[5], pnls=[1], t_start=0, t_end=3),
    dict(close_times=[], pnls=[], t_start=3, t_end=0),
])
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        WinScoreInput(**bad)


@st.composite
def pnl_paths(draw, values=st.integers(-1000, 1000), min_size=0):
    n = draw(st.integers(min_size, 25))
    gaps = draw(st.lists(st.integers(0, 50), min_size=n, max_size=n))
    t0 = draw(st.integers(0, 100))
    times, t = [], t0
    for g in gaps:
        t += g
        times.append(float(t))
    t_end = float(t + draw(st.integers(0, 50)))
    pnls = draw(st.lists(values, min_size=n, max_size=n))
    return times, [float(p) for p in pnls], float(t0), t_end


@given(pnl_paths())
def test_matches_exact_rational_integration(path):
    times, pnls, t0, t1 = path
    d = win_score_detail(WinScoreInput(times, pnls, t0, t1))
    omega, s, ap, an = win_score_exact(times, pnls, t0, t1)
    assert d.s == float(s)
    assert math.isclose(d.omega, float(omega), rel_tol=1e-12, abs_tol=1e-15)
    assert math.isclose(d.a_plus, float(ap), rel_tol=1e-12, abs_tol=1e-15)
    assert math.isclose(d.a_minus, float(an), rel_tol=1e-12, abs_tol=1e-15)


finite = st.floats(min_value=-1e9, max_value=1e9, allow_nan=False, allow_subnormal=False)


@given(pnl_paths(values=finite))
def test_omega_in_unit_interval(path):
    assert 0.0 <= ws(*path) <= 1.0


@given(pnl_paths(values=st.floats(min_value=0.0, max_value=1e9, allow_subnormal=False), min_size=1))
def test_nonnegative_pnls_score_one(path):
    times, pnls, t0, t1 = path
    assume(any(p > 0 for p in pnls))
    assert ws(*path) == 1.0


@given(pnl_paths(values=st.floats(min_value=-1e9, max_value=-1e-9), min_size=1))
def test_negative_pnls_score_zero(path):
    assert ws(*path) == 0.0


@given(pnl_paths(values=st.just(0.0)))
def test_flat_path_is_neutral(path):
    assert ws(*path) == 0.5


@given(pnl_paths(values=finite), st.floats(min_value=1e-3, max_value=1e3))
def test_scale_invariance(path, c):
    times, pnls, t0, t1 = path
    scaled = [c * p for p in pnls]
    assert math.isclose(ws(times, scaled, t0, t1), ws(*path), rel_tol=1e-12, abs_tol=1e-12)


# -- classification ------------------------------------------------------------------

@pytest.mark.parametrize("ps,pe,want", [(95, 105, 3), (105, 105, 13), (95, 120, 9), (100, 110, 5),
                                        (110, 100, 6), (105, 111, 7), (99, 99, 14), (120, 120, 15)])
def test_classify_examples(ps, pe, want):
    assert classify(ps, pe, 100, 110) == want


def test_type_nine_moves_across_whole_range():
    m = kernels.position_metrics(95.0, 120.0, 100.0, 110.0, 1.0, 1.0)
    assert m[2] == 1.0


@pytest.mark.parametrize("args", [(1, 1, 5, 5), (1, 1, 6, 5), (0, 1, 1, 2), (1, -1, 1, 2)])
def test_classify_domain(args):
    with pytest.raises(DomainError):
        classify(*args)


prices = st.floats(min_value=1.0, max_value=200.0)


@st.composite
def quads(draw):
    a = draw(prices)
    b = draw(prices.filter(lambda v: v > a)) if a < 200.0 else 201.0
    pick = st.one_of(prices, st.sampled_from([a, b]))
    return draw(pick), draw(pick), a, b


@given(quads())
def test_partition_and_symmetry(q):
    ps, pe, a, b = q
    hits = classify_by_inequalities(ps, pe, a, b)
    assert len(hits) == 1
    t = classify(ps, pe, a, b)
    assert t == hits[0]
    assert classify(pe, ps, a, b) == SWAP_SYMMETRY[t]
    delta = kernels.position_metrics(ps, pe, a, b, 1.0, 1.0)[2]
    if t == 9:
        assert delta == 1.0
    if t == 10:
        assert delta == -1.0
    if t in (1, 3, 5, 7, 9):
        assert delta >= 0.0
    if t in (2, 4, 6, 8, 10):
        assert delta <= 0.0


# -- position metrics -----------------------------------------------------------------

def test_metric_examples():
    m = dict(zip(kernels.METRIC_COLUMNS, kernels.position_metrics(95.0, 105.0, 100.0, 110.0, 4000.0, 4200.0)))
    assert math.isclose(m["m_a"], -0.05, rel_tol=1e-12)
    assert math.isclose(m["r_cap"], 0.05, rel_tol=1e-12)
    m = dict(zip(kernels.METRIC_COLUMNS, kernels.position_metrics(100.0, 110.0, 100.0, 110.0, 1.0, 1.0)))
    assert (m["delta_start"], m["delta_end"], m["delta"]) == (0.0, 1.0, 1.0)


def test_zero_capital_is_flagged():
    m = kernels.position_metrics(1.0, 1.0, 0.5, 2.0, 0.0, 1.0)
    assert math.isnan(m[-1])


@given(quads(), st.floats(min_value=1e-3, max_value=1e9), st.floats(min_value=0.0, max_value=1e9))
def test_metric_identities(q, w, cap):
    ps, pe, a, b = q
    m = dict(zip(kernels.METRIC_COLUMNS, kernels.position_metrics(ps, pe, a, b, w, cap)))
    assert 0.0 <= m["delta_start"] <= 1.0 and 0.0 <= m["delta_end"] <= 1.0
    assert m["delta"] == m["delta_end"] - m["delta_start"]
    assert m["m_a"] > m["m_b"] and m["d_a"] > m["d_b"]
    assert abs(m["rel_a"] - (m["d_a"] - m["m_a"])) <= 1e-12
    assert abs(m["rel_b"] - (m["d_b"] - m["m_b"])) <= 1e-12
    assert abs(m["r_price"] - (pe / ps - 1.0)) <= 1e-12
    assert abs(m["r_cap"] - (cap / w - 1.0)) <= 1e-12 * max(1.0, cap / w)


@pytest.mark.parametrize("width,bucket", [(9.99, "narrow"), (10, "medium"), (99.9, "medium"), (100, "wide"),
                                          (999, "wide"), (1000, "ultra"), (10000, "v2like"), (1e9, "v2like")])
def test_width_buckets(width, bucket):
    assert width_bucket(width) == bucket


@pytest.mark.parametrize("width", [0.0, -1.0])
def test_width_bucket_domain(width):
    with pytest.raises(DomainError):
        width_bucket(width)
