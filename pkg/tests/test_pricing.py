import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clmm_ledger.core import OrderKey, tick_to_price
from clmm_ledger.pricing import PriceSeries, PriceUnavailableError, build_series, price_at

from conftest import mint, swap, unit_pool, weth_usdc


def test_consecutive_equal_ticks_collapse():
    s = build_series([swap(1, 0, 5), swap(2, 0, 7), swap(3, 0, 7)], unit_pool())
    assert len(s) == 2 and s.ticks == (5, 7)


def test_single_swap_at_tick_zero():
    s = build_series([swap(4, 2, 0)], unit_pool())
    assert s.keys == (OrderKey(4, 2),) and s.prices == (1.0,)


def test_non_swaps_are_ignored():
    assert len(build_series([mint(1, 1, 5, 1, 1)], unit_pool())) == 0


def test_random_swaps_price_each_tick_independently():
    rng = random.Random(11)
    cfg = weth_usdc()
    evs = [swap(b, 0, rng.randint(-210_000, -190_000)) for b in range(1000)]
    s = build_series(evs, cfg)
    for k, t, p in zip(s.keys, s.ticks, s.prices):
        assert p == tick_to_price(t, cfg)
    assert len(s) == 1 + sum(1 for a, b in zip(evs, evs[1:]) if a.tick_after != b.tick_after)


def series(points):
    return PriceSeries(tuple(OrderKey(*k) for k, _ in points), tuple(p for _, p in points))


def test_lookup_examples():
    s = series([((10, 1), 100.0), ((20, 1), 200.0)])
    assert price_at(s, (15, 0)) == 100.0   # between points: last before
    assert price_at(s, (5, 0)) == 100.0    # before the first point: first
    assert price_at(s, (20, 1)) == 200.0   # exact hit is inclusive
    assert price_at(s, (99, 9)) == 200.0


def test_empty_series_has_no_price():
    with pytest.raises(PriceUnavailableError):
        price_at(PriceSeries((), ()), (1, 1))


keys = st.tuples(st.integers(0, 30), st.integers(0, 5))


@given(st.lists(keys, min_size=1, max_size=30, unique=True), keys)
def test_lookup_matches_linear_scan(pts, q):
    pts = sorted(pts)
    s = series([(k, float(i)) for i, k in enumerate(pts)])
    before = [i for i, k in enumerate(pts) if k <= q]
    want = float(before[-1]) if before else 0.0
    assert price_at(s, q) == want


def test_dump_csv(tmp_path):
    import io
    buf = io.StringIO()
    build_series([swap(1, 0, 0)], unit_pool()).dump_csv(buf)
    assert buf.getvalue().splitlines() == ["block_number,log_index,tick,price", "1,0,0,1.0"]
