import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clmm_ledger.core import (
    MAX_TICK, MIN_TICK, DomainError, EventKind, LiquidityRange, Numeraire, PoolConfig,
    price_to_nearest_tick, tick_to_price,
)

from conftest import unit_pool, weth_usdc

ticks = st.integers(min_value=-400_000, max_value=400_000)


def test_tick_zero_is_one():
    assert tick_to_price(0, unit_pool()) == 1.0


def test_tick_ten_matches_extended_precision():
    mpmath.mp.dps = 50
    want = mpmath.mpf("1.0001") ** 10
    got = tick_to_price(10, unit_pool())
    assert abs(mpmath.mpf(got) / want - 1) < mpmath.mpf("1e-12")
    assert str(got).startswith("1.00100045")


@given(ticks)
def test_matches_extended_precision_everywhere(t):
    mpmath.mp.dps = 40
    want = mpmath.power(mpmath.mpf("1.0001"), t)
    assert abs(mpmath.mpf(tick_to_price(t, unit_pool())) / want - 1) < mpmath.mpf("1e-9")


@given(ticks)
def test_inverted_orientation_is_mirror_tick(t):
    plain = unit_pool()
    inverted = unit_pool(invert_price=True, numeraire=Numeraire.TOKEN0)
    assert tick_to_price(t, inverted) == tick_to_price(-t, plain)


@given(ticks)
def test_adjacent_ticks_differ_by_one_basis_point(t):
    cfg = unit_pool()
    assert math.isclose(tick_to_price(t + 1, cfg) / tick_to_price(t, cfg), 1.0001, rel_tol=1e-12)


@given(ticks)
def test_nearest_tick_round_trip(t):
    for cfg in (unit_pool(), weth_usdc(), weth_usdc(invert_price=True, numeraire="token0")):
        assert price_to_nearest_tick(tick_to_price(t, cfg), cfg) == t


def test_decimal_shift_for_weth_usdc():
    # 1 WETH = 1e18 base units, 1 USDC = 1e6: raw price 1 means 1e12 USDC per WETH
    assert tick_to_price(0, weth_usdc()) == 1e12
    # about 2000 USDC per WETH near tick -200311
    assert 1990 < tick_to_price(-200311, weth_usdc()) < 2010


@pytest.mark.parametrize("tick", [MIN_TICK - 1, MAX_TICK + 1])
def test_out_of_range_tick_rejected(tick):
    with pytest.raises(DomainError):
        tick_to_price(tick, unit_pool())


def test_bad_price_rejected():
    with pytest.raises(DomainError):
        price_to_nearest_tick(0.0, unit_pool())


def test_orientation_must_quote_numeraire():
    with pytest.raises(DomainError):
        unit_pool(invert_price=True)
    with pytest.raises(DomainError):
        unit_pool(numeraire=Numeraire.TOKEN0)


@pytest.mark.parametrize("field,value", [("fee_tier", 0.0), ("fee_tier", 1.0), ("token0_decimals", -1),
                                          ("token1_decimals", 40)])
def test_pool_config_validation(field, value):
    with pytest.raises(DomainError):
        unit_pool(**{field: value})


def test_pool_config_dict_round_trip():
    cfg = weth_usdc(invert_price=True, numeraire=Numeraire.TOKEN0)
    assert PoolConfig.from_dict(cfg.to_dict()) == cfg


def test_to_human_orders_risky_then_numeraire():
    assert weth_usdc().to_human(2 * 10**18, 3 * 10**6) == (2.0, 3.0)
    inverted = weth_usdc(token0_decimals=6, token1_decimals=18, invert_price=True, numeraire="token0")
    assert inverted.to_human(3 * 10**6, 2 * 10**18) == (2.0, 3.0)


def test_to_human_accepts_fractions():
    from fractions import Fraction
    assert weth_usdc().to_human(Fraction(1, 2), 0) == (0.5e-18, 0.0)


def test_range_bounds_sorted_for_inverted_pool():
    cfg = weth_usdc(token0_decimals=6, token1_decimals=18, invert_price=True, numeraire="token0")
    rng = LiquidityRange.from_ticks(190_000, 200_000, cfg)
    assert rng.price_lower < rng.price_upper
    assert rng.price_lower == tick_to_price(200_000, cfg)
    assert rng.width_ticks == 10_000


def test_empty_range_rejected():
    with pytest.raises(DomainError):
        LiquidityRange.from_ticks(10, 10, unit_pool())


def test_event_kind_parse_is_case_insensitive():
    assert EventKind.parse(" mint ") is EventKind.MINT
    with pytest.raises(ValueError):
        EventKind.parse("flash")
