"""Shared builders for hand-written event fixtures."""

from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from clmm_ledger.core import EventKind, NormalizedEvent, OrderKey, PoolConfig

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=500, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

WETH = 10**18
USDC = 10**6


def weth_usdc(**kw) -> PoolConfig:
    """WETH (token0, 18 decimals) priced in USDC (token1, 6 decimals)."""
    base = dict(pool_id="weth-usdc", fee_tier=0.0005, token0_decimals=18, token1_decimals=6, protocol="uniswap")
    base.update(kw)
    return PoolConfig(**base)


def unit_pool(**kw) -> PoolConfig:
    base = dict(pool_id="unit", fee_tier=0.003, token0_decimals=0, token1_decimals=0)
    base.update(kw)
    return PoolConfig(**base)


def swap(block, log, tick, ts=None, tx=None) -> NormalizedEvent:
    return NormalizedEvent(EventKind.SWAP, OrderKey(block, log), block if ts is None else ts,
                           tx or f"0xs{block}_{log}", tick_after=tick)


def mint(block, log, liquidity, a0, a1, owner="0xlp", tl=-100, tu=100, ts=None, tx=None) -> NormalizedEvent:
    return NormalizedEvent(EventKind.MINT, OrderKey(block, log), block if ts is None else ts,
                           tx or f"0xm{block}_{log}", owner, tl, tu, liquidity, a0, a1)


def burn(block, log, liquidity, a0, a1, owner="0xlp", tl=-100, tu=100, ts=None, tx=None) -> NormalizedEvent:
    return NormalizedEvent(EventKind.BURN, OrderKey(block, log), block if ts is None else ts,
                           tx or f"0xb{block}_{log}", owner, tl, tu, liquidity, a0, a1)


def collect(block, log, a0, a1, owner="0xlp", tl=-100, tu=100, ts=None, tx=None) -> NormalizedEvent:
    return NormalizedEvent(EventKind.COLLECT, OrderKey(block, log), block if ts is None else ts,
                           tx or f"0xc{block}_{log}", owner, tl, tu, None, a0, a1)


@pytest.fixture
def usd_pool() -> PoolConfig:
    return weth_usdc()


# criterion number -> (status, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
