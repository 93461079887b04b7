"""Reconstruct liquidity-provider PnL from concentrated-liquidity pool event logs."""

from .core import (
    DomainError,
    EventKind,
    LiquidityRange,
    NormalizedEvent,
    Numeraire,
    OrderKey,
    PoolConfig,
    price_to_nearest_tick,
    tick_to_price,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EventKind",
    "LiquidityRange",
    "NormalizedEvent",
    "Numeraire",
    "OrderKey",
    "PoolConfig",
    "price_to_nearest_tick",
    "tick_to_price",
    "__version__",
]
