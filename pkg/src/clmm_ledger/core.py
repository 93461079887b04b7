"""Domain types shared across the pipeline and tick/price conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import NamedTuple, Optional

MIN_TICK = -887272
MAX_TICK = 887272
TICK_BASE = 1.0001
_LOG_TICK_BASE = math.log(TICK_BASE)


class DomainError(ValueError):
    """Input outside the domain of an operation."""


class EventKind(str, Enum):
    SWAP = "Swap"
    MINT = "Mint"
    BURN = "Burn"
    COLLECT = "Collect"

    @classmethod
    def parse(cls, value: str) -> "EventKind":
        v = value.strip().lower()
        for kind in cls:
            if kind.value.lower() == v:
                return kind
        raise ValueError(f"unknown event kind {value!r}")


class Numeraire(str, Enum):
    TOKEN0 = "token0"
    TOKEN1 = "token1"


class OrderKey(NamedTuple):
    block_number: int
    log_index: int


@dataclass(frozen=True, slots=True)
class PoolConfig:
    pool_id: str
    fee_tier: float
    token0_decimals: int
    token1_decimals: int
    protocol: str = ""
    invert_price: bool = False
    numeraire: Numeraire = Numeraire.TOKEN1

    def __post_init__(self) -> None:
        if not 0.0 < self.fee_tier < 1.0:
            raise DomainError(f"fee_tier must lie in (0, 1), got {self.fee_tier}")
        for name in ("token0_decimals", "token1_decimals"):
            d = getattr(self, name)
            if not isinstance(d, int) or not 0 <= d <= 36:
                raise DomainError(f"{name} must be an integer in [0, 36], got {d!r}")
        if not isinstance(self.numeraire, Numeraire):
            object.__setattr__(self, "numeraire", Numeraire(self.numeraire))
        # price must be quoted in numeraire per risky asset for W = y + x*P
        if self.invert_price != (self.numeraire is Numeraire.TOKEN0):
            raise DomainError(
                "price orientation must quote the numeraire: "
                "invert_price=True requires numeraire=token0 and vice versa"
            )

    @classmethod
    def from_dict(cls, d: dict) -> "PoolConfig":
        return cls(
            pool_id=str(d["pool_id"]),
            fee_tier=float(d["fee_tier"]),
            token0_decimals=int(d["token0_decimals"]),
            token1_decimals=int(d["token1_decimals"]),
            protocol=str(d.get("protocol", "")),
            invert_price=bool(d.get("invert_price", False)),
            numeraire=Numeraire(d.get("numeraire", "token1")),
        )

    def to_dict(self) -> dict:
        return {
            "pool_id": self.pool_id,
            "protocol": self.protocol,
            "fee_tier": self.fee_tier,
            "token0_decimals": self.token0_decimals,
            "token1_decimals": self.token1_decimals,
            "invert_price": self.invert_price,
            "numeraire": self.numeraire.value,
        }

    def to_human(self, amount0_raw, amount1_raw) -> tuple[float, float]:
        """Convert base-unit amounts (ints or Fractions) to ``(x, y)``: risky asset and numeraire."""
        a0 = float(Fraction(amount0_raw) / 10**self.token0_decimals)
        a1 = float(Fraction(amount1_raw) / 10**self.token1_decimals)
        if self.numeraire is Numeraire.TOKEN1:
            return a0, a1
        return a1, a0

    def capital(self, amount0_raw, amount1_raw, price: float) -> float:
        """Value of a token pair in numeraire at ``price``."""
        x, y = self.to_human(amount0_raw, amount1_raw)
        return y + x * price


@dataclass(frozen=True, slots=True)
class NormalizedEvent:
    kind: EventKind
    order_key: OrderKey
    timestamp: int
    tx_hash: str
    owner: Optional[str] = None
    tick_lower: Optional[int] = None
    tick_upper: Optional[int] = None
    liquidity: Optional[int] = None
    # base units; human values via PoolConfig.to_human
    amount0: int = 0
    amount1: int = 0
    tick_after: Optional[int] = None

    @property
    def range_key(self) -> tuple[int, int]:
        return (self.tick_lower, self.tick_upper)

    @property
    def is_liquidity_event(self) -> bool:
        return self.kind is not EventKind.SWAP


@dataclass(frozen=True, slots=True)
class LiquidityRange:
    tick_lower: int
    tick_upper: int
    price_lower: float
    price_upper: float

    @classmethod
    def from_ticks(cls, tick_lower: int, tick_upper: int, cfg: PoolConfig) -> "LiquidityRange":
        if tick_lower >= tick_upper:
            raise DomainError(f"tick_lower {tick_lower} must be below tick_upper {tick_upper}")
        p_lo = tick_to_price(tick_lower, cfg)
        p_hi = tick_to_price(tick_upper, cfg)
        # inverted orientation flips which tick bounds the range from below
        a, b = (p_lo, p_hi) if p_lo < p_hi else (p_hi, p_lo)
        return cls(tick_lower, tick_upper, a, b)

    @property
    def width(self) -> float:
        return self.price_upper - self.price_lower

    @property
    def width_ticks(self) -> int:
        return self.tick_upper - self.tick_lower


def _check_tick(tick: int) -> None:
    if not MIN_TICK <= tick <= MAX_TICK:
        raise DomainError(f"tick {tick} outside [{MIN_TICK}, {MAX_TICK}]")


def tick_to_price(tick: int, cfg: PoolConfig) -> float:
    """Human-readable price of ``tick`` in numeraire per risky asset."""
    _check_tick(tick)
    shift = cfg.token0_decimals - cfg.token1_decimals
    if cfg.invert_price:
        return math.pow(TICK_BASE, -tick) * 10.0 ** (-shift)
    return math.pow(TICK_BASE, tick) * 10.0**shift


def price_to_nearest_tick(price: float, cfg: PoolConfig) -> int:
    if not price > 0.0:
        raise DomainError(f"price must be positive, got {price}")
    shift = cfg.token0_decimals - cfg.token1_decimals
    if cfg.invert_price:
        log_raw = -(math.log(price) + shift * math.log(10.0))
    else:
        log_raw = math.log(price) - shift * math.log(10.0)
    tick = round(log_raw / _LOG_TICK_BASE)
    _check_tick(tick)
    return tick
