"""Dynamic-balance reconstruction of closed LP positions.

Within one (owner, range), Mints open FIFO lots and matched Burn+Collect
records (``BurnPlus``) consume them. A removal larger than the liquidity
currently held is treated as referring to pre-sample liquidity and dropped
whole. When a removal spans several lots its realized capital is split in
proportion to the liquidity taken from each.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .core import EventKind, LiquidityRange, NormalizedEvent, OrderKey, PoolConfig
from .matching import BurnPlus, PositionKey
from .pricing import PriceSeries, PriceUnavailableError, price_at

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class CloseEvent:
    liquidity_used: int
    capital: float
    price: float
    order_key: OrderKey
    timestamp: int
    fee_capital: float


@dataclass(slots=True)
class OpenPosition:
    owner: str
    range: LiquidityRange
    liquidity_initial: int
    liquidity_remaining: int
    p_start: float
    w: float
    x: float
    y: float
    open_key: OrderKey
    open_timestamp: int
    close_events: list[CloseEvent] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class ClosedPosition:
    owner: str
    range: LiquidityRange
    liquidity: int
    p_start: float
    w: float
    x: float
    y: float
    open_key: OrderKey
    open_timestamp: int
    close_events: tuple[CloseEvent, ...]
    q: float
    pnl: float
    p_end: float
    close_key: OrderKey
    close_timestamp: int
    duration: int
    pool_id: str = ""

    @property
    def tick_lower(self) -> int:
        return self.range.tick_lower

    @property
    def tick_upper(self) -> int:
        return self.range.tick_upper

    @property
    def a(self) -> float:
        return self.range.price_lower

    @property
    def b(self) -> float:
        return self.range.price_upper

    @property
    def tx_count(self) -> int:
        """Ledger events attributed to this position: its Mint plus each removal slice."""
        return 1 + len(self.close_events)

    @property
    def fee_capital(self) -> float:
        return sum(c.fee_capital for c in self.close_events)


@dataclass
class RangeResult:
    closed: list[ClosedPosition] = field(default_factory=list)
    residual_open: list[OpenPosition] = field(default_factory=list)
    dropped_burn_liquidity: int = 0
    dropped_burns: int = 0
    minted_liquidity: int = 0
    consumed_liquidity: int = 0
    skipped_unpriced: int = 0
    used_mints: int = 0
    used_burns: int = 0

    def merge(self, other: "RangeResult") -> None:
        self.closed.extend(other.closed)
        self.residual_open.extend(other.residual_open)
        for name in ("dropped_burn_liquidity", "dropped_burns", "minted_liquidity",
                     "consumed_liquidity", "skipped_unpriced", "used_mints", "used_burns"):
            setattr(self, name, getattr(self, name) + getattr(other, name))


def closing_price(events: Sequence[CloseEvent]) -> float:
    """Capital-weighted mean price of the removal slices."""
    prices = {c.price for c in events}
    if len(prices) == 1:
        # exact, so unchanged-price positions compare equal to their entry price
        return events[0].price
    q = sum(c.capital for c in events)
    if q > 0.0:
        return sum(c.capital * c.price for c in events) / q
    return events[-1].price


def _close(pos: OpenPosition, pool_id: str) -> ClosedPosition:
    ev = pos.close_events
    q = 0.0
    for c in ev:
        q += c.capital
    last = ev[-1]
    return ClosedPosition(
        owner=pos.owner, range=pos.range, liquidity=pos.liquidity_initial,
        p_start=pos.p_start, w=pos.w, x=pos.x, y=pos.y,
        open_key=pos.open_key, open_timestamp=pos.open_timestamp,
        close_events=tuple(ev), q=q, pnl=q - pos.w, p_end=closing_price(ev),
        close_key=last.order_key, close_timestamp=last.timestamp,
        duration=last.timestamp - pos.open_timestamp, pool_id=pool_id,
    )


def reconstruct_range(
    mints: Iterable[NormalizedEvent],
    burns: Iterable[BurnPlus],
    series: Optional[PriceSeries],
    cfg: PoolConfig,
) -> RangeResult:
    """Sweep one (owner, range) stream of Mints and BurnPlus records."""
    merged: list[tuple[OrderKey, int, object]] = []
    for m in mints:
        if m.kind is not EventKind.MINT:
            raise ValueError(f"expected Mint, got {m.kind}")
        merged.append((m.order_key, 0, m))
    for bp in burns:
        merged.append((bp.order_key, 1, bp))
    merged.sort(key=lambda t: (t[0], t[1]))

    res = RangeResult()
    queue: deque[OpenPosition] = deque()
    held = 0
    rng: Optional[LiquidityRange] = None
    for key, tag, item in merged:
        if rng is None:
            rng = LiquidityRange.from_ticks(item.tick_lower, item.tick_upper, cfg)
        if tag == 0:
            m: NormalizedEvent = item
            if not m.liquidity:
                continue
            try:
                price = price_at(series, key) if series is not None else None
            except PriceUnavailableError:
                price = None
            if price is None:
                res.skipped_unpriced += 1
                log.warning("no price for mint of %s range %s at %s", m.owner, m.range_key, key)
                continue
            x, y = cfg.to_human(m.amount0, m.amount1)
            queue.append(OpenPosition(
                owner=m.owner, range=rng, liquidity_initial=m.liquidity, liquidity_remaining=m.liquidity,
                p_start=price, w=y + x * price, x=x, y=y,
                open_key=OrderKey(*key), open_timestamp=m.timestamp,
            ))
            held += m.liquidity
            res.minted_liquidity += m.liquidity
            res.used_mints += 1
            continue

        bp: BurnPlus = item
        if bp.price is None:
            res.skipped_unpriced += 1
            log.warning("no price for burn of %s range %s at %s", bp.owner, (bp.tick_lower, bp.tick_upper), key)
            continue
        ell = bp.liquidity
        if ell > held:
            res.dropped_burns += 1
            res.dropped_burn_liquidity += ell
            continue
        capital = cfg.capital(bp.paid0, bp.paid1, bp.price)
        fee_capital = cfg.capital(bp.fee0, bp.fee1, bp.price)
        left = ell
        while left:
            pos = queue[0]
            used = min(left, pos.liquidity_remaining)
            share = used / ell
            pos.close_events.append(CloseEvent(
                liquidity_used=used, capital=capital * share, price=bp.price,
                order_key=OrderKey(*key), timestamp=bp.timestamp, fee_capital=fee_capital * share,
            ))
            pos.liquidity_remaining -= used
            left -= used
            if pos.liquidity_remaining == 0:
                res.closed.append(_close(queue.popleft(), cfg.pool_id))
        held -= ell
        res.consumed_liquidity += ell
        res.used_burns += 1
    res.residual_open.extend(queue)
    return res


def reconstruct_owner_ranges(
    mints_by_key: dict[PositionKey, list[NormalizedEvent]],
    burns_by_key: dict[PositionKey, list[BurnPlus]],
    series: Optional[PriceSeries],
    cfg: PoolConfig,
    keys: Optional[Iterable[PositionKey]] = None,
) -> RangeResult:
    total = RangeResult()
    if keys is None:
        keys = sorted(set(mints_by_key) | set(burns_by_key))
    for k in keys:
        total.merge(reconstruct_range(mints_by_key.get(k, ()), burns_by_key.get(k, ()), series, cfg))
    return total


def lp_pnl(positions: Iterable[ClosedPosition]) -> float:
    """Total PnL of one LP: summed range by range, positions in close order."""
    ordered = sorted(positions, key=lambda p: (p.tick_lower, p.tick_upper, p.close_key, p.open_key))
    total = 0.0
    for p in ordered:
        total += p.pnl
    return total


def check_liquidity_conservation(res: RangeResult) -> None:
    """Exact big-integer bookkeeping identities of one reconstruction."""
    closed_l = sum(p.liquidity for p in res.closed)
    open_initial = sum(p.liquidity_initial for p in res.residual_open)
    open_remaining = sum(p.liquidity_remaining for p in res.residual_open)
    used = sum(c.liquidity_used for p in res.closed for c in p.close_events)
    used += sum(c.liquidity_used for p in res.residual_open for c in p.close_events)
    if res.minted_liquidity != closed_l + open_initial:
        raise AssertionError("minted liquidity != closed + residual initial")
    if res.consumed_liquidity != used:
        raise AssertionError("consumed burn liquidity != liquidity used by slices")
    if res.minted_liquidity != used + open_remaining:
        raise AssertionError("minted liquidity != used + residual remaining")
    for p in res.closed:
        if sum(c.liquidity_used for c in p.close_events) != p.liquidity:
            raise AssertionError(f"closed position at {p.open_key} not exactly exhausted")
