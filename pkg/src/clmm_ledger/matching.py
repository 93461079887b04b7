"""Fuse Burn and Collect events into ``BurnPlus`` records.

Collects carry no liquidity, so they are bound to the Burns of the same
(owner, range) that precede them. A Collect first repays principal to its
pending Burns (a Burn from the same transaction is served first, then the
rest in FIFO order); any excess in a token is fee, split across the pending
Burns in proportion to their principal in that token.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Optional, Sequence, Union

from .core import EventKind, NormalizedEvent, OrderKey
from .pricing import PriceSeries, PriceUnavailableError, price_at

PositionKey = tuple[str, int, int]


@dataclass(slots=True)
class BurnPlus:
    owner: str
    tick_lower: int
    tick_upper: int
    order_key: OrderKey
    timestamp: int
    tx_hash: str
    liquidity: int
    principal0: int
    principal1: int
    # rational when a fee excess was split across several Burns
    paid0: Union[int, Fraction]
    paid1: Union[int, Fraction]
    collect_key: OrderKey
    price: Optional[float] = None

    @property
    def fee0(self) -> Union[int, Fraction]:
        return max(self.paid0 - self.principal0, 0)

    @property
    def fee1(self) -> Union[int, Fraction]:
        return max(self.paid1 - self.principal1, 0)

    @property
    def key(self) -> PositionKey:
        return (self.owner, self.tick_lower, self.tick_upper)


@dataclass
class MatchDiagnostics:
    unmatched_burn_count: int = 0
    orphan_collect_count: int = 0
    underpaid_burn_count: int = 0
    zero_liquidity_burn_count: int = 0
    # (owner, tick_lower, tick_upper) -> [orphan amount0, orphan amount1]
    residual_payout: dict[PositionKey, list[int]] = field(default_factory=dict)
    unmatched_burns: list[tuple[PositionKey, OrderKey]] = field(default_factory=list)

    def merge(self, other: "MatchDiagnostics") -> None:
        self.unmatched_burn_count += other.unmatched_burn_count
        self.orphan_collect_count += other.orphan_collect_count
        self.underpaid_burn_count += other.underpaid_burn_count
        self.zero_liquidity_burn_count += other.zero_liquidity_burn_count
        for k, (r0, r1) in other.residual_payout.items():
            cur = self.residual_payout.setdefault(k, [0, 0])
            cur[0] += r0
            cur[1] += r1
        self.unmatched_burns.extend(other.unmatched_burns)

    def summary(self) -> dict:
        return {
            "unmatched_burn_count": self.unmatched_burn_count,
            "orphan_collect_count": self.orphan_collect_count,
            "underpaid_burn_count": self.underpaid_burn_count,
            "zero_liquidity_burn_count": self.zero_liquidity_burn_count,
            "residual_payout_total0": sum(v[0] for v in self.residual_payout.values()),
            "residual_payout_total1": sum(v[1] for v in self.residual_payout.values()),
        }


def apportion(total: int, weights: Sequence[int]) -> list[Union[int, Fraction]]:
    """Split ``total`` base units pro rata to ``weights``; all-zero weights split equally.

    Shares are exact rationals (plain ints when the split is whole), so they
    always sum to ``total`` with no rounding residue.
    """
    n = len(weights)
    if n == 0:
        return []
    wsum = sum(weights)
    if wsum == 0:
        weights, wsum = [1] * n, n
    out: list[Union[int, Fraction]] = []
    for w in weights:
        share = Fraction(total * w, wsum)
        out.append(int(share) if share.denominator == 1 else share)
    return out


@dataclass(slots=True)
class _Pending:
    ev: NormalizedEvent
    seq: int


def match_burn_collect(
    events: Iterable[NormalizedEvent],
    series: Optional[PriceSeries] = None,
) -> tuple[list[BurnPlus], MatchDiagnostics]:
    """Match Burns and Collects of a single (owner, range) stream."""
    stream = sorted(
        (e for e in events if e.kind in (EventKind.BURN, EventKind.COLLECT)),
        key=lambda e: e.order_key,
    )
    diag = MatchDiagnostics()
    out: list[BurnPlus] = []
    pending: list[_Pending] = []
    key: Optional[PositionKey] = None
    for seq, ev in enumerate(stream):
        ek = (ev.owner, ev.tick_lower, ev.tick_upper)
        if key is None:
            key = ek
        elif ek != key:
            raise ValueError(f"mixed position keys in one stream: {key} vs {ek}")
        if ev.kind is EventKind.BURN:
            if not ev.liquidity:
                diag.zero_liquidity_burn_count += 1
                continue
            pending.append(_Pending(ev, seq))
            continue
        if not pending:
            diag.orphan_collect_count += 1
            res = diag.residual_payout.setdefault(ek, [0, 0])
            res[0] += ev.amount0
            res[1] += ev.amount1
            continue
        own = [p for p in pending if p.ev.tx_hash == ev.tx_hash]
        rest = [p for p in pending if p.ev.tx_hash != ev.tx_hash]
        order = own + rest
        paid = {p.seq: [0, 0] for p in order}
        for t, amount in ((0, ev.amount0), (1, ev.amount1)):
            avail = amount
            for p in order:
                principal = p.ev.amount0 if t == 0 else p.ev.amount1
                pay = min(avail, principal)
                paid[p.seq][t] = pay
                avail -= pay
            if avail:
                weights = [p.ev.amount0 if t == 0 else p.ev.amount1 for p in order]
                for p, fee in zip(order, apportion(avail, weights)):
                    paid[p.seq][t] += fee
        for p in pending:
            b = p.ev
            p0, p1 = paid[p.seq]
            if p0 < b.amount0 or p1 < b.amount1:
                diag.underpaid_burn_count += 1
            price = None
            if series is not None and len(series):
                try:
                    price = price_at(series, b.order_key)
                except PriceUnavailableError:
                    price = None
            out.append(BurnPlus(
                owner=b.owner, tick_lower=b.tick_lower, tick_upper=b.tick_upper,
                order_key=OrderKey(*b.order_key), timestamp=b.timestamp, tx_hash=b.tx_hash,
                liquidity=b.liquidity, principal0=b.amount0, principal1=b.amount1,
                paid0=p0, paid1=p1, collect_key=OrderKey(*ev.order_key), price=price,
            ))
        pending = []
    for p in pending:
        diag.unmatched_burn_count += 1
        diag.unmatched_burns.append((key, OrderKey(*p.ev.order_key)))
    out.sort(key=lambda bp: bp.order_key)
    return out, diag


def group_by_position(events: Iterable[NormalizedEvent]) -> dict[PositionKey, list[NormalizedEvent]]:
    groups: dict[PositionKey, list[NormalizedEvent]] = defaultdict(list)
    for ev in events:
        if ev.kind is not EventKind.SWAP:
            groups[(ev.owner, ev.tick_lower, ev.tick_upper)].append(ev)
    return dict(groups)


def match_all(
    events: Iterable[NormalizedEvent], series: Optional[PriceSeries] = None
) -> tuple[dict[PositionKey, list[BurnPlus]], MatchDiagnostics]:
    diag = MatchDiagnostics()
    result: dict[PositionKey, list[BurnPlus]] = {}
    for key in sorted(groups := group_by_position(events)):
        bps, d = match_burn_collect(groups[key], series)
        result[key] = bps
        diag.merge(d)
    return result, diag


def dump_jsonl(burns: Iterable[BurnPlus], fh: IO[str]) -> None:
    for bp in burns:
        row = asdict(bp)
        row["fee0"], row["fee1"] = bp.fee0, bp.fee1
        # big integers and rationals survive as strings in JSON consumers
        for k in ("liquidity", "principal0", "principal1", "paid0", "paid1", "fee0", "fee1"):
            row[k] = str(row[k])
        fh.write(json.dumps(row, sort_keys=True) + "\n")
