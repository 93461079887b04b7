"""Pool price series built from swaps, with point-in-time lookup."""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .core import EventKind, NormalizedEvent, OrderKey, PoolConfig, tick_to_price


class PriceUnavailableError(LookupError):
    pass


@dataclass(frozen=True)
class PriceSeries:
    keys: tuple[OrderKey, ...]
    prices: tuple[float, ...]
    ticks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.keys) != len(self.prices):
            raise ValueError("keys and prices differ in length")

    def __len__(self) -> int:
        return len(self.keys)

    def price_at(self, key: OrderKey) -> float:
        return price_at(self, key)

    def dump_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block_number", "log_index", "tick", "price"])
        ticks = self.ticks or (None,) * len(self.keys)
        for k, t, p in zip(self.keys, ticks, self.prices):
            w.writerow([k.block_number, k.log_index, "" if t is None else t, repr(p)])


def build_series(events: Iterable[NormalizedEvent], cfg: PoolConfig) -> PriceSeries:
    """One point per swap (ordered), collapsing consecutive repeats of a tick."""
    swaps = sorted((e for e in events if e.kind is EventKind.SWAP), key=lambda e: e.order_key)
    keys: list[OrderKey] = []
    ticks: list[int] = []
    prices: list[float] = []
    for ev in swaps:
        if ticks and ev.tick_after == ticks[-1]:
            continue
        if keys and ev.order_key == keys[-1]:
            # same key reported twice; keep the later row
            ticks[-1] = ev.tick_after
            prices[-1] = tick_to_price(ev.tick_after, cfg)
            continue
        keys.append(OrderKey(*ev.order_key))
        ticks.append(ev.tick_after)
        prices.append(tick_to_price(ev.tick_after, cfg))
    return PriceSeries(tuple(keys), tuple(prices), tuple(ticks))


def price_at(series: PriceSeries, key: Sequence[int]) -> float:
    """Price of the last swap at or before ``key``, else the first swap after it."""
    if not series.keys:
        raise PriceUnavailableError("price series is empty")
    i = bisect.bisect_right(series.keys, tuple(key))
    return series.prices[i - 1] if i > 0 else series.prices[0]
