"""Win-score, position-type classification and range-relative position metrics."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .core import DomainError
from .ledger import ClosedPosition

log = logging.getLogger(__name__)

WIDTH_BUCKETS = ("narrow", "medium", "wide", "ultra", "v2like")
_BUCKET_EDGES = (10.0, 100.0, 1000.0, 10000.0)

# same-region pairs under a start/end swap; 13-15 are fixed points
SWAP_SYMMETRY = {1: 2, 2: 1, 3: 4, 4: 3, 5: 6, 6: 5, 7: 8, 8: 7, 9: 10, 10: 9,
                 11: 12, 12: 11, 13: 13, 14: 14, 15: 15}


@dataclass(frozen=True)
class WinScoreInput:
    close_times: Sequence[float]
    pnls: Sequence[float]
    t_start: float
    t_end: float

    def __post_init__(self) -> None:
        if len(self.close_times) != len(self.pnls):
            raise ValueError("close_times and pnls differ in length")
        if self.t_start > self.t_end:
            raise ValueError("t_start after t_end")
        prev = -math.inf
        for t in self.close_times:
            if t < prev:
                raise ValueError("close times must be non-decreasing")
            if not self.t_start <= t <= self.t_end:
                raise ValueError(f"close time {t} outside [{self.t_start}, {self.t_end}]")
            prev = t


@dataclass(frozen=True)
class WinScore:
    omega: float
    s: float
    a_plus: float
    a_minus: float
    degenerate_window: bool


def win_score_detail(inp: WinScoreInput) -> WinScore:
    omega, s, ap, an = kernels.win_score(
        np.asarray(inp.close_times, dtype=np.float64),
        np.asarray(inp.pnls, dtype=np.float64),
        float(inp.t_start), float(inp.t_end),
    )
    degenerate = inp.t_start == inp.t_end
    if degenerate and len(inp.pnls):
        log.debug("degenerate win-score window at t=%s", inp.t_start)
    return WinScore(float(omega), float(s), float(ap), float(an), degenerate)


def win_score(inp: WinScoreInput) -> float:
    """Share of the normalized cumulative-PnL path area spent above zero; 0.5 when flat."""
    return win_score_detail(inp).omega


def classify(p_start: float, p_end: float, a: float, b: float) -> int:
    """Position type 1-15 from where the entry and capital-weighted exit prices sit vs ``[a, b]``."""
    if not (a < b):
        raise DomainError(f"invalid range [{a}, {b}]")
    if not (p_start > 0 and p_end > 0 and a > 0):
        raise DomainError("prices must be positive")
    return int(kernels.classify(float(p_start), float(p_end), float(a), float(b)))


def width_bucket(width: float) -> str:
    if not width > 0:
        raise DomainError(f"range width must be positive, got {width}")
    for name, edge in zip(WIDTH_BUCKETS, _BUCKET_EDGES):
        if width < edge:
            return name
    return WIDTH_BUCKETS[-1]


@dataclass(frozen=True)
class PositionMetrics:
    delta_start: float
    delta_end: float
    delta: float
    m_a: float
    m_b: float
    d_a: float
    d_b: float
    rel_a: float
    rel_b: float
    r_price: float
    r_cap: float
    position_type: int
    width_usd: float
    width_ticks: int

    @property
    def flagged(self) -> bool:
        """Zero entry capital leaves the capital return undefined."""
        return math.isnan(self.r_cap)


def position_metrics(pos: ClosedPosition) -> PositionMetrics:
    a, b = pos.a, pos.b
    vals = kernels.position_metrics(pos.p_start, pos.p_end, a, b, pos.w, pos.q)
    return PositionMetrics(*vals, position_type=classify(pos.p_start, pos.p_end, a, b),
                           width_usd=b - a, width_ticks=pos.range.width_ticks)


POSITION_COLUMNS = (
    "pool_id", "owner", "tick_lower", "tick_upper", "a", "b", "liquidity",
    "open_block", "open_log_index", "open_timestamp", "close_block", "close_log_index",
    "close_timestamp", "duration_seconds", "p_start", "p_end", "w", "q", "pnl", "fee_capital",
    "tx_count", "position_type", "width_usd", "width_ticks",
) + kernels.METRIC_COLUMNS


@dataclass(frozen=True)
class PositionRow:
    """One exported position with its metrics; the interchange unit for reports."""

    pool_id: str
    owner: str
    tick_lower: int
    tick_upper: int
    a: float
    b: float
    liquidity: int
    open_block: int
    open_log_index: int
    open_timestamp: int
    close_block: int
    close_log_index: int
    close_timestamp: int
    duration_seconds: int
    p_start: float
    p_end: float
    w: float
    q: float
    pnl: float
    fee_capital: float
    tx_count: int
    position_type: int
    width_usd: float
    width_ticks: int
    delta_start: float
    delta_end: float
    delta: float
    m_a: float
    m_b: float
    d_a: float
    d_b: float
    rel_a: float
    rel_b: float
    r_price: float
    r_cap: float

    @property
    def flagged(self) -> bool:
        return math.isnan(self.r_cap)


def position_rows(positions: Sequence[ClosedPosition]) -> list[PositionRow]:
    """Batch metrics for many positions through the active kernel backend."""
    if not positions:
        return []
    cols = {k: np.fromiter((getattr(p, k) for p in positions), dtype=np.float64, count=len(positions))
            for k in ("p_start", "p_end", "a", "b", "w", "q")}
    for i, p in enumerate(positions):
        if not (p.a < p.b):
            raise DomainError(f"invalid range for position {i}")
    types = kernels.classify_many(cols["p_start"], cols["p_end"], cols["a"], cols["b"])
    mets = kernels.position_metrics_many(cols["p_start"], cols["p_end"], cols["a"], cols["b"], cols["w"], cols["q"])
    rows = []
    for i, p in enumerate(positions):
        rows.append(PositionRow(
            pool_id=p.pool_id, owner=p.owner, tick_lower=p.tick_lower, tick_upper=p.tick_upper,
            a=p.a, b=p.b, liquidity=p.liquidity,
            open_block=p.open_key.block_number, open_log_index=p.open_key.log_index,
            open_timestamp=p.open_timestamp,
            close_block=p.close_key.block_number, close_log_index=p.close_key.log_index,
            close_timestamp=p.close_timestamp, duration_seconds=p.duration,
            p_start=p.p_start, p_end=p.p_end, w=p.w, q=p.q, pnl=p.pnl, fee_capital=p.fee_capital,
            tx_count=p.tx_count, position_type=int(types[i]),
            width_usd=p.b - p.a, width_ticks=p.range.width_ticks,
            **{name: float(v) for name, v in zip(kernels.METRIC_COLUMNS, mets[i])},
        ))
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_positions_csv(rows: Iterable[PositionRow], fh: IO[str], header: Optional[str] = None) -> None:
    if header:
        fh.write(header.rstrip("\n") + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(POSITION_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in POSITION_COLUMNS])


_INT_COLUMNS = {"tick_lower", "tick_upper", "liquidity", "open_block", "open_log_index", "open_timestamp",
                "close_block", "close_log_index", "close_timestamp", "duration_seconds", "tx_count",
                "position_type", "width_ticks"}


def read_positions_csv(fh: IO[str]) -> list[PositionRow]:
    lines = (line for line in fh if not line.startswith("#"))
    out = []
    for rec in csv.DictReader(lines):
        kw = {}
        for c in POSITION_COLUMNS:
            v = rec[c]
            if c in ("pool_id", "owner"):
                kw[c] = v
            elif c in _INT_COLUMNS:
                kw[c] = int(v)
            else:
                kw[c] = float(v) if v != "" else math.nan
        out.append(PositionRow(**kw))
    return out
