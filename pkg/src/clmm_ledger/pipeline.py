"""End-to-end reconstruction of one pool's event stream."""

from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .core import EventKind, NormalizedEvent, PoolConfig
from .ingest import IngestReport, filter_zero_value, order_events, select_eligible_lps
from .ledger import ClosedPosition, RangeResult, check_liquidity_conservation, lp_pnl, reconstruct_range
from .matching import MatchDiagnostics, PositionKey, match_burn_collect
from .metrics import PositionRow, position_rows
from .pricing import PriceSeries, build_series
from .report import LpRecord, capital_weighted_widths


@dataclass
class OwnerResult:
    owner: str
    ledger: RangeResult
    matching: MatchDiagnostics
    first_mint_ts: Optional[int]
    used_burn_keys: int


@dataclass
class PoolResult:
    cfg: PoolConfig
    positions: list[ClosedPosition]
    rows: list[PositionRow]
    lps: list[LpRecord]
    ledger: RangeResult
    matching: MatchDiagnostics
    series_points: int
    eligible_lps: int
    excluded_owners: int
    ingest: Optional[IngestReport] = None
    flagged_positions: int = 0
    extra: dict = field(default_factory=dict)

    def diagnostics(self) -> dict:
        led = self.ledger
        return {
            "pool_id": self.cfg.pool_id,
            "price_points": self.series_points,
            "eligible_lps": self.eligible_lps,
            "excluded_owners": self.excluded_owners,
            "lp_records": len(self.lps),
            "closed_positions": len(self.positions),
            "flagged_positions": self.flagged_positions,
            "residual_open_positions": len(led.residual_open),
            "residual_open_liquidity": str(sum(p.liquidity_remaining for p in led.residual_open)),
            "dropped_burns": led.dropped_burns,
            "dropped_burn_liquidity": str(led.dropped_burn_liquidity),
            "skipped_unpriced_events": led.skipped_unpriced,
            "used_mints": led.used_mints,
            "used_burns": led.used_burns,
            "matching": self.matching.summary(),
            "ingest": None if self.ingest is None else self.ingest.__dict__,
        }


def _reconstruct_owner(owner: str, groups: dict[PositionKey, list[NormalizedEvent]],
                       series: PriceSeries, cfg: PoolConfig) -> OwnerResult:
    led = RangeResult()
    diag = MatchDiagnostics()
    first_ts = None
    for key in sorted(groups):
        evs = groups[key]
        burns, d = match_burn_collect(evs, series)
        diag.merge(d)
        mints = [e for e in evs if e.kind is EventKind.MINT]
        res = reconstruct_range(mints, burns, series, cfg)
        check_liquidity_conservation(res)
        led.merge(res)
    starts = [p.open_timestamp for p in led.closed] + [p.open_timestamp for p in led.residual_open]
    if starts:
        first_ts = min(starts)
    used = {(p.tick_lower, p.tick_upper, c.order_key) for p in led.closed for c in p.close_events}
    return OwnerResult(owner, led, diag, first_ts, len(used))


def build_lp_record(owner: str, pool_id: str, positions: Sequence[ClosedPosition],
                    rows: Sequence[PositionRow], t_start: float, used_burns: int) -> LpRecord:
    ordered = sorted(positions, key=lambda p: (p.close_key, p.open_key, p.tick_lower, p.tick_upper))
    times = np.array([p.close_timestamp for p in ordered], dtype=np.float64)
    pnls = np.array([p.pnl for p in ordered], dtype=np.float64)
    t_end = float(times[-1]) if len(times) else float(t_start)
    omega = float(kernels.win_score(times, pnls, float(t_start), t_end)[0])
    return LpRecord(
        owner=owner, pool_id=pool_id, pnl_total=lp_pnl(positions), omega=omega,
        position_count=len(positions), tx_count=len(positions) + used_burns,
        mint_capital_total=sum(p.w for p in positions),
        type_widths=capital_weighted_widths(rows),
    )


def reconstruct_pool(events: Sequence[NormalizedEvent], cfg: PoolConfig, threads: int = 1,
                     ingest: Optional[IngestReport] = None, prepared: bool = False) -> PoolResult:
    """Run pricing, matching, ledger and metrics over one pool.

    ``events`` may be raw parsed events; unless ``prepared`` is set they are
    zero-value filtered and ordered first. Output is independent of ``threads``.
    """
    if not prepared:
        events, _ = filter_zero_value(events, ingest)
        events = order_events(events, ingest)
    series = build_series(events, cfg)
    eligible = select_eligible_lps(events)
    owners_all = {e.owner for e in events if e.kind is not EventKind.SWAP}
    by_owner: dict[str, dict[PositionKey, list[NormalizedEvent]]] = defaultdict(lambda: defaultdict(list))
    for e in events:
        if e.kind is not EventKind.SWAP and e.owner in eligible:
            by_owner[e.owner][(e.owner, e.tick_lower, e.tick_upper)].append(e)
    owners = sorted(by_owner)

    def work(owner: str) -> OwnerResult:
        return _reconstruct_owner(owner, by_owner[owner], series, cfg)

    if threads > 1 and len(owners) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, owners))
    else:
        results = [work(o) for o in owners]

    ledger = RangeResult()
    diag = MatchDiagnostics()
    positions: list[ClosedPosition] = []
    lps: list[LpRecord] = []
    all_rows: list[PositionRow] = []
    flagged = 0
    for res in results:
        diag.merge(res.matching)
        ledger.merge(res.ledger)
        closed = sorted(res.ledger.closed, key=lambda p: (p.tick_lower, p.tick_upper, p.open_key))
        if not closed:
            continue
        rows = position_rows(closed)
        flagged += sum(1 for r in rows if r.flagged)
        positions.extend(closed)
        all_rows.extend(rows)
        lps.append(build_lp_record(res.owner, cfg.pool_id, closed, rows, res.first_mint_ts, res.used_burn_keys))
    return PoolResult(
        cfg=cfg, positions=positions, rows=all_rows, lps=lps, ledger=ledger, matching=diag,
        series_points=len(series), eligible_lps=len(eligible),
        excluded_owners=len(owners_all - eligible), ingest=ingest, flagged_positions=flagged,
    )
