"""Parsing, zero-value filtering, ordering and LP eligibility for event logs."""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import IO, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .core import EventKind, NormalizedEvent, OrderKey, PoolConfig

log = logging.getLogger(__name__)

CANONICAL_FIELDS = (
    "kind", "block_number", "log_index", "timestamp", "tx_hash", "owner",
    "tick_lower", "tick_upper", "liquidity", "amount0", "amount1", "tick_after",
)

# emitted by pool contracts but irrelevant to LP accounting
OTHER_KINDS = frozenset({
    "other", "flash", "initialize", "collectprotocol", "setfeeprotocol",
    "increaseobservationcardinalitynext",
})


class MalformedRow(ValueError):
    def __init__(self, row_number: int, reason: str):
        super().__init__(f"row {row_number}: {reason}")
        self.row_number = row_number
        self.reason = reason


@dataclass
class IngestReport:
    pool_id: str = ""
    counts_before: dict[str, int] = field(default_factory=dict)
    counts_after: dict[str, int] = field(default_factory=dict)
    dropped_zero_value: int = 0
    dropped_zero_value_by_kind: dict[str, int] = field(default_factory=dict)
    dropped_malformed: int = 0
    dropped_other: int = 0
    malformed_rows: list[int] = field(default_factory=list)
    duplicate_order_keys: int = 0
    eligible_lp_count: int = 0

    def check(self) -> None:
        for kind, before in self.counts_before.items():
            after = self.counts_after.get(kind, 0)
            dropped = self.dropped_zero_value_by_kind.get(kind, 0)
            if after > before or before - after != dropped:
                raise AssertionError(f"count conservation violated for {kind}")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def _kind_counts(events: Iterable[NormalizedEvent]) -> dict[str, int]:
    c = Counter(e.kind.value for e in events)
    return {k.value: c.get(k.value, 0) for k in EventKind}


def _opt_int(raw: Optional[str]) -> Optional[int]:
    if raw is None:
        return None
    raw = str(raw).strip()
    if raw == "":
        return None
    return int(raw)


def _amount(row: Mapping, col: str, decimals: int, required: bool) -> int:
    """Base-unit amount from either the ``<col>_raw`` or the human ``<col>`` cell."""
    raw = row.get(col + "_raw")
    if raw is not None and str(raw).strip() != "":
        return int(str(raw).strip())
    human = row.get(col)
    if human is None or str(human).strip() == "":
        if required:
            raise ValueError(f"missing {col}")
        return 0
    try:
        scaled = Decimal(str(human).strip()).scaleb(decimals)
    except InvalidOperation as exc:
        raise ValueError(f"bad decimal in {col}: {human!r}") from exc
    if scaled != scaled.to_integral_value():
        raise ValueError(f"{col}={human} not representable with {decimals} decimals")
    return int(scaled)


def normalize_row(row: Mapping, cfg: PoolConfig, row_number: int = 0) -> Optional[NormalizedEvent]:
    """Build an event from one canonical-keyed row; ``None`` for other event kinds."""
    kind_raw = row.get("kind")
    if kind_raw is None or str(kind_raw).strip() == "":
        raise MalformedRow(row_number, "missing kind")
    if str(kind_raw).strip().lower() in OTHER_KINDS:
        return None
    try:
        kind = EventKind.parse(str(kind_raw))
        block = _opt_int(row.get("block_number"))
        log_index = _opt_int(row.get("log_index"))
        ts = _opt_int(row.get("timestamp"))
        if block is None or log_index is None or ts is None:
            raise ValueError("missing block_number/log_index/timestamp")
        tx_hash = str(row.get("tx_hash") or "").strip()
        if kind is EventKind.SWAP:
            tick_after = _opt_int(row.get("tick_after"))
            if tick_after is None:
                raise ValueError("swap without tick_after")
            return NormalizedEvent(kind, OrderKey(block, log_index), ts, tx_hash, tick_after=tick_after)

        owner = str(row.get("owner") or "").strip().lower()
        if not owner:
            raise ValueError("missing owner")
        tl = _opt_int(row.get("tick_lower"))
        tu = _opt_int(row.get("tick_upper"))
        if tl is None or tu is None:
            raise ValueError("missing tick bounds")
        if tl >= tu:
            raise ValueError("tick_lower must be below tick_upper")
        liquidity = None
        if kind is not EventKind.COLLECT:
            liquidity = _opt_int(row.get("liquidity"))
            if liquidity is None:
                raise ValueError("missing liquidity")
            if liquidity < 0:
                raise ValueError("negative liquidity")
        a0 = _amount(row, "amount0", cfg.token0_decimals, required=True)
        a1 = _amount(row, "amount1", cfg.token1_decimals, required=True)
        if a0 < 0 or a1 < 0:
            raise ValueError("negative token amount")
    except (ValueError, TypeError) as exc:
        raise MalformedRow(row_number, str(exc)) from exc
    return NormalizedEvent(kind, OrderKey(block, log_index), ts, tx_hash, owner, tl, tu, liquidity, a0, a1)


def _rows(stream: Union[IO[str], IO[bytes]], fmt: str) -> Iterator[dict]:
    if isinstance(stream, (io.BufferedIOBase, io.RawIOBase)) or "b" in getattr(stream, "mode", ""):
        stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    if fmt == "csv":
        lines = (line for line in stream if not line.startswith("#"))
        yield from csv.DictReader(lines)
    elif fmt == "jsonl":
        for line in stream:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                yield {"__bad_json__": line}
                continue
            yield obj if isinstance(obj, dict) else {"__bad_json__": line}
    else:
        raise ValueError(f"unsupported format {fmt!r}")


def parse_events(
    stream: Union[IO[str], IO[bytes]],
    cfg: PoolConfig,
    schema: Optional[Mapping[str, str]] = None,
    fmt: str = "csv",
    strict: bool = False,
) -> tuple[list[NormalizedEvent], IngestReport]:
    """Parse an exported log into events.

    ``schema`` maps canonical field names to source column names; unmapped
    fields are read under their canonical name. Malformed rows are counted and
    skipped, or raise :class:`MalformedRow` in strict mode. Row numbers are
    1-based data rows (header excluded).
    """
    rename = {src: canon for canon, src in (schema or {}).items()}
    report = IngestReport(pool_id=cfg.pool_id)
    events: list[NormalizedEvent] = []
    for n, row in enumerate(_rows(stream, fmt), start=1):
        if rename:
            row = {rename.get(k, k): v for k, v in row.items()}
        try:
            if "__bad_json__" in row:
                raise MalformedRow(n, "invalid JSON object")
            ev = normalize_row(row, cfg, n)
        except MalformedRow as exc:
            if strict:
                raise
            report.dropped_malformed += 1
            report.malformed_rows.append(exc.row_number)
            log.debug("skipping %s", exc)
            continue
        if ev is None:
            report.dropped_other += 1
            continue
        events.append(ev)
    report.counts_before = _kind_counts(events)
    report.counts_after = dict(report.counts_before)
    return events, report


def is_zero_value(ev: NormalizedEvent) -> bool:
    if ev.kind is EventKind.SWAP:
        return False
    if ev.kind is EventKind.COLLECT:
        return ev.amount0 == 0 and ev.amount1 == 0
    return ev.liquidity == 0 and ev.amount0 == 0 and ev.amount1 == 0


def filter_zero_value(
    events: Sequence[NormalizedEvent], report: Optional[IngestReport] = None
) -> tuple[list[NormalizedEvent], int]:
    kept: list[NormalizedEvent] = []
    by_kind: Counter = Counter()
    for ev in events:
        if is_zero_value(ev):
            by_kind[ev.kind.value] += 1
        else:
            kept.append(ev)
    dropped = sum(by_kind.values())
    if report is not None:
        report.dropped_zero_value += dropped
        for k, v in by_kind.items():
            report.dropped_zero_value_by_kind[k] = report.dropped_zero_value_by_kind.get(k, 0) + v
        report.counts_after = _kind_counts(kept)
    return kept, dropped


def order_events(
    events: Sequence[NormalizedEvent], report: Optional[IngestReport] = None
) -> list[NormalizedEvent]:
    """Stable sort on (block, log_index); duplicate keys across txs are flagged."""
    ordered = sorted(events, key=lambda e: e.order_key)
    dups = 0
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.order_key == cur.order_key and prev.tx_hash != cur.tx_hash:
            dups += 1
            log.warning("duplicate order key %s across tx %s and %s", cur.order_key, prev.tx_hash, cur.tx_hash)
    if report is not None:
        report.duplicate_order_keys += dups
    return ordered


def select_eligible_lps(events: Iterable[NormalizedEvent]) -> set[str]:
    """Owners with at least one Mint and one Burn."""
    minters: set[str] = set()
    burners: set[str] = set()
    for ev in events:
        if ev.kind is EventKind.MINT:
            minters.add(ev.owner)
        elif ev.kind is EventKind.BURN:
            burners.add(ev.owner)
    return minters & burners


def load_pool_events(
    path: str,
    cfg: PoolConfig,
    schema: Optional[Mapping[str, str]] = None,
    fmt: Optional[str] = None,
    strict: bool = False,
) -> tuple[list[NormalizedEvent], IngestReport]:
    """Parse, filter and order one pool file; fills in the eligible-LP count."""
    if fmt is None:
        fmt = "jsonl" if path.endswith((".jsonl", ".ndjson")) else "csv"
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            events, report = parse_events(fh, cfg, schema=schema, fmt=fmt, strict=strict)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    events, _ = filter_zero_value(events, report)
    events = order_events(events, report)
    report.eligible_lp_count = len(select_eligible_lps(events))
    report.check()
    return events, report


def write_events_csv(events: Iterable[NormalizedEvent], fh: IO[str], cfg: PoolConfig) -> None:
    """Write events in the input CSV schema with base-unit amount columns."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["kind", "block_number", "log_index", "timestamp", "tx_hash", "owner",
                "tick_lower", "tick_upper", "liquidity", "amount0_raw", "amount1_raw", "tick_after"])

    def cell(v):
        return "" if v is None else v

    for ev in events:
        swap = ev.kind is EventKind.SWAP
        w.writerow([
            ev.kind.value, ev.order_key.block_number, ev.order_key.log_index, ev.timestamp, ev.tx_hash,
            cell(ev.owner), cell(ev.tick_lower), cell(ev.tick_upper), cell(ev.liquidity),
            "" if swap else ev.amount0, "" if swap else ev.amount1, cell(ev.tick_after),
        ])


__all__ = [
    "CANONICAL_FIELDS", "IngestReport", "MalformedRow", "filter_zero_value",
    "is_zero_value", "load_pool_events", "normalize_row", "order_events", "parse_events",
    "select_eligible_lps", "write_events_csv",
]
