"""Aggregate positions and LPs into summary tables.

Every table is a plain list of dict rows so it can be written as CSV and
rendered as Markdown by the same code. Shares are fractions in [0, 1];
rendering turns them into one-decimal percentages.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Optional, Sequence

from .metrics import WIDTH_BUCKETS, PositionRow, width_bucket

POSITION_TYPES = tuple(range(1, 16))


@dataclass
class LpRecord:
    owner: str
    pool_id: str
    pnl_total: float
    omega: float
    position_count: int
    tx_count: int
    mint_capital_total: float
    # position type -> capital-weighted mean range width (numeraire)
    type_widths: dict[int, float] = field(default_factory=dict)

    @property
    def profitable(self) -> bool:
        return self.pnl_total > 0.0

    @property
    def consistent(self) -> bool:
        return self.pnl_total > 0.0 and self.omega > 0.5


LP_COLUMNS = ("pool_id", "owner", "pnl_total", "omega", "position_count", "tx_count",
              "mint_capital_total", "type_widths")


def write_lps_csv(records: Iterable[LpRecord], fh: IO[str], header: Optional[str] = None) -> None:
    if header:
        fh.write(header.rstrip("\n") + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(LP_COLUMNS)
    for r in records:
        widths = ";".join(f"{k}:{v!r}" for k, v in sorted(r.type_widths.items()))
        w.writerow([r.pool_id, r.owner, repr(r.pnl_total), repr(r.omega), r.position_count,
                    r.tx_count, repr(r.mint_capital_total), widths])


def read_lps_csv(fh: IO[str]) -> list[LpRecord]:
    out = []
    for rec in csv.DictReader(line for line in fh if not line.startswith("#")):
        widths = {}
        if rec["type_widths"]:
            for part in rec["type_widths"].split(";"):
                k, v = part.split(":")
                widths[int(k)] = float(v)
        out.append(LpRecord(
            owner=rec["owner"], pool_id=rec["pool_id"], pnl_total=float(rec["pnl_total"]),
            omega=float(rec["omega"]), position_count=int(rec["position_count"]),
            tx_count=int(rec["tx_count"]), mint_capital_total=float(rec["mint_capital_total"]),
            type_widths=widths,
        ))
    return out


def capital_weighted_widths(rows: Iterable[PositionRow]) -> dict[int, float]:
    num: dict[int, float] = defaultdict(float)
    den: dict[int, float] = defaultdict(float)
    for r in rows:
        if r.flagged:
            continue
        num[r.position_type] += r.w * r.width_usd
        den[r.position_type] += r.w
    return {t: num[t] / den[t] for t in sorted(num) if den[t] > 0}


def _share(n: float, d: float) -> float:
    return n / d if d else 0.0


# -- LP success classification ------------------------------------------------

def lp_summary(records: Sequence[LpRecord], pools: Optional[Sequence[str]] = None) -> list[dict]:
    """Per pool and in total: LP count, profitable and consistently successful LPs."""
    if pools is None:
        pools = sorted({r.pool_id for r in records})
    total = len(records)
    rows = []
    for pool in list(pools) + ["Total"]:
        sel = records if pool == "Total" else [r for r in records if r.pool_id == pool]
        n = len(sel)
        prof = sum(1 for r in sel if r.profitable)
        cons = sum(1 for r in sel if r.consistent)
        rows.append({
            "pool": pool, "lp_count": n, "lp_share": _share(n, total),
            "pnl_pos_count": prof, "pnl_pos_share": _share(prof, n),
            "consistent_count": cons, "consistent_share": _share(cons, n),
        })
    return rows


# -- mono/multi-pool decomposition ----------------------------------------------

@dataclass
class CrossPoolRecord:
    owner: str
    pools: tuple[str, ...]
    per_pool: dict[str, tuple[float, float]]

    @property
    def pools_profitable_count(self) -> int:
        return sum(1 for pnl, _ in self.per_pool.values() if pnl > 0.0)

    @property
    def pools_consistent_count(self) -> int:
        return sum(1 for pnl, om in self.per_pool.values() if pnl > 0.0 and om > 0.5)


@dataclass
class MultiLpSummary:
    pools: list[str]
    pool_lp_counts: dict[str, int]
    mono_counts: dict[str, int]
    multi_count: int
    unique_count: int
    participation: dict[int, int]
    profitable_at_least: dict[int, int]
    consistent_at_least: dict[int, int]
    matrix: list[list[int]]
    records: list[CrossPoolRecord]

    def rows(self) -> list[dict]:
        out = []
        for p in self.pools:
            out.append({"metric": "pool_lps", "group": p, "count": self.pool_lp_counts[p], "share": ""})
        for p in self.pools:
            out.append({"metric": "mono", "group": p, "count": self.mono_counts[p],
                        "share": _share(self.mono_counts[p], self.unique_count)})
        out.append({"metric": "mono", "group": "all", "count": self.unique_count - self.multi_count,
                    "share": _share(self.unique_count - self.multi_count, self.unique_count)})
        out.append({"metric": "multi", "group": "all", "count": self.multi_count,
                    "share": _share(self.multi_count, self.unique_count)})
        out.append({"metric": "unique", "group": "all", "count": self.unique_count, "share": 1.0 if self.unique_count else 0.0})
        for k in sorted(self.participation):
            out.append({"metric": "participated", "group": k, "count": self.participation[k],
                        "share": _share(self.participation[k], self.multi_count)})
        for k in sorted(self.profitable_at_least):
            out.append({"metric": "profitable_in_at_least", "group": k, "count": self.profitable_at_least[k],
                        "share": _share(self.profitable_at_least[k], self.multi_count)})
        for k in sorted(self.consistent_at_least):
            out.append({"metric": "consistent_in_at_least", "group": k, "count": self.consistent_at_least[k],
                        "share": _share(self.consistent_at_least[k], self.multi_count)})
        return out


def multi_lp_summary(records: Sequence[LpRecord], pools: Optional[Sequence[str]] = None) -> MultiLpSummary:
    if pools is None:
        pools = sorted({r.pool_id for r in records})
    pools = list(pools)
    by_owner: dict[str, dict[str, LpRecord]] = defaultdict(dict)
    for r in records:
        by_owner[r.owner][r.pool_id] = r
    pool_lp_counts = {p: sum(1 for r in records if r.pool_id == p) for p in pools}
    mono = {p: 0 for p in pools}
    cross: list[CrossPoolRecord] = []
    for owner in sorted(by_owner):
        recs = by_owner[owner]
        if len(recs) == 1:
            mono[next(iter(recs))] += 1
            continue
        cross.append(CrossPoolRecord(
            owner=owner, pools=tuple(p for p in pools if p in recs),
            per_pool={p: (recs[p].pnl_total, recs[p].omega) for p in pools if p in recs},
        ))
    n_pools = len(pools)
    participation = Counter(len(c.pools) for c in cross)
    participation = {k: participation.get(k, 0) for k in range(2, max(n_pools, 2) + 1)}
    prof = {k: sum(1 for c in cross if c.pools_profitable_count >= k) for k in range(1, max(n_pools, 1) + 1)}
    cons = {k: sum(1 for c in cross if c.pools_consistent_count >= k) for k in range(1, max(n_pools, 1) + 1)}
    idx = {p: i for i, p in enumerate(pools)}
    matrix = [[0] * n_pools for _ in pools]
    for c in cross:
        for p in c.pools:
            for q in c.pools:
                matrix[idx[p]][idx[q]] += 1
    return MultiLpSummary(
        pools=pools, pool_lp_counts=pool_lp_counts, mono_counts=mono, multi_count=len(cross),
        unique_count=len(by_owner), participation=participation, profitable_at_least=prof,
        consistent_at_least=cons, matrix=matrix, records=cross,
    )


# -- position types -------------------------------------------------------------

def type_distribution(rows: Sequence[PositionRow]) -> list[dict]:
    """Share of ledger transactions and of entry capital per position type."""
    usable = [r for r in rows if not r.flagged]
    tx = Counter()
    cap: dict[int, float] = defaultdict(float)
    for r in usable:
        tx[r.position_type] += r.tx_count
        cap[r.position_type] += r.w
    tx_total = sum(tx.values())
    cap_total = math.fsum(cap.values())
    return [{
        "position_type": t, "transactions": tx.get(t, 0), "tx_share": _share(tx.get(t, 0), tx_total),
        "mint_capital": cap.get(t, 0.0), "capital_share": _share(cap.get(t, 0.0), cap_total),
    } for t in POSITION_TYPES]


# per-LP means in type_detail; all capital-weighted over that LP's positions
DETAIL_METRICS = ("duration", "width_ticks", "width_usd", "delta", "delta_usd", "delta_start",
                  "m_a", "m_b", "d_a", "d_b", "rel_a", "rel_b", "r_cap", "r_price")


@dataclass
class _LpCohort:
    owner: str
    pool_id: str
    tx: int
    tvl: float
    n_positions: int
    width: float
    means: dict[str, float]

    @property
    def position_size(self) -> float:
        return self.tvl / self.n_positions


def _lp_cohorts(position_type: int, lp_records: Sequence[LpRecord], rows: Sequence[PositionRow],
                consistent_only: bool) -> list[_LpCohort]:
    keep = {(r.pool_id, r.owner) for r in lp_records if (r.consistent or not consistent_only)}
    grouped: dict[tuple[str, str], list[PositionRow]] = defaultdict(list)
    for r in rows:
        if r.position_type == position_type and not r.flagged and (r.pool_id, r.owner) in keep:
            grouped[(r.pool_id, r.owner)].append(r)
    out = []
    for (pool, owner) in sorted(grouped):
        ps = grouped[(pool, owner)]
        tvl = math.fsum(p.w for p in ps)
        weights = [p.w for p in ps] if tvl > 0 else [1.0] * len(ps)
        wsum = math.fsum(weights)

        def wmean(vals):
            return math.fsum(w * v for w, v in zip(weights, vals)) / wsum

        means = {
            "duration": wmean(p.duration_seconds for p in ps),
            "width_ticks": wmean(p.width_ticks for p in ps),
            "width_usd": wmean(p.width_usd for p in ps),
            "delta": wmean(p.delta for p in ps),
            "delta_usd": wmean(p.delta * p.width_usd for p in ps),
        }
        for m in ("delta_start", "m_a", "m_b", "d_a", "d_b", "rel_a", "rel_b", "r_cap", "r_price"):
            means[m] = wmean(getattr(p, m) for p in ps)
        out.append(_LpCohort(owner, pool, sum(p.tx_count for p in ps), tvl, len(ps), means["width_usd"], means))
    return out


def _tx_weighted(cohorts: Sequence[_LpCohort], key) -> float:
    tx = sum(c.tx for c in cohorts)
    return math.fsum(c.tx * key(c) for c in cohorts) / tx


def type_detail(position_type: int, lp_records: Sequence[LpRecord], rows: Sequence[PositionRow],
                consistent_only: bool = True) -> list[dict]:
    """Width-bucket breakdown of one position type plus a transaction-weighted Overall row.

    Each LP is assigned to the bucket of its capital-weighted mean range width
    for this type. Bucket and Overall metrics are means of per-LP values
    weighted by each LP's transaction count in this type, so Overall is the
    transaction-weighted mean of the bucket rows. Empty buckets carry ``None``.
    """
    cohorts = _lp_cohorts(position_type, lp_records, rows, consistent_only)
    n_lp = len(cohorts)
    tx_total = sum(c.tx for c in cohorts)
    tvl_total = math.fsum(c.tvl for c in cohorts)
    out = []
    for bucket in WIDTH_BUCKETS:
        sel = [c for c in cohorts if width_bucket(c.width) == bucket]
        row = {"bucket": bucket, "lps": len(sel), "lp_share": _share(len(sel), n_lp),
               "transactions": sum(c.tx for c in sel), "tx_share": _share(sum(c.tx for c in sel), tx_total),
               "tvl": math.fsum(c.tvl for c in sel), "tvl_share": _share(math.fsum(c.tvl for c in sel), tvl_total)}
        if sel:
            row["position_size"] = _tx_weighted(sel, lambda c: c.position_size)
            for m in DETAIL_METRICS:
                row[m] = _tx_weighted(sel, lambda c, m=m: c.means[m])
        else:
            row["position_size"] = None
            for m in DETAIL_METRICS:
                row[m] = None
        out.append(row)
    overall = {"bucket": "overall", "lps": n_lp, "lp_share": None, "transactions": tx_total,
               "tx_share": None, "tvl": tvl_total, "tvl_share": None}
    if cohorts:
        overall["position_size"] = _tx_weighted(cohorts, lambda c: c.position_size)
        for m in DETAIL_METRICS:
            overall[m] = _tx_weighted(cohorts, lambda c, m=m: c.means[m])
    else:
        overall["position_size"] = None
        for m in DETAIL_METRICS:
            overall[m] = None
    out.append(overall)
    return out


# -- output ---------------------------------------------------------------------

def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_table_csv(rows: Sequence[Mapping], fh: IO[str], header: Optional[str] = None,
                    columns: Optional[Sequence[str]] = None) -> None:
    if header:
        fh.write(header.rstrip("\n") + "\n")
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_cell(r.get(c)) for c in columns])


def write_matrix_csv(summary: MultiLpSummary, fh: IO[str], header: Optional[str] = None) -> None:
    if header:
        fh.write(header.rstrip("\n") + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["pool"] + summary.pools)
    for p, row in zip(summary.pools, summary.matrix):
        w.writerow([p] + row)


def pct(v: Optional[float], digits: int = 1) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "--"
    return f"{100.0 * v:.{digits}f}%"


def _num(v: Optional[float]) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "--"
    return f"{v:,.0f}".replace(",", " ")


def render_markdown(title: str, columns: Sequence[str], body: Sequence[Sequence[str]]) -> str:
    lines = [f"## {title}", "", "| " + " | ".join(columns) + " |",
             "|" + "|".join("---" for _ in columns) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return "\n".join(lines) + "\n"


def lp_summary_markdown(rows: Sequence[dict]) -> str:
    body = [[r["pool"], f"{r['lp_count']} ({pct(r['lp_share'])})",
             f"{r['pnl_pos_count']} ({pct(r['pnl_pos_share'])})",
             f"{r['consistent_count']} ({pct(r['consistent_share'])})"] for r in rows]
    return render_markdown("LP characteristics", ["Pool", "count", "PnL>0", "PnL>0 & omega>0.5"], body)


def multi_lp_markdown(summary: MultiLpSummary) -> str:
    body = [[r["metric"], str(r["group"]), str(r["count"]), pct(r["share"]) if r["share"] != "" else ""]
            for r in summary.rows()]
    return render_markdown("Mono- and multi-pool LPs", ["metric", "group", "count", "share"], body)


def type_distribution_markdown(rows: Sequence[dict]) -> str:
    body = [[str(r["position_type"]), pct(r["tx_share"]), pct(r["capital_share"])] for r in rows]
    return render_markdown("Transactions and capital across position types",
                           ["Position type", "transactions", "mint capital"], body)


def type_detail_markdown(position_type: int, rows: Sequence[dict]) -> str:
    cols = ["Range width", "LPs", "Trans.", "TVL", "Pos. size", "Duration, sec", "Width ticks",
            "Width", "Delta (numeraire)", "Delta_start", "m_a", "m_b", "d_a", "d_b",
            "rel_a", "rel_b", "R_cap", "R_price"]
    body = []
    for r in rows:
        delta = "--" if r["delta"] is None else f"{pct(r['delta'])} ({_num(r['delta_usd'])})"
        body.append([
            r["bucket"], pct(r["lp_share"]) if r["lp_share"] is not None else "",
            pct(r["tx_share"]) if r["tx_share"] is not None else "",
            pct(r["tvl_share"]) if r["tvl_share"] is not None else "",
            _num(r["position_size"]), _num(r["duration"]), _num(r["width_ticks"]), _num(r["width_usd"]),
            delta, pct(r["delta_start"]), pct(r["m_a"]), pct(r["m_b"]), pct(r["d_a"]), pct(r["d_b"]),
            pct(r["rel_a"]), pct(r["rel_b"]), pct(r["r_cap"]), pct(r["r_price"]),
        ])
    return render_markdown(f"Metrics for position type {position_type}", cols, body)


# headline figures of the published Base WETH/USDC study, keyed by protocol tag
REFERENCE_FIGURES = {
    "lp_summary": {
        "uniswap": {"pnl_pos_share": 0.166, "consistent_share": 0.160},
        "aerodrome": {"pnl_pos_share": 0.160, "consistent_share": 0.152},
        "pancakeswap": {"pnl_pos_share": 0.126, "consistent_share": 0.123},
        "sushiswap": {"pnl_pos_share": 0.118, "consistent_share": 0.107},
    },
    "type5_6_min_share": 0.90,
    "type_distribution": {5: (0.458, 0.484), 6: (0.450, 0.492)},
    "type5_overall": {"delta_start": 0.478, "delta": 0.08},
}
REFERENCE_TOLERANCE = 0.01


def reference_comparison(lp_rows: Sequence[dict], protocols: Mapping[str, str],
                         dist_rows: Sequence[dict], type5_rows: Sequence[dict]) -> list[dict]:
    """Compare a large-scale run with the published headline figures (±1 pp on shares)."""
    out = []

    def add(metric, ref, got, ok=None):
        if ok is None:
            ok = got is not None and abs(got - ref) <= REFERENCE_TOLERANCE
        out.append({"metric": metric, "reference": ref, "engine": got, "pass": bool(ok)})

    for r in lp_rows:
        tag = protocols.get(r["pool"], "").lower()
        ref = REFERENCE_FIGURES["lp_summary"].get(tag)
        if ref:
            add(f"{tag}.pnl_pos_share", ref["pnl_pos_share"], r["pnl_pos_share"])
            add(f"{tag}.consistent_share", ref["consistent_share"], r["consistent_share"])
    dist = {r["position_type"]: r for r in dist_rows}
    if dist:
        for t, (tx_ref, cap_ref) in REFERENCE_FIGURES["type_distribution"].items():
            add(f"type{t}.tx_share", tx_ref, dist[t]["tx_share"])
            add(f"type{t}.capital_share", cap_ref, dist[t]["capital_share"])
        tx56 = dist[5]["tx_share"] + dist[6]["tx_share"]
        cap56 = dist[5]["capital_share"] + dist[6]["capital_share"]
        floor = REFERENCE_FIGURES["type5_6_min_share"]
        add("type5_6.tx_share_above", floor, tx56, tx56 > floor)
        add("type5_6.capital_share_above", floor, cap56, cap56 > floor)
    overall = next((r for r in type5_rows if r["bucket"] == "overall"), None)
    if overall is not None:
        for m, ref in REFERENCE_FIGURES["type5_overall"].items():
            add(f"type5.overall.{m}", ref, overall[m])
    return out


def write_json(obj, fh: IO[str]) -> None:
    json.dump(obj, fh, indent=2, sort_keys=True, default=str)
    fh.write("\n")
