import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clmm_ledger.metrics import POSITION_COLUMNS, PositionRow
from clmm_ledger.report import (
    DETAIL_METRICS, LpRecord, REFERENCE_FIGURES, lp_summary, lp_summary_markdown, multi_lp_summary,
    pct, read_lps_csv, reference_comparison, type_detail, type_detail_markdown, type_distribution,
    write_lps_csv, write_matrix_csv, write_table_csv,
)


def lp(owner, pool="U", pnl=1.0, omega=0.6):
    return LpRecord(owner=owner, pool_id=pool, pnl_total=pnl, omega=omega, position_count=1, tx_count=2,
                    mint_capital_total=100.0)


def row(owner="o", pool="U", ptype=5, w=100.0, width=50.0, tx=2, **metrics):
    base = {c: 0.0 for c in POSITION_COLUMNS}
    base.update(pool_id=pool, owner=owner, tick_lower=0, tick_upper=10, liquidity=1, open_block=1,
                open_log_index=0, open_timestamp=0, close_block=2, close_log_index=0, close_timestamp=10,
                duration_seconds=10, tx_count=tx, position_type=ptype, width_ticks=10, w=w, q=w,
                width_usd=width, a=1.0, b=1.0 + width, p_start=1.0, p_end=1.0)
    base.update(metrics)
    return PositionRow(**base)


# -- lp_summary ------------------------------------------------------------------------

def test_one_in_six_consistent():
    recs = [lp("a", pnl=10, omega=0.9)] + [lp(o, pnl=-1, omega=0.1) for o in "bcdef"]
    (pool, total) = lp_summary(recs, ["U"])
    assert pool["lp_count"] == 6 and pool["pnl_pos_count"] == 1 and pool["consistent_count"] == 1
    assert pct(pool["pnl_pos_share"]) == pct(pool["consistent_share"]) == "16.7%"
    assert total["lp_count"] == 6


def test_empty_pool_gives_zero_row():
    (pool, total) = lp_summary([], ["U"])
    assert pool["lp_count"] == pool["pnl_pos_count"] == pool["consistent_count"] == 0
    assert pool["pnl_pos_share"] == 0.0


def test_profitable_but_inconsistent():
    (pool, _) = lp_summary([lp("a", pnl=5, omega=0.5)], ["U"])
    assert pool["pnl_pos_count"] == 1 and pool["consistent_count"] == 0


records = st.lists(st.builds(lp, st.sampled_from("abcdefgh"), st.sampled_from(["U", "A", "P"]),
                             st.floats(-10, 10), st.floats(0, 1)),
                   max_size=30, unique_by=lambda r: (r.owner, r.pool_id))


@given(records)
def test_summary_count_ordering(recs):
    rows = lp_summary(recs, ["U", "A", "P"])
    for r in rows:
        assert r["consistent_count"] <= r["pnl_pos_count"] <= r["lp_count"]
    assert sum(r["lp_count"] for r in rows[:-1]) == rows[-1]["lp_count"]
    if recs:
        assert math.isclose(sum(r["lp_share"] for r in rows[:-1]), 1.0)


# -- mono/multi-pool ---------------------------------------------------------------------

def test_two_pool_owner_is_multi():
    s = multi_lp_summary([lp("x", "U"), lp("x", "A"), lp("y", "U")], ["U", "A"])
    assert s.multi_count == 1 and s.participation[2] == 1
    assert s.mono_counts == {"U": 1, "A": 0}
    assert s.matrix == [[1, 1], [1, 1]]


def test_single_pool_owners_are_mono():
    s = multi_lp_summary([lp("x", "U"), lp("y", "A"), lp("z", "P")], ["U", "A", "P"])
    assert s.multi_count == 0 and sum(s.participation.values()) == 0


def test_profitable_in_at_least_k_pools():
    recs = [lp("x", "U", 1), lp("x", "A", 1), lp("x", "P", -1, 0.9), lp("y", "U", -1), lp("y", "A", 2, 0.2)]
    s = multi_lp_summary(recs, ["U", "A", "P"])
    assert s.profitable_at_least == {1: 2, 2: 1, 3: 0}
    assert s.consistent_at_least == {1: 1, 2: 1, 3: 0}
    assert s.participation == {2: 1, 3: 1}


@given(records)
def test_multi_invariants(recs):
    s = multi_lp_summary(recs, ["U", "A", "P"])
    assert sum(s.participation.values()) == s.multi_count
    assert sum(s.mono_counts.values()) + s.multi_count == s.unique_count == len({r.owner for r in recs})
    for c in s.records:
        assert c.pools_consistent_count <= c.pools_profitable_count <= len(c.pools)
    for i in range(len(s.pools)):
        for j in range(len(s.pools)):
            assert s.matrix[i][j] == s.matrix[j][i]


# -- type distribution ---------------------------------------------------------------------

def test_all_type_five():
    dist = {r["position_type"]: r for r in type_distribution([row(ptype=5) for _ in range(10)])}
    assert dist[5]["tx_share"] == dist[5]["capital_share"] == 1.0


def test_capital_shares_direct_ratio():
    dist = {r["position_type"]: r for r in type_distribution([row(ptype=5, w=300.0), row(ptype=3, w=100.0)])}
    assert dist[5]["capital_share"] == 0.75 and dist[3]["capital_share"] == 0.25


def test_flagged_rows_excluded():
    dist = {r["position_type"]: r for r in type_distribution([row(ptype=5), row(ptype=3, w=0.0, r_cap=math.nan)])}
    assert dist[5]["tx_share"] == 1.0 and dist[3]["transactions"] == 0


@given(st.lists(st.tuples(st.integers(1, 15), st.floats(0.01, 1e6), st.integers(2, 9)), min_size=1, max_size=40))
def test_distribution_shares_sum_to_one(specs):
    dist = type_distribution([row(ptype=t, w=w, tx=tx) for t, w, tx in specs])
    assert abs(sum(r["tx_share"] for r in dist) - 1.0) < 1e-9
    assert abs(sum(r["capital_share"] for r in dist) - 1.0) < 1e-9


# -- type detail ---------------------------------------------------------------------------

def test_single_medium_position():
    rows = type_detail(5, [lp("o")], [row(width=50.0)])
    by = {r["bucket"]: r for r in rows}
    assert by["medium"]["lps"] == 1 and by["medium"]["lp_share"] == 1.0
    assert all(by[b]["lps"] == 0 and by[b]["delta"] is None for b in ("narrow", "wide", "ultra", "v2like"))
    md = type_detail_markdown(5, rows)
    assert "| narrow | 0.0% | 0.0% | 0.0% | -- |" in md


def test_consistent_filter():
    lps = [lp("good"), lp("bad", pnl=-1)]
    rows = [row("good"), row("bad")]
    assert type_detail(5, lps, rows)[-1]["lps"] == 1
    assert type_detail(5, lps, rows, consistent_only=False)[-1]["lps"] == 2


def test_capital_weighted_lp_means():
    rows = [row("o", w=300.0, width=20.0, delta=0.2), row("o", w=100.0, width=60.0, delta=0.6)]
    overall = type_detail(5, [lp("o")], rows)[-1]
    assert math.isclose(overall["delta"], (300 * 0.2 + 100 * 0.6) / 400)
    assert math.isclose(overall["width_usd"], 30.0)
    assert overall["transactions"] == 4 and overall["tvl"] == 400.0


detail_rows = st.lists(
    st.builds(lambda o, w, width, tx, d, ds: row(o, w=w, width=width, tx=tx, delta=d, delta_start=ds),
              st.sampled_from("abcdefghij"), st.floats(1.0, 1e6), st.floats(0.5, 5e4), st.integers(2, 8),
              st.floats(-1, 1), st.floats(0, 1)),
    min_size=1, max_size=40)


@given(detail_rows)
def test_overall_is_tx_weighted_mean_of_buckets(rows):
    lps = [lp(o) for o in "abcdefghij"]
    table = type_detail(5, lps, rows)
    buckets, overall = table[:-1], table[-1]
    filled = [b for b in buckets if b["lps"]]
    tx = sum(b["transactions"] for b in filled)
    assert tx == overall["transactions"] == sum(r.tx_count for r in rows)
    for m in DETAIL_METRICS:
        want = math.fsum(b["transactions"] * b[m] for b in filled) / tx
        assert math.isclose(overall[m], want, rel_tol=1e-9, abs_tol=1e-9)
    assert abs(sum(b["lp_share"] for b in buckets) - 1.0) < 1e-9
    assert abs(sum(b["tx_share"] for b in buckets) - 1.0) < 1e-9
    assert abs(sum(b["tvl_share"] for b in buckets) - 1.0) < 1e-9


def test_overall_recomputed_from_raw_positions():
    rows = [row("a", w=10.0, width=5.0, tx=2, delta=0.1), row("a", w=30.0, width=7.0, tx=3, delta=0.5),
            row("b", w=50.0, width=500.0, tx=4, delta=-0.2)]
    overall = type_detail(5, [lp("a"), lp("b")], rows)[-1]
    a_mean = (10 * 0.1 + 30 * 0.5) / 40
    assert math.isclose(overall["delta"], (5 * a_mean + 4 * -0.2) / 9)


def test_empty_type_renders_dashes():
    rows = type_detail(7, [lp("o")], [row()])
    assert rows[-1]["lps"] == 0 and rows[-1]["delta"] is None
    assert "--" in type_detail_markdown(7, rows)


# -- output ----------------------------------------------------------------------------------

def test_lp_csv_round_trip():
    rec = lp("0xabc")
    rec.type_widths = {5: 12.5, 13: 0.1}
    buf = io.StringIO()
    write_lps_csv([rec], buf, "# header")
    assert buf.getvalue().startswith("# header\n")
    buf.seek(0)
    assert read_lps_csv(buf) == [rec]


def test_table_csv_blank_for_missing():
    buf = io.StringIO()
    write_table_csv([{"a": None, "b": math.nan, "c": 0.5}], buf, "# h")
    assert buf.getvalue() == "# h\na,b,c\n,,0.5\n"


def test_matrix_csv():
    buf = io.StringIO()
    write_matrix_csv(multi_lp_summary([lp("x", "U"), lp("x", "A")], ["U", "A"]), buf)
    assert buf.getvalue() == "pool,U,A\nU,1,1\nA,1,1\n"


def test_summary_markdown_one_decimal():
    md = lp_summary_markdown(lp_summary([lp("a"), lp("b", pnl=-1), lp("c", pnl=-1)], ["U"]))
    assert "| U | 3 (100.0%) | 1 (33.3%) | 1 (33.3%) |" in md


def test_reference_figures_match_published_tables():
    assert REFERENCE_FIGURES["lp_summary"]["uniswap"] == {"pnl_pos_share": 0.166, "consistent_share": 0.160}
    assert REFERENCE_FIGURES["type_distribution"][5] == (0.458, 0.484)
    assert REFERENCE_FIGURES["type5_overall"] == {"delta_start": 0.478, "delta": 0.08}


def test_reference_comparison_tolerance():
    lp_rows = [{"pool": "U", "pnl_pos_share": 0.17, "consistent_share": 0.175}]
    out = {c["metric"]: c["pass"] for c in reference_comparison(lp_rows, {"U": "uniswap"}, [], [])}
    assert out == {"uniswap.pnl_pos_share": True, "uniswap.consistent_share": False}
