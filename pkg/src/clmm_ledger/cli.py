"""``clmm-ledger`` command line: validate, reconstruct, report and synth.

A run is described by one JSON config::

    {
      "pools": [{"path": "events.csv", "format": "csv", "schema": {},
                 "pool": {"pool_id": "...", "fee_tier": 0.0005, ...}}],
      "output_dir": "out",
      "strict": false,
      "consistent_only": true,
      "large_scale": false,
      "report_formats": ["csv", "md"],
      "synth": {"scenarios": [{"seed": 1, "n_lps": 20, "max_events": 500}]}
    }

Relative paths resolve against the config file's directory. Exit codes are
0 on success, 1 for input errors and 2 for internal invariant violations.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import __version__, kernels
from .core import DomainError, PoolConfig
from .ingest import IngestReport, MalformedRow, load_pool_events, write_events_csv
from .metrics import read_positions_csv, write_positions_csv
from .pipeline import reconstruct_pool
from .report import (
    POSITION_TYPES, lp_summary, lp_summary_markdown, multi_lp_markdown, multi_lp_summary,
    read_lps_csv, reference_comparison, type_detail, type_detail_markdown, type_distribution,
    type_distribution_markdown, write_json, write_lps_csv, write_matrix_csv, write_table_csv,
)
from .synth import DEFAULT_POOL, ScenarioError, ScenarioSpec, generate, random_spec

log = logging.getLogger("clmm_ledger")

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2
LOG_ENV = "CLMM_LEDGER_LOG"


class InputError(Exception):
    """Bad config, missing file or unparseable input."""


@dataclass
class PoolInput:
    path: str
    cfg: PoolConfig
    fmt: Optional[str] = None
    schema: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    pools: list[PoolInput]
    output_dir: str
    strict: bool = False
    consistent_only: bool = True
    large_scale: bool = False
    report_formats: tuple[str, ...] = ("csv", "md")
    synth: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    base_dir: str = "."

    @property
    def pool_ids(self) -> list[str]:
        return [p.cfg.pool_id for p in self.pools]

    def config_hash(self) -> str:
        doc = dict(self.raw)
        doc["strict"] = self.strict
        canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def header(self) -> str:
        return f"# clmm-ledger {__version__} config_hash={self.config_hash()}"

    def validate_paths(self) -> None:
        for p in self.pools:
            if not os.path.isfile(p.path):
                raise InputError(f"pool {p.cfg.pool_id}: events file not found: {p.path}")


def load_config(path: str, out: Optional[str] = None, strict: Optional[bool] = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"config {path} must be a JSON object")
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))

    pools = []
    for i, entry in enumerate(raw.get("pools", [])):
        try:
            cfg = PoolConfig.from_dict(entry["pool"])
            pools.append(PoolInput(resolve(entry["path"]), cfg, entry.get("format"), dict(entry.get("schema") or {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"config pools[{i}]: {exc!r}") from exc
    ids = [p.cfg.pool_id for p in pools]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise InputError(f"duplicate pool_id in config: {', '.join(dupes)}")
    output_dir = out or raw.get("output_dir")
    if not output_dir:
        raise InputError("no output directory: set output_dir in the config or pass --out")
    output_dir = output_dir if out else resolve(output_dir)
    formats = tuple(raw.get("report_formats", ("csv", "md")))
    bad = set(formats) - {"csv", "md"}
    if bad:
        raise InputError(f"unknown report formats: {sorted(bad)}")
    return RunConfig(
        pools=pools, output_dir=output_dir,
        strict=bool(raw.get("strict", False)) if strict is None else strict,
        consistent_only=bool(raw.get("consistent_only", True)),
        large_scale=bool(raw.get("large_scale", False)),
        report_formats=formats, synth=dict(raw.get("synth") or {}), raw=raw, base_dir=base,
    )


# -- staged output ------------------------------------------------------------------

class Staging:
    """Write outputs into a scratch directory and move them in only on success."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".staging-", dir=out_dir)
        self.names: list[str] = []

    def open(self, name: str):
        self.names.append(name)
        return open(os.path.join(self.tmp, name), "w", encoding="utf-8", newline="")

    def commit(self) -> list[str]:
        for name in self.names:
            os.replace(os.path.join(self.tmp, name), os.path.join(self.out_dir, name))
        shutil.rmtree(self.tmp, ignore_errors=True)
        return [os.path.join(self.out_dir, n) for n in self.names]

    def abort(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def _staged(out_dir: str, body: Callable[[Staging], None]) -> list[str]:
    st = Staging(out_dir)
    try:
        body(st)
    except BaseException:
        st.abort()
        raise
    return st.commit()


# -- commands -----------------------------------------------------------------------

def _load_pool(p: PoolInput, strict: bool):
    try:
        return load_pool_events(p.path, p.cfg, schema=p.schema or None, fmt=p.fmt, strict=strict)
    except MalformedRow as exc:
        raise InputError(f"pool {p.cfg.pool_id}: {p.path}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"pool {p.cfg.pool_id}: {exc}") from exc


def cmd_validate(rc: RunConfig) -> dict[str, IngestReport]:
    rc.validate_paths()
    reports = {p.cfg.pool_id: _load_pool(p, rc.strict)[1] for p in rc.pools}

    def write(st: Staging) -> None:
        for pid, rep in reports.items():
            with st.open(f"ingest_{pid}.json") as fh:
                write_json(rep.__dict__, fh)

    _staged(rc.output_dir, write)
    return reports


def cmd_reconstruct(rc: RunConfig, threads: int = 1) -> dict:
    rc.validate_paths()
    results = []
    for p in rc.pools:
        events, rep = _load_pool(p, rc.strict)
        try:
            results.append(reconstruct_pool(events, p.cfg, threads=threads, ingest=rep, prepared=True))
        except DomainError as exc:
            raise InputError(f"pool {p.cfg.pool_id}: {exc}") from exc
        except AssertionError as exc:
            raise AssertionError(f"pool {p.cfg.pool_id}: {exc}") from exc
    header = rc.header()
    diagnostics = {"engine_version": __version__, "config_hash": rc.config_hash(),
                   "pools": [r.diagnostics() for r in results]}

    def write(st: Staging) -> None:
        with st.open("positions.csv") as fh:
            write_positions_csv([row for r in results for row in r.rows], fh, header)
        with st.open("lps.csv") as fh:
            write_lps_csv([lp for r in results for lp in r.lps], fh, header)
        with st.open("diagnostics.json") as fh:
            write_json(diagnostics, fh)
        for r in results:
            with st.open(f"ingest_{r.cfg.pool_id}.json") as fh:
                write_json(r.ingest.__dict__, fh)

    _staged(rc.output_dir, write)
    return diagnostics


def cmd_report(rc: RunConfig) -> list[str]:
    pos_path = os.path.join(rc.output_dir, "positions.csv")
    lps_path = os.path.join(rc.output_dir, "lps.csv")
    for path in (pos_path, lps_path):
        if not os.path.isfile(path):
            raise InputError(f"missing reconstruct output {path}; run `clmm-ledger reconstruct` first")
    try:
        with open(pos_path, encoding="utf-8", newline="") as fh:
            rows = read_positions_csv(fh)
        with open(lps_path, encoding="utf-8", newline="") as fh:
            lps = read_lps_csv(fh)
    except (KeyError, ValueError) as exc:
        raise InputError(f"cannot read reconstruct outputs in {rc.output_dir}: {exc!r}") from exc
    pools = rc.pool_ids or sorted({r.pool_id for r in lps})
    header = rc.header()
    csv_out, md_out = "csv" in rc.report_formats, "md" in rc.report_formats

    summary = lp_summary(lps, pools)
    multi = multi_lp_summary(lps, pools)
    dist = type_distribution(rows)
    details = {t: type_detail(t, lps, rows, consistent_only=rc.consistent_only) for t in POSITION_TYPES}

    def write(st: Staging) -> None:
        def md(name: str, text: str) -> None:
            if md_out:
                with st.open(name) as fh:
                    fh.write(f"<!-- clmm-ledger {__version__} config_hash={rc.config_hash()} -->\n\n{text}")

        if csv_out:
            with st.open("lp_summary.csv") as fh:
                write_table_csv(summary, fh, header)
            with st.open("multi_lp.csv") as fh:
                write_table_csv(multi.rows(), fh, header, columns=("metric", "group", "count", "share"))
            with st.open("crosspool_matrix.csv") as fh:
                write_matrix_csv(multi, fh, header)
            with st.open("type_distribution.csv") as fh:
                write_table_csv(dist, fh, header)
            for t, table in details.items():
                with st.open(f"type_detail_{t}.csv") as fh:
                    write_table_csv(table, fh, header)
        md("lp_summary.md", lp_summary_markdown(summary))
        md("multi_lp.md", multi_lp_markdown(multi))
        md("type_distribution.md", type_distribution_markdown(dist))
        for t, table in details.items():
            md(f"type_detail_{t}.md", type_detail_markdown(t, table))
        if rc.large_scale:
            protocols = {p.cfg.pool_id: p.cfg.protocol for p in rc.pools}
            cmp = reference_comparison(summary, protocols, dist, details[5])
            with st.open("reference_comparison.json") as fh:
                write_json({"config_hash": rc.config_hash(), "checks": cmp}, fh)

    return _staged(rc.output_dir, write)


def cmd_synth(rc: RunConfig) -> list[str]:
    """Generate synthetic pools plus a ready-to-run config pointing at them."""
    scenarios = rc.synth.get("scenarios")
    if not scenarios:
        raise InputError("config has no synth.scenarios entries")
    generated = []
    for i, sc in enumerate(scenarios):
        try:
            if "spec" in sc:
                spec_path = os.path.join(rc.base_dir, sc["spec"])
                with open(spec_path, encoding="utf-8") as fh:
                    spec = ScenarioSpec.from_json(fh.read())
            else:
                pool = dict(DEFAULT_POOL, **sc.get("pool", {}))
                pool.setdefault("pool_id", f"synthetic-{i}")
                spec = random_spec(int(sc.get("seed", i)), n_lps=int(sc.get("n_lps", 20)),
                                   max_events=int(sc.get("max_events", 500)), pool=pool)
            events, truth = generate(spec)
        except (OSError, KeyError, ValueError, ScenarioError) as exc:
            raise InputError(f"synth.scenarios[{i}]: {exc!r}") from exc
        generated.append((spec, events, truth))
    ids = [s.cfg.pool_id for s, _, _ in generated]
    if len(set(ids)) != len(ids):
        raise InputError(f"synth scenarios produce duplicate pool_ids: {ids}")

    def write(st: Staging) -> None:
        pools = []
        for spec, events, truth in generated:
            pid = spec.cfg.pool_id
            with st.open(f"events_{pid}.csv") as fh:
                write_events_csv(events, fh, spec.cfg)
            with st.open(f"scenario_{pid}.json") as fh:
                fh.write(spec.to_json() + "\n")
            with st.open(f"truth_{pid}.json") as fh:
                write_json({
                    "positions": [p.__dict__ for p in truth.positions],
                    "excluded_burns": truth.excluded_burns,
                    "residual_open": truth.residual_open,
                }, fh)
            pools.append({"path": f"events_{pid}.csv", "format": "csv", "pool": spec.cfg.to_dict()})
        with st.open("run_config.json") as fh:
            write_json({"pools": pools, "output_dir": "results", "strict": True,
                        "consistent_only": rc.consistent_only}, fh)

    return _staged(rc.output_dir, write)


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clmm-ledger", description="CLMM liquidity-provider PnL reconstruction")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=("validate", "reconstruct", "report", "synth"))
    ap.add_argument("--config", required=True, help="run configuration JSON")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for reconstruction")
    ap.add_argument("--strict", action="store_true", default=None, help="fail on the first malformed row")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        rc = load_config(args.config, out=args.out, strict=args.strict)
        if args.command == "validate":
            reports = cmd_validate(rc)
            for pid, rep in reports.items():
                print(f"{pid}: {sum(rep.counts_after.values())} events, "
                      f"{rep.dropped_zero_value} zero-value, {rep.dropped_malformed} malformed, "
                      f"{rep.eligible_lp_count} eligible LPs")
        elif args.command == "reconstruct":
            diag = cmd_reconstruct(rc, threads=args.threads)
            for p in diag["pools"]:
                print(f"{p['pool_id']}: {p['closed_positions']} positions, {p['lp_records']} LPs "
                      f"(backend {kernels.backend()})")
        elif args.command == "report":
            for path in cmd_report(rc):
                print(path)
        else:
            for path in cmd_synth(rc):
                print(path)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
