"""Synthetic scenarios with exact ground truth, and a brute-force PnL oracle.

Neither the generator's ground truth nor :func:`brute_force_pnl` shares any
accounting code with :mod:`clmm_ledger.ledger` or :mod:`clmm_ledger.matching`.
The ground truth tracks lots with exact rationals; the oracle assigns burn
liquidity to mints by overlapping cumulative-liquidity intervals.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .core import EventKind, LiquidityRange, NormalizedEvent, OrderKey, PoolConfig, tick_to_price

DEFAULT_POOL = {
    "pool_id": "synthetic", "protocol": "synthetic", "fee_tier": 0.0005,
    "token0_decimals": 18, "token1_decimals": 6, "invert_price": False, "numeraire": "token1",
}


class ScenarioError(ValueError):
    pass


@dataclass
class ScenarioSpec:
    """JSON-serializable scenario: a tick path (one swap per block) and per-LP scripts.

    Each LP script is a list of actions ``{"block", "op", "tick_lower",
    "tick_upper", ...}`` where ``op`` is ``mint`` (``liquidity``), ``burn``
    (``liquidity``, optional ``fee0``/``fee1`` in base units and ``collect``
    = ``same_tx`` | ``deferred``) or ``collect`` (optional extra fees).
    """

    seed: int
    pool: dict
    price_path: list[int]
    lps: list[dict]
    start_block: int = 1_000_000
    start_timestamp: int = 1_725_000_000
    block_time: int = 2

    @property
    def cfg(self) -> PoolConfig:
        return PoolConfig.from_dict(self.pool)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(seed=int(d.get("seed", 0)), pool=dict(d.get("pool", DEFAULT_POOL)),
                   price_path=[int(t) for t in d["price_path"]], lps=list(d["lps"]),
                   start_block=int(d.get("start_block", 1_000_000)),
                   start_timestamp=int(d.get("start_timestamp", 1_725_000_000)),
                   block_time=int(d.get("block_time", 2)))

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "pool": self.pool, "price_path": self.price_path,
                           "lps": self.lps, "start_block": self.start_block,
                           "start_timestamp": self.start_timestamp, "block_time": self.block_time},
                          indent=1, sort_keys=True)


@dataclass(frozen=True)
class TruthPosition:
    owner: str
    tick_lower: int
    tick_upper: int
    open_key: OrderKey
    w: float
    q: float
    pnl: float
    p_start: float
    p_end: float
    a: float
    b: float
    position_type: int
    delta_start: float

    @property
    def key(self) -> tuple:
        return (self.owner, self.tick_lower, self.tick_upper, tuple(self.open_key))


@dataclass
class GroundTruth:
    positions: list[TruthPosition] = field(default_factory=list)
    excluded_burns: list[tuple[str, int, int, OrderKey]] = field(default_factory=list)
    residual_open: int = 0

    def by_key(self) -> dict:
        return {p.key: p for p in self.positions}


# -- liquidity math on raw (base-unit) prices --------------------------------------

def amounts_for_liquidity(liquidity: int, tick: int, tick_lower: int, tick_upper: int,
                          round_up: bool) -> tuple[int, int]:
    """Base-unit token amounts held by ``liquidity`` in ``[tick_lower, tick_upper]`` at ``tick``."""
    sp = math.pow(1.0001, tick / 2)
    sa = math.pow(1.0001, tick_lower / 2)
    sb = math.pow(1.0001, tick_upper / 2)
    sp = min(max(sp, sa), sb)
    x = liquidity * (1.0 / sp - 1.0 / sb)
    y = liquidity * (sp - sa)
    rnd = math.ceil if round_up else math.floor
    return max(int(rnd(x)), 0), max(int(rnd(y)), 0)


# -- generation -----------------------------------------------------------------------

@dataclass
class _Owed:
    key: OrderKey
    liquidity: int
    principal: tuple[int, int]
    fee: tuple[int, int]
    price: float
    ts: int
    paid: Optional[tuple[Fraction, Fraction]] = None


def generate(spec: ScenarioSpec) -> tuple[list[NormalizedEvent], GroundTruth]:
    """Emit the event stream of ``spec`` and the exact per-position outcomes."""
    cfg = spec.cfg
    n_blocks = len(spec.price_path)
    per_block: dict[int, list[tuple[int, int, dict]]] = {}
    for li, lp in enumerate(spec.lps):
        last = -1
        for ai, act in enumerate(lp["actions"]):
            blk = int(act["block"])
            if not 0 <= blk < n_blocks:
                raise ScenarioError(f"lp {li} action {ai}: block {blk} outside price path")
            if blk < last:
                raise ScenarioError(f"lp {li} action {ai}: actions out of block order")
            last = blk
            per_block.setdefault(blk, []).append((li, ai, act))

    events: list[NormalizedEvent] = []
    mints: dict[tuple, list[tuple[OrderKey, int, float, float, int]]] = {}
    burns: dict[tuple, list[_Owed]] = {}
    pending: dict[tuple, list[_Owed]] = {}
    tx_counter = 0

    def new_tx() -> str:
        nonlocal tx_counter
        tx_counter += 1
        return f"0x{spec.seed:08x}{tx_counter:056x}"

    def settle(pkey: tuple, key: OrderKey, tx: str, extra: tuple[int, int], ts: int) -> None:
        pend = pending.pop(pkey, [])
        amt0 = sum(o.principal[0] + o.fee[0] for o in pend) + extra[0]
        amt1 = sum(o.principal[1] + o.fee[1] for o in pend) + extra[1]
        events.append(NormalizedEvent(EventKind.COLLECT, key, ts, tx, *pkey, None, amt0, amt1))
        if not pend or (amt0 == 0 and amt1 == 0):
            # a zero-value Collect is discarded at ingest; its Burns stay unmatched
            return
        # declared payout rule: principal back in full, excess pro rata to principal
        shares = []
        for t, amt in ((0, amt0), (1, amt1)):
            princ = [Fraction(o.principal[t]) for o in pend]
            total = sum(princ)
            excess = Fraction(amt) - total
            if total:
                shares.append([p + excess * p / total for p in princ])
            else:
                shares.append([p + excess / len(pend) for p in princ])
        for i, o in enumerate(pend):
            o.paid = (shares[0][i], shares[1][i])

    for blk in range(n_blocks):
        number = spec.start_block + blk
        ts = spec.start_timestamp + blk * spec.block_time
        tick = spec.price_path[blk]
        events.append(NormalizedEvent(EventKind.SWAP, OrderKey(number, 0), ts, new_tx(), tick_after=tick))
        log_index = 1
        price = tick_to_price(tick, cfg)
        for li, ai, act in per_block.get(blk, []):
            owner = spec.lps[li]["owner"].lower()
            op = act["op"]
            tl, tu = int(act["tick_lower"]), int(act["tick_upper"])
            if tl >= tu:
                raise ScenarioError(f"lp {li} action {ai}: empty range")
            pkey = (owner, tl, tu)
            key = OrderKey(number, log_index)
            log_index += 1
            if op in ("mint", "burn"):
                L = int(act["liquidity"])
                if L <= 0:
                    raise ScenarioError(f"lp {li} action {ai}: {op} liquidity must be positive")
                # same rounding both ways so an unchanged-price round trip is exactly neutral
                a0, a1 = amounts_for_liquidity(L, tick, tl, tu, round_up=False)
                tx = new_tx()
            if op == "mint":
                events.append(NormalizedEvent(EventKind.MINT, key, ts, tx, owner, tl, tu, L, a0, a1))
                x, y = _human(cfg, a0, a1)
                mints.setdefault(pkey, []).append((key, L, y + x * price, price, ts))
            elif op == "burn":
                events.append(NormalizedEvent(EventKind.BURN, key, ts, tx, owner, tl, tu, L, a0, a1))
                o = _Owed(key, L, (a0, a1), (int(act.get("fee0", 0)), int(act.get("fee1", 0))), price, ts)
                burns.setdefault(pkey, []).append(o)
                pending.setdefault(pkey, []).append(o)
                if act.get("collect", "same_tx") == "same_tx":
                    settle(pkey, OrderKey(number, log_index), tx, (0, 0), ts)
                    log_index += 1
            elif op == "collect":
                settle(pkey, key, new_tx(), (int(act.get("fee0", 0)), int(act.get("fee1", 0))), ts)
            else:
                raise ScenarioError(f"lp {li} action {ai}: unknown op {op!r}")

    return events, _ground_truth(cfg, mints, burns)


def _ground_truth(cfg: PoolConfig, mints: dict, burns: dict) -> GroundTruth:
    """Exact-rational FIFO lot accounting over the emitted script."""
    from .metrics import classify

    truth = GroundTruth()
    for pkey in sorted(set(mints) | set(burns)):
        owner, tl, tu = pkey
        rng = LiquidityRange.from_ticks(tl, tu, cfg)
        timeline = [(k, 0, m) for m in mints.get(pkey, []) for k in [m[0]]]
        timeline += [(o.key, 1, o) for o in burns.get(pkey, []) if o.paid is not None]
        timeline.sort(key=lambda t: t[0])
        lots: list[list] = []  # [key, L, remaining, w, price, closes]
        for key, kind, item in timeline:
            if kind == 0:
                k, L, w, p, _ = item
                lots.append([k, L, Fraction(L), w, p, []])
                continue
            o: _Owed = item
            if o.liquidity > sum(l[2] for l in lots):
                truth.excluded_burns.append((owner, tl, tu, o.key))
                continue
            x, y = _human(cfg, *o.paid)
            capital = y + x * o.price
            left = Fraction(o.liquidity)
            while left:
                lot = lots[0]
                used = min(left, lot[2])
                lot[5].append((capital * float(used / o.liquidity), o.price))
                lot[2] -= used
                left -= used
                if lot[2] == 0:
                    truth.positions.append(_truth_position(pkey, rng, lots.pop(0), classify))
        truth.residual_open += len(lots)
    truth.positions.sort(key=lambda p: p.key)
    return truth


def _truth_position(pkey, rng: LiquidityRange, lot: list, classify) -> TruthPosition:
    owner, tl, tu = pkey
    key, _, _, w, p0, closes = lot
    q = 0.0
    for c, _ in closes:
        q += c
    if len({p for _, p in closes}) == 1:
        p_end = closes[0][1]
    elif q > 0:
        p_end = sum(c * p for c, p in closes) / q
    else:
        p_end = closes[-1][1]
    a, b = rng.price_lower, rng.price_upper
    return TruthPosition(
        owner=owner, tick_lower=tl, tick_upper=tu, open_key=key, w=w, q=q, pnl=q - w,
        p_start=p0, p_end=p_end, a=a, b=b, position_type=classify(p0, p_end, a, b),
        delta_start=min(max((p0 - a) / (b - a), 0.0), 1.0),
    )


def _human(cfg: PoolConfig, a0, a1) -> tuple[float, float]:
    h0 = float(Fraction(a0) / 10**cfg.token0_decimals)
    h1 = float(Fraction(a1) / 10**cfg.token1_decimals)
    return (h0, h1) if cfg.numeraire.value == "token1" else (h1, h0)


# -- random scenarios -------------------------------------------------------------------

def random_spec(seed: int, n_lps: int = 20, max_events: int = 500, pool: Optional[dict] = None) -> ScenarioSpec:
    """A reproducible random scenario exercising splits, deferred collects and pre-sample burns."""
    rng = random.Random(seed)
    pool = dict(pool or DEFAULT_POOL)
    spacing = 10
    n_blocks = rng.randint(20, 120)
    tick = -200_000 + rng.randrange(-2000, 2000, spacing)
    path = []
    for _ in range(n_blocks):
        if rng.random() < 0.7:
            tick += rng.choice((-1, 1)) * rng.randrange(0, 60, 1)
        path.append(tick)

    budget = max_events - n_blocks
    lps = []
    for i in range(n_lps):
        owner = f"0x{rng.getrandbits(160):040x}"
        actions: list[dict] = []
        ranges = []
        for _ in range(rng.randint(1, 3)):
            center = path[rng.randrange(n_blocks)]
            half = rng.choice((1, 2, 5, 10, 30, 100, 400)) * spacing
            lo = (center - half * rng.uniform(0.2, 1.8)) // spacing * spacing
            hi = max(lo + spacing, (center + half * rng.uniform(0.2, 1.8)) // spacing * spacing)
            ranges.append((int(lo), int(hi)))
        style = rng.random()
        block = rng.randrange(0, max(1, n_blocks // 3))
        held = {r: 0 for r in ranges}
        n_actions = rng.randint(2, 10)
        for _ in range(n_actions):
            if budget <= 3 or block >= n_blocks:
                break
            r = rng.choice(ranges)
            act: dict = {"block": block, "tick_lower": r[0], "tick_upper": r[1]}
            if style < 0.08 and not actions:
                # liquidity minted before the sample: removal must be excluded
                act.update(op="burn", liquidity=rng.randint(10**14, 10**16), collect="same_tx",
                           fee0=rng.randint(0, 10**14), fee1=rng.randint(0, 10**6))
                budget -= 2
            elif held[r] == 0 or (style > 0.9) or rng.random() < 0.45:
                L = rng.randint(10**14, 10**17)
                act.update(op="mint", liquidity=L)
                held[r] += L
                budget -= 1
            else:
                choice = rng.random()
                if choice < 0.4:
                    L = held[r]
                elif choice < 0.55:
                    L = held[r] + rng.randint(1, 10**15)  # oversized: excluded
                else:
                    L = rng.randint(1, held[r])
                deferred = rng.random() < 0.25
                act.update(op="burn", liquidity=L, collect="deferred" if deferred else "same_tx",
                           fee0=rng.randint(0, 10**15) if rng.random() < 0.7 else 0,
                           fee1=rng.randint(0, 5 * 10**6) if rng.random() < 0.7 else 0)
                if L <= held[r]:
                    held[r] -= L
                budget -= 1 if deferred else 2
            actions.append(act)
            if rng.random() < 0.6:
                block += rng.randint(0, 8)
        for r in ranges:
            # flush deferred claims so most burns complete
            if any(a["op"] == "burn" and a.get("collect") == "deferred" and (a["tick_lower"], a["tick_upper"]) == r
                   for a in actions) and budget > 0 and rng.random() < 0.85:
                actions.append({"block": min(block + rng.randint(0, 4), n_blocks - 1), "op": "collect",
                                "tick_lower": r[0], "tick_upper": r[1],
                                "fee0": rng.randint(0, 10**14), "fee1": rng.randint(0, 10**6)})
                budget -= 1
        actions.sort(key=lambda a: a["block"])
        lps.append({"owner": owner, "actions": actions})
    return ScenarioSpec(seed=seed, pool=pool, price_path=path, lps=lps)


# -- brute-force oracle -------------------------------------------------------------------

@dataclass(frozen=True)
class OraclePosition:
    w: float
    q: float
    pnl: float
    p_end: float


def brute_force_pnl(events: Iterable[NormalizedEvent], cfg: PoolConfig) -> dict[tuple, OraclePosition]:
    """Naive replay of the declared reconstruction rules.

    Keys are ``(owner, tick_lower, tick_upper, open_key)``. Prices come from a
    linear scan of swaps; each accepted removal is assigned to mints by
    intersecting its slot in cumulative burned liquidity with each mint's
    slot in cumulative minted liquidity.
    """
    evs = []
    for e in events:
        if e.kind is EventKind.COLLECT and e.amount0 == 0 and e.amount1 == 0:
            continue
        if e.kind in (EventKind.MINT, EventKind.BURN) and e.liquidity == 0 and e.amount0 == 0 and e.amount1 == 0:
            continue
        evs.append(e)
    evs.sort(key=lambda e: tuple(e.order_key))
    swaps = [e for e in evs if e.kind is EventKind.SWAP]

    def price(key) -> Optional[float]:
        found = None
        for s in swaps:
            if tuple(s.order_key) <= tuple(key):
                found = s
            else:
                break
        if found is None:
            if not swaps:
                return None
            found = swaps[0]
        return tick_to_price(found.tick_after, cfg)

    minters = {e.owner for e in evs if e.kind is EventKind.MINT}
    burners = {e.owner for e in evs if e.kind is EventKind.BURN}
    eligible = minters & burners

    out: dict[tuple, OraclePosition] = {}
    keys = sorted({(e.owner, e.tick_lower, e.tick_upper) for e in evs
                   if e.kind is not EventKind.SWAP and e.owner in eligible})
    for pk in keys:
        mine = [e for e in evs if e.kind is not EventKind.SWAP and (e.owner, e.tick_lower, e.tick_upper) == pk]
        # burn+ capital per burn, by exact rational replay of the payout rule
        burns = [e for e in mine if e.kind is EventKind.BURN and e.liquidity]
        finalized: dict[tuple, tuple[Fraction, Fraction]] = {}
        for c in (e for e in mine if e.kind is EventKind.COLLECT):
            pend = [b for b in burns if tuple(b.order_key) < tuple(c.order_key) and tuple(b.order_key) not in finalized]
            if not pend:
                continue
            pend = [b for b in pend if b.tx_hash == c.tx_hash] + [b for b in pend if b.tx_hash != c.tx_hash]
            paid = {tuple(b.order_key): [Fraction(0), Fraction(0)] for b in pend}
            for t in (0, 1):
                avail = Fraction(c.amount0 if t == 0 else c.amount1)
                for b in pend:
                    pr = b.amount0 if t == 0 else b.amount1
                    got = min(avail, pr)
                    paid[tuple(b.order_key)][t] += got
                    avail -= got
                wts = [Fraction(b.amount0 if t == 0 else b.amount1) for b in pend]
                if sum(wts) == 0:
                    wts = [Fraction(1)] * len(pend)
                for b, wt in zip(pend, wts):
                    paid[tuple(b.order_key)][t] += avail * wt / sum(wts)
            for k, v in paid.items():
                finalized[k] = (v[0], v[1])

        mints = []
        for m in (e for e in mine if e.kind is EventKind.MINT and e.liquidity):
            p = price(m.order_key)
            if p is None:
                continue
            x, y = _human(cfg, m.amount0, m.amount1)
            mints.append((tuple(m.order_key), m.liquidity, y + x * p, p))
        removals = []
        for b in burns:
            k = tuple(b.order_key)
            p = price(k)
            if k not in finalized or p is None:
                continue
            x, y = _human(cfg, *finalized[k])
            removals.append((k, b.liquidity, y + x * p, p))

        accepted = []
        burned = 0
        for k, ell, cap, p in removals:
            minted_before = sum(L for mk, L, _, _ in mints if mk < k)
            if burned + ell <= minted_before:
                accepted.append((burned, burned + ell, ell, cap, p))
                burned += ell
        lo = 0
        for mk, L, w, p0 in mints:
            hi = lo + L
            pieces = []
            for s0, s1, ell, cap, p in accepted:
                overlap = min(hi, s1) - max(lo, s0)
                if overlap > 0:
                    pieces.append((cap * (overlap / ell), p))
            if hi <= burned:
                q = 0.0
                for c, _ in pieces:
                    q += c
                if len({p for _, p in pieces}) == 1:
                    p_end = pieces[0][1]
                elif q > 0:
                    p_end = sum(c * p for c, p in pieces) / q
                else:
                    p_end = pieces[-1][1]
                out[(*pk, mk)] = OraclePosition(w, q, q - w, p_end)
            lo = hi
    return out


def rel_close(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-12) or abs(a - b) <= 1e-9 * 1e-3


def compare_positions(got: dict, want: dict, tol: float = 1e-9) -> list[str]:
    """Human-readable mismatches between two ``key -> (w, q, pnl, p_end)`` maps."""
    problems = []
    for k in sorted(set(got) | set(want), key=repr):
        if k not in got or k not in want:
            problems.append(f"{k}: present only in {'got' if k in got else 'want'}")
            continue
        for name in ("w", "q", "pnl", "p_end"):
            g, w = getattr(got[k], name), getattr(want[k], name)
            scale = max(abs(getattr(want[k], "w")), abs(getattr(want[k], "q"))) if name == "pnl" else None
            ok = abs(g - w) <= tol * scale if scale else rel_close(g, w, tol)
            if not ok:
                problems.append(f"{k}.{name}: {g!r} != {w!r}")
    return problems
