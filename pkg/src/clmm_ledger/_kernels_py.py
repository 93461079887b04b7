"""Pure-Python kernels. Reference semantics for the compiled ``_kernels`` module."""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"
DBL_EPS = 2.0**-52

# position metric columns, in kernel output order
METRIC_COLUMNS = (
    "delta_start", "delta_end", "delta", "m_a", "m_b", "d_a", "d_b",
    "rel_a", "rel_b", "r_price", "r_cap",
)

# (start region, end region) -> type; regions 0 below a, 1 inside [a, b], 2 above b.
# Same-region cells are split by direction: (up, down, unchanged).
_SAME_REGION = {0: (1, 2, 14), 1: (5, 6, 13), 2: (11, 12, 15)}
_CROSS_REGION = {(0, 1): 3, (1, 0): 4, (1, 2): 7, (2, 1): 8, (0, 2): 9, (2, 0): 10}


def region(p: float, a: float, b: float) -> int:
    if p < a:
        return 0
    if p > b:
        return 2
    return 1


def classify(p_start: float, p_end: float, a: float, b: float) -> int:
    rs = region(p_start, a, b)
    re = region(p_end, a, b)
    if rs != re:
        return _CROSS_REGION[(rs, re)]
    up, down, flat = _SAME_REGION[rs]
    if p_end > p_start:
        return up
    if p_end < p_start:
        return down
    return flat


def _clip01(v: float) -> float:
    return min(max(v, 0.0), 1.0)


def position_metrics(p_start: float, p_end: float, a: float, b: float, w: float, q: float) -> tuple:
    width = b - a
    ds = _clip01((p_start - a) / width)
    de = _clip01((p_end - a) / width)
    m_a = p_start / a - 1.0
    m_b = p_start / b - 1.0
    d_a = p_end / a - 1.0
    d_b = p_end / b - 1.0
    r_cap = q / w - 1.0 if w != 0.0 else math.nan
    return (ds, de, de - ds, m_a, m_b, d_a, d_b, d_a - m_a, d_b - m_b, p_end / p_start - 1.0, r_cap)


def classify_many(p_start, p_end, a, b) -> np.ndarray:
    n = len(p_start)
    out = np.empty(n, dtype=np.int8)
    for i in range(n):
        out[i] = classify(float(p_start[i]), float(p_end[i]), float(a[i]), float(b[i]))
    return out


def position_metrics_many(p_start, p_end, a, b, w, q) -> np.ndarray:
    n = len(p_start)
    out = np.empty((n, len(METRIC_COLUMNS)), dtype=np.float64)
    for i in range(n):
        out[i] = position_metrics(
            float(p_start[i]), float(p_end[i]), float(a[i]), float(b[i]), float(w[i]), float(q[i])
        )
    return out


def win_score(times, pnls, t_start: float, t_end: float) -> tuple[float, float, float, float]:
    """Return ``(omega, S, A_plus, A_minus)`` for one LP.

    ``times`` must be non-decreasing and inside ``[t_start, t_end]``. Jumps
    sharing a close time are applied together. A running total within its own
    summation error bound counts as zero, so exact cancellation in real
    arithmetic is not turned into a spurious sign by rounding. If both areas
    vanish while ``S > 0`` (all mass at the right edge of the window) the right
    limit of the path decides: 1 for a positive terminal value, 0 for negative.
    """
    n = len(times)
    cum = 0.0
    abs_sum = 0.0
    level = 0.0
    hi = 0.0
    lo = 0.0
    area_pos = 0.0
    area_neg = 0.0
    i = 0
    while i < n:
        t = float(times[i])
        while i < n and float(times[i]) == t:
            cum += float(pnls[i])
            abs_sum += abs(float(pnls[i]))
            i += 1
        level = 0.0 if abs(cum) <= i * DBL_EPS * abs_sum else cum
        t_next = float(times[i]) if i < n else float(t_end)
        dt = t_next - t
        if level > 0.0:
            hi = max(hi, level)
            area_pos += level * dt
        elif level < 0.0:
            lo = min(lo, level)
            area_neg -= level * dt
    s = max(hi, -lo)
    if s == 0.0:
        return 0.5, 0.0, 0.0, 0.0
    a_pos = area_pos / s
    a_neg = area_neg / s
    total = a_pos + a_neg
    if total == 0.0:
        if level > 0.0:
            return 1.0, s, a_pos, a_neg
        if level < 0.0:
            return 0.0, s, a_pos, a_neg
        return 0.5, s, a_pos, a_neg
    return a_pos / total, s, a_pos, a_neg


def win_score_grouped(offsets, times, pnls, t_start, t_end) -> np.ndarray:
    """``win_score`` over LPs packed CSR-style: LP ``k`` owns ``[offsets[k], offsets[k+1])``."""
    m = len(offsets) - 1
    out = np.empty(m, dtype=np.float64)
    for k in range(m):
        lo, hi = int(offsets[k]), int(offsets[k + 1])
        out[k] = win_score(times[lo:hi], pnls[lo:hi], float(t_start[k]), float(t_end[k]))[0]
    return out
