"""Compare the compiled and pure-Python kernel backends on the hot paths.

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 3]

Reports the best wall time per kernel and backend, the speedup, and whether the
two backends returned bit-identical arrays.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from clmm_ledger import kernels


def inputs(n: int, seed: int = 7) -> dict:
    rng = np.random.default_rng(seed)
    a = rng.uniform(500, 4000, n)
    b = a + rng.uniform(1, 2000, n)
    w = rng.uniform(1, 1e6, n)
    # win-score groups of 1..64 closes, times sorted within each group
    sizes = rng.integers(1, 65, max(1, n // 32))
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    m = int(offsets[-1])
    times = np.empty(m)
    for i in range(len(sizes)):
        lo, hi = offsets[i], offsets[i + 1]
        times[lo:hi] = np.sort(rng.uniform(0, 1e6, hi - lo))
    return {
        "p_start": rng.uniform(200, 7000, n), "p_end": rng.uniform(200, 7000, n), "a": a, "b": b,
        "w": w, "q": w * rng.uniform(0.8, 1.2, n),
        "offsets": offsets, "times": times, "pnls": rng.normal(0, 100, m),
        "t_start": np.zeros(len(sizes)), "t_end": np.full(len(sizes), 1e6),
    }


CASES = {
    "classify_many": lambda k, d: k.classify_many(d["p_start"], d["p_end"], d["a"], d["b"]),
    "position_metrics_many": lambda k, d: k.position_metrics_many(d["p_start"], d["p_end"], d["a"], d["b"], d["w"], d["q"]),
    "win_score_grouped": lambda k, d: k.win_score_grouped(d["offsets"], d["times"], d["pnls"], d["t_start"], d["t_end"]),
}


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available_backends()
    data = inputs(args.n)
    print(f"n={args.n}  backends={backends}")
    print(f"{'kernel':<24}{'python s':>10}{'cython s':>10}{'speedup':>9}  identical")
    for name, fn in CASES.items():
        res = {b: best_time(lambda: fn(kernels.get(b), data), args.repeat) for b in backends}
        py_t, py_out = res["python"]
        if "cython" in res:
            cy_t, cy_out = res["cython"]
            same = np.array_equal(np.asarray(py_out), np.asarray(cy_out), equal_nan=True)
            print(f"{name:<24}{py_t:>10.4f}{cy_t:>10.4f}{py_t / cy_t:>8.1f}x  {same}")
        else:
            print(f"{name:<24}{py_t:>10.4f}{'n/a':>10}{'':>9}  n/a")


if __name__ == "__main__":
    main()
