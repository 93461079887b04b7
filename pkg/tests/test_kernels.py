import numpy as np
import pytest

from clmm_ledger import kernels

pytestmark = pytest.mark.skipif("cython" not in kernels.available_backends(),
                                reason="compiled kernels not built")


@pytest.fixture
def both():
    return kernels.get("python"), kernels.get("cython")


def random_quads(n, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.uniform(1, 100, n)
    b = a + rng.uniform(1e-3, 50, n)
    ps = rng.uniform(0.5, 160, n)
    pe = rng.uniform(0.5, 160, n)
    # exact boundary and equality hits
    ps[::7] = a[::7]
    pe[::11] = b[::11]
    pe[::13] = ps[::13]
    w = rng.uniform(0, 1e6, n)
    w[::17] = 0.0
    q = rng.uniform(0, 1e6, n)
    return ps, pe, a, b, w, q


def test_classify_bit_identical(both):
    py, cy = both
    ps, pe, a, b, _, _ = random_quads(20_000)
    assert np.array_equal(py.classify_many(ps, pe, a, b), cy.classify_many(ps, pe, a, b))
    assert py.classify(1.0, 2.0, 1.0, 3.0) == cy.classify(1.0, 2.0, 1.0, 3.0)


def test_metrics_bit_identical(both):
    py, cy = both
    args = random_quads(20_000, seed=1)
    want, got = py.position_metrics_many(*args), cy.position_metrics_many(*args)
    assert np.array_equal(want, got, equal_nan=True)
    assert np.array_equal(np.array(py.position_metrics(*(x[3] for x in args))),
                          np.array(cy.position_metrics(*(x[3] for x in args))), equal_nan=True)


def test_win_score_bit_identical(both):
    py, cy = both
    rng = np.random.default_rng(2)
    for _ in range(500):
        n = int(rng.integers(0, 30))
        times = np.sort(rng.integers(0, 40, n)).astype(float)
        pnls = rng.normal(0, 100, n) * (rng.random(n) < 0.9)
        t_end = float(times[-1] + rng.integers(0, 5)) if n else 10.0
        assert py.win_score(times, pnls, 0.0, t_end) == cy.win_score(times, pnls, 0.0, t_end)


def test_grouped_matches_single(both):
    py, cy = both
    rng = np.random.default_rng(3)
    sizes = rng.integers(0, 10, 200)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    times = np.concatenate([np.sort(rng.integers(0, 20, s)).astype(float) for s in sizes])
    pnls = rng.normal(size=len(times))
    t_end = np.full(200, 25.0)
    for mod in both:
        got = mod.win_score_grouped(offsets, times, pnls, np.zeros(200), t_end)
        for k in range(200):
            lo, hi = offsets[k], offsets[k + 1]
            assert got[k] == py.win_score(times[lo:hi], pnls[lo:hi], 0.0, 25.0)[0]


def test_backend_switching():
    original = kernels.backend()
    try:
        kernels.use_backend("python")
        assert kernels.backend() == "python"
        kernels.use_backend("cython")
        assert kernels.backend() == "cython"
        with pytest.raises(ValueError):
            kernels.use_backend("fortran")
    finally:
        kernels.use_backend(original)
