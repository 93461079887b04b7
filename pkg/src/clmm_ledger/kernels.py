"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it was built; otherwise the
pure-Python ``_kernels_py`` module stands in with identical results.
"""

from __future__ import annotations

from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _kernels_py


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def backend() -> str:
    return _active.BACKEND


def use_backend(name: str) -> None:
    """Switch backends at runtime (``"cython"`` or ``"python"``)."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def get(name: str) -> ModuleType:
    if name == "python":
        return _kernels_py
    if name == "cython" and _compiled is not None:
        return _compiled
    raise RuntimeError(f"backend {name!r} unavailable")


def classify(p_start, p_end, a, b):
    return _active.classify(p_start, p_end, a, b)


def classify_many(p_start, p_end, a, b):
    return _active.classify_many(p_start, p_end, a, b)


def position_metrics(p_start, p_end, a, b, w, q):
    return _active.position_metrics(p_start, p_end, a, b, w, q)


def position_metrics_many(p_start, p_end, a, b, w, q):
    return _active.position_metrics_many(p_start, p_end, a, b, w, q)


def win_score(times, pnls, t_start, t_end):
    return _active.win_score(times, pnls, t_start, t_end)


def win_score_grouped(offsets, times, pnls, t_start, t_end):
    return _active.win_score_grouped(offsets, times, pnls, t_start, t_end)


METRIC_COLUMNS = _kernels_py.METRIC_COLUMNS
