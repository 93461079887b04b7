# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; must agree bit-for-bit with ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport NAN, fabs

cdef double DBL_EPS = 2.0 ** -52

cnp.import_array()

BACKEND = "cython"

METRIC_COLUMNS = (
    "delta_start", "delta_end", "delta", "m_a", "m_b", "d_a", "d_b",
    "rel_a", "rel_b", "r_price", "r_cap",
)


cdef inline int _region(double p, double a, double b) noexcept nogil:
    if p < a:
        return 0
    if p > b:
        return 2
    return 1


cdef inline signed char _classify(double ps, double pe, double a, double b) noexcept nogil:
    cdef int rs = _region(ps, a, b)
    cdef int re = _region(pe, a, b)
    if rs != re:
        if rs == 0:
            return 3 if re == 1 else 9
        if rs == 1:
            return 4 if re == 0 else 7
        return 8 if re == 1 else 10
    if rs == 0:
        return 1 if pe > ps else (2 if pe < ps else 14)
    if rs == 1:
        return 5 if pe > ps else (6 if pe < ps else 13)
    return 11 if pe > ps else (12 if pe < ps else 15)


cdef inline double _clip01(double v) noexcept nogil:
    if v < 0.0:
        v = 0.0
    if v > 1.0:
        v = 1.0
    return v


def region(double p, double a, double b):
    return _region(p, a, b)


def classify(double p_start, double p_end, double a, double b):
    return int(_classify(p_start, p_end, a, b))


cdef void _metrics(double ps, double pe, double a, double b, double w, double q, double* out) noexcept nogil:
    cdef double width = b - a
    cdef double ds = _clip01((ps - a) / width)
    cdef double de = _clip01((pe - a) / width)
    cdef double m_a = ps / a - 1.0
    cdef double m_b = ps / b - 1.0
    cdef double d_a = pe / a - 1.0
    cdef double d_b = pe / b - 1.0
    out[0] = ds
    out[1] = de
    out[2] = de - ds
    out[3] = m_a
    out[4] = m_b
    out[5] = d_a
    out[6] = d_b
    out[7] = d_a - m_a
    out[8] = d_b - m_b
    out[9] = pe / ps - 1.0
    out[10] = q / w - 1.0 if w != 0.0 else NAN


def position_metrics(double p_start, double p_end, double a, double b, double w, double q):
    cdef double buf[11]
    _metrics(p_start, p_end, a, b, w, q, buf)
    return tuple(buf[i] for i in range(11))


def classify_many(p_start, p_end, a, b):
    cdef const double[:] ps = np.ascontiguousarray(p_start, dtype=np.float64)
    cdef const double[:] pe = np.ascontiguousarray(p_end, dtype=np.float64)
    cdef const double[:] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = ps.shape[0], i
    out = np.empty(n, dtype=np.int8)
    cdef signed char[:] o = out
    with nogil:
        for i in range(n):
            o[i] = _classify(ps[i], pe[i], av[i], bv[i])
    return out


def position_metrics_many(p_start, p_end, a, b, w, q):
    cdef const double[:] ps = np.ascontiguousarray(p_start, dtype=np.float64)
    cdef const double[:] pe = np.ascontiguousarray(p_end, dtype=np.float64)
    cdef const double[:] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[:] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[:] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = ps.shape[0], i
    out = np.empty((n, 11), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            _metrics(ps[i], pe[i], av[i], bv[i], wv[i], qv[i], &o[i, 0])
    return out


cdef double _win_score(const double[:] times, const double[:] pnls, Py_ssize_t lo, Py_ssize_t hi,
                       double t_end, double* s_out, double* ap_out, double* an_out) noexcept nogil:
    cdef double cum = 0.0, top = 0.0, bottom = 0.0, area_pos = 0.0, area_neg = 0.0
    cdef double abs_sum = 0.0, level = 0.0
    cdef double t, t_next, s, a_pos, a_neg, total
    cdef Py_ssize_t i = lo
    while i < hi:
        t = times[i]
        while i < hi and times[i] == t:
            cum += pnls[i]
            abs_sum += fabs(pnls[i])
            i += 1
        level = cum
        if fabs(cum) <= (i - lo) * DBL_EPS * abs_sum:
            level = 0.0
        t_next = times[i] if i < hi else t_end
        if level > 0.0:
            if level > top:
                top = level
            area_pos += level * (t_next - t)
        elif level < 0.0:
            if level < bottom:
                bottom = level
            area_neg -= level * (t_next - t)
    s = top if top >= -bottom else -bottom
    s_out[0] = s
    if s == 0.0:
        ap_out[0] = 0.0
        an_out[0] = 0.0
        return 0.5
    a_pos = area_pos / s
    a_neg = area_neg / s
    ap_out[0] = a_pos
    an_out[0] = a_neg
    total = a_pos + a_neg
    if total == 0.0:
        if level > 0.0:
            return 1.0
        if level < 0.0:
            return 0.0
        return 0.5
    return a_pos / total


def win_score(times, pnls, double t_start, double t_end):
    cdef const double[:] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef const double[:] pv = np.ascontiguousarray(pnls, dtype=np.float64)
    cdef double s, ap, an, omega
    omega = _win_score(tv, pv, 0, tv.shape[0], t_end, &s, &ap, &an)
    return omega, s, ap, an


def win_score_grouped(offsets, times, pnls, t_start, t_end):
    cdef const long long[:] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const double[:] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef const double[:] pv = np.ascontiguousarray(pnls, dtype=np.float64)
    cdef const double[:] te = np.ascontiguousarray(t_end, dtype=np.float64)
    cdef Py_ssize_t m = off.shape[0] - 1, k
    cdef double s, ap, an
    out = np.empty(m, dtype=np.float64)
    cdef double[:] o = out
    with nogil:
        for k in range(m):
            o[k] = _win_score(tv, pv, off[k], off[k + 1], te[k], &s, &ap, &an)
    return out
