# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled root-finding kernel.

Hot inner loop of the whole solver: every line-search probe of the
descent re-solves one characteristic root per term.  Mirrors
``recbound._kernel_py`` exactly; keep the two in sync.
"""

from libc.math cimport exp, log, fabs, INFINITY

ROOT_FINITE = 0
ROOT_UNIT = 1
ROOT_INFINITE = 2
ROOT_OVERFLOW = 3

cdef int _FINITE = 0
cdef int _UNIT = 1
cdef int _INFINITE = 2
cdef int _OVERFLOW = 3

cdef int _MAX_BISECTIONS = 512


cdef double _residual(const double* a, Py_ssize_t n, double c) noexcept nogil:
    cdef double lnc = log(c)
    cdef double s = 0.0
    cdef Py_ssize_t j
    for j in range(n):
        s += exp(-a[j] * lnc)
    return 1.0 - s


cdef int _term_root(const double* a, Py_ssize_t n, double rel_tol,
                    double bracket_cap, double* out) noexcept nogil:
    cdef double lo, hi, mid, nxt, r, amin
    cdef Py_ssize_t j
    cdef int i

    if n == 1:
        if a[0] > 0.0:
            out[0] = 1.0
            return _UNIT
        out[0] = INFINITY
        return _INFINITE
    amin = a[0]
    for j in range(n):
        if a[j] < amin:
            amin = a[j]
    if amin <= 0.0:
        out[0] = INFINITY
        return _INFINITE

    lo = 1.0
    hi = 2.0
    while _residual(a, n, hi) < 0.0:
        lo = hi
        hi *= 2.0
        if hi > bracket_cap:
            out[0] = INFINITY
            return _OVERFLOW

    mid = 0.5 * (lo + hi)
    for i in range(_MAX_BISECTIONS):
        r = _residual(a, n, mid)
        if r < 0.0:
            lo = mid
        else:
            hi = mid
        nxt = 0.5 * (lo + hi)
        if nxt == mid:
            break
        mid = nxt
        if hi - lo <= rel_tol * mid and fabs(r) <= rel_tol:
            break
    out[0] = mid
    return _FINITE


def residual(double[::1] exponents, double c):
    """1 - sum_j c**(-a_j) for c > 0."""
    if exponents.shape[0] == 0:
        return 1.0
    return _residual(&exponents[0], exponents.shape[0], c)


def term_root(double[::1] exponents, double rel_tol, double bracket_cap):
    """Root of the term's characteristic function, with a status code."""
    cdef double out
    cdef int code
    if exponents.shape[0] == 0:
        raise ValueError("term has no summands")
    code = _term_root(&exponents[0], exponents.shape[0], rel_tol,
                      bracket_cap, &out)
    return out, code


def roots_batch(double[::1] exponents, long long[::1] offsets,
                double rel_tol, double bracket_cap,
                double[::1] out_roots, long long[::1] out_codes):
    """Solve every term of a flattened recurrence in one call."""
    cdef Py_ssize_t k, nterms = offsets.shape[0] - 1
    cdef Py_ssize_t start, stop
    cdef double out
    for k in range(nterms):
        start = <Py_ssize_t> offsets[k]
        stop = <Py_ssize_t> offsets[k + 1]
        out_codes[k] = _term_root(&exponents[start], stop - start,
                                  rel_tol, bracket_cap, &out)
        out_roots[k] = out
