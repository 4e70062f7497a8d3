"""Pure-Python fallback for the root-finding kernel.

Same contract as the compiled extension ``recbound._kernel``: evaluate
1 - sum_j c**(-a_j) and locate its unique root above 1 by a doubling
bracket plus bisection.  The function is strictly increasing in c when
all exponents are positive, so bisection cannot fail.
"""

from __future__ import annotations

import math

ROOT_FINITE = 0
ROOT_UNIT = 1
ROOT_INFINITE = 2
ROOT_OVERFLOW = 3

_MAX_BISECTIONS = 512


def residual(exponents, c: float) -> float:
    """1 - sum_j c**(-a_j) for c > 0."""
    lnc = math.log(c)
    s = 0.0
    for a in exponents:
        s += math.exp(-a * lnc)
    return 1.0 - s


def term_root(exponents, rel_tol: float, bracket_cap: float):
    """Root of the term's characteristic function, with a status code.

    Returns (root, code): code ROOT_FINITE for a bisected root > 1,
    ROOT_UNIT for a single positive-weight summand (root exactly 1),
    ROOT_INFINITE when some exponent makes the term unbounded, and
    ROOT_OVERFLOW when the doubling bracket exceeds ``bracket_cap``.
    """
    n = len(exponents)
    if n == 1:
        if exponents[0] > 0.0:
            return 1.0, ROOT_UNIT
        return math.inf, ROOT_INFINITE
    amin = exponents[0]
    for a in exponents:
        if a < amin:
            amin = a
    if amin <= 0.0:
        return math.inf, ROOT_INFINITE

    lo = 1.0
    hi = 2.0
    while residual(exponents, hi) < 0.0:
        lo = hi
        hi *= 2.0
        if hi > bracket_cap:
            return math.inf, ROOT_OVERFLOW

    mid = 0.5 * (lo + hi)
    for _ in range(_MAX_BISECTIONS):
        r = residual(exponents, mid)
        if r < 0.0:
            lo = mid
        else:
            hi = mid
        nxt = 0.5 * (lo + hi)
        if nxt == mid:
            break
        mid = nxt
        if hi - lo <= rel_tol * mid and abs(r) <= rel_tol:
            break
    return mid, ROOT_FINITE


def roots_batch(exponents, offsets, rel_tol, bracket_cap, out_roots, out_codes):
    """Solve every term of a flattened recurrence in one call.

    ``exponents`` holds all terms' exponents back to back; term k owns
    the slice ``offsets[k]:offsets[k + 1]``.  Results are written into
    the two preallocated output arrays.
    """
    nterms = len(offsets) - 1
    for k in range(nterms):
        root, code = term_root(
            exponents[offsets[k] : offsets[k + 1]], rel_tol, bracket_cap
        )
        out_roots[k] = root
        out_codes[k] = code
