"""Machine-checked upper-bound certificates.

A certificate is a rational weight vector w and rational base c such
that, in exact arithmetic, every weighted summand w . delta is positive
and w . t <= 1, and, in outward-rounded dyadic interval arithmetic, the
characteristic value 1 - sum_j c**(-w . delta_j) of every term is
provably non-negative.  Together these imply F(n * t) = O(c**n): the
weighted upper-bound argument only needs w . t <= 1 (a smaller weight
along the target can only slow the certified growth), which is the
inequality an exact rational w can actually satisfy when the true
optimum is irrational.

Numbers are dyadic rationals stored as integer mantissa times a power
of two, so magnitudes like c**2**47 (which arise while bracketing
fractional powers) cost one big exponent value rather than astronomical
integers.  Every operation rounds the lower endpoint down and the upper
endpoint up; the true real value is always enclosed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .descent import AnalysisReport
from .model import RecurrenceSpec, ensure_validated, spec_digest

DEFAULT_BITS = 64
MAX_BITS = 1024
_ROUND_DENOM_BITS = 48


class PrecisionExhausted(RuntimeError):
    """Interval width target was not met at the requested precision."""


@dataclass(frozen=True)
class Dyadic:
    """Exact dyadic rational m * 2**e with a plain-integer exponent."""

    m: int
    e: int = 0

    def as_fraction(self) -> Fraction:
        if self.e >= 0:
            return Fraction(self.m << self.e, 1)
        return Fraction(self.m, 1 << -self.e)

    def __float__(self) -> float:
        return math.ldexp(self.m, self.e) if abs(self.e) < 16000 else (
            math.inf if self.m > 0 else -math.inf if self.m < 0 else 0.0
        )

    @classmethod
    def from_fraction(cls, x: Fraction, bits: int, up: bool) -> "Dyadic":
        """Directed conversion: result <= x (down) or >= x (up)."""
        x = Fraction(x)
        if x == 0:
            return cls(0, 0)
        k = bits + x.denominator.bit_length() - abs(x.numerator).bit_length() + 2
        if k >= 0:
            q, r = divmod(x.numerator << k, x.denominator)
        else:
            q, r = divmod(x.numerator, x.denominator << -k)
        if up and r:
            q += 1
        return cls(q, -k)


ZERO = Dyadic(0, 0)
ONE = Dyadic(1, 0)


def _dy_round(d: Dyadic, bits: int, up: bool) -> Dyadic:
    """Keep about ``bits`` significant bits, rounding in one direction."""
    if d.m == 0:
        return ZERO
    excess = abs(d.m).bit_length() - bits
    if excess <= 0:
        return d
    q, r = divmod(d.m, 1 << excess)  # floor division: rounds toward -inf
    if up and r:
        q += 1
    return Dyadic(q, d.e + excess)


def _dy_cmp(a: Dyadic, b: Dyadic) -> int:
    """Sign of a - b without materializing huge alignments."""
    sa = (a.m > 0) - (a.m < 0)
    sb = (b.m > 0) - (b.m < 0)
    if sa != sb:
        return 1 if sa > sb else -1
    if sa == 0:
        return 0
    # Same nonzero sign: bound magnitudes by exponent + mantissa length
    # (2**(l-1) <= |value| < 2**l for l = e + bit_length).
    la = a.e + abs(a.m).bit_length()
    lb = b.e + abs(b.m).bit_length()
    if la != lb:
        return sa if la > lb else -sa
    shift = a.e - b.e
    am, bm = a.m, b.m
    if shift >= 0:
        am <<= shift
    else:
        bm <<= -shift
    return (am > bm) - (am < bm)


def _dy_mul(a: Dyadic, b: Dyadic, bits: int, up: bool) -> Dyadic:
    return _dy_round(Dyadic(a.m * b.m, a.e + b.e), bits, up)


def _dy_add(a: Dyadic, b: Dyadic, bits: int, up: bool) -> Dyadic:
    """Directed addition; operands too small to matter become one ulp."""
    if a.m == 0:
        return _dy_round(b, bits, up)
    if b.m == 0:
        return _dy_round(a, bits, up)
    la = a.e + abs(a.m).bit_length()
    lb = b.e + abs(b.m).bit_length()
    if la - lb > bits + 8:
        return _dy_nudge(a, bits, up, toward_up=b.m > 0)
    if lb - la > bits + 8:
        return _dy_nudge(b, bits, up, toward_up=a.m > 0)
    shift = a.e - b.e
    if shift >= 0:
        total = Dyadic((a.m << shift) + b.m, b.e)
    else:
        total = Dyadic(a.m + (b.m << -shift), a.e)
    return _dy_round(total, bits, up)


def _dy_nudge(d: Dyadic, bits: int, up: bool, toward_up: bool) -> Dyadic:
    """Account for an absorbed tiny addend by one directed ulp."""
    r = _dy_round(d, bits, up)
    if up == toward_up:
        ulp_e = r.e if abs(r.m).bit_length() >= bits else r.e - bits
        return _dy_add_exactish(r, Dyadic(1 if up else -1, ulp_e))
    return r


def _dy_add_exactish(a: Dyadic, b: Dyadic) -> Dyadic:
    shift = a.e - b.e
    if shift >= 0:
        return Dyadic((a.m << shift) + b.m, b.e)
    return Dyadic(a.m + (b.m << -shift), a.e)


def _dy_neg(d: Dyadic) -> Dyadic:
    return Dyadic(-d.m, d.e)


def _dy_reciprocal(d: Dyadic, bits: int, up: bool) -> Dyadic:
    if d.m == 0:
        raise ZeroDivisionError("reciprocal of zero")
    sign = 1 if d.m > 0 else -1
    m = abs(d.m)
    k = bits + m.bit_length() + 2
    q, r = divmod(1 << k, m)
    if r and (up == (sign > 0)):
        q += 1
    return Dyadic(sign * q, -k - d.e)


def _dy_sqrt(d: Dyadic, bits: int, up: bool) -> Dyadic:
    if d.m < 0:
        raise ValueError("negative operand under the square root")
    if d.m == 0:
        return ZERO
    # Scale the mantissa so its integer square root carries enough bits.
    pad = max(0, 2 * (bits + 2) - d.m.bit_length())
    if (d.e - pad) % 2:
        pad += 1
    scaled = d.m << pad
    r = math.isqrt(scaled)
    if up and r * r != scaled:
        r += 1
    return Dyadic(r, (d.e - pad) // 2)


def _dy_pow(d: Dyadic, n: int, bits: int, up: bool) -> Dyadic:
    """d**n for d >= 0, n >= 0, square-and-multiply with directed rounding."""
    result = ONE
    base = d
    e = n
    while e:
        if e & 1:
            result = _dy_mul(result, base, bits, up)
        e >>= 1
        if e:
            base = _dy_mul(base, base, bits, up)
    return result


@dataclass(frozen=True)
class DyadicInterval:
    """Closed interval with dyadic endpoints, maintained outward."""

    lo: Dyadic
    hi: Dyadic

    def __post_init__(self):
        if _dy_cmp(self.lo, self.hi) > 0:
            raise ValueError(
                f"inverted interval [{float(self.lo)}, {float(self.hi)}]"
            )

    @classmethod
    def enclosing(cls, x: Fraction, bits: int) -> "DyadicInterval":
        x = Fraction(x)
        return cls(
            Dyadic.from_fraction(x, bits, up=False),
            Dyadic.from_fraction(x, bits, up=True),
        )

    @classmethod
    def exact(cls, x: int) -> "DyadicInterval":
        return cls(Dyadic(x), Dyadic(x))

    @property
    def lo_fraction(self) -> Fraction:
        return self.lo.as_fraction()

    @property
    def hi_fraction(self) -> Fraction:
        return self.hi.as_fraction()

    @property
    def width(self) -> Fraction:
        return self.hi_fraction - self.lo_fraction

    def contains(self, x: Fraction) -> bool:
        return self.lo_fraction <= Fraction(x) <= self.hi_fraction

    def add(self, other: "DyadicInterval", bits: int) -> "DyadicInterval":
        return DyadicInterval(
            _dy_add(self.lo, other.lo, bits, up=False),
            _dy_add(self.hi, other.hi, bits, up=True),
        )

    def sub(self, other: "DyadicInterval", bits: int) -> "DyadicInterval":
        return DyadicInterval(
            _dy_add(self.lo, _dy_neg(other.hi), bits, up=False),
            _dy_add(self.hi, _dy_neg(other.lo), bits, up=True),
        )

    def mul(self, other: "DyadicInterval", bits: int) -> "DyadicInterval":
        candidates = [
            (a, b)
            for a in (self.lo, self.hi)
            for b in (other.lo, other.hi)
        ]
        down = [_dy_mul(a, b, bits, up=False) for a, b in candidates]
        upv = [_dy_mul(a, b, bits, up=True) for a, b in candidates]
        lo = down[0]
        for d in down[1:]:
            if _dy_cmp(d, lo) < 0:
                lo = d
        hi = upv[0]
        for u in upv[1:]:
            if _dy_cmp(u, hi) > 0:
                hi = u
        return DyadicInterval(lo, hi)

    def reciprocal(self, bits: int) -> "DyadicInterval":
        if self.lo.m <= 0 <= self.hi.m:
            raise ZeroDivisionError("interval contains zero")
        return DyadicInterval(
            _dy_reciprocal(self.hi, bits, up=False),
            _dy_reciprocal(self.lo, bits, up=True),
        )

    def sqrt(self, bits: int) -> "DyadicInterval":
        return DyadicInterval(
            _dy_sqrt(self.lo, bits, up=False),
            _dy_sqrt(self.hi, bits, up=True),
        )

    def pow_int(self, n: int, bits: int, exact_bit_cap: int = 4096) -> "DyadicInterval":
        """Non-negative integer power; exact while mantissas stay small."""
        if n < 0:
            raise ValueError("negative power")
        if self.lo.m < 0:
            raise ValueError("negative base")
        est = n * max(1, abs(self.hi.m).bit_length())
        if 0 <= est <= exact_bit_cap:
            return DyadicInterval(
                Dyadic(self.lo.m**n, self.lo.e * n), Dyadic(self.hi.m**n, self.hi.e * n)
            )
        return DyadicInterval(
            _dy_pow(self.lo, n, bits, up=False),
            _dy_pow(self.hi, n, bits, up=True),
        )


def _nth_root_lower(v: Dyadic, q: int, bits: int) -> Dyadic:
    """Dyadic L with a certified L**q <= v, within ~2**-bits of the root."""
    work = bits + 16
    magnitude = v.e + abs(v.m).bit_length()
    hi = Dyadic(1, max(1, magnitude // q + 1))
    lo = ONE
    if _dy_cmp(_dy_pow(hi, q, work, up=True), v) <= 0:
        return hi
    for _ in range(bits + 6):
        mid = _dy_round(_dy_add(lo, hi, work, up=False), work, up=False)
        mid = Dyadic(mid.m, mid.e - 1)
        if _dy_cmp(mid, lo) <= 0 or _dy_cmp(mid, hi) >= 0:
            break
        if _dy_cmp(_dy_pow(mid, q, work, up=True), v) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


def _nth_root_upper(v: Dyadic, q: int, bits: int) -> Dyadic:
    """Dyadic U with a certified U**q >= v, within ~2**-bits of the root."""
    work = bits + 16
    magnitude = v.e + abs(v.m).bit_length()
    hi = Dyadic(1, max(1, magnitude // q + 1))
    lo = ONE
    if _dy_cmp(_dy_pow(lo, q, work, up=False), v) >= 0:
        return lo
    for _ in range(bits + 6):
        mid = _dy_round(_dy_add(lo, hi, work, up=True), work, up=True)
        mid = Dyadic(mid.m, mid.e - 1)
        if _dy_cmp(mid, lo) <= 0 or _dy_cmp(mid, hi) >= 0:
            break
        if _dy_cmp(_dy_pow(mid, q, work, up=False), v) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def interval_pow(
    c: DyadicInterval, exponent: Fraction, bits: int
) -> DyadicInterval:
    """Enclosure of c**exponent for c >= 1 and a positive rational exponent.

    Writing the exponent as p / (q_odd * 2**s), the enclosure is computed
    as s successive interval square roots of the q_odd-th root of c**p.
    Integer powers are exact while their mantissas stay small; odd roots
    are bracketed by bisection with one-sided rounded powers.  Raises
    :class:`PrecisionExhausted` when the result's relative width misses
    2**-bits, which a retry at higher ``bits`` repairs.
    """
    exponent = Fraction(exponent)
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    if _dy_cmp(c.lo, ONE) < 0:
        raise ValueError("base interval must lie at or above 1")
    p = exponent.numerator
    q = exponent.denominator
    s = (q & -q).bit_length() - 1
    q_odd = q >> s
    work = bits + 16

    result = c.pow_int(p, work)
    if q_odd > 1:
        result = DyadicInterval(
            _nth_root_lower(result.lo, q_odd, work),
            _nth_root_upper(result.hi, q_odd, work),
        )
    for _ in range(s):
        result = result.sqrt(work)
    # Relative width check: hi - lo <= 2**-bits * hi.
    gap = _dy_add(result.hi, _dy_neg(result.lo), work, up=True)
    allowance = Dyadic(result.hi.m, result.hi.e - bits)
    if _dy_cmp(gap, allowance) > 0:
        raise PrecisionExhausted(
            f"enclosure width exceeds 2^-{bits} of the magnitude"
        )
    return result


@dataclass(frozen=True)
class CertifiedBound:
    """Accepted certificate: rational (w, c) plus per-term proof data."""

    w: tuple[Fraction, ...]
    c: Fraction
    precision_bits: int
    per_term_residual: dict[str, DyadicInterval]


@dataclass(frozen=True)
class Rejection:
    """Why a candidate failed; ``residual`` is set for interval failures."""

    reason: str
    term: str | None = None
    residual: DyadicInterval | None = None


def certify_upper(
    spec: RecurrenceSpec,
    w: Sequence[Fraction],
    c: Fraction,
    bits: int = DEFAULT_BITS,
) -> CertifiedBound | Rejection:
    """Verify that (w, c) proves F(n * t) = O(c**n).

    Exact rational prechecks: c >= 1, w . t <= 1, and w . delta > 0 for
    every summand.  Then, per term, an outward-rounded enclosure of
    1 - sum_j c**(-w . delta_j) whose lower endpoint must be >= 0.
    """
    spec = ensure_validated(spec)
    w = tuple(Fraction(x) for x in w)
    c = Fraction(c)
    if len(w) != spec.dimension:
        return Rejection(
            f"weight vector has length {len(w)}, expected {spec.dimension}"
        )
    if c < 1:
        return Rejection(f"c = {c} is below 1")
    wt = sum(wk * tk for wk, tk in zip(w, spec.target))
    if wt > 1:
        return Rejection(f"w . t = {wt} exceeds 1")
    for term in spec.terms:
        for delta in term.summands:
            if sum(wk * dk for wk, dk in zip(w, delta)) <= 0:
                return Rejection(
                    f"summand {delta} of term {term.name!r} has "
                    "non-positive weight",
                    term=term.name,
                )

    work = bits + 16
    c_int = DyadicInterval.enclosing(c, work)
    one = DyadicInterval.exact(1)
    residuals: dict[str, DyadicInterval] = {}
    for term in spec.terms:
        acc = DyadicInterval.exact(0)
        for delta in term.summands:
            e = sum(wk * dk for wk, dk in zip(w, delta))
            power = interval_pow(c_int, Fraction(e), bits)
            acc = acc.add(power.reciprocal(work), work)
        residual = one.sub(acc, work)
        residuals[term.name] = residual
        if residual.lo.m < 0:
            return Rejection(
                f"term {term.name!r}: residual lower bound "
                f"{float(residual.lo):g} is negative",
                term=term.name,
                residual=residual,
            )
    return CertifiedBound(w=w, c=c, precision_bits=bits, per_term_residual=residuals)


def round_solution(
    report: AnalysisReport, slack: Fraction | float
) -> tuple[tuple[Fraction, ...], Fraction]:
    """Rational candidate near the float optimum, safe for certification.

    Weights are rounded onto the 2**-48 grid toward the side that can
    only decrease w . t (with an exact repair step if float noise still
    leaves w . t above 1); the base gets ``slack`` added and is rounded
    up.  The additive slack keeps the certified base within a grid step
    of c + slack regardless of c's magnitude.
    """
    if report.status.value == "infeasible":
        raise ValueError("cannot round an infeasible report")
    slack = Fraction(slack)
    den = 1 << _ROUND_DENOM_BITS
    w_rounded: list[Fraction] = []
    for wk, tk in zip(report.w, report.target):
        scaled = Fraction(float(wk)) * den
        if tk > 0:
            m = scaled.numerator // scaled.denominator - 1
        elif tk < 0:
            m = -((-scaled.numerator) // scaled.denominator) + 1
        else:
            m = scaled.numerator // scaled.denominator
        w_rounded.append(Fraction(m, den))
    excess = sum(wk * tk for wk, tk in zip(w_rounded, report.target)) - 1
    if excess > 0:
        k = max(range(len(report.target)), key=lambda i: abs(report.target[i]))
        tk = report.target[k]
        need = excess * den / abs(tk)
        steps = -((-need.numerator) // need.denominator)
        adjust = Fraction(steps, den)
        w_rounded[k] -= adjust if tk > 0 else -adjust
    c = Fraction(float(report.c)) + slack
    c_num = (c * den).numerator
    c_den = (c * den).denominator
    c_rounded = Fraction(-((-c_num) // c_den), den)
    if c_rounded < 1:
        c_rounded = Fraction(1)
    return tuple(w_rounded), c_rounded


def serialize_certificate(spec: RecurrenceSpec, bound: CertifiedBound) -> str:
    """Self-contained text record a third party can re-verify."""
    lines = [
        "recbound-certificate v1",
        f"spec_sha256 = {spec_digest(spec)}",
        f"bits = {bound.precision_bits}",
        f"c = {bound.c.numerator}/{bound.c.denominator}",
    ]
    for k, wk in enumerate(bound.w):
        lines.append(f"w[{k}] = {wk.numerator}/{wk.denominator}")
    for name, residual in bound.per_term_residual.items():
        lo = residual.lo_fraction
        hi = residual.hi_fraction
        lines.append(f"term.{name}.residual_lo = {lo.numerator}/{lo.denominator}")
        lines.append(f"term.{name}.residual_hi = {hi.numerator}/{hi.denominator}")
    return "\n".join(lines) + "\n"


def parse_certificate(text: str) -> dict:
    """Fields of a serialized certificate, exact rationals preserved."""
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != "recbound-certificate v1":
        raise ValueError("not a recbound certificate")
    fields: dict = {"w": {}, "residuals": {}}
    for line in lines[1:]:
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "spec_sha256":
            fields["spec_sha256"] = value
        elif key == "bits":
            fields["bits"] = int(value)
        elif key == "c":
            fields["c"] = Fraction(value)
        elif key.startswith("w["):
            fields["w"][int(key[2:-1])] = Fraction(value)
        elif key.startswith("term."):
            name, which = key.split(".", 1)[1].rsplit(".", 1)
            fields["residuals"].setdefault(name, {})[which] = Fraction(value)
        else:
            raise ValueError(f"unknown certificate field {key!r}")
    fields["w"] = tuple(fields["w"][k] for k in sorted(fields["w"]))
    return fields


def verify_certificate(spec: RecurrenceSpec, text: str) -> bool:
    """Re-run the interval checks recorded in a certificate."""
    fields = parse_certificate(text)
    if fields["spec_sha256"] != spec_digest(spec):
        return False
    result = certify_upper(spec, fields["w"], fields["c"], fields["bits"])
    return isinstance(result, CertifiedBound)
