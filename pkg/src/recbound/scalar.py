"""Per-term branching numbers.

Weighting the recurrence with w turns each term into the univariate
characteristic function 1 - sum_j c**(-w . delta_j), which is strictly
increasing in c when all weighted summands are positive.  Its unique
root above 1 is the term's branching number; the recurrence's growth
base under w is the maximum over terms.

Conventions: a term with several summands and a non-positive weighted
summand contributes +inf.  A single-summand term contributes 1 when its
weighted summand is positive and +inf otherwise (including the zero
case, which the final-bound bookkeeping in :mod:`recbound.descent`
discards as growth-neutral).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernel
from .model import (
    DimensionMismatch,
    RecurrenceSpec,
    Term,
    ensure_validated,
)

ROOT_TOL = 1e-12
BRACKET_CAP = 2.0**64


class BracketOverflow(RuntimeError):
    """The doubling bracket for a term root exceeded the configured cap.

    Signals near-zero positive exponents; callers treat the root as +inf.
    """


@dataclass(frozen=True)
class TermRoot:
    """Branching number of one term under a fixed weight vector."""

    value: float
    exponents: tuple[float, ...]
    converged: bool
    residual: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def _exponents(term: Term, w) -> np.ndarray:
    w_arr = np.asarray(w, dtype=float)
    mat = np.asarray(term.summands, dtype=float)
    if mat.shape[1] != w_arr.shape[0]:
        raise DimensionMismatch(
            f"term {term.name!r} has dimension {mat.shape[1]}, "
            f"weights have {w_arr.shape[0]}"
        )
    return np.ascontiguousarray(mat @ w_arr)


def r_eval(term: Term, w, c: float) -> float:
    """Characteristic value 1 - sum_j c**(-w . delta_j) at c > 1."""
    return float(kernel.residual(_exponents(term, w), c))


def term_root(
    term: Term,
    w,
    tol: float = ROOT_TOL,
    bracket_cap: float = BRACKET_CAP,
) -> TermRoot:
    """Branching number of ``term`` under weights ``w``.

    Raises :class:`BracketOverflow` when the doubling bracket blows past
    ``bracket_cap``; everything else is total.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    exps = _exponents(term, w)
    value, code = kernel.term_root(exps, tol, bracket_cap)
    if code == kernel.ROOT_OVERFLOW:
        raise BracketOverflow(
            f"term {term.name!r}: root bracket exceeded {bracket_cap:g}"
        )
    if code == kernel.ROOT_INFINITE:
        return TermRoot(math.inf, tuple(exps), True, math.inf)
    res = float(kernel.residual(exps, value)) if value > 1.0 else 0.0
    return TermRoot(float(value), tuple(exps), abs(res) <= tol, abs(res))


def c_of_w(
    spec: RecurrenceSpec,
    w,
    tol: float = ROOT_TOL,
    bracket_cap: float = BRACKET_CAP,
) -> tuple[float, dict[str, TermRoot]]:
    """Growth base under ``w``: the max of per-term branching numbers.

    Bracket overflows surface as +inf entries rather than raising, so
    the descent loop can treat such weight vectors as infeasible.
    """
    spec = ensure_validated(spec)
    roots: dict[str, TermRoot] = {}
    worst = 1.0
    for term in spec.terms:
        try:
            tr = term_root(term, w, tol, bracket_cap)
        except BracketOverflow:
            exps = _exponents(term, w)
            tr = TermRoot(math.inf, tuple(exps), False, math.inf)
        roots[term.name] = tr
        worst = max(worst, tr.value)
    return worst, roots


class SpecArrays:
    """Flat view of a validated spec for the root kernel.

    Stacks every summand into one (n_summands, d) float matrix so a
    weight vector maps to all exponents with a single matvec, and the
    per-term slices feed :func:`recbound.kernel.roots_batch`.
    """

    def __init__(self, spec: RecurrenceSpec):
        spec = ensure_validated(spec)
        self.spec = spec
        self.names = spec.names
        rows: list[tuple[int, ...]] = []
        offsets = [0]
        for term in spec.terms:
            rows.extend(term.summands)
            offsets.append(len(rows))
        self.matrix = np.ascontiguousarray(np.asarray(rows, dtype=float))
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.sizes = np.diff(self.offsets)
        self.target = np.asarray(spec.target, dtype=float)
        self.nterms = len(spec.terms)

    def exponents(self, w: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(self.matrix @ w)

    def roots(
        self,
        w: np.ndarray,
        tol: float = ROOT_TOL,
        bracket_cap: float = BRACKET_CAP,
    ) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
        """(growth base, per-term roots, status codes, flat exponents)."""
        exps = self.exponents(w)
        roots = np.empty(self.nterms, dtype=float)
        codes = np.empty(self.nterms, dtype=np.int64)
        kernel.roots_batch(exps, self.offsets, tol, bracket_cap, roots, codes)
        return float(max(1.0, roots.max())), roots, codes, exps

    def term_slice(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))
