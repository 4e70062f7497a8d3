"""Ground truth for the solver: exact evaluation, path counts, random walks.

The recurrence value F(x) is computed by memoized dynamic programming in
exact big integers, restricted to componentwise non-negative branching
vectors so that termination is guaranteed (every call strictly shrinks
the coordinate sum).  F also counts paths to the origin in the lattice
graph induced by a term-choice policy, which is what the statistical
lower-bound machinery samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .descent import AnalysisReport
from .model import RecurrenceSpec, ensure_validated

DEFAULT_MEMO_LIMIT = 10_000_000

Point = tuple[int, ...]


class UnsupportedDeltas(ValueError):
    """The exact oracle handles componentwise non-negative deltas only."""


class MemoLimit(RuntimeError):
    """The memo table exceeded its configured size cap."""


def _check_deltas(spec: RecurrenceSpec) -> None:
    for term in spec.terms:
        for delta in term.summands:
            if any(v < 0 for v in delta):
                raise UnsupportedDeltas(
                    f"term {term.name!r}: summand {delta} has a negative "
                    "entry; the exact oracle requires non-negative deltas"
                )


@dataclass(frozen=True)
class TermPolicy:
    """Choice of recurrence term per lattice point.

    Either the distinguished argmax policy (pick a term attaining the
    max, which reproduces F itself), a constant term, or an explicit
    point-to-name table covering every point the traversal reaches.
    """

    kind: str
    table: Mapping[Point, str] | None = None
    constant: str | None = None

    @classmethod
    def argmax(cls) -> "TermPolicy":
        return cls(kind="argmax")

    @classmethod
    def always(cls, name: str) -> "TermPolicy":
        return cls(kind="constant", constant=name)

    @classmethod
    def from_table(cls, table: Mapping[Point, str]) -> "TermPolicy":
        return cls(kind="table", table=dict(table))


class LatticeOracle:
    """Exact evaluator for one recurrence.

    Keeps a memo table across calls; not safe for concurrent use, create
    one instance per thread instead.
    """

    def __init__(self, spec: RecurrenceSpec, memo_limit: int = DEFAULT_MEMO_LIMIT):
        spec = ensure_validated(spec)
        _check_deltas(spec)
        self.spec = spec
        self.memo_limit = memo_limit
        self._values: dict[Point, int] = {}
        self._deltas = {t.name: t.summands for t in spec.terms}
        self._zero: Point = (0,) * spec.dimension

    def _term_sums(self, x: Point) -> dict[str, int]:
        values = self._values
        out: dict[str, int] = {}
        for name, deltas in self._deltas.items():
            total = 0
            for delta in deltas:
                y = tuple(a - b for a, b in zip(x, delta))
                if any(v < 0 for v in y):
                    continue
                total += values[y]
            out[name] = total
        return out

    def _ensure(self, x: Point) -> None:
        values = self._values
        stack = [x]
        while stack:
            y = stack[-1]
            if y in values:
                stack.pop()
                continue
            if any(v < 0 for v in y):
                values[y] = 0
                stack.pop()
                continue
            if y == self._zero:
                values[y] = 1
                stack.pop()
                continue
            missing = []
            for deltas in self._deltas.values():
                for delta in deltas:
                    z = tuple(a - b for a, b in zip(y, delta))
                    if any(v < 0 for v in z):
                        continue
                    if z not in values:
                        missing.append(z)
            if missing:
                stack.extend(missing)
                continue
            values[y] = max(self._term_sums(y).values())
            stack.pop()
            if len(values) > self.memo_limit:
                raise MemoLimit(
                    f"memo table exceeded {self.memo_limit} entries"
                )

    def evaluate(self, x: Sequence[int]) -> int:
        """F(x), exactly."""
        point = tuple(int(v) for v in x)
        if len(point) != self.spec.dimension:
            raise ValueError(
                f"point has length {len(point)}, expected {self.spec.dimension}"
            )
        if any(v < 0 for v in point):
            return 0
        self._ensure(point)
        return self._values[point]

    def argmax_term(self, x: Point) -> str:
        """First term (in spec order) attaining the max at ``x``."""
        self._ensure(x)
        sums = self._term_sums(x)
        best = max(sums.values())
        for name in self.spec.names:
            if sums[name] == best:
                return name
        raise AssertionError("unreachable")

    def count_paths(self, policy: TermPolicy, x: Sequence[int]) -> int:
        """Number of paths from ``x`` to the origin in the policy graph.

        Parallel edges from repeated summands count separately.  With the
        argmax policy this equals :meth:`evaluate`.
        """
        point = tuple(int(v) for v in x)
        if any(v < 0 for v in point):
            return 0
        chooser = self._chooser(policy)
        counts: dict[Point, int] = {}
        stack = [point]
        while stack:
            y = stack[-1]
            if y in counts:
                stack.pop()
                continue
            if any(v < 0 for v in y):
                counts[y] = 0
                stack.pop()
                continue
            if y == self._zero:
                counts[y] = 1
                stack.pop()
                continue
            deltas = self._deltas[chooser(y)]
            missing = []
            total = 0
            complete = True
            for delta in deltas:
                z = tuple(a - b for a, b in zip(y, delta))
                if any(v < 0 for v in z):
                    continue
                if z not in counts:
                    missing.append(z)
                    complete = False
                else:
                    total += counts[z]
            if not complete:
                stack.extend(missing)
                continue
            counts[y] = total
            stack.pop()
            if len(counts) > self.memo_limit:
                raise MemoLimit(f"memo table exceeded {self.memo_limit} entries")
        return counts[point]

    def _chooser(self, policy: TermPolicy) -> Callable[[Point], str]:
        if policy.kind == "argmax":
            return self.argmax_term
        if policy.kind == "constant":
            if policy.constant not in self._deltas:
                raise KeyError(policy.constant)
            name = policy.constant
            return lambda _y: name
        if policy.kind == "table":
            table = policy.table or {}

            def lookup(y: Point) -> str:
                name = table[y]
                if name not in self._deltas:
                    raise KeyError(name)
                return name

            return lookup
        raise ValueError(f"unknown policy kind {policy.kind!r}")


def evaluate(
    spec: RecurrenceSpec, x: Sequence[int], memo_limit: int = DEFAULT_MEMO_LIMIT
) -> int:
    return LatticeOracle(spec, memo_limit).evaluate(x)


def count_paths(
    spec: RecurrenceSpec,
    policy: TermPolicy,
    x: Sequence[int],
    memo_limit: int = DEFAULT_MEMO_LIMIT,
) -> int:
    return LatticeOracle(spec, memo_limit).count_paths(policy, x)


@dataclass(frozen=True)
class WalkTerm:
    """One basis term of the random walk: selection weight plus step law."""

    name: str
    weight: float
    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class WalkResult:
    reached_origin: bool
    path_probability: float


def walk_plan_from_report(
    spec: RecurrenceSpec, report: AnalysisReport
) -> tuple[list[WalkTerm], np.ndarray]:
    """Basis walk description (terms, normalized step laws) plus weights."""
    spec = ensure_validated(spec)
    total_b = sum(b for _, b in report.basis)
    if total_b <= 0:
        raise ValueError("report has no basis terms to walk on")
    plan = []
    for name, b in report.basis:
        root = report.per_term[name]
        probs = np.power(report.c, -np.asarray(root.exponents)) if report.c > 1.0 \
            else np.ones(len(root.exponents))
        probs = probs / probs.sum()
        plan.append(WalkTerm(name, b / total_b, tuple(float(p) for p in probs)))
    return plan, np.asarray(report.w, dtype=float)


def _default_max_steps(start: Sequence[int]) -> int:
    return 64 + 8 * int(sum(abs(int(v)) for v in start))


def sample_walks(
    spec: RecurrenceSpec,
    basis: Sequence[WalkTerm],
    start: Sequence[int],
    trials: int,
    *,
    weights,
    seed: int = 0,
    max_steps: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run ``trials`` independent basis walks from ``start``.

    Each step first picks a basis term (probability = its weight), then
    one of that term's summands (its step law), and subtracts the delta.
    A walk halts when the weighted position w . x drops to zero or a
    coordinate goes negative; it succeeds only at the exact origin.
    Returns (success flags, per-walk product of chosen step
    probabilities).  Walks exceeding ``max_steps`` count as failures,
    which keeps the estimator on the safe side.
    """
    spec = ensure_validated(spec)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    b = np.asarray([wt.weight for wt in basis], dtype=float)
    if abs(b.sum() - 1.0) > 1e-9:
        raise ValueError("basis weights must sum to 1")
    b = b / b.sum()
    laws = []
    step_laws = []
    deltas = []
    for wt in basis:
        p = np.asarray(wt.probabilities, dtype=float)
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"step law of term {wt.name!r} must sum to 1")
        p = p / p.sum()
        step_laws.append(p)
        laws.append(np.cumsum(p))
        deltas.append(np.asarray(spec.term(wt.name).summands, dtype=np.int64))
    w = np.asarray(weights, dtype=float)
    rng = np.random.default_rng(seed)

    state = np.tile(np.asarray(start, dtype=np.int64), (trials, 1))
    prob = np.ones(trials)
    alive = np.ones(trials, dtype=bool)
    success = np.zeros(trials, dtype=bool)
    cum_b = np.cumsum(b)
    if max_steps is None:
        max_steps = _default_max_steps(start)

    # Initial halting check (start may already sit on the stopping set).
    wx = state @ w
    at_zero = (state == 0).all(axis=1)
    done = (state < 0).any(axis=1) | (wx <= 1e-12)
    success[done & at_zero] = True
    alive[done] = False

    for _ in range(max_steps):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        pick = np.searchsorted(cum_b, rng.random(idx.size), side="right")
        pick = np.minimum(pick, len(basis) - 1)
        for k in range(len(basis)):
            sel = idx[pick == k]
            if sel.size == 0:
                continue
            choice = np.searchsorted(laws[k], rng.random(sel.size), side="right")
            choice = np.minimum(choice, len(laws[k]) - 1)
            state[sel] -= deltas[k][choice]
            prob[sel] *= step_laws[k][choice]
        sub = state[idx]
        wx = sub @ w
        at_zero = (sub == 0).all(axis=1)
        done = (sub < 0).any(axis=1) | (wx <= 1e-12)
        success[idx[done & at_zero]] = True
        alive[idx[done]] = False
    return success, prob


def sample_walk(
    spec: RecurrenceSpec,
    basis: Sequence[WalkTerm],
    start: Sequence[int],
    *,
    weights,
    seed: int = 0,
    max_steps: int | None = None,
) -> WalkResult:
    """One basis walk; see :func:`sample_walks` for the step semantics."""
    success, prob = sample_walks(
        spec, basis, start, 1, weights=weights, seed=seed, max_steps=max_steps
    )
    return WalkResult(bool(success[0]), float(prob[0]))


def lower_bound_estimate(
    spec: RecurrenceSpec,
    report: AnalysisReport,
    n: int,
    trials: int,
    seed: int = 0,
) -> float:
    """Unbiased statistical witness for F(n * t) from basis walks.

    Returns (success fraction) * c**n, whose expectation is the path
    count in the random policy graph, itself a lower bound on F(n * t).
    """
    basis, w = walk_plan_from_report(spec, report)
    start = tuple(n * v for v in report.target)
    success, _prob = sample_walks(
        spec, basis, start, trials, weights=w, seed=seed
    )
    return float(success.mean() * report.c**n)


@dataclass(frozen=True)
class GrowthDiagnostic:
    """Sandwich data F(n*t) against c**n, with envelope verdicts.

    ``upper_ok``: the log-residual log F(n*t) - n log c shows no upward
    drift (its tail slope is at most ``slope_tol``), as the proven upper
    bound requires.  ``lower_ok``: the residual corrected by the proven
    polynomial factor, (d-1)/2 * log n, shows no downward drift.  The
    conjectured exact polynomial power is reported via the data only.
    """

    rows: list[tuple[int, int, float, float]]
    upper_ok: bool
    lower_ok: bool
    slope_tol: float

    def csv(self) -> str:
        lines = ["n,value,nth_root,log_residual"]
        for n, value, nth_root, resid in self.rows:
            lines.append(f"{n},{value},{nth_root!r},{resid!r}")
        return "\n".join(lines) + "\n"


def _tail_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    half = len(xs) // 2
    x = np.asarray(xs[half:], dtype=float)
    y = np.asarray(ys[half:], dtype=float)
    if len(x) < 2:
        return 0.0
    x = x - x.mean()
    denom = float(x @ x)
    return float(x @ (y - y.mean()) / denom) if denom > 0 else 0.0


def growth_diagnostic(
    spec: RecurrenceSpec,
    report: AnalysisReport,
    n_max: int,
    memo_limit: int = DEFAULT_MEMO_LIMIT,
    slope_tol: float = 0.02,
) -> GrowthDiagnostic:
    """Exact values of F(n*t) for n = 1..n_max against the solved base."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    oracle = LatticeOracle(spec, memo_limit)
    log_c = math.log(report.c)
    rows = []
    for n in range(1, n_max + 1):
        value = oracle.evaluate(tuple(n * v for v in report.target))
        if value <= 0:
            raise ValueError(
                f"F({n} * t) = 0; the target direction leaves the reachable cone"
            )
        log_f = math.log(value)
        rows.append((n, value, math.exp(log_f / n), log_f - n * log_c))
    ns = [float(r[0]) for r in rows]
    resid = [r[3] for r in rows]
    d = spec.dimension
    corrected = [r + (d - 1) / 2.0 * math.log(n) for n, r in zip(ns, resid)]
    return GrowthDiagnostic(
        rows=rows,
        upper_ok=_tail_slope(ns, resid) <= slope_tol,
        lower_ok=_tail_slope(ns, corrected) >= -slope_tol,
        slope_tol=slope_tol,
    )
