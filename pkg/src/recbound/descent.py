"""Weight-vector optimization by smooth descent on the max branching number.

The growth base c_w is a pointwise maximum of quasiconvex per-term
functions of w, so plain gradient descent stalls at the nonsmooth
creases where two terms tie.  Instead each iteration gathers the terms
whose branching numbers sit within the current tolerance of the max,
projects their ascent normals onto the hyperplane w . t = 1, and takes
the minimum-norm point of that set as the common improving direction.
A zero minimum-norm point is the optimality certificate: its convex
coefficients are the basis weights b_i used by the lower-bound walk.

An outer loop shrinks the active-set tolerance geometrically so that
several near-critical terms steer the iteration long before the iterate
is accurate, which is what makes the nonsmooth corners tractable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .model import RecurrenceSpec, Term, ensure_validated
from .scalar import BRACKET_CAP, ROOT_TOL, SpecArrays, TermRoot

DEFAULT_TARGET_TOL = 1e-9


class SolveStatus(str, enum.Enum):
    CONVERGED = "converged"
    STALLED = "stalled_within_tolerance"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverConfig:
    """Tunables of the descent; the defaults suit exploratory analysis."""

    root_tol: float = ROOT_TOL
    bracket_cap: float = BRACKET_CAP
    hyperplane_tol: float = 1e-12
    initial_tol_floor: float = 0.1
    outer_shrink: float = 4.0
    stall_window: int = 5
    stall_factor: float = 0.125
    max_round_steps: int = 400
    max_total_steps: int = 20000
    max_doublings: int = 80
    min_step: float = 1e-18
    margin_goal: float = 1.0
    perturb_scale: float = 1e-2
    seed: int = 0


@dataclass(frozen=True)
class TermGradient:
    """Per-summand weights p_j = c**(-w . delta_j) and their delta average.

    ``direction`` is an ascent normal of the characteristic value: moving
    w along any v with v . direction > 0 lowers the term's branching
    number for small steps.  ``projected`` removes the component along
    the target, which is frozen by the hyperplane constraint.
    """

    probabilities: tuple[float, ...]
    direction: np.ndarray
    projected: np.ndarray


@dataclass(frozen=True)
class InfeasibilityWitness:
    term: str
    summand: tuple[int, ...]
    margin: float


@dataclass
class AnalysisReport:
    """Everything the optimizer learned about one recurrence."""

    c: float
    w: np.ndarray
    target: tuple[int, ...]
    per_term: dict[str, TermRoot]
    basis: list[tuple[str, float]]
    iterations: int
    outer_rounds: int
    status: SolveStatus
    certificate_norm: float
    history: list[tuple[np.ndarray, float]] = field(default_factory=list)
    witness: InfeasibilityWitness | None = None

    @property
    def basis_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.basis)


class InfeasibleError(RuntimeError):
    """No weight vector makes every weighted summand positive."""

    def __init__(self, witness: InfeasibilityWitness, w: np.ndarray):
        super().__init__(
            f"term {witness.term!r}, summand {witness.summand}: "
            f"best margin {witness.margin:.6g} is not positive"
        )
        self.witness = witness
        self.w = w


class MinNormIterationLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class MinNormResult:
    point: np.ndarray
    coefficients: np.ndarray
    converged: bool

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.point))


def project_perp(v, target) -> np.ndarray:
    """Component of v orthogonal to the target vector."""
    v_arr = np.asarray(v, dtype=float)
    t_arr = np.asarray(target, dtype=float)
    return v_arr - (float(v_arr @ t_arr) / float(t_arr @ t_arr)) * t_arr


def term_gradient(term: Term, w, c: float, target) -> TermGradient:
    """Ascent normal of one term at weights ``w`` and growth base ``c``."""
    w_arr = np.asarray(w, dtype=float)
    deltas = np.asarray(term.summands, dtype=float)
    exps = deltas @ w_arr
    probs = np.power(c, -exps) if c > 1.0 else np.ones_like(exps)
    direction = probs @ deltas
    return TermGradient(
        probabilities=tuple(float(p) for p in probs),
        direction=direction,
        projected=project_perp(direction, target),
    )


def _affine_minimizer(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Min-norm point of the affine hull of ``points`` plus its weights."""
    k = points.shape[0]
    system = np.zeros((k + 1, k + 1))
    system[:k, :k] = points @ points.T
    system[:k, k] = 1.0
    system[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    alpha = sol[:k]
    return alpha, points.T @ alpha


def min_norm_point(vectors, tol: float = 1e-12, max_iter: int = 256) -> MinNormResult:
    """Minimum-norm point of the convex hull of ``vectors`` (Wolfe's method).

    Returns the point together with convex coefficients realizing it.  A
    (near-)zero point certifies that the origin lies in the hull; a
    nonzero point m satisfies m . g >= |m|^2 > 0 for every input g, so it
    doubles as a direction improving all of them at once.  On hitting
    ``max_iter`` the best point so far is returned with ``converged``
    set False.
    """
    pts = np.asarray(vectors, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("need a non-empty list of equal-length vectors")
    n = pts.shape[0]
    sq_norms = np.einsum("ij,ij->i", pts, pts)
    scale = float(sq_norms.max())
    coeffs = np.zeros(n)
    if scale == 0.0:
        coeffs[0] = 1.0
        return MinNormResult(np.zeros(pts.shape[1]), coeffs, True)
    eps = tol * scale

    corral = [int(np.argmin(sq_norms))]
    lam = np.array([1.0])
    x = pts[corral[0]].copy()
    converged = False
    for _ in range(max_iter):
        xx = float(x @ x)
        dots = pts @ x
        j = int(np.argmin(dots))
        if xx <= eps or dots[j] >= xx - eps or j in corral:
            converged = True
            break
        corral.append(j)
        lam = np.append(lam, 0.0)
        for _ in range(max_iter):
            sub = pts[corral]
            alpha, y = _affine_minimizer(sub)
            if alpha.min() > 1e-14:
                x = y
                lam = alpha
                break
            # Walk back toward the previous convex combination until the
            # first coordinate hits zero, then drop it from the corral.
            neg = alpha <= 1e-14
            denom = lam[neg] - alpha[neg]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0, lam[neg] / denom, np.inf)
            theta = min(1.0, float(ratios.min()))
            lam = theta * alpha + (1.0 - theta) * lam
            lam[lam < 1e-14] = 0.0
            drop = int(np.argmin(np.where(neg, lam, np.inf)))
            del corral[drop]
            lam = np.delete(lam, drop)
            x = pts[corral].T @ lam
            if len(corral) == 1:
                break

    coeffs[list(corral)] = np.clip(lam, 0.0, None)
    total = coeffs.sum()
    if total > 0:
        coeffs /= total
    return MinNormResult(x, coeffs, converged)


def find_direction(active_gradients, target, tol: float) -> np.ndarray | None:
    """Common improving direction for the active terms, or None at optimality.

    Feeds the projected gradients to :func:`min_norm_point`; a norm at or
    below ``tol`` is the termination signal, otherwise the min-norm point
    itself is returned (it has positive dot with every active normal and
    is orthogonal to the target up to rounding).
    """
    projected = [g.projected for g in active_gradients]
    result = min_norm_point(projected)
    if not result.converged:
        raise MinNormIterationLimit("min-norm point iteration limit")
    if result.norm <= tol:
        return None
    return result.point


def _normalize(w: np.ndarray, target: np.ndarray) -> np.ndarray:
    return w / float(w @ target)


def _min_margin(arrays: SpecArrays, w: np.ndarray) -> tuple[float, int]:
    margins = arrays.matrix @ w
    idx = int(np.argmin(margins))
    return float(margins[idx]), idx


def _witness_for_row(arrays: SpecArrays, row: int, margin: float) -> InfeasibilityWitness:
    which = int(np.searchsorted(arrays.offsets, row, side="right") - 1)
    term = arrays.spec.terms[which]
    summand = term.summands[row - int(arrays.offsets[which])]
    return InfeasibilityWitness(term.name, summand, margin)


def feasible_start(
    spec: RecurrenceSpec,
    config: SolverConfig | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """A weight vector with w . t = 1 and every weighted summand positive.

    Runs max-min ascent on the smallest margin min w . delta using the
    same min-norm machinery as the main loop (the margin is piecewise
    linear, so the active summands' deltas are the ascent normals).
    Stops early once the margin is comfortably positive; raises
    :class:`InfeasibleError` when the max-min margin is not positive.
    """
    cfg = config or SolverConfig()
    arrays = SpecArrays(ensure_validated(spec))
    t = arrays.target
    w = _normalize(t.astype(float), t)
    tol = 0.25
    for _ in range(64):
        for _ in range(cfg.max_round_steps):
            margins = arrays.matrix @ w
            mmin = float(margins.min())
            if mmin >= cfg.margin_goal:
                break
            active = arrays.matrix[margins <= mmin + tol]
            projected = active - np.outer((active @ t) / float(t @ t), t)
            result = min_norm_point(projected)
            if result.norm <= 1e-9:
                break
            w2, improved = _margin_step(arrays, w, result.point, t, mmin, cfg)
            if not improved:
                break
            w = w2
        margins = arrays.matrix @ w
        if float(margins.min()) >= cfg.margin_goal or tol <= 1e-9:
            break
        tol /= 4.0
    mmin, row = _min_margin(arrays, w)
    if mmin <= cfg.hyperplane_tol:
        raise InfeasibleError(_witness_for_row(arrays, row, mmin), w)
    if rng is not None:
        w = _perturb(arrays, w, t, mmin, rng, cfg)
    return w


def _margin_step(arrays, w, v, t, current, cfg) -> tuple[np.ndarray, bool]:
    eps = 1.0
    best = None
    while eps >= cfg.min_step:
        w2 = _normalize(w + eps * v, t)
        m2, _ = _min_margin(arrays, w2)
        if m2 > current:
            best = (w2, m2)
            break
        eps *= 0.5
    if best is None:
        return w, False
    for _ in range(cfg.max_doublings):
        eps *= 2.0
        w2 = _normalize(w + eps * v, t)
        m2, _ = _min_margin(arrays, w2)
        if m2 <= best[1]:
            break
        best = (w2, m2)
    return best[0], True


def _perturb(arrays, w, t, margin, rng, cfg) -> np.ndarray:
    """Nudge the start off exact symmetry axes while staying interior."""
    noise = project_perp(rng.standard_normal(len(w)), t)
    norm = float(np.linalg.norm(noise))
    if norm == 0.0:
        return w
    step = cfg.perturb_scale * margin / norm
    for _ in range(8):
        w2 = _normalize(w + step * noise, t)
        if float((arrays.matrix @ w2).min()) > 0.5 * margin:
            return w2
        step *= 0.5
    return w


@dataclass
class _Iterate:
    w: np.ndarray
    c: float
    roots: np.ndarray
    exps: np.ndarray


def _evaluate(arrays: SpecArrays, w: np.ndarray, cfg: SolverConfig) -> _Iterate:
    c, roots, _codes, exps = arrays.roots(w, cfg.root_tol, cfg.bracket_cap)
    return _Iterate(w=w, c=c, roots=roots, exps=exps)


def _active_indices(roots: np.ndarray, c: float, tol: float) -> list[int]:
    idx = [k for k in range(len(roots)) if roots[k] >= c - tol]
    idx.sort(key=lambda k: (-roots[k], k))
    return idx


def _gradients(arrays, it: _Iterate, active: list[int], t: np.ndarray):
    """Projected ascent normals of the active terms at the current iterate."""
    tt = float(t @ t)
    out = []
    for k in active:
        sl = arrays.term_slice(k)
        probs = np.power(it.c, -it.exps[sl]) if it.c > 1.0 else np.ones(sl.stop - sl.start)
        direction = probs @ arrays.matrix[sl]
        out.append(direction - (float(direction @ t) / tt) * t)
    return out


def line_search(
    spec: RecurrenceSpec,
    w,
    v,
    c_current: float,
    config: SolverConfig | None = None,
) -> tuple[np.ndarray, bool]:
    """Doubling step search along ``v`` from ``w``; see the inner variant."""
    cfg = config or SolverConfig()
    arrays = SpecArrays(ensure_validated(spec))
    t = arrays.target
    start = _Iterate(np.asarray(w, dtype=float), c_current, np.empty(0), np.empty(0))
    nxt, _eps, improved = _line_search(arrays, start, np.asarray(v, dtype=float), 1.0, t, cfg)
    return (nxt.w if improved else np.asarray(w, dtype=float)), improved


def _line_search(
    arrays: SpecArrays,
    it: _Iterate,
    v: np.ndarray,
    eps0: float,
    t: np.ndarray,
    cfg: SolverConfig,
) -> tuple[_Iterate, float, bool]:
    """Find the largest doubling step that does not increase the growth base.

    Probes are renormalized onto the hyperplane before evaluation.  The
    final step is halved once to damp oscillation around the optimum;
    quasiconvexity along the ray guarantees the halved step is still
    non-increasing.  ``improved`` is False when even the smallest probe
    fails, including the null direction.
    """
    if float(v @ v) == 0.0:
        return it, eps0, False

    def probe(eps: float) -> _Iterate:
        return _evaluate(arrays, _normalize(it.w + eps * v, t), cfg)

    eps = eps0
    first = None
    while eps >= cfg.min_step:
        cand = probe(eps)
        if cand.c <= it.c:
            first = cand
            break
        eps *= 0.5
    if first is None:
        return it, eps0, False

    probes = {eps: first}
    top = eps
    for _ in range(cfg.max_doublings):
        nxt = top * 2.0
        cand = probe(nxt)
        if cand.c > it.c:
            break
        probes[nxt] = cand
        top = nxt
    half = top * 0.5
    chosen = probes.get(half)
    if chosen is None:
        chosen = probe(half)
        if chosen.c > it.c:  # only possible through rounding noise
            chosen = probes[top]
            half = top
    return chosen, half, True


def solve(
    spec: RecurrenceSpec,
    target_tol: float = DEFAULT_TARGET_TOL,
    config: SolverConfig | None = None,
) -> AnalysisReport:
    """Minimize the growth base over the hyperplane w . t = 1.

    Runs the three-step descent (collect active terms, find a common
    improving direction, doubling line search) inside an outer loop whose
    active-set tolerance shrinks geometrically to ``target_tol``.  A
    round also ends when five consecutive accepted steps improve by less
    than an eighth of the tolerance, which handles optima whose basis
    spans fewer than d - 1 directions.
    """
    cfg = config or SolverConfig()
    spec = ensure_validated(spec)
    arrays = SpecArrays(spec)
    t = arrays.target
    rng = np.random.default_rng(cfg.seed)

    try:
        w = feasible_start(spec, cfg, rng)
    except InfeasibleError as err:
        return AnalysisReport(
            c=math.inf,
            w=err.w,
            target=spec.target,
            per_term={},
            basis=[],
            iterations=0,
            outer_rounds=0,
            status=SolveStatus.INFEASIBLE,
            certificate_norm=math.inf,
            history=[],
            witness=err.witness,
        )

    it = _evaluate(arrays, w, cfg)
    history = [(it.w.copy(), it.c)]
    if not math.isfinite(it.c):
        # Margins are positive but so small that some root overflows the
        # bracket cap: the bound is astronomically large and no finite
        # descent step exists.  Report honestly instead of looping.
        return _final_report(
            arrays, it, spec, target_tol, cfg,
            iterations=0, outer_rounds=0, round_converged=False,
            history=history,
        )
    finite = it.roots[np.isfinite(it.roots)]
    spread = float(it.c - finite.min()) if finite.size else 0.0
    tol = max(cfg.initial_tol_floor, spread, target_tol)

    iterations = 0
    outer_rounds = 0
    eps_warm = 1.0
    round_converged = False
    while True:
        outer_rounds += 1
        small = 0
        round_converged = False
        for _ in range(cfg.max_round_steps):
            active = _active_indices(it.roots, it.c, tol)
            projected = _gradients(arrays, it, active, t)
            mn = min_norm_point(projected)
            if mn.norm <= tol:
                round_converged = True
                break
            nxt, eps_warm, improved = _line_search(arrays, it, mn.point, eps_warm, t, cfg)
            if not improved:
                break
            rel = (it.c - nxt.c) / max(nxt.c, 1.0)
            it = nxt
            history.append((it.w.copy(), it.c))
            iterations += 1
            if rel < tol * cfg.stall_factor:
                small += 1
                if small >= cfg.stall_window:
                    break
            else:
                small = 0
            if iterations >= cfg.max_total_steps:
                break
        if tol <= target_tol or iterations >= cfg.max_total_steps:
            break
        tol = max(target_tol, tol / cfg.outer_shrink)

    return _final_report(
        arrays, it, spec, target_tol, cfg,
        iterations=iterations, outer_rounds=outer_rounds,
        round_converged=round_converged, history=history,
    )


def _final_report(
    arrays: SpecArrays,
    it: _Iterate,
    spec: RecurrenceSpec,
    target_tol: float,
    cfg: SolverConfig,
    iterations: int,
    outer_rounds: int,
    round_converged: bool,
    history: list[tuple[np.ndarray, float]],
) -> AnalysisReport:
    t = arrays.target
    if math.isfinite(it.c):
        active = _active_indices(it.roots, it.c, target_tol)
        projected = _gradients(arrays, it, active, t)
        mn = min_norm_point(projected)
        basis = [
            (arrays.names[k], float(b))
            for k, b in zip(active, mn.coefficients)
            if b > 1e-12
        ]
        cert_norm = mn.norm
        converged = round_converged and mn.converged and mn.norm <= target_tol
    else:
        basis = []
        cert_norm = math.inf
        converged = False

    per_term: dict[str, TermRoot] = {}
    for k, term in enumerate(spec.terms):
        sl = arrays.term_slice(k)
        exps = tuple(float(a) for a in it.exps[sl])
        value = float(it.roots[k])
        if math.isfinite(value) and value > 1.0:
            res = abs(float(kernel.residual(np.ascontiguousarray(it.exps[sl]), value)))
        else:
            res = 0.0 if math.isfinite(value) else math.inf
        per_term[term.name] = TermRoot(value, exps, res <= cfg.root_tol, res)

    return AnalysisReport(
        c=it.c,
        w=it.w,
        target=spec.target,
        per_term=per_term,
        basis=basis,
        iterations=iterations,
        outer_rounds=outer_rounds,
        status=SolveStatus.CONVERGED if converged else SolveStatus.STALLED,
        certificate_norm=cert_norm,
        history=history,
    )
