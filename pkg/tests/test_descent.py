import math

import numpy as np
import pytest

from recbound.descent import (
    SolveStatus,
    SolverConfig,
    feasible_start,
    find_direction,
    line_search,
    project_perp,
    solve,
    term_gradient,
)
from recbound.model import Term, spec_from_terms
from recbound.scalar import c_of_w

from conftest import chain_spec, mis_spec, random_spec
from test_scalar import W_MIS, GOLDEN


def test_project_perp_examples():
    assert project_perp((3.0, 1.0), (3, 1)) == pytest.approx([0.0, 0.0], abs=1e-15)
    assert project_perp((7 / 4, 1 / 4), (3, 1)) == pytest.approx([0.1, -0.3], abs=1e-12)
    assert project_perp((0.0, 1.0), (1, 0)) == pytest.approx([0.0, 1.0])


def test_project_perp_is_orthogonal():
    rng = np.random.default_rng(5)
    for _ in range(50):
        v = rng.normal(size=3)
        t = rng.integers(-3, 4, size=3)
        if not t.any():
            continue
        assert project_perp(v, t) @ t == pytest.approx(0.0, abs=1e-10)


def test_term_gradient_at_mis_optimum():
    deg2 = Term("deg2", ((3, 1),) * 3)
    g = term_gradient(deg2, W_MIS, 3.0, (3, 1))
    assert g.probabilities == pytest.approx([1 / 3] * 3, abs=1e-12)
    assert g.direction == pytest.approx([3.0, 1.0], abs=1e-11)
    assert g.projected == pytest.approx([0.0, 0.0], abs=1e-11)

    deg3 = Term("deg3", ((1, 0), (4, 1)))
    g = term_gradient(deg3, W_MIS, 3.0, (3, 1))
    probs = dict(zip(deg3.summands, g.probabilities))
    assert probs[(4, 1)] == pytest.approx(0.25, abs=1e-12)
    assert probs[(1, 0)] == pytest.approx(0.75, abs=1e-12)
    assert g.direction == pytest.approx([7 / 4, 1 / 4], abs=1e-11)


def test_term_gradient_single_summand():
    g = term_gradient(Term("one", ((2, 1),)), (0.3, 0.2), 2.0, (2, 1))
    a = 0.3 * 2 + 0.2
    assert g.probabilities == pytest.approx([2.0**-a])
    assert g.direction == pytest.approx([2.0**-a * 2, 2.0**-a * 1])


def test_gradient_is_descent_normal():
    # Moving along v with v . direction > 0 must lower the term's root.
    term = Term("t", ((2, 1), (1, 2)))
    w = np.array([0.35, 0.3])
    from recbound.scalar import term_root

    base = term_root(term, w).value
    g = term_gradient(term, w, base, (2, 1))
    v = g.direction / np.linalg.norm(g.direction)
    stepped = term_root(term, w + 1e-6 * v).value
    assert stepped < base


def test_find_direction_cases():
    t = (3, 1)
    deg2 = term_gradient(Term("deg2", ((3, 1),) * 3), W_MIS, 3.0, t)
    deg3 = term_gradient(Term("deg3", ((1, 0), (4, 1))), W_MIS, 3.0, t)
    assert find_direction([deg2, deg3], t, tol=1e-9) is None  # optimum
    v = find_direction([deg3], t, tol=1e-9)
    assert v is not None
    assert v @ np.asarray(deg3.projected) > 0
    opposite = term_gradient(Term("x", ((1, 3),)), (0.25, 0.25), 2.0, t)
    flipped = type(opposite)(
        probabilities=opposite.probabilities,
        direction=-np.asarray(deg3.direction),
        projected=-np.asarray(deg3.projected),
    )
    assert find_direction([deg3, flipped], t, tol=1e-9) is None


def test_feasible_start_mis(smallmis):
    w = feasible_start(smallmis)
    assert abs(w @ np.array([3.0, 1.0]) - 1.0) <= 1e-12
    margins = [np.dot(w, d) for term in smallmis.terms for d in term.summands]
    assert min(margins) > 0


def test_feasible_start_infeasible_sign_forced():
    spec = spec_from_terms({"up": [(-1,)]}, target=(1,))
    from recbound.descent import InfeasibleError

    with pytest.raises(InfeasibleError) as err:
        feasible_start(spec)
    assert err.value.witness.margin == pytest.approx(-1.0)


def test_feasible_start_binomial(binomial):
    w = feasible_start(binomial)
    assert abs(2 * w[0] + w[1] - 1.0) <= 1e-12
    assert w[0] > 0 and w[0] + w[1] > 0


def test_line_search_null_direction(smallmis):
    w = feasible_start(smallmis)
    c, _ = c_of_w(smallmis, w)
    w2, improved = line_search(smallmis, w, np.zeros(2), c)
    assert not improved
    assert w2 == pytest.approx(w)


def test_line_search_decreases_c(smallmis):
    from recbound.descent import term_gradient as tg
    from recbound.scalar import SpecArrays

    rng = np.random.default_rng(2)
    w = feasible_start(smallmis, rng=rng)
    c, roots = c_of_w(smallmis, w)
    worst = max(roots, key=lambda n: roots[n].value)
    g = tg(smallmis.term(worst), w, c, smallmis.target)
    v = find_direction([g], smallmis.target, tol=1e-12)
    if v is not None:
        w2, improved = line_search(smallmis, w, v, c)
        assert improved
        c2, _ = c_of_w(smallmis, w2)
        assert c2 <= c


def test_solve_mis_target31(smallmis):
    report = solve(smallmis, target_tol=1e-9)
    assert report.c == pytest.approx(3.0, abs=1e-6)
    assert "deg2" in report.basis_names
    basis = dict(report.basis)
    assert basis["deg2"] == pytest.approx(1.0, abs=1e-6)
    assert report.status in (SolveStatus.CONVERGED, SolveStatus.STALLED)


def test_solve_mis_target41(smallmis41):
    report = solve(smallmis41, target_tol=1e-9)
    assert report.c == pytest.approx(4.0, abs=1e-6)
    assert set(report.basis_names) == {"deg2", "deg3"}
    for name in ("deg2", "deg3"):
        assert report.per_term[name].value == pytest.approx(4.0, abs=1e-6)
    # Optimal weights in closed form: w1 = log_4(4/3), w2 = log_4(81/64).
    w1 = math.log(4 / 3, 4)
    assert report.w == pytest.approx([w1, 1 - 4 * w1], abs=1e-4)
    # Min-norm coefficients at the optimum: (3/7, 4/7).
    basis = dict(report.basis)
    assert basis["deg2"] == pytest.approx(3 / 7, abs=1e-3)
    assert basis["deg3"] == pytest.approx(4 / 7, abs=1e-3)


def test_solve_fibonacci(fibonacci):
    report = solve(fibonacci, target_tol=1e-9)
    assert report.c == pytest.approx(GOLDEN, abs=1e-9)
    assert report.w == pytest.approx([1.0], abs=1e-12)
    assert report.status is SolveStatus.CONVERGED


def test_solve_binomial(binomial):
    report = solve(binomial, target_tol=1e-9)
    assert report.c == pytest.approx(4.0, abs=1e-6)
    assert report.w == pytest.approx([0.5, 0.0], abs=1e-3)
    assert report.basis_names == ("choose",)


def test_solve_chain_is_degenerate_unit():
    report = solve(chain_spec(), target_tol=1e-9)
    assert report.c == pytest.approx(1.0, abs=1e-12)
    assert report.basis == [("step", 1.0)]


def test_solve_infeasible_report():
    spec = spec_from_terms({"up": [(-1,)]}, target=(1,))
    report = solve(spec)
    assert report.status is SolveStatus.INFEASIBLE
    assert math.isinf(report.c)
    assert report.witness is not None
    assert report.witness.term == "up"


def test_descent_monotone_and_on_hyperplane(smallmis41):
    report = solve(smallmis41, target_tol=1e-9)
    cs = [c for _, c in report.history]
    assert all(a >= b - 1e-12 for a, b in zip(cs, cs[1:]))
    t = np.array([4.0, 1.0])
    for w, _ in report.history:
        assert abs(w @ t - 1.0) <= 1e-12


def test_sum_of_basis_coefficients_is_one(smallmis41):
    report = solve(smallmis41, target_tol=1e-9)
    assert sum(b for _, b in report.basis) == pytest.approx(1.0, abs=1e-9)


def test_solver_dominates_random_sampling(smallmis):
    report = solve(smallmis, target_tol=1e-9)
    rng = np.random.default_rng(17)
    t = np.array([3.0, 1.0])
    w0 = feasible_start(smallmis)
    for _ in range(100):
        step = rng.normal(size=2)
        step -= (step @ t) / (t @ t) * t
        w = w0 + rng.uniform(0, 0.5) * step
        w = w / (w @ t)
        c, _ = c_of_w(smallmis, w)
        assert report.c <= c + 1e-9


def test_gradient_vs_finite_differences():
    rng = np.random.default_rng(23)
    for _ in range(20):
        spec = random_spec(rng)
        w = feasible_start(spec, rng=rng)
        _, roots = c_of_w(spec, w)
        for term in spec.terms:
            root = roots[term.name]
            if len(term.summands) < 2 or not math.isfinite(root.value):
                continue
            g = term_gradient(term, w, root.value, spec.target)
            fd = np.zeros(len(w))
            h = 1e-6
            skip = False
            for k in range(len(w)):
                wp, wm = w.copy(), w.copy()
                wp[k] += h
                wm[k] -= h
                from recbound.scalar import term_root

                rp = term_root(term, wp).value
                rm = term_root(term, wm).value
                if not (math.isfinite(rp) and math.isfinite(rm)):
                    skip = True
                    break
                fd[k] = (rp - rm) / (2 * h)
            if skip or np.linalg.norm(fd) == 0:
                continue
            cos = fd @ g.direction / (
                np.linalg.norm(fd) * np.linalg.norm(g.direction)
            )
            assert cos <= -1.0 + 1e-4


def test_random_specs_solve_cleanly():
    rng = np.random.default_rng(31)
    for _ in range(25):
        spec = random_spec(rng)
        report = solve(spec, target_tol=1e-6)
        assert report.status in (SolveStatus.CONVERGED, SolveStatus.STALLED)
        assert math.isfinite(report.c)
        assert report.c >= 1.0
        assert sum(b for _, b in report.basis) == pytest.approx(1.0, abs=1e-6)
