"""Minimum-norm-point solver against an exhaustive face-enumeration oracle."""

import itertools

import numpy as np
import pytest

from recbound.descent import min_norm_point


def brute_min_norm(points: np.ndarray) -> np.ndarray:
    """Exact min-norm point by checking the affine minimizer of every subset.

    The optimum lies on some face of the hull, so the affine minimizer of
    the corresponding vertex subset has non-negative barycentric
    coordinates there; enumerating all subsets is exact for small inputs.
    """
    best = None
    n = len(points)
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            sub = points[list(subset)]
            k = len(sub)
            system = np.zeros((k + 1, k + 1))
            system[:k, :k] = sub @ sub.T
            system[:k, k] = 1.0
            system[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            sol, *_ = np.linalg.lstsq(system, rhs, rcond=None)
            alpha = sol[:k]
            if alpha.min() < -1e-9:
                continue
            candidate = sub.T @ np.clip(alpha, 0.0, None)
            if best is None or candidate @ candidate < best @ best:
                best = candidate
    return best


def test_symmetric_two_point_hull():
    result = min_norm_point([(1.0, 0.0), (0.0, 1.0)])
    assert result.point == pytest.approx([0.5, 0.5], abs=1e-12)
    assert result.coefficients == pytest.approx([0.5, 0.5], abs=1e-12)
    assert result.converged


def test_origin_between_opposite_points():
    result = min_norm_point([(1.0, 0.0), (-1.0, 0.0)])
    assert result.norm <= 1e-12
    assert result.coefficients == pytest.approx([0.5, 0.5], abs=1e-9)


def test_zero_vector_dominates():
    # The projected gradient of a term pinned by the hyperplane is exactly
    # zero; the certificate must put all weight on it.
    result = min_norm_point([(0.0, 0.0), (0.1, -0.3)])
    assert result.norm == 0.0
    assert result.coefficients == pytest.approx([1.0, 0.0], abs=1e-12)


def test_singleton():
    result = min_norm_point([(0.3, -0.4)])
    assert result.point == pytest.approx([0.3, -0.4])
    assert result.coefficients == pytest.approx([1.0])


def test_convex_coefficients_reconstruct_point():
    rng = np.random.default_rng(3)
    for _ in range(100):
        pts = rng.normal(size=(int(rng.integers(1, 7)), int(rng.integers(1, 5))))
        result = min_norm_point(pts)
        assert result.coefficients.min() >= 0.0
        assert result.coefficients.sum() == pytest.approx(1.0, abs=1e-9)
        assert result.coefficients @ pts == pytest.approx(result.point, abs=1e-8)


def test_matches_brute_force_enumeration():
    rng = np.random.default_rng(11)
    for trial in range(120):
        n = int(rng.integers(1, 7))
        d = int(rng.integers(1, 5))
        pts = rng.normal(size=(n, d))
        if trial % 3 == 0:
            pts += 1.5  # push the hull away from the origin
        result = min_norm_point(pts)
        expected = brute_min_norm(pts)
        assert np.linalg.norm(result.point) == pytest.approx(
            np.linalg.norm(expected), abs=1e-7
        )


def test_duplicated_points():
    result = min_norm_point([(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)])
    assert result.point == pytest.approx([1.0, 1.0])
    assert result.coefficients.sum() == pytest.approx(1.0)
