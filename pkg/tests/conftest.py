import numpy as np
import pytest

from recbound.model import RecurrenceSpec, spec_from_terms


def mis_spec(target=(3, 1)) -> RecurrenceSpec:
    """Bounded-cardinality MIS listing recurrence from the worked analysis."""
    return spec_from_terms(
        {
            "deg0": [(1, 1)],
            "deg1": [(2, 1)] * 2,
            "deg2": [(3, 1)] * 3,
            "deg3": [(4, 1), (1, 0)],
        },
        target=target,
        variables=("n", "k"),
    )


def fib_spec() -> RecurrenceSpec:
    return spec_from_terms({"split": [(1,), (2,)]}, target=(1,))


def binomial_spec() -> RecurrenceSpec:
    return spec_from_terms({"choose": [(1, 0), (1, 1)]}, target=(2, 1))


def chain_spec() -> RecurrenceSpec:
    return spec_from_terms({"step": [(1,)]}, target=(1,))


@pytest.fixture
def smallmis():
    return mis_spec()


@pytest.fixture
def smallmis41():
    return mis_spec(target=(4, 1))


@pytest.fixture
def fibonacci():
    return fib_spec()


@pytest.fixture
def binomial():
    return binomial_spec()


@pytest.fixture
def chain():
    return chain_spec()


def random_spec(rng: np.random.Generator, dimension: int | None = None) -> RecurrenceSpec:
    """Random recurrence with non-negative deltas and a positive target.

    Dimensions 1-4, up to 8 terms of up to 5 summands each, delta entries
    in 0..2 (never all zero).  Positive targets plus non-negative deltas
    guarantee a feasible weight vector exists, so these drive the solver
    property suites; they also satisfy the exact oracle's restriction.
    """
    d = int(dimension if dimension is not None else rng.integers(1, 5))
    target = tuple(int(v) for v in rng.integers(1, 4, size=d))
    nterms = int(rng.integers(1, 9))
    terms = {}
    for i in range(nterms):
        nsummands = int(rng.integers(1, 6))
        summands = []
        for _ in range(nsummands):
            delta = rng.integers(0, 3, size=d)
            while not delta.any():
                delta = rng.integers(0, 3, size=d)
            summands.append(tuple(int(v) for v in delta))
        terms[f"case{i}"] = summands
    return spec_from_terms(terms, target)
