"""Data model for max-plus branching recurrences.

A recurrence F(x) = max over named terms of the sum over that term's
branching vectors delta of F(x - delta), together with an integer target
vector t along which the asymptotics F(n*t) are measured.  Branching
vectors are integer d-tuples; a term holds an ordered multiset of them
(repetition encodes multiplicity).  All values are immutable after
validation and safe to share across threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np


class ModelError(ValueError):
    """Base class for recurrence validation failures."""


class DimensionMismatch(ModelError):
    """A vector's length disagrees with the declared dimension."""


class ZeroDelta(ModelError):
    """A branching vector is identically zero (a non-shrinking call)."""


class ZeroTarget(ModelError):
    """The target vector is identically zero."""


class EmptyTermList(ModelError):
    """The recurrence has no terms, or a term has no summands."""


@dataclass(frozen=True)
class Term:
    """One case of the analyzed algorithm: a named multiset of branching vectors."""

    name: str
    summands: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.summands)


@dataclass(frozen=True)
class RecurrenceSpec:
    """A branching recurrence plus the target direction of the analysis.

    ``validated`` is set by :func:`validate`; solver entry points call it
    automatically on raw specs.
    """

    dimension: int
    variables: tuple[str, ...]
    target: tuple[int, ...]
    terms: tuple[Term, ...]
    validated: bool = False

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(term.name for term in self.terms)

    def term(self, name: str) -> Term:
        for term in self.terms:
            if term.name == name:
                return term
        raise KeyError(name)


def spec_from_terms(
    terms: Mapping[str, Sequence[Sequence[int]]],
    target: Sequence[int],
    variables: Sequence[str] | None = None,
) -> RecurrenceSpec:
    """Build and validate a spec from a plain ``{name: [delta, ...]}`` mapping."""
    target_t = tuple(int(v) for v in target)
    d = len(target_t)
    if variables is None:
        variables = tuple(f"x{i}" for i in range(d))
    built = tuple(
        Term(name, tuple(tuple(int(v) for v in delta) for delta in summands))
        for name, summands in terms.items()
    )
    return validate(
        RecurrenceSpec(
            dimension=d,
            variables=tuple(str(v) for v in variables),
            target=target_t,
            terms=built,
        )
    )


def validate(spec: RecurrenceSpec) -> RecurrenceSpec:
    """Check all invariants and return the spec in canonical form.

    Canonicalization sorts each term's summands lexicographically;
    duplicate summands (multiplicities) and duplicate term bodies under
    different names are retained.  Idempotent.
    """
    d = spec.dimension
    if d <= 0:
        raise DimensionMismatch(f"dimension must be positive, got {d}")
    if len(spec.variables) != d:
        raise DimensionMismatch(
            f"expected {d} variable names, got {len(spec.variables)}"
        )
    if len(spec.target) != d:
        raise DimensionMismatch(
            f"target has length {len(spec.target)}, expected {d}"
        )
    if not any(spec.target):
        raise ZeroTarget("target vector is zero")
    if not spec.terms:
        raise EmptyTermList("recurrence has no terms")

    seen: set[str] = set()
    canonical: list[Term] = []
    for term in spec.terms:
        if term.name in seen:
            raise ModelError(f"duplicate term name {term.name!r}")
        seen.add(term.name)
        if not term.summands:
            raise EmptyTermList(f"term {term.name!r} has no summands")
        for delta in term.summands:
            if len(delta) != d:
                raise DimensionMismatch(
                    f"term {term.name!r}: summand {delta} has length "
                    f"{len(delta)}, expected {d}"
                )
            if not any(delta):
                raise ZeroDelta(f"term {term.name!r} contains a zero summand")
        canonical.append(replace(term, summands=tuple(sorted(term.summands))))

    return replace(spec, terms=tuple(canonical), validated=True)


def ensure_validated(spec: RecurrenceSpec) -> RecurrenceSpec:
    return spec if spec.validated else validate(spec)


def dot(w: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Inner product with an explicit length check."""
    w_arr = np.asarray(w, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    if w_arr.shape != v_arr.shape:
        raise DimensionMismatch(
            f"cannot dot vectors of shape {w_arr.shape} and {v_arr.shape}"
        )
    return float(w_arr @ v_arr)


def on_hyperplane(
    w: Sequence[float] | np.ndarray,
    target: Sequence[int],
    tol: float = 1e-12,
) -> bool:
    """Whether the weights satisfy w . t = 1 within ``tol``."""
    return abs(dot(w, np.asarray(target, dtype=float)) - 1.0) <= tol


def spec_digest(spec: RecurrenceSpec) -> str:
    """SHA-256 of a canonical rendering; ties certificates to their spec."""
    spec = ensure_validated(spec)
    parts: list[str] = [f"d={spec.dimension}", "t=" + ",".join(map(str, spec.target))]
    for term in spec.terms:
        body = ";".join(",".join(map(str, delta)) for delta in term.summands)
        parts.append(f"{term.name}:{body}")
    return hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()


def summand_iter(spec: RecurrenceSpec) -> Iterable[tuple[str, int, tuple[int, ...]]]:
    """Yield (term name, summand index, delta) over the whole recurrence."""
    for term in spec.terms:
        for j, delta in enumerate(term.summands):
            yield term.name, j, delta
