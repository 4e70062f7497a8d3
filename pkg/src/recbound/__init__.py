"""Growth analysis of multivariate backtracking recurrences.

Given a recurrence F(x) = max over terms of the sum of F(x - delta) and
a target direction t, computes the tight exponential base c with
F(n*t) = Theta*(c**n): an optimal weight vector by smooth quasiconvex
descent, a rigorous rational certificate for the upper bound, and exact
and statistical oracles for validation.
"""

from .certify import (
    CertifiedBound,
    DyadicInterval,
    PrecisionExhausted,
    Rejection,
    certify_upper,
    interval_pow,
    round_solution,
    serialize_certificate,
    verify_certificate,
)
from .descent import (
    AnalysisReport,
    InfeasibleError,
    SolveStatus,
    SolverConfig,
    TermGradient,
    feasible_start,
    find_direction,
    line_search,
    min_norm_point,
    project_perp,
    solve,
    term_gradient,
)
from .kernel import BACKEND, COMPILED
from .model import (
    DimensionMismatch,
    EmptyTermList,
    ModelError,
    RecurrenceSpec,
    Term,
    ZeroDelta,
    ZeroTarget,
    dot,
    spec_from_terms,
    validate,
)
from .oracle import (
    GrowthDiagnostic,
    LatticeOracle,
    MemoLimit,
    TermPolicy,
    UnsupportedDeltas,
    WalkTerm,
    count_paths,
    evaluate,
    growth_diagnostic,
    lower_bound_estimate,
    sample_walk,
    sample_walks,
    walk_plan_from_report,
)
from .recfile import emit_report, parse, parse_machine_report
from .scalar import BracketOverflow, TermRoot, c_of_w, r_eval, term_root

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "BACKEND",
    "BracketOverflow",
    "COMPILED",
    "CertifiedBound",
    "DimensionMismatch",
    "DyadicInterval",
    "EmptyTermList",
    "GrowthDiagnostic",
    "InfeasibleError",
    "LatticeOracle",
    "MemoLimit",
    "ModelError",
    "PrecisionExhausted",
    "RecurrenceSpec",
    "Rejection",
    "SolveStatus",
    "SolverConfig",
    "Term",
    "TermGradient",
    "TermPolicy",
    "TermRoot",
    "UnsupportedDeltas",
    "WalkTerm",
    "ZeroDelta",
    "ZeroTarget",
    "c_of_w",
    "certify_upper",
    "count_paths",
    "dot",
    "emit_report",
    "evaluate",
    "feasible_start",
    "find_direction",
    "growth_diagnostic",
    "interval_pow",
    "line_search",
    "lower_bound_estimate",
    "min_norm_point",
    "parse",
    "parse_machine_report",
    "project_perp",
    "r_eval",
    "round_solution",
    "sample_walk",
    "sample_walks",
    "serialize_certificate",
    "solve",
    "spec_from_terms",
    "term_gradient",
    "term_root",
    "validate",
    "verify_certificate",
    "walk_plan_from_report",
]
