"""Command-line surface.

Subcommands: ``analyze`` (solve and report), ``verify`` (exact-oracle
sandwich checks against the solved base), ``certify`` (round the float
solution to rationals and interval-verify it), and ``walk`` (statistical
lower-bound estimate).  Exit codes: 0 success, 1 verification check
failed, 2 infeasible recurrence, 3 certification rejected, 4 input
error, 5 internal limit.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import certify as certify_mod
from . import oracle as oracle_mod
from . import recfile
from .descent import SolveStatus, solve

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INFEASIBLE = 2
EXIT_REJECTED = 3
EXIT_INPUT = 4
EXIT_LIMIT = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recbound",
        description="Worst-case growth analysis of backtracking recurrences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="solve for the optimal growth base")
    analyze.add_argument("file")
    analyze.add_argument("--tol", type=float, default=1e-9)
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--out", choices=("text", "machine"), default="text")

    verify = sub.add_parser("verify", help="check the solved base against exact values")
    verify.add_argument("file")
    verify.add_argument("--n", type=int, required=True)
    verify.add_argument("--tol", type=float, default=1e-9)
    verify.add_argument("--seed", type=int, default=0)

    cert = sub.add_parser("certify", help="emit a rigorous rational certificate")
    cert.add_argument("file")
    cert.add_argument("--bits", type=int, default=certify_mod.DEFAULT_BITS)
    cert.add_argument("--slack", type=float, default=1e-6)
    cert.add_argument("--tol", type=float, default=1e-9)
    cert.add_argument("--seed", type=int, default=0)

    walk = sub.add_parser("walk", help="statistical lower-bound estimate")
    walk.add_argument("file")
    walk.add_argument("--n", type=int, required=True)
    walk.add_argument("--trials", type=int, default=10000)
    walk.add_argument("--seed", type=int, default=0)
    walk.add_argument("--tol", type=float, default=1e-9)
    return parser


def _load(path: str):
    try:
        return recfile.load(path)
    except OSError as err:
        print(f"error: cannot read {path}: {err}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    except (recfile.RecurrenceParseError, recfile.RecurrenceSemanticError) as err:
        print(f"error: {path}: {err}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _solve(spec, tol: float, seed: int):
    from .descent import SolverConfig

    return solve(spec, target_tol=tol, config=SolverConfig(seed=seed))


def _cmd_analyze(args) -> int:
    _name, spec = _load(args.file)
    report = _solve(spec, args.tol, args.seed)
    sys.stdout.buffer.write(recfile.emit_report(report, args.out))
    if report.status is SolveStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_verify(args) -> int:
    _name, spec = _load(args.file)
    report = _solve(spec, args.tol, args.seed)
    if report.status is SolveStatus.INFEASIBLE:
        sys.stdout.buffer.write(recfile.emit_report(report, "text"))
        return EXIT_INFEASIBLE
    try:
        diag = oracle_mod.growth_diagnostic(spec, report, args.n)
    except oracle_mod.UnsupportedDeltas as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except oracle_mod.MemoLimit as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_LIMIT
    sys.stdout.write(diag.csv())
    print(f"upper envelope (log residual not drifting up):   "
          f"{'PASS' if diag.upper_ok else 'FAIL'}")
    print(f"lower envelope (polynomial-corrected residual):  "
          f"{'PASS' if diag.lower_ok else 'FAIL'}")
    return EXIT_OK if diag.upper_ok and diag.lower_ok else EXIT_CHECK_FAILED


def _cmd_certify(args) -> int:
    _name, spec = _load(args.file)
    report = _solve(spec, args.tol, args.seed)
    if report.status is SolveStatus.INFEASIBLE:
        sys.stdout.buffer.write(recfile.emit_report(report, "text"))
        return EXIT_INFEASIBLE
    w, c = certify_mod.round_solution(report, Fraction(args.slack))
    bits = args.bits
    while True:
        try:
            result = certify_mod.certify_upper(spec, w, c, bits)
            break
        except certify_mod.PrecisionExhausted:
            if bits >= certify_mod.MAX_BITS:
                print(
                    f"error: precision exhausted at {bits} bits", file=sys.stderr
                )
                return EXIT_LIMIT
            bits *= 2
    if isinstance(result, certify_mod.Rejection):
        print(f"certification rejected: {result.reason}", file=sys.stderr)
        return EXIT_REJECTED
    sys.stdout.write(certify_mod.serialize_certificate(spec, result))
    print(f"certified: F(n*t) = O(c^n) with c = {float(result.c)!r}", file=sys.stderr)
    return EXIT_OK


def _cmd_walk(args) -> int:
    _name, spec = _load(args.file)
    report = _solve(spec, args.tol, args.seed)
    if report.status is SolveStatus.INFEASIBLE:
        sys.stdout.buffer.write(recfile.emit_report(report, "text"))
        return EXIT_INFEASIBLE
    estimate = oracle_mod.lower_bound_estimate(
        spec, report, args.n, args.trials, seed=args.seed
    )
    print(f"n = {args.n}, trials = {args.trials}")
    print(f"lower-bound estimate of F(n*t): {estimate!r}")
    print(f"solved upper bound c^n: {report.c ** args.n!r}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "analyze": _cmd_analyze,
        "verify": _cmd_verify,
        "certify": _cmd_certify,
        "walk": _cmd_walk,
    }
    try:
        return handlers[args.command](args)
    except SystemExit as err:
        return int(err.code) if err.code is not None else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
