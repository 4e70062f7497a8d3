"""Recurrence input files and report serialization.

The input format is a strict JSON document (UTF-8, nothing executable):

    {
      "name": "smallmis",
      "dimension": 2,
      "variables": ["n", "k"],
      "target": [3, 1],
      "terms": {
        "deg0": [[1, 1]],
        "deg1": [[2, 1], [2, 1]],
        "deg2": [[3, 1], [3, 1], [3, 1]],
        "deg3": [[4, 1], [1, 0]]
      },
      "comments": "optional free text or list of strings"
    }

Multiplicity is written by repeating a summand.  Unknown fields are
rejected.  Machine reports are flat ``key = value`` lines with repr
floats, so identical runs serialize byte-identically and re-parse to the
same values.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .descent import AnalysisReport, SolveStatus
from .model import ModelError, RecurrenceSpec, spec_from_terms

_REQUIRED_KEYS = {"name", "dimension", "variables", "target", "terms"}
_OPTIONAL_KEYS = {"comments"}


class RecurrenceParseError(ValueError):
    """Malformed document; carries line/column when the JSON layer knows them."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.col = col


class RecurrenceSemanticError(ValueError):
    """Well-formed document that does not describe a valid recurrence."""


def parse(text: str) -> tuple[str, RecurrenceSpec]:
    """Parse a recurrence document into (name, validated spec)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise RecurrenceParseError(err.msg, err.lineno, err.colno) from err
    if not isinstance(doc, dict):
        raise RecurrenceSemanticError("top level must be an object")
    keys = set(doc)
    unknown = keys - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if unknown:
        raise RecurrenceSemanticError(f"unknown fields: {sorted(unknown)}")
    missing = _REQUIRED_KEYS - keys
    if missing:
        raise RecurrenceSemanticError(f"missing fields: {sorted(missing)}")

    name = doc["name"]
    if not isinstance(name, str) or not name:
        raise RecurrenceSemanticError("name must be a non-empty string")
    if not isinstance(doc["dimension"], int) or isinstance(doc["dimension"], bool):
        raise RecurrenceSemanticError("dimension must be an integer")
    variables = doc["variables"]
    if not isinstance(variables, list) or not all(isinstance(v, str) for v in variables):
        raise RecurrenceSemanticError("variables must be a list of strings")
    target = _int_list(doc["target"], "target")
    terms = doc["terms"]
    if not isinstance(terms, dict):
        raise RecurrenceSemanticError("terms must be an object")
    parsed_terms: dict[str, list[list[int]]] = {}
    for tname, summands in terms.items():
        if not isinstance(summands, list):
            raise RecurrenceSemanticError(f"term {tname!r} must be a list of summands")
        parsed_terms[tname] = [
            _int_list(s, f"summand of term {tname!r}") for s in summands
        ]
    comments = doc.get("comments")
    if comments is not None and not isinstance(comments, str):
        if not (isinstance(comments, list) and all(isinstance(c, str) for c in comments)):
            raise RecurrenceSemanticError("comments must be a string or list of strings")

    if len(variables) != doc["dimension"]:
        raise RecurrenceSemanticError(
            f"{len(variables)} variables for dimension {doc['dimension']}"
        )
    try:
        spec = spec_from_terms(parsed_terms, target, variables)
    except ModelError as err:
        raise RecurrenceSemanticError(str(err)) from err
    if spec.dimension != doc["dimension"]:
        raise RecurrenceSemanticError(
            f"target length {spec.dimension} disagrees with dimension {doc['dimension']}"
        )
    return name, spec


def _int_list(value: Any, what: str) -> list[int]:
    if not isinstance(value, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in value
    ):
        raise RecurrenceSemanticError(f"{what} must be a list of integers")
    return list(value)


def load(path: str) -> tuple[str, RecurrenceSpec]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse(handle.read())


def emit_report(report: AnalysisReport, fmt: str = "text") -> bytes:
    """Render a report; ``fmt`` is ``text`` (human) or ``machine`` (stable)."""
    if fmt == "machine":
        return _machine_report(report).encode("utf-8")
    if fmt == "text":
        return _text_report(report).encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def _machine_report(report: AnalysisReport) -> str:
    lines = [
        f"c = {report.c!r}",
        f"status = {report.status.value}",
        f"iterations = {report.iterations}",
        f"outer_rounds = {report.outer_rounds}",
        f"certificate_norm = {report.certificate_norm!r}",
    ]
    for k, wk in enumerate(report.w):
        lines.append(f"w[{k}] = {float(wk)!r}")
    basis = dict(report.basis)
    for name, root in report.per_term.items():
        lines.append(f"term.{name}.root = {root.value!r}")
        lines.append(f"term.{name}.basis = {'true' if name in basis else 'false'}")
        lines.append(f"term.{name}.b = {basis.get(name, 0.0)!r}")
    return "\n".join(lines) + "\n"


def parse_machine_report(data: bytes | str) -> dict:
    """Inverse of the machine format, for round-trip checks and tooling."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    out: dict[str, Any] = {"w": {}, "terms": {}}
    for line in text.strip().splitlines():
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in {"c", "certificate_norm"}:
            out[key] = float(value)
        elif key in {"iterations", "outer_rounds"}:
            out[key] = int(value)
        elif key == "status":
            out[key] = value
        elif key.startswith("w["):
            out["w"][int(key[2:-1])] = float(value)
        elif key.startswith("term."):
            name, field = key.split(".", 1)[1].rsplit(".", 1)
            entry = out["terms"].setdefault(name, {})
            if field == "root":
                entry["root"] = float(value)
            elif field == "basis":
                entry["basis"] = value == "true"
            elif field == "b":
                entry["b"] = float(value)
            else:
                raise ValueError(f"unknown term field {field!r}")
        else:
            raise ValueError(f"unknown report key {key!r}")
    out["w"] = tuple(out["w"][k] for k in sorted(out["w"]))
    return out


def _text_report(report: AnalysisReport) -> str:
    lines: list[str] = []
    if report.status is SolveStatus.INFEASIBLE:
        lines.append("infeasible: no weight vector gives every summand positive weight")
        if report.witness is not None:
            lines.append("infeasibility witness:")
            lines.append(
                f"  term {report.witness.term}, summand "
                f"{tuple(report.witness.summand)}, "
                f"best margin {report.witness.margin:.6g}"
            )
        return "\n".join(lines) + "\n"

    lines.append(f"growth base: c = {report.c:.12g}")
    lines.append(
        "bound: F(n*t) = O(c^n) for t = (" + ", ".join(map(str, report.target)) + ")"
    )
    lines.append("weights: (" + ", ".join(f"{float(x):.12g}" for x in report.w) + ")")
    lines.append(
        f"status: {report.status.value} "
        f"({report.iterations} steps, {report.outer_rounds} rounds, "
        f"certificate norm {report.certificate_norm:.3g})"
    )
    lines.append("terms by branching number:")
    basis = dict(report.basis)
    ordered = sorted(
        report.per_term.items(), key=lambda kv: (-kv[1].value, kv[0])
    )
    for name, root in ordered:
        value = "inf" if math.isinf(root.value) else f"{root.value:.12g}"
        mark = f"  BASIS b={basis[name]:.6g}" if name in basis else ""
        lines.append(f"  {name:<12} root = {value}{mark}")
    return "\n".join(lines) + "\n"
