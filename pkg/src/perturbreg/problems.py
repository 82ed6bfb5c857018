"""Loading and validating structured problem files (JSON).

A problem file describes one stabilized solve: the observed operator (dense
matrix or the running-integral operator), the observed right-hand side, the
noise level, the stabilizer, and optionally the exact problem for error
reporting. Structure is checked against a JSON schema first; what the schema
cannot express (dimension agreement, exclusive keys) is checked here, so the
numerics never see a malformed problem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ProblemFormatError
from .fredholm import FredholmBasis, build_stabilizer
from .operators import DiscreteOperator
from .solve import CoordinationRule, PowerDelta, SqrtDelta

_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
}
_VECTOR_LIST = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["rhs", "stabilizer", "delta"],
    "properties": {
        "matrix": _MATRIX,
        "operator": {"const": "volterra"},
        "interval": {
            "type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"},
        },
        "rhs": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "stabilizer": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
            "properties": {
                "scalar_alpha": {"type": "object", "additionalProperties": False},
                "finite_dim": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["phis", "psis"],
                    "properties": {
                        "phis": _VECTOR_LIST,
                        "psis": _VECTOR_LIST,
                        "gammas": _VECTOR_LIST,
                        "zs": _VECTOR_LIST,
                    },
                },
            },
        },
        "delta": {"type": "number", "minimum": 0},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "rule": {"type": "string", "pattern": "^(sqrt|power:.+)$"},
        "q_max": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "exact_solution": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "exact_matrix": {"anyOf": [{"const": "volterra"}, _MATRIX]},
    },
}


@dataclass(frozen=True)
class Problem:
    """A validated problem file, with operators and basis already built.

    ``basis`` is None for the scalar-alpha stabilizer. ``alpha`` and ``rule``
    are mutually exclusive and only meaningful on the scalar path.
    """

    operator: DiscreteOperator
    rhs: np.ndarray
    delta: float
    q_max: float
    alpha: float | None = None
    rule: CoordinationRule | None = None
    basis: FredholmBasis | None = None
    exact_solution: np.ndarray | None = None
    exact_operator: DiscreteOperator | None = None


def parse_rule(text: str) -> CoordinationRule:
    """Parse a rule spelled as ``sqrt`` or ``power:p`` (0 < p < 1)."""
    if text == "sqrt":
        return SqrtDelta()
    if text.startswith("power:"):
        try:
            return PowerDelta(float(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ProblemFormatError(f"bad rule {text!r}: {exc}") from exc
    raise ProblemFormatError(f"unknown rule {text!r}; expected 'sqrt' or 'power:p'")


def _square_matrix(raw, n: int, what: str) -> np.ndarray:
    m = [list(row) for row in raw]
    width = len(m[0])
    if any(len(row) != width for row in m):
        raise ProblemFormatError(f"{what} rows have unequal lengths")
    arr = np.asarray(m, dtype=float)
    if arr.shape != (n, n):
        raise ProblemFormatError(f"{what} must be {n}x{n} to match rhs, got {arr.shape}")
    return arr


def load_problem(path) -> Problem:
    """Read, schema-validate, and cross-check a problem file.

    Raises
    ------
    ProblemFormatError
        On unreadable files, schema violations, or inconsistent dimensions.
    DegenerateGram, BiorthogonalityFailed
        Propagated from building a finite-rank stabilizer out of bad bases.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ProblemFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{path} is not valid JSON: {exc}") from exc

    try:
        jsonschema.validate(raw, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ProblemFormatError(f"schema violation at {where}: {exc.message}") from exc

    rhs = np.asarray(raw["rhs"], dtype=float)
    n = rhs.size

    has_matrix = "matrix" in raw
    has_operator = "operator" in raw
    if has_matrix == has_operator:
        raise ProblemFormatError("exactly one of 'matrix' and 'operator' must be given")

    a, b = raw.get("interval", [0.0, 1.0])
    if not b > a:
        raise ProblemFormatError(f"interval [{a}, {b}] is empty")

    if has_matrix:
        operator = DiscreteOperator.dense(_square_matrix(raw["matrix"], n, "matrix"))
    else:
        if n < 2:
            raise ProblemFormatError("the integral operator needs at least two grid points")
        operator = DiscreteOperator.volterra(a, b, n)

    stab = raw["stabilizer"]
    basis = None
    if "finite_dim" in stab:
        spec = stab["finite_dim"]
        for key in ("phis", "psis", "gammas", "zs"):
            for vec in spec.get(key, []):
                if len(vec) != n:
                    raise ProblemFormatError(
                        f"stabilizer {key} entries must have length {n} to match rhs")
        basis = build_stabilizer(spec["phis"], spec["psis"],
                                 gammas=spec.get("gammas"), zs=spec.get("zs"))

    alpha = raw.get("alpha")
    rule = parse_rule(raw["rule"]) if "rule" in raw else None
    if alpha is not None and rule is not None:
        raise ProblemFormatError("'alpha' and 'rule' are mutually exclusive")
    if basis is None and alpha is None and rule is None:
        raise ProblemFormatError("the scalar stabilizer needs 'alpha' or 'rule'")

    exact_solution = None
    if "exact_solution" in raw:
        exact_solution = np.asarray(raw["exact_solution"], dtype=float)
        if exact_solution.size != n:
            raise ProblemFormatError(
                f"exact_solution must have length {n}, got {exact_solution.size}")

    exact_operator = None
    if "exact_matrix" in raw:
        if raw["exact_matrix"] == "volterra":
            if n < 2:
                raise ProblemFormatError("the integral operator needs at least two grid points")
            exact_operator = DiscreteOperator.volterra(a, b, n)
        else:
            exact_operator = DiscreteOperator.dense(
                _square_matrix(raw["exact_matrix"], n, "exact_matrix"))

    return Problem(
        operator=operator,
        rhs=rhs,
        delta=float(raw["delta"]),
        q_max=float(raw.get("q_max", 0.5)),
        alpha=None if alpha is None else float(alpha),
        rule=rule,
        basis=basis,
        exact_solution=exact_solution,
        exact_operator=exact_operator,
    )
