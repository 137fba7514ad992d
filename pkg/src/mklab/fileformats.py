"""Instance and result files: strict JSON schemas with deterministic output.

Instances come in three kinds: "explicit" (cost matrix plus marginal
vectors, with the string "inf" marking forbidden cells), "ap" (the
two-permutation rotation cost) and "ex33" (the clamped level cost over
shift graphs).  Unknown fields are rejected.  Result documents are
emitted by a canonical writer: fixed key order, every float with 17
significant digits, infinities as the strings "inf"/"-inf", so equal
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .core import (
    CostMatrix,
    InvariantError,
    Marginal,
    MKLabError,
    PlanKind,
    TransportPlan,
    mixture_plan,
)
from .rotation import (
    RotationInstance,
    ap_cost,
    ex33_cost,
    golden_shift,
    graph_mixture_plan,
    shift_graph_plan,
    uniform_marginal,
)

SCHEMA_VERSION = 1
KINDS = ("explicit", "ap", "ex33")
AUTO_SHIFT = "auto-golden"


class FileFormatError(MKLabError):
    """A file failed to parse or violated its schema."""


# ---------------------------------------------------------------------------
# canonical JSON


def _format_float(value: float) -> str:
    if math.isnan(value):
        raise FileFormatError("NaN is not serializable")
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    text = format(value, ".17g")
    if not any(ch in text for ch in ".eE"):
        text += ".0"
    return text


def _write_canonical(obj: Any, pieces: list[str], indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, bool):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        pieces.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        pieces.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            pieces.append("{}")
            return
        pieces.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise FileFormatError("object keys must be strings")
            pieces.append(f"{pad}  {json.dumps(key)}: ")
            _write_canonical(value, pieces, indent + 1)
            pieces.append(",\n" if i + 1 < len(obj) else "\n")
        pieces.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            pieces.append("[]")
            return
        pieces.append("[\n")
        for i, value in enumerate(seq):
            pieces.append(pad + "  ")
            _write_canonical(value, pieces, indent + 1)
            pieces.append(",\n" if i + 1 < len(seq) else "\n")
        pieces.append(pad + "]")
    else:
        raise FileFormatError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj: Any) -> str:
    pieces: list[str] = []
    _write_canonical(obj, pieces, 0)
    pieces.append("\n")
    return "".join(pieces)


def _revive(obj: Any) -> Any:
    """Turn the "inf"/"-inf" markers back into floats, recursively."""
    if isinstance(obj, str):
        if obj == "inf":
            return math.inf
        if obj == "-inf":
            return -math.inf
        return obj
    if isinstance(obj, list):
        return [_revive(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _revive(v) for k, v in obj.items()}
    return obj


def loads_canonical(text: str) -> Any:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(
            f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return _revive(raw)


# ---------------------------------------------------------------------------
# instance files


@dataclass(frozen=True)
class InstanceSpec:
    kind: str
    cost: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    nu: Optional[np.ndarray] = None
    pi0: Optional[np.ndarray] = None
    n: Optional[int] = None
    shift: Optional[object] = None  # int or AUTO_SHIFT
    k_max: Optional[int] = None
    seed: Optional[int] = None


def _as_float_matrix(rows: Any, what: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise FileFormatError(f"{what} must be a nonempty list of rows")
    width = len(rows[0])
    for r in rows:
        if len(r) != width:
            raise FileFormatError(f"{what} rows have uneven lengths")
        for v in r:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise FileFormatError(f"{what} entries must be numbers or \"inf\"")
    return np.array(rows, dtype=float)


def _as_float_vector(values: Any, what: str) -> np.ndarray:
    if not isinstance(values, list) or not values:
        raise FileFormatError(f"{what} must be a nonempty list")
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise FileFormatError(f"{what} entries must be numbers")
    return np.array(values, dtype=float)


def _check_fields(doc: dict, allowed: set[str], required: set[str], kind: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise FileFormatError(f"unknown fields for kind {kind!r}: {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise FileFormatError(f"missing fields for kind {kind!r}: {sorted(missing)}")


def parse_instance(text: str) -> InstanceSpec:
    doc = loads_canonical(text)
    if not isinstance(doc, dict):
        raise FileFormatError("instance file must hold a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FileFormatError(f"schema_version must be {SCHEMA_VERSION}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise FileFormatError(f"kind must be one of {KINDS}")

    if kind == "explicit":
        _check_fields(doc, {"schema_version", "kind", "cost", "mu", "nu", "pi0", "seed"},
                      {"cost", "mu", "nu"}, kind)
        cost = _as_float_matrix(doc["cost"], "cost")
        mu = _as_float_vector(doc["mu"], "mu")
        nu = _as_float_vector(doc["nu"], "nu")
        pi0 = _as_float_matrix(doc["pi0"], "pi0") if "pi0" in doc else None
        return InstanceSpec(kind=kind, cost=cost, mu=mu, nu=nu, pi0=pi0,
                            seed=doc.get("seed"))

    _check_fields(doc, {"schema_version", "kind", "n", "shift", "k_max", "seed"},
                  {"n"}, kind)
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise FileFormatError("n must be an integer")
    shift = doc.get("shift", AUTO_SHIFT)
    if shift != AUTO_SHIFT and (not isinstance(shift, int) or isinstance(shift, bool)):
        raise FileFormatError(f'shift must be an integer or "{AUTO_SHIFT}"')
    k_max = doc.get("k_max")
    if k_max is not None and (not isinstance(k_max, int) or isinstance(k_max, bool)):
        raise FileFormatError("k_max must be an integer")
    return InstanceSpec(kind=kind, n=n, shift=shift, k_max=k_max, seed=doc.get("seed"))


def instance_to_jsonable(spec: InstanceSpec) -> dict:
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "kind": spec.kind}
    if spec.kind == "explicit":
        assert spec.cost is not None and spec.mu is not None and spec.nu is not None
        doc["cost"] = [[float(v) for v in row] for row in spec.cost]
        doc["mu"] = [float(v) for v in spec.mu]
        doc["nu"] = [float(v) for v in spec.nu]
        if spec.pi0 is not None:
            doc["pi0"] = [[float(v) for v in row] for row in spec.pi0]
    else:
        doc["n"] = int(spec.n)  # type: ignore[arg-type]
        doc["shift"] = spec.shift if spec.shift is not None else AUTO_SHIFT
        if spec.k_max is not None:
            doc["k_max"] = int(spec.k_max)
    if spec.seed is not None:
        doc["seed"] = int(spec.seed)
    return doc


@dataclass(frozen=True)
class Problem:
    """A fully materialized instance ready for the solvers."""

    cost: CostMatrix
    mu: Marginal
    nu: Marginal
    rotation: Optional[RotationInstance]
    k_max: Optional[int]
    reference_plan: Optional[TransportPlan]


def materialize(spec: InstanceSpec) -> Problem:
    """Build the cost, marginals, and default reference plan of an instance.

    The reference plan backs the restricted and budgeted-dual problems:
    for "ap" it is the half/half mixture of the two graph plans, for
    "ex33" the weighted mixture of the first min(5, k_max + 1) graph
    plans, and for "explicit" the optional pi0 matrix when present.
    """
    if spec.kind == "explicit":
        try:
            cost = CostMatrix(spec.cost)
            mu = Marginal(spec.mu)
            nu = Marginal(spec.nu)
            reference = None
            if spec.pi0 is not None:
                reference = TransportPlan(spec.pi0, PlanKind.EXACT)
        except (InvariantError, MKLabError) as exc:
            raise FileFormatError(f"invalid explicit instance: {exc}") from exc
        if cost.shape != (mu.size, nu.size):
            raise FileFormatError("cost shape does not match the marginals")
        return Problem(cost=cost, mu=mu, nu=nu, rotation=None, k_max=None,
                       reference_plan=reference)

    n = int(spec.n)  # type: ignore[arg-type]
    shift = golden_shift(n) if spec.shift in (None, AUTO_SHIFT) else int(spec.shift)  # type: ignore[arg-type]
    try:
        inst = RotationInstance(n=n, shift=shift)
    except InvariantError as exc:
        raise FileFormatError(f"invalid rotation instance: {exc}") from exc
    mu = uniform_marginal(inst)
    if spec.kind == "ap":
        k_max = spec.k_max if spec.k_max is not None else min(5, n - 1)
        if not 1 <= k_max < n:
            raise FileFormatError(f"k_max must lie in [1, {n - 1}]")
        try:
            cost = ap_cost(inst)
        except InvariantError as exc:
            raise FileFormatError(str(exc)) from exc
        reference = mixture_plan(
            [shift_graph_plan(inst, 0), shift_graph_plan(inst, 1)], [0.5, 0.5])
    else:
        k_max = spec.k_max if spec.k_max is not None else n - 1
        if not 0 <= k_max < n:
            raise FileFormatError(f"k_max must lie in [0, {n - 1}]")
        cost = ex33_cost(inst, k_max)
        reference = graph_mixture_plan(inst, min(4, k_max))
    return Problem(cost=cost, mu=mu, nu=mu, rotation=inst, k_max=k_max,
                   reference_plan=reference)


# ---------------------------------------------------------------------------
# result files


def result_document(problem_name: str, config: dict, instance_doc: dict,
                    *, primal_value: float, dual_value: float, gap: float,
                    plan: Optional[TransportPlan], phi: Optional[np.ndarray],
                    psi: Optional[np.ndarray], iterations: int, pivots: int) -> dict:
    """Assemble a result document; deterministic, so no wall-clock data."""
    return {
        "schema_version": SCHEMA_VERSION,
        "problem": problem_name,
        "config": {
            "feasibility_tol": float(config["feasibility_tol"]),
            "optimality_tol": float(config["optimality_tol"]),
            "max_iterations": int(config["max_iterations"]),
        },
        "instance": instance_doc,
        "status": "solved",
        "primal_value": float(primal_value),
        "dual_value": float(dual_value),
        "gap": float(gap),
        "plan": None if plan is None else [[float(v) for v in row] for row in plan.mass],
        "plan_kind": None if plan is None else plan.kind.value,
        "phi": None if phi is None else [float(v) for v in phi],
        "psi": None if psi is None else [float(v) for v in psi],
        "iterations": int(iterations),
        "pivots": int(pivots),
    }


def serialize_result(doc: dict) -> str:
    return dumps_canonical(doc)


def parse_result(text: str) -> dict:
    doc = loads_canonical(text)
    if not isinstance(doc, dict):
        raise FileFormatError("result file must hold a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FileFormatError(f"schema_version must be {SCHEMA_VERSION}")
    return doc
