"""Problem bundles: one self-describing JSON file per experiment.

A bundle references or inlines a graph, the coupling data C and M, a
discretization block, projections to test, and a seed.  Command-line flags
only override scalar fields.  Report serialization is deterministic: floats
are written with 17 significant digits and complex numbers as [re, im]
pairs, so identical bundles and seeds produce byte-identical reports.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coupling import CouplingField
from .errors import ParseError
from .graph import MetricGraph, graph_from_dict, load_graph
from .symmetry import (
    EdgeProjection,
    averaging_projection,
    edge_projection,
    layer_projection,
    subspace_projection,
)


def _complex_scalar(v, where: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ParseError(f"{where}: expected number or [re, im] pair, got {v!r}")


def _complex_matrix(data, where: str) -> np.ndarray:
    try:
        rows = [[_complex_scalar(v, where) for v in row] for row in data]
        mat = np.array(rows, dtype=complex)
    except (TypeError, ParseError) as exc:
        raise ParseError(f"{where}: not a complex matrix: {exc}") from exc
    if mat.ndim != 2:
        raise ParseError(f"{where}: expected a 2-d matrix")
    return mat


def _parse_coupling(spec, where: str = "C") -> CouplingField:
    if isinstance(spec, dict):
        kind = spec.get("kind")
        data = spec.get("data")
        if kind not in ("constant", "poly", "samples") or data is None:
            raise ParseError(f"{where}: need kind in constant|poly|samples plus data")
        if kind == "constant":
            return CouplingField.constant(_complex_matrix(data, where))
        entries = []
        for i, row in enumerate(data):
            entries.append([])
            for j, cell in enumerate(row):
                vals = [_complex_scalar(v, f"{where}[{i}][{j}]") for v in cell]
                entries[-1].append((kind, vals))
        return CouplingField(entries)
    if isinstance(spec, list):
        # plain matrix shorthand: constant coupling
        return CouplingField.constant(_complex_matrix(spec, where))
    raise ParseError(f"{where}: cannot interpret coupling spec {spec!r}")


@dataclass
class ProjectionSpec:
    label: str
    build: object  # callable MetricGraph -> EdgeProjection
    expect_invariant: Optional[bool] = None

    def projection(self, g: MetricGraph) -> EdgeProjection:
        return self.build(g)


def _parse_projection(spec, idx: int) -> ProjectionSpec:
    where = f"projections[{idx}]"
    expect = None
    label = f"projection_{idx}"
    if isinstance(spec, dict):
        expect = spec.get("expect_invariant")
        label = spec.get("label", label)
        kind = spec.get("kind", "matrix")
        if kind == "averaging":
            return ProjectionSpec(label, lambda g: averaging_projection(g.n_edges), expect)
        if kind == "layer":
            return ProjectionSpec(label, layer_projection, expect)
        if kind == "subspace":
            basis = spec.get("basis")
            if basis is None:
                raise ParseError(f"{where}: subspace projection needs a basis")
            vecs = _complex_matrix(basis, where)
            return ProjectionSpec(label, lambda g: subspace_projection(vecs), expect)
        if kind == "matrix":
            data = spec.get("data")
            if data is None:
                raise ParseError(f"{where}: matrix projection needs data")
            K = edge_projection(_complex_matrix(data, where))
            return ProjectionSpec(label, lambda g: K, expect)
        raise ParseError(f"{where}: unknown projection kind {kind!r}")
    if isinstance(spec, list):
        K = edge_projection(_complex_matrix(spec, where))
        return ProjectionSpec(label, lambda g: K, expect)
    raise ParseError(f"{where}: cannot interpret projection {spec!r}")


@dataclass
class ProblemBundle:
    graph: MetricGraph
    C: Optional[CouplingField] = None
    M: Optional[np.ndarray] = None
    n_per_edge: int = 15
    dt: Optional[float] = None
    T: float = 0.25
    scheme: str = "crank_nicolson"
    mode: str = "parabolic"
    stride: int = 1
    initial: dict = field(default_factory=lambda: {"kind": "random"})
    projections: list[ProjectionSpec] = field(default_factory=list)
    seed: int = 0
    numeric: bool = False
    trials: int = 4

    def require_coefficients(self) -> tuple[CouplingField, np.ndarray]:
        if self.C is None or self.M is None:
            raise ParseError("bundle must provide both C and M for this command")
        return self.C, self.M


def parse_bundle(path, overrides: Optional[dict] = None) -> ProblemBundle:
    """Load and validate a bundle file; overrides replace scalar fields."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read bundle {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"bundle {path} line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError("bundle must be a JSON object")

    gspec = raw.get("graph")
    if gspec is None:
        raise ParseError("bundle field 'graph' is required")
    try:
        if isinstance(gspec, str):
            gpath = gspec if os.path.isabs(gspec) else os.path.join(os.path.dirname(path), gspec)
            graph = load_graph(gpath)
        else:
            graph = graph_from_dict(gspec)
    except (OSError, KeyError, TypeError) as exc:
        raise ParseError(f"graph: {exc}") from exc

    bundle = ProblemBundle(graph=graph)
    if "C" in raw:
        bundle.C = _parse_coupling(raw["C"])
    if "M" in raw:
        bundle.M = _complex_matrix(raw["M"], "M")
    disc = raw.get("discretization", {})
    if not isinstance(disc, dict):
        raise ParseError("discretization must be an object")
    bundle.n_per_edge = int(disc.get("n_per_edge", bundle.n_per_edge))
    bundle.dt = disc.get("dt", bundle.dt)
    bundle.T = float(disc.get("T", bundle.T))
    bundle.scheme = disc.get("scheme", bundle.scheme)
    bundle.mode = disc.get("mode", bundle.mode)
    bundle.stride = int(disc.get("stride", bundle.stride))
    bundle.initial = raw.get("initial", bundle.initial)
    bundle.projections = [_parse_projection(p, i) for i, p in enumerate(raw.get("projections", []))]
    bundle.seed = int(raw.get("seed", 0))
    bundle.numeric = bool(raw.get("numeric", False))
    bundle.trials = int(raw.get("trials", bundle.trials))

    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(bundle, key, value)
    if bundle.dt is not None:
        bundle.dt = float(bundle.dt)
    if bundle.mode not in ("parabolic", "schrodinger"):
        raise ParseError(f"mode must be parabolic or schrodinger, got {bundle.mode!r}")
    if bundle.scheme not in ("backward_euler", "crank_nicolson"):
        raise ParseError(f"unknown scheme {bundle.scheme!r}")
    return bundle


# Deterministic JSON emission: stdlib json won't let us hook float formatting
# from the C encoder, so this tiny emitter handles the few shapes reports use.

def _format_number(x: float) -> str:
    if not np.isfinite(x):
        raise ParseError(f"non-finite value {x} in report")
    return f"{float(x):.17g}"


def _emit(obj, indent: int, out: list) -> None:
    pad = "  " * indent
    if obj is None or isinstance(obj, bool):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_number(float(obj)))
    elif isinstance(obj, (complex, np.complexfloating)):
        out.append(f"[{_format_number(obj.real)}, {_format_number(obj.imag)}]")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), indent, out)
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for k, item in enumerate(obj):
            out.append(pad + "  ")
            _emit(item, indent + 1, out)
            out.append(",\n" if k + 1 < len(obj) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for k, (key, value) in enumerate(items):
            out.append(pad + "  " + json.dumps(str(key)) + ": ")
            _emit(value, indent + 1, out)
            out.append(",\n" if k + 1 < len(items) else "\n")
        out.append(pad + "}")
    else:
        raise ParseError(f"cannot serialize {type(obj).__name__} in report")


def dumps_report(obj) -> str:
    out: list[str] = []
    _emit(obj, 0, out)
    out.append("\n")
    return "".join(out)


def write_report(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_report(obj))
