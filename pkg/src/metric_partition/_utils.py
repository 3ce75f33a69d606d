"""Shared utilities: spec loading, spec-to-domain builders, report and DOT output."""

from __future__ import annotations

import hashlib
import json
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from metric_partition._types import (
    SPEC_FORMAT_VERSION,
    FunctionSpec,
    GraphFile,
    IntervalSpec,
    MeasureSpec,
    PartSpec,
    PartsFile,
    PointSpec,
    RunReport,
    WeightSpec,
    _check_major,
)
from metric_partition.errors import GraphSpecError
from metric_partition.functionals import FunctionalInputs
from metric_partition.graph_core import (
    ConnectedSubset,
    GraphPoint,
    MetricGraph,
    Partition,
    build_graph,
)
from metric_partition.measures import Measure, PiecewiseFunction

ModelT = TypeVar("ModelT", bound=BaseModel)

DOT_COLORS = 9


# ---------------------------------------------------------------------------
# Loading with file:line diagnostics
# ---------------------------------------------------------------------------


def _line_of(text: str, loc: Sequence[int | str]) -> int | None:
    """1-based line of the YAML node addressed by a pydantic error location."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return None
    line = None
    for key in loc:
        child = None
        if isinstance(node, yaml.MappingNode):
            child = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
            child = node.value[key] if key < len(node.value) else None
        if child is None:
            break
        node = child
        line = node.start_mark.line + 1
    return line


def _load_model(
    path: Path,
    model: type[ModelT],
    adapt: Callable[[dict[str, Any]], dict[str, Any]] | None = None,
) -> ModelT:
    text = path.read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise GraphSpecError(f"{where}: {exc.problem}") from None
    except yaml.YAMLError as exc:
        raise GraphSpecError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise GraphSpecError(f"{path}: expected a mapping, got {type(raw).__name__}")
    if adapt is not None:
        raw = adapt(raw)
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for error in exc.errors():
            loc = [k for k in error["loc"] if isinstance(k, int | str)]
            line = _line_of(text, loc)
            where = f"{path}:{line}" if line else str(path)
            field = ".".join(str(k) for k in loc) or "<root>"
            lines.append(f"{where}: {field}: {error['msg']}")
        raise GraphSpecError("\n".join(lines)) from None


def load_spec(path: Path) -> GraphFile:
    """Load and validate a graph spec file (YAML or JSON)."""
    return _load_model(path, GraphFile)


def _parts_section(raw: dict[str, Any]) -> dict[str, Any]:
    outputs = raw.get("outputs")
    if isinstance(outputs, dict) and "parts" in outputs:
        version = raw.get("schema_version", SPEC_FORMAT_VERSION)
        return {"schema_version": version, "parts": outputs["parts"]}
    return raw


def load_parts_file(path: Path) -> PartsFile:
    """Load a parts file; the report of a ``partition`` run is accepted as well."""
    return _load_model(path, PartsFile, _parts_section)


def _section_file(kind: str) -> Callable[[dict[str, Any]], dict[str, Any]]:
    def adapt(raw: dict[str, Any]) -> dict[str, Any]:
        raw = dict(raw)
        try:
            _check_major(kind, str(raw.pop("schema_version", SPEC_FORMAT_VERSION)))
        except ValueError as exc:
            raise GraphSpecError(str(exc)) from None
        return raw

    return adapt


def load_function_file(path: Path) -> FunctionSpec:
    """A file holding one function: the body of a ``functions`` entry."""
    return _load_model(path, FunctionSpec, _section_file("function"))


def load_weight_file(path: Path) -> WeightSpec:
    return _load_model(path, WeightSpec, _section_file("weight"))


def load_measure_file(path: Path) -> MeasureSpec:
    return _load_model(path, MeasureSpec, _section_file("measure"))


# ---------------------------------------------------------------------------
# Spec -> domain objects
# ---------------------------------------------------------------------------


def build_spec_graph(spec: GraphFile) -> MetricGraph:
    edges = [(e.id, e.from_, e.to, e.length) for e in spec.edges]
    return build_graph(edges, spec.vertices)


def point_from_spec(graph: MetricGraph, spec: PointSpec) -> GraphPoint:
    if spec.vertex is not None:
        return graph.vertex_point(spec.vertex)
    return graph.point(spec.edge or "", spec.offset)


def point_to_spec(x: GraphPoint) -> PointSpec:
    if x.vertex is not None:
        return PointSpec(vertex=x.vertex)
    return PointSpec(edge=x.edge, offset=x.offset)


def measure_from_spec(graph: MetricGraph, spec: MeasureSpec) -> Measure:
    density = None
    if spec.density_default is not None or spec.density:
        density = PiecewiseFunction.step(
            graph,
            spec.density_default or 0.0,
            {d.edge: [(p.from_, p.to, p.value) for p in d.pieces] for d in spec.density},
        )
    atoms = [(point_from_spec(graph, a), a.mass) for a in spec.atoms]
    return Measure.build(graph, atoms, density)


def function_from_spec(graph: MetricGraph, spec: FunctionSpec) -> PiecewiseFunction:
    knots: dict[str, list[tuple[float, float]]] = {}
    for knot in spec.knots:
        knots.setdefault(knot.edge, []).append((knot.offset, knot.value))
    for edge_id in knots:
        graph.edge(edge_id)
    return PiecewiseFunction.linear(graph, spec.vertex_values, knots)


def weight_from_spec(graph: MetricGraph, spec: WeightSpec) -> PiecewiseFunction:
    pieces = {e.edge: [(p.from_, p.to, p.value) for p in e.pieces] for e in spec.edges}
    return PiecewiseFunction.step(graph, spec.default, pieces)


def build_inputs(spec: GraphFile, graph: MetricGraph | None = None) -> FunctionalInputs:
    """Graph plus every named measure, function and weight of a spec file."""
    graph = graph or build_spec_graph(spec)
    return FunctionalInputs(
        graph=graph,
        measures={name: measure_from_spec(graph, m) for name, m in spec.measures.items()},
        functions={name: function_from_spec(graph, f) for name, f in spec.functions.items()},
        weights={name: weight_from_spec(graph, w) for name, w in spec.weights.items()},
        p=spec.p,
        alpha=spec.alpha,
        theta=spec.theta,
    )


def root_point(graph: MetricGraph, spec: GraphFile) -> GraphPoint | None:
    if spec.root is None:
        return None
    if isinstance(spec.root, str):
        return graph.vertex_point(spec.root)
    return point_from_spec(graph, spec.root)


# ---------------------------------------------------------------------------
# Parts
# ---------------------------------------------------------------------------


def subset_to_spec(subset: ConnectedSubset) -> PartSpec:
    return PartSpec(
        intervals=[
            IntervalSpec.model_validate({"edge": e, "from": a, "to": b})
            for e, a, b in subset.intervals
        ],
        vertices=sorted(subset.vertices),
        excluded=[
            point_to_spec(x) for x in sorted(subset.excluded, key=MetricGraph.node_key)
        ],
    )


def parts_to_file(parts: Partition | Sequence[ConnectedSubset]) -> PartsFile:
    return PartsFile(parts=[subset_to_spec(part) for part in parts])


def parts_from_file(graph: MetricGraph, parts_file: PartsFile) -> list[ConnectedSubset]:
    return [
        graph.subset(
            [(i.edge, i.from_, i.to) for i in spec.intervals],
            spec.vertices,
            [point_from_spec(graph, x) for x in spec.excluded],
        )
        for spec in parts_file.parts
    ]


def dump_model(model: BaseModel) -> Any:
    return model.model_dump(mode="json", by_alias=True, exclude_none=True)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def stable_hash(data: bytes) -> str:
    """First 16 hex digits of the sha256 of ``data``."""
    return hashlib.sha256(data).hexdigest()[:16]


def file_digest(path: Path) -> str:
    return stable_hash(path.read_bytes())


def report_text(report: RunReport) -> str:
    return json.dumps(dump_model(report), indent=2, ensure_ascii=False) + "\n"


def save_report(report: RunReport, path: Path) -> None:
    """Serialize a run report to a JSON file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_text(report))


def _dot_node(graph: MetricGraph, edge_id: str, t: float) -> str:
    x = graph.point(edge_id, t)
    return json.dumps(str(x))


def partition_dot(parts: Partition) -> str:
    """Undirected DOT graph with each edge piece coloured by its owning part."""
    graph = parts.graph
    lines = ["graph partition {", "  node [shape=point];", "  edge [colorscheme=set19];"]
    for v in graph.vertices:
        lines.append(f"  {json.dumps(v)} [shape=circle, label={json.dumps(v)}];")
    for index, part in enumerate(parts):
        color = index % DOT_COLORS + 1
        for edge_id, a, b in part.intervals:
            left, right = _dot_node(graph, edge_id, a), _dot_node(graph, edge_id, b)
            label = json.dumps(f"{edge_id}[{a:.6g},{b:.6g}] #{index}")
            lines.append(f"  {left} -- {right} [label={label}, color={color}, penwidth=2];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(parts: Partition, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(partition_dot(parts))
