"""Unit tests for spec loading, parts files and DOT export."""

from __future__ import annotations

from pathlib import Path

import pytest
import yaml

from metric_partition._types import GraphFile, PartsFile, RunReport
from metric_partition._utils import (
    build_inputs,
    dump_model,
    function_from_spec,
    load_function_file,
    load_measure_file,
    load_parts_file,
    load_spec,
    load_weight_file,
    measure_from_spec,
    parts_from_file,
    parts_to_file,
    partition_dot,
    root_point,
    save_report,
    weight_from_spec,
)
from metric_partition.errors import GraphSpecError
from metric_partition.functionals import LengthFunctional
from metric_partition.graph_core import MetricGraph
from metric_partition.partition import partition


def _write(tmp_path: Path, data: object, name: str = "graph.yaml") -> Path:
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


EDGES = [{"id": "e1", "from": "a", "to": "b", "length": 1.0}]


class TestLoadSpec:
    def test_segment(self, graphs_dir: Path) -> None:
        spec = load_spec(graphs_dir / "segment.yaml")
        inputs = build_inputs(spec)
        assert inputs.graph.total_length == 1.0
        assert inputs.measure("mu").total == pytest.approx(1.0)
        assert spec.p == 2.0

    def test_measure_alias(self, tmp_path: Path) -> None:
        path = _write(tmp_path, {"edges": EDGES, "measure": {"density_default": 2.0}})
        spec = load_spec(path)
        assert set(spec.measures) == {"mu"}

    def test_alias_conflict(self, tmp_path: Path) -> None:
        data = {"edges": EDGES, "measure": {}, "measures": {"mu": {}}}
        with pytest.raises(GraphSpecError, match="either 'measure' or 'measures.mu'"):
            load_spec(_write(tmp_path, data))

    def test_incompatible_major_version(self, tmp_path: Path) -> None:
        with pytest.raises(GraphSpecError, match="Incompatible graph spec schema version '2.0'"):
            load_spec(_write(tmp_path, {"schema_version": "2.0", "edges": EDGES}))

    def test_minor_version_is_accepted(self, tmp_path: Path) -> None:
        spec = load_spec(_write(tmp_path, {"schema_version": "1.7", "edges": EDGES}))
        assert spec.schema_version == "1.7"

    def test_unknown_field(self, tmp_path: Path) -> None:
        with pytest.raises(GraphSpecError, match="colour"):
            load_spec(_write(tmp_path, {"edges": EDGES, "colour": "red"}))

    def test_p_below_one(self, tmp_path: Path) -> None:
        with pytest.raises(GraphSpecError, match="p must be at least 1"):
            load_spec(_write(tmp_path, {"edges": EDGES, "p": 0.5}))

    def test_not_a_mapping(self, tmp_path: Path) -> None:
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(GraphSpecError, match="expected a mapping"):
            load_spec(path)

    def test_point_needs_one_location(self) -> None:
        with pytest.raises(ValueError, match="exactly one"):
            GraphFile.model_validate({"edges": EDGES, "root": {"vertex": "a", "edge": "e1"}})

    def test_root_on_an_edge(self, tmp_path: Path) -> None:
        spec = load_spec(_write(tmp_path, {"edges": EDGES, "root": {"edge": "e1", "offset": 0.5}}))
        point = root_point(build_inputs(spec).graph, spec)
        assert str(point) == "e1@0.5"


class TestPartsFiles:
    def test_round_trip_through_disk(self, triangle_pendant: MetricGraph, tmp_path: Path) -> None:
        result = partition(triangle_pendant, LengthFunctional(triangle_pendant), 4)
        path = tmp_path / "parts.yaml"
        path.write_text(yaml.safe_dump(dump_model(parts_to_file(result.parts))))
        parts = parts_from_file(triangle_pendant, load_parts_file(path))
        assert [p.describe() for p in parts] == [p.describe() for p in result.parts]

    def test_report_is_accepted(self, graphs_dir: Path, tmp_path: Path) -> None:
        inputs = build_inputs(load_spec(graphs_dir / "segment.yaml"))
        result = partition(inputs.graph, LengthFunctional(inputs.graph), 2)
        report = RunReport(
            command=["partition"],
            outputs={"parts": dump_model(parts_to_file(result.parts))["parts"]},
        )
        path = tmp_path / "report.json"
        save_report(report, path)
        assert len(load_parts_file(path).parts) == 2

    def test_parts_version_is_checked(self, tmp_path: Path) -> None:
        path = _write(tmp_path, {"schema_version": "3.1", "parts": []}, "parts.yaml")
        with pytest.raises(GraphSpecError, match="parts schema version"):
            load_parts_file(path)

    def test_empty_parts_file_is_valid(self) -> None:
        assert PartsFile.model_validate({"parts": []}).parts == []


class TestDot:
    def test_one_coloured_edge_per_interval(self, graphs_dir: Path) -> None:
        inputs = build_inputs(load_spec(graphs_dir / "star3.yaml"))
        result = partition(inputs.graph, LengthFunctional(inputs.graph), 2)
        dot = partition_dot(result.parts)
        assert dot.count(" -- ") == 3
        assert "color=1" in dot and "color=2" in dot
        assert dot.endswith("}\n")


class TestRunReport:
    def test_passed_follows_verdicts(self) -> None:
        assert RunReport(command=["x"], verdicts={"a": True, "b": False}).passed is False
        assert RunReport(command=["x"], verdicts={"a": True}).passed is True


class TestSectionFiles:
    def test_function_file(self, graphs_dir: Path, segment: MetricGraph) -> None:
        u = function_from_spec(segment, load_function_file(graphs_dir / "segment_u_bent.yaml"))
        assert u.value(segment.point("e1", 0.5)) == pytest.approx(0.8)
        assert u.value(segment.point("e1", 0.25)) == pytest.approx(0.4)

    def test_weight_file(self, graphs_dir: Path, segment: MetricGraph) -> None:
        a = weight_from_spec(segment, load_weight_file(graphs_dir / "segment_a.yaml"))
        assert a.value(segment.point("e1", 0.25)) == 4.0
        assert a.value(segment.point("e1", 0.75)) == 1.0

    def test_measure_file(self, graphs_dir: Path, segment: MetricGraph) -> None:
        mu = measure_from_spec(segment, load_measure_file(graphs_dir / "segment_mu.yaml"))
        assert mu.total == pytest.approx(1.5)
        assert not mu.is_atomless

    def test_function_version_is_checked(self, graphs_dir: Path) -> None:
        with pytest.raises(GraphSpecError, match="Incompatible function schema version '2.0'"):
            load_function_file(graphs_dir / "bad_version_u.yaml")

    def test_unknown_field_names_the_file(self, tmp_path: Path) -> None:
        path = _write(tmp_path, {"default": 1.0, "pieces": []}, "a.yaml")
        with pytest.raises(GraphSpecError, match=r"a\.yaml.*pieces"):
            load_weight_file(path)
