"""Unit tests for the discretized Hardy operator and its singular values."""

from __future__ import annotations

import math

import numpy as np
import pytest

from metric_partition.errors import MeshTooCoarse, NotATree
from metric_partition.graph_core import MetricGraph
from metric_partition.hardy import (
    RootedTree,
    check_asymptotics,
    check_bound,
    discretize,
    extrapolate,
    integrate_along_root,
    isometry_gap,
    singular_values,
    volterra_constant,
    volterra_oracle,
)
from metric_partition.measures import PiecewiseFunction
from metric_partition.pytest_plugin import LoadedSpec


class TestDiscretize:
    def test_structure(self, segment: MetricGraph) -> None:
        op = discretize(RootedTree.build(segment, "a"), 10)
        assert op.size == 10
        assert np.allclose(np.triu(op.matrix, 1), 0.0)
        assert np.allclose(np.diag(op.matrix), 0.5 * 0.1)

    def test_zero_weight_gives_zero_matrix(self, segment: MetricGraph) -> None:
        zero = PiecewiseFunction.constant(segment, 0.0)
        op = discretize(RootedTree.build(segment, "a", w=zero), 20)
        assert not np.any(op.matrix)
        assert singular_values(op, 3) == [0.0, 0.0, 0.0]

    def test_interior_root_splits_the_edge(self, segment: MetricGraph) -> None:
        op = discretize(RootedTree.build(segment, segment.point("e1", 0.5)), 20)
        assert len(op.branches) == 2
        assert op.size == 20

    def test_mesh_too_coarse(self, segment: MetricGraph) -> None:
        with pytest.raises(MeshTooCoarse):
            discretize(RootedTree.build(segment, "a"), 3)

    def test_needs_a_tree(self, triangle: MetricGraph) -> None:
        with pytest.raises(NotATree):
            RootedTree.build(triangle, "a")

    def test_weights_must_be_step_functions(
        self, segment: MetricGraph, identity_u: PiecewiseFunction
    ) -> None:
        with pytest.raises(ValueError, match="piecewise constant"):
            RootedTree.build(segment, "a", v=identity_u)


class TestSingularValues:
    def test_diagonal(self) -> None:
        assert singular_values(np.diag([3.0, 2.0, 1.0])) == pytest.approx([3.0, 2.0, 1.0])

    def test_zero(self) -> None:
        assert singular_values(np.zeros((4, 3))) == [0.0, 0.0, 0.0]

    def test_wide_matrix(self) -> None:
        matrix = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
        assert singular_values(matrix) == pytest.approx([2.0, 1.0])

    def test_not_a_matrix(self) -> None:
        with pytest.raises(ValueError, match="2-d"):
            singular_values(np.ones(3))

    def test_volterra_spectrum(self, segment: MetricGraph) -> None:
        values = singular_values(discretize(RootedTree.build(segment, "a"), 2000), 5)
        for n, s in enumerate(values, start=1):
            assert s == pytest.approx(2.0 / ((2 * n - 1) * math.pi), rel=5e-3)
            assert s <= 1.0 / n

    def test_matches_numpy_on_a_small_tree(self, star3: MetricGraph) -> None:
        op = discretize(RootedTree.build(star3, "v1"), 30)
        reference = np.linalg.svd(op.matrix, compute_uv=False)[:6]
        assert singular_values(op, 6) == pytest.approx(list(reference), rel=1e-7)


class TestBound:
    def test_star(self, star3: MetricGraph) -> None:
        report = check_bound(RootedTree.build(star3, "o"), 6, cells_per_unit=50)
        assert report.norm_v == pytest.approx(math.sqrt(3.0))
        assert report.rows[2].bound == pytest.approx(1.0)
        assert report.passed

    @pytest.mark.graph_spec("../graphs/weighted_tree.yaml")
    def test_weighted_tree_from_spec(self, spec_graph: LoadedSpec) -> None:
        weights = spec_graph.inputs.weights
        tree = RootedTree.build(spec_graph.graph, "o", weights["v"], weights["w"])
        report = check_bound(tree, 8, cells_per_unit=40)
        assert report.norm_w == pytest.approx(1.5 * math.sqrt(2.25))
        assert report.passed


class TestAsymptotics:
    def test_extrapolate_exact_model(self) -> None:
        ns = list(range(10, 20))
        values = [(0.3 + 0.2 / n) / n for n in ns]
        assert extrapolate(ns, values) == pytest.approx(0.3)

    def test_oracle_tends_to_one_over_pi(self) -> None:
        assert volterra_oracle(range(20, 41)) == pytest.approx(1.0 / math.pi, rel=1e-3)

    def test_coarse_mesh_fails(self, segment: MetricGraph) -> None:
        tree = RootedTree.build(segment, "a")
        report = check_asymptotics(tree, ns=range(8, 13), cells_per_unit=20)
        assert report.relative_error == pytest.approx(0.0, abs=1e-9)
        assert report.alpha_error > 0.05
        assert not report.passed

    @pytest.mark.slow
    def test_measured_alpha_matches_the_oracle(self) -> None:
        alpha = volterra_constant(range(20, 41), 400)
        assert alpha == pytest.approx(1.0 / math.pi, rel=0.05)

    @pytest.mark.slow
    def test_segment(self, segment: MetricGraph) -> None:
        report = check_asymptotics(RootedTree.build(segment, "a"))
        assert report.limit == pytest.approx(1.0 / math.pi, rel=0.05)
        assert report.alpha_error <= 0.05
        assert report.passed

    @pytest.mark.slow
    def test_star_rooted_at_centre(self, star3: MetricGraph) -> None:
        report = check_asymptotics(RootedTree.build(star3, "o"))
        assert report.integral == pytest.approx(3.0)
        assert report.limit == pytest.approx(3.0 / math.pi, rel=0.05)
        assert report.passed

    def test_rejects_vanishing_weight(self, segment: MetricGraph) -> None:
        zero = PiecewiseFunction.constant(segment, 0.0)
        with pytest.raises(ValueError, match="strictly positive"):
            check_asymptotics(RootedTree.build(segment, "a", v=zero), ns=[4, 5], cells_per_unit=10)


class TestIsometry:
    def test_integral_along_root(self, star3: MetricGraph) -> None:
        op = discretize(RootedTree.build(star3, "o"), 10)
        u = integrate_along_root(op, np.ones(op.size))
        assert u.continuous
        assert u.value(star3.vertex_point("v2")) == pytest.approx(1.0)
        assert u.value(star3.point("e3", 0.4)) == pytest.approx(0.4)

    def test_gap_shrinks_with_the_mesh(self, star3: MetricGraph) -> None:
        tree = RootedTree.build(star3, "v1")
        for cells in (20, 80):
            op = discretize(tree, cells)
            f = np.cos(np.linspace(0.0, 6.0, op.size))
            assert isometry_gap(op, f) <= 5.0 / cells

    def test_wrong_length(self, segment: MetricGraph) -> None:
        op = discretize(RootedTree.build(segment, "a"), 10)
        with pytest.raises(ValueError, match="Expected 10 cell values"):
            integrate_along_root(op, np.ones(3))
