"""Unit tests for cycle cutting, the splitting lemma, and the partition induction."""

from __future__ import annotations

import numpy as np
import pytest

from metric_partition.errors import EpsilonOutOfRange, NotATree
from metric_partition.functionals import (
    LengthFunctional,
    MeasureFunctional,
    ProductFunctional,
    canonical_split,
    create_functional,
    tilde_phi,
)
from metric_partition.graph_core import GraphPoint, MetricGraph, build_graph
from metric_partition.measures import Measure, PiecewiseFunction
from metric_partition.partition import (
    LiftedFunctional,
    cut_cycles,
    lemma_split,
    lift_functional,
    partition,
)
from metric_partition.pytest_plugin import LoadedSpec


class TestCutCycles:
    def test_tree_is_left_alone(self, star3: MetricGraph) -> None:
        cut = cut_cycles(star3)
        assert cut.is_identity
        assert cut.tree is star3
        x = star3.point("e2", 0.4)
        assert cut.tau(x) == x

    def test_triangle(self, triangle: MetricGraph) -> None:
        cut = cut_cycles(triangle)
        assert cut.cycle_rank == 1
        assert cut.tree.is_tree()
        assert len(cut.tree.edges) == 4
        assert len(cut.tree.vertices) == 5
        assert cut.tree.total_length == pytest.approx(3.0)
        (pair,) = cut.splits
        assert pair.point == triangle.point("e1", 0.5)
        assert cut.tau(pair.x1) == cut.tau(pair.x2) == pair.point

    def test_loop(self, loop: MetricGraph) -> None:
        cut = cut_cycles(loop)
        assert cut.tree.is_tree()
        assert sorted(e.length for e in cut.tree.edges) == [0.5, 0.5]
        assert all("a" in (e.start, e.end) for e in cut.tree.edges)
        assert cut.splits[0].point == loop.point("l", 0.5)

    def test_tau_and_preimages(self, triangle: MetricGraph) -> None:
        cut = cut_cycles(triangle)
        y = cut.tree.point("e1.2", 0.25)
        assert cut.tau(y) == triangle.point("e1", 0.75)
        assert cut.preimages(triangle.point("e1", 0.75)) == [y]
        assert len(cut.preimages(triangle.point("e1", 0.5))) == 2

    def test_push_forward_of_whole_tree(self, triangle: MetricGraph) -> None:
        cut = cut_cycles(triangle)
        image = cut.push_forward(cut.tree.whole())
        assert image.length == pytest.approx(3.0)
        assert image.contains(triangle.point("e1", 0.5))

    def test_two_independent_cycles(self) -> None:
        g = build_graph(
            [
                ("e1", "a", "b", 1.0),
                ("e2", "a", "b", 2.0),
                ("e3", "b", "c", 1.0),
                ("e4", "c", "c", 1.0),
            ]
        )
        cut = cut_cycles(g)
        assert cut.cycle_rank == 2
        assert cut.tree.is_tree()
        assert cut.tree.total_length == pytest.approx(g.total_length)


class TestLiftFunctional:
    def test_identity_cut_returns_same_functional(self, star3: MetricGraph) -> None:
        phi = LengthFunctional(star3)
        assert lift_functional(phi, cut_cycles(star3)) is phi

    def test_length_is_invariant(self, triangle: MetricGraph) -> None:
        cut = cut_cycles(triangle)
        lifted = lift_functional(LengthFunctional(triangle), cut)
        assert lifted.total() == pytest.approx(3.0)

    def test_atom_at_split_point_goes_with_first_copy(self, triangle: MetricGraph) -> None:
        cut = cut_cycles(triangle)
        mid = triangle.point("e1", 0.5)
        lifted = lift_functional(MeasureFunctional(Measure.dirac(triangle, mid)), cut)
        first = cut.tree.subset([("e1.1", 0.0, 0.5)])
        second = cut.tree.subset([("e1.2", 0.0, 0.5)])
        assert lifted(first) == 1.0
        assert lifted(second) == 0.0
        assert lifted(first) + lifted(second) == lifted.total()

    def test_foreign_functional_rejected(self, triangle: MetricGraph, star3: MetricGraph) -> None:
        with pytest.raises(ValueError, match="different graphs"):
            LiftedFunctional(LengthFunctional(star3), cut_cycles(triangle))


class TestLemmaSplit:
    def test_segment(self, segment: MetricGraph) -> None:
        result = lemma_split(segment, LengthFunctional(segment), 0.25)
        assert result.x_star.edge == "e1"
        assert result.x_star.offset == pytest.approx(0.75, abs=1e-9)
        assert result.part.length == pytest.approx(0.25, abs=1e-9)
        assert result.remainder is not None
        assert not result.remainder.contains(result.x_star)
        assert result.part.contains(result.x_star)
        assert result.is_monotone(1e-12)

    def test_star_stops_at_centre(self, star3: MetricGraph) -> None:
        result = lemma_split(star3, LengthFunctional(star3), 1.0)
        centre = star3.vertex_point("o")
        assert result.x_star == centre
        assert result.part.describe() == "e2[0,1] + e3[0,1]"
        assert result.remainder is not None
        assert result.remainder.describe() == "e1(0,1]"

    def test_crossing_at_an_atom(self, segment: MetricGraph) -> None:
        mid = segment.point("e1", 0.5)
        phi = ProductFunctional(Measure.length(segment), Measure.dirac(segment, mid), 0.5)
        total = phi(segment.whole())
        result = lemma_split(segment, phi, 0.5 * total)
        assert result.x_star == mid
        assert phi(result.part) >= 0.5 * total
        assert result.remainder is not None
        assert phi(result.remainder) <= 0.5 * total
        assert result.is_monotone(1e-12)

    def test_lemma_inequalities_on_a_tree(self, star3: MetricGraph) -> None:
        phi = LengthFunctional(star3)
        for eps in (0.3, 0.9, 1.7, 2.4):
            result = lemma_split(star3, phi, eps)
            assert phi(result.part) >= eps - 1e-9
            assert result.remainder is not None
            assert phi(result.remainder) <= 3.0 - eps + 1e-9

    @pytest.mark.parametrize("eps", [1.0 - 1e-12, 1.0, 1.0 + 1e-12])
    def test_crossing_on_a_segment_end_stops_at_the_node(self, eps: float) -> None:
        path = build_graph([("e1", "a", "m", 1.0), ("e2", "m", "b", 1.0)])
        phi = LengthFunctional(path)
        result = lemma_split(path, phi, eps)
        assert result.x_star == path.vertex_point("m")
        assert phi(result.part) == pytest.approx(1.0)
        assert result.remainder is not None
        assert not result.remainder.contains(result.x_star)

    def test_irregular_atom_offsets(self, sweep_rng: np.random.Generator) -> None:
        g = build_graph([("e1", "a", "b", 0.881663)])
        for _ in range(25):
            offsets = np.sort(sweep_rng.uniform(0.0, 0.881663, size=3))
            mu = Measure.build(
                g,
                [(g.point("e1", float(t)), 1.0) for t in offsets],
                PiecewiseFunction.constant(g, 1.0),
            )
            phi = ProductFunctional(Measure.length(g), mu, 0.5)
            total = phi.total()
            for fraction in (0.1, 0.37, 0.5, 0.83):
                eps = fraction * total
                result = lemma_split(g, phi, eps)
                assert phi(result.part) >= eps - 1e-8
                assert canonical_split(result.part, result.x_star).value(phi) <= eps + 1e-8

    @pytest.mark.parametrize("eps", [0.0, 1.0, 2.0])
    def test_epsilon_out_of_range(self, segment: MetricGraph, eps: float) -> None:
        with pytest.raises(EpsilonOutOfRange):
            lemma_split(segment, LengthFunctional(segment), eps)

    def test_needs_a_tree(self, triangle: MetricGraph) -> None:
        with pytest.raises(NotATree):
            lemma_split(triangle, LengthFunctional(triangle), 1.0)


class TestPartition:
    def test_segment_golden_trace(self, segment: MetricGraph) -> None:
        result = partition(segment, LengthFunctional(segment), 3)
        assert [p.describe() for p in result.parts] == [
            "e1[0,0.5)",
            "e1[0.5,0.75)",
            "e1[0.75,1]",
        ]
        assert [t.value for t in result.tilde] == pytest.approx([0.25, 0.125, 0.125], abs=1e-9)
        assert result.max_tilde <= result.bound + 1e-9
        assert result.bound == pytest.approx(0.25)

    def test_star_attains_the_bound(self, star3: MetricGraph) -> None:
        result = partition(star3, LengthFunctional(star3), 2)
        assert [p.describe() for p in result.parts] == ["e1(0,1]", "e2[0,1] + e3[0,1]"]
        assert [t.value for t in result.tilde] == pytest.approx([0.5, 1.0], abs=1e-9)
        assert result.max_tilde == pytest.approx(result.bound)
        assert result.minimizers()[1] == star3.vertex_point("o")

    def test_single_part(self, triangle: MetricGraph) -> None:
        phi = LengthFunctional(triangle)
        result = partition(triangle, phi, 1)
        assert result.k == 1
        assert result.parts[0].length == pytest.approx(3.0)
        assert result.max_tilde <= phi.total() / 2 + 1e-9

    def test_cycles_are_pushed_forward(self, triangle: MetricGraph) -> None:
        result = partition(triangle, LengthFunctional(triangle), 4)
        assert result.cut.cycle_rank == 1
        assert result.parts.problems() == []
        assert sum(p.length for p in result.parts) == pytest.approx(3.0)
        assert result.max_tilde <= result.bound * (1 + 1e-8)

    def test_deterministic(self, triangle_pendant: MetricGraph) -> None:
        mu = Measure.build(
            triangle_pendant,
            [(triangle_pendant.point("e2", 0.3), 0.7), (GraphPoint.at_vertex("p"), 1.2)],
        )
        phi = ProductFunctional(Measure.length(triangle_pendant), mu, 0.4)
        first = partition(triangle_pendant, phi, 4)
        second = partition(triangle_pendant, phi, 4)
        assert [p.describe() for p in first.parts] == [p.describe() for p in second.parts]
        assert [t.value for t in first.tilde] == [t.value for t in second.tilde]

    def test_tilde_recomputed_on_tree_parts(self, segment: MetricGraph) -> None:
        phi = LengthFunctional(segment)
        result = partition(segment, phi, 3)
        for part, recorded in zip(result.tree_parts, result.tilde, strict=True):
            assert tilde_phi(phi, part).value == pytest.approx(recorded.value)

    def test_n_must_be_positive(self, segment: MetricGraph) -> None:
        with pytest.raises(ValueError, match="positive integer"):
            partition(segment, LengthFunctional(segment), 0)

    @pytest.mark.graph_spec("../graphs/star3.yaml")
    def test_product_from_spec_file(self, spec_graph: LoadedSpec) -> None:
        phi = create_functional("product", spec_graph.inputs)
        result = partition(spec_graph.graph, phi, 2)
        assert result.total == pytest.approx(3.0)
        assert result.k <= 2
        assert result.max_tilde <= result.bound * (1 + 1e-8)
