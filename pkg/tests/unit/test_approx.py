"""Unit tests for step-function approximation and the star sharpness runs."""

from __future__ import annotations

import math

import pytest

from metric_partition.approx import (
    SHARPNESS_TOLERANCE,
    StepFunction,
    approximate_uniform,
    build_lp_operator,
    lp_bound,
    lp_error,
    sharpness_star,
    star_graph,
    sup_error,
    uniform_bound,
)
from metric_partition.errors import DiscontinuousInput, UnboundedWeight
from metric_partition.graph_core import MetricGraph, Partition
from metric_partition.measures import Measure, PiecewiseFunction


def _halves(segment: MetricGraph) -> Partition:
    mid = segment.point("e1", 0.5)
    return Partition(
        (segment.subset([("e1", 0.0, 0.5)], excluded=[mid]), segment.subset([("e1", 0.5, 1.0)]))
    )


class TestUniform:
    def test_identity_one_part(
        self, identity_u: PiecewiseFunction, one: PiecewiseFunction
    ) -> None:
        v = approximate_uniform(identity_u, math.inf, one, 1)
        assert v.k == 1
        assert v.values[0] == pytest.approx(0.5, abs=1e-12)
        assert sup_error(identity_u, v) == pytest.approx(0.5, abs=1e-12)
        assert uniform_bound(identity_u, math.inf, one, 1) == pytest.approx(0.5)

    def test_star_distance_attains_bound(self, star3: MetricGraph) -> None:
        rho = PiecewiseFunction.linear(star3, {"o": 0.0, "v1": 1.0, "v2": 1.0, "v3": 1.0})
        a = PiecewiseFunction.constant(star3, 1.0)
        v = approximate_uniform(rho, math.inf, a, 2)
        assert v.values == pytest.approx((0.5, 0.0))
        assert sup_error(rho, v) == pytest.approx(1.0)
        assert uniform_bound(rho, math.inf, a, 2) == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0, math.inf])
    def test_constant_is_reproduced(self, triangle: MetricGraph, p: float) -> None:
        u = PiecewiseFunction.constant(triangle, 2.5, degree=1)
        a = PiecewiseFunction.constant(triangle, 1.0)
        v = approximate_uniform(u, p, a, 3)
        assert set(v.values) == {2.5}
        assert sup_error(u, v) == 0.0

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0, math.inf])
    def test_error_within_bound(self, triangle_pendant: MetricGraph, p: float) -> None:
        u = PiecewiseFunction.linear(
            triangle_pendant,
            {"a": 0.0, "b": 1.0, "c": -0.5, "p": 2.0},
            {"d0": [(0.5, 1.5)], "e2": [(0.5, 0.75)]},
        )
        a = PiecewiseFunction.step(triangle_pendant, 1.0, {"e1": [(0.0, 0.5, 3.0)]})
        for n in (1, 2, 4):
            v = approximate_uniform(u, p, a, n)
            assert v.k <= n
            assert sup_error(u, v) <= uniform_bound(u, p, a, n) * (1 + 1e-8) + 1e-12

    def test_linear_at_infinity(self, segment: MetricGraph, one: PiecewiseFunction) -> None:
        u = PiecewiseFunction.linear(segment, {"a": 0.0, "b": 1.0}, {"e1": [(0.3, 0.8)]})
        w = PiecewiseFunction.linear(segment, {"a": 1.0, "b": -1.0})
        combined = u.combine(2.0, w, -1.0)
        vu, vw, vc = (approximate_uniform(f, math.inf, one, 3) for f in (u, w, combined))
        expected = [2.0 * x - y for x, y in zip(vu.values, vw.values, strict=True)]
        assert list(vc.values) == pytest.approx(expected)

    def test_rejects_step_input(self, one: PiecewiseFunction) -> None:
        with pytest.raises(DiscontinuousInput):
            approximate_uniform(one, 2.0, one, 2)


class TestWeighted:
    def test_length_measure_matches_length_trace(self, segment: MetricGraph) -> None:
        one = PiecewiseFunction.constant(segment, 1.0)
        operator = build_lp_operator(Measure.length(segment), one, 2.0, 3)
        assert operator.rank == 3
        assert [p.describe() for p in operator.parts] == [
            "e1[0,0.5)",
            "e1[0.5,0.75)",
            "e1[0.75,1]",
        ]
        offsets = [x.offset for x in operator.points]
        assert offsets == pytest.approx([0.25, 0.625, 0.875], abs=1e-9)

    def test_star_deltas(self, star3: MetricGraph) -> None:
        leaves = Measure.dirac(star3, *(star3.vertex_point(f"v{i}") for i in (1, 2, 3)))
        one = PiecewiseFunction.constant(star3, 1.0)
        operator = build_lp_operator(leaves, one, 2.0, 2)
        assert operator.rank <= 2

    def test_constants_reproduced(self, triangle: MetricGraph) -> None:
        mu = Measure.build(triangle, [(triangle.point("e2", 0.4), 2.0)], None)
        a = PiecewiseFunction.constant(triangle, 1.0)
        operator = build_lp_operator(mu, a, 2.0, 3)
        constant = PiecewiseFunction.constant(triangle, -4.0, degree=1)
        assert set(operator.apply(constant).values) == {-4.0}
        assert lp_error(constant, operator.apply(constant), mu, 2.0) == 0.0

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    def test_error_within_bound(self, star3: MetricGraph, p: float) -> None:
        mu = Measure.build(
            star3,
            [(star3.vertex_point("v2"), 0.5)],
            PiecewiseFunction.step(star3, 1.0, {"e1": [(0.0, 0.5, 2.0)]}),
        )
        a = PiecewiseFunction.constant(star3, 1.0)
        u = PiecewiseFunction.linear(star3, {"o": 0.2, "v1": 1.0, "v2": -1.0, "v3": 0.0})
        for n in (1, 2, 3):
            operator = build_lp_operator(mu, a, p, n)
            error = lp_error(u, operator.apply(u), mu, p)
            assert error <= lp_bound(mu, a, p, n, u) * (1 + 1e-8) + 1e-12

    def test_infinity_needs_bounded_density(self, star3: MetricGraph) -> None:
        leaves = Measure.dirac(star3, star3.vertex_point("v1"))
        with pytest.raises(UnboundedWeight):
            build_lp_operator(leaves, PiecewiseFunction.constant(star3, 1.0), math.inf, 2)


class TestErrors:
    def test_sup_error(self, segment: MetricGraph, identity_u: PiecewiseFunction) -> None:
        v = StepFunction(Partition((segment.whole(),)), (0.5,))
        assert sup_error(identity_u, v) == 0.5

    def test_lp_error(self, segment: MetricGraph, identity_u: PiecewiseFunction) -> None:
        v = StepFunction(Partition((segment.whole(),)), (0.5,))
        error = lp_error(identity_u, v, Measure.length(segment), 2.0)
        assert error == pytest.approx(math.sqrt(1.0 / 12.0))

    def test_equal_functions(self, segment: MetricGraph) -> None:
        v = StepFunction(Partition((segment.whole(),)), (0.5,))
        assert sup_error(PiecewiseFunction.constant(segment, 0.5, degree=1), v) == 0.0

    def test_atom_at_part_boundary(
        self, segment: MetricGraph, identity_u: PiecewiseFunction
    ) -> None:
        v = StepFunction(_halves(segment), (0.0, 0.75))
        atom = Measure.dirac(segment, segment.point("e1", 0.5))
        assert lp_error(identity_u, v, atom, 1.0) == pytest.approx(0.25)

    def test_value_follows_exclusions(self, segment: MetricGraph) -> None:
        v = StepFunction(_halves(segment), (0.0, 0.75))
        assert v.value(segment.point("e1", 0.5)) == 0.75
        assert v.value(segment.point("e1", 0.49)) == 0.0

    def test_value_count_must_match(self, segment: MetricGraph) -> None:
        with pytest.raises(ValueError, match="one value per part"):
            StepFunction(_halves(segment), (1.0,))


class TestSharpness:
    @pytest.mark.parametrize("count", [2, 3, 4, 5, 6])
    def test_uniform(self, count: int) -> None:
        report = sharpness_star(count, mode="uniform")
        assert report.n == count - 1
        assert report.expected == 1.0
        assert report.relative_gap <= SHARPNESS_TOLERANCE["uniform"]
        assert report.error == pytest.approx(1.0)
        assert report.passed

    @pytest.mark.parametrize("count", [2, 3, 4, 5])
    def test_lp_p2(self, count: int) -> None:
        report = sharpness_star(count, p=2.0, mode="lp")
        assert report.expected == pytest.approx(1.0)
        assert report.achieved == pytest.approx(1.0, abs=1e-6)
        assert report.passed

    def test_lp_p3_meets_bound(self) -> None:
        report = sharpness_star(4, p=3.0, mode="lp")
        assert report.achieved <= report.expected * (1 + 1e-8)

    def test_star_graph(self) -> None:
        star = star_graph(4)
        assert star.boundary == ("v1", "v2", "v3", "v4")
        assert star.total_length == 4.0

    def test_unknown_mode(self) -> None:
        with pytest.raises(ValueError, match="Choose from"):
            sharpness_star(3, mode="sobolev")

    def test_needs_two_edges(self) -> None:
        with pytest.raises(ValueError, match="N >= 2"):
            sharpness_star(1)

    def test_lp_needs_finite_p(self) -> None:
        with pytest.raises(ValueError, match="1 <= p < inf"):
            sharpness_star(3, p=math.inf, mode="lp")
