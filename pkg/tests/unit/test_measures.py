"""Unit tests for piecewise functions, measures and weighted norms."""

from __future__ import annotations

import math

import pytest

from metric_partition.errors import DiscontinuousInput, UnboundedWeight
from metric_partition.graph_core import MetricGraph
from metric_partition.measures import (
    Measure,
    PiecewiseFunction,
    conjugate_exponent,
    derivative_norm,
    ess_sup,
    lp_norm,
    measure_of,
    power_sum,
    weight_function,
)


class TestPiecewiseFunction:
    def test_linear_interpolates(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        assert identity_u.value(segment.point("e1", 0.3)) == pytest.approx(0.3)
        assert identity_u.value(segment.vertex_point("b")) == 1.0

    def test_knots(self, segment: MetricGraph) -> None:
        hat = PiecewiseFunction.linear(segment, {"a": 0.0, "b": 0.0}, {"e1": [(0.5, 1.0)]})
        assert hat.value(segment.point("e1", 0.25)) == pytest.approx(0.5)
        assert hat.derivative().value(segment.point("e1", 0.75)) == pytest.approx(-2.0)

    def test_missing_vertex_value(self, segment: MetricGraph) -> None:
        with pytest.raises(DiscontinuousInput):
            PiecewiseFunction.linear(segment, {"a": 0.0})

    def test_step(self, segment: MetricGraph) -> None:
        f = PiecewiseFunction.step(segment, 1.0, {"e1": [(0.25, 0.5, 3.0)]})
        assert f.piece_values() == [1.0, 3.0, 1.0]
        assert f.value(segment.point("e1", 0.3)) == 3.0

    def test_overlapping_steps(self, segment: MetricGraph) -> None:
        with pytest.raises(ValueError, match="Overlapping"):
            PiecewiseFunction.step(segment, 0.0, {"e1": [(0.0, 0.5, 1.0), (0.25, 1.0, 2.0)]})

    def test_edge_knots_detect_discontinuity(self, star3: MetricGraph) -> None:
        f = PiecewiseFunction.from_edge_knots(
            star3,
            {
                "e1": [(0.0, 0.0), (1.0, 1.0)],
                "e2": [(0.0, 0.5), (1.0, 1.0)],
                "e3": [(0.0, 0.0), (1.0, 1.0)],
            },
        )
        assert not f.continuous

    def test_combine(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        shifted = identity_u.combine(2.0, PiecewiseFunction.constant(segment, 1.0, degree=1), 3.0)
        assert shifted.value(segment.point("e1", 0.5)) == pytest.approx(4.0)


class TestMeasureOf:
    def test_unit_density(self, segment: MetricGraph) -> None:
        mu = Measure.length(segment)
        assert measure_of(mu, segment.subset([("e1", 0.0, 0.5)])) == 0.5

    def test_atom_on_closed_and_open_edge(self, star3: MetricGraph) -> None:
        leaf = star3.vertex_point("v1")
        mu = Measure.dirac(star3, leaf)
        closed = star3.subset([("e1", 0.0, 1.0)])
        assert measure_of(mu, closed) == 1.0
        assert measure_of(mu, closed.without(leaf)) == 0.0

    def test_density_and_excluded_atom(self, segment: MetricGraph) -> None:
        quarter = segment.point("e1", 0.25)
        mu = Measure.build(segment, [(quarter, 0.5)], PiecewiseFunction.constant(segment, 2.0))
        assert measure_of(mu, segment.subset([("e1", 0.0, 0.25)], excluded=[quarter])) == 0.5
        assert measure_of(mu, segment.subset([("e1", 0.0, 0.25)])) == 1.0

    def test_atoms_at_the_same_point_merge(self, segment: MetricGraph) -> None:
        x = segment.point("e1", 0.5)
        mu = Measure.build(segment, [(x, 1.0), (x, 2.0)])
        assert mu.atoms == {x: 3.0}
        assert mu.total == 3.0

    def test_negative_mass(self, segment: MetricGraph) -> None:
        with pytest.raises(ValueError, match="positive"):
            Measure.build(segment, [(segment.vertex_point("a"), -1.0)])

    def test_negative_density(self, segment: MetricGraph) -> None:
        with pytest.raises(ValueError, match="nonnegative"):
            Measure.build(segment, density=PiecewiseFunction.constant(segment, -1.0))


class TestNorms:
    def test_constant(self, segment: MetricGraph, one: PiecewiseFunction) -> None:
        assert lp_norm(one, 2.0, segment.whole()) == pytest.approx(1.0)

    def test_identity_p2(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        assert lp_norm(identity_u, 2.0, segment.whole()) == pytest.approx(math.sqrt(1.0 / 3.0))

    def test_identity_p3(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        assert lp_norm(identity_u, 3.0, segment.whole()) == pytest.approx(0.25 ** (1.0 / 3.0))

    def test_sign_change_is_integrated_exactly(self, segment: MetricGraph) -> None:
        f = PiecewiseFunction.linear(segment, {"a": -1.0, "b": 1.0})
        assert power_sum(f, 1.0, segment.whole()) == pytest.approx(0.5)

    def test_shift(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        assert power_sum(identity_u, 2.0, segment.whole(), shift=0.5) == pytest.approx(1.0 / 12.0)

    def test_atom_weight(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        mu = Measure.dirac(segment, segment.point("e1", 0.5))
        assert power_sum(identity_u, 1.0, segment.whole(), mu) == pytest.approx(0.5)

    def test_ess_sup(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        left = segment.subset([("e1", 0.0, 0.5)])
        assert ess_sup(identity_u, left) == pytest.approx(0.5)
        assert lp_norm(identity_u, math.inf, segment.whole()) == 1.0

    def test_ess_sup_rejects_atoms(
        self, identity_u: PiecewiseFunction, segment: MetricGraph
    ) -> None:
        mu = Measure.dirac(segment, segment.vertex_point("a"))
        with pytest.raises(UnboundedWeight):
            ess_sup(identity_u, segment.whole(), mu)

    def test_p_below_one(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        with pytest.raises(ValueError):
            lp_norm(identity_u, 0.5, segment.whole())


class TestDerivativeNorm:
    def test_identity(
        self, identity_u: PiecewiseFunction, one: PiecewiseFunction, segment: MetricGraph
    ) -> None:
        assert derivative_norm(identity_u, 2.0, one, segment.whole()) == pytest.approx(1.0)

    def test_distance_on_star_at_infinity(self, star3: MetricGraph) -> None:
        rho = PiecewiseFunction.linear(star3, {"o": 0.0, "v1": 1.0, "v2": 1.0, "v3": 1.0})
        a = PiecewiseFunction.constant(star3, 1.0)
        assert derivative_norm(rho, math.inf, a, star3.whole()) == 1.0

    def test_weight_four(self, identity_u: PiecewiseFunction, segment: MetricGraph) -> None:
        a = PiecewiseFunction.constant(segment, 4.0)
        assert derivative_norm(identity_u, 2.0, a, segment.whole()) == pytest.approx(2.0)

    def test_step_input_rejected(self, one: PiecewiseFunction, segment: MetricGraph) -> None:
        with pytest.raises(DiscontinuousInput):
            derivative_norm(one, 2.0, one, segment.whole())


class TestWeights:
    @pytest.mark.parametrize(
        ("p", "q"), [(1.0, math.inf), (2.0, 2.0), (3.0, 1.5), (math.inf, 1.0)]
    )
    def test_conjugate_exponent(self, p: float, q: float) -> None:
        assert conjugate_exponent(p) == pytest.approx(q)

    def test_weight_function(self, segment: MetricGraph) -> None:
        a = PiecewiseFunction.step(segment, 4.0, {"e1": [(0.0, 0.5, 0.0)]})
        assert weight_function(a, 2.0).piece_values() == [math.inf, 0.5]
        assert weight_function(a, math.inf).piece_values() == [math.inf, 0.25]
