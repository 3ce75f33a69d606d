"""Step-function approximation of Sobolev functions on metric graphs.

Uniform approximation partitions under ``Φ_u``; weighted ``L^p(μ)``
approximation partitions under ``Φ_μ``, which does not look at ``u`` and
therefore yields a linear operator. In both cases a part's value is ``u``
evaluated at the part's ``Φ̃`` minimizer.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from metric_partition.errors import DiscontinuousInput
from metric_partition.functionals import (
    Functional,
    LengthFunctional,
    SobolevFunctional,
    WeightedMeasureFunctional,
)
from metric_partition.graph_core import GraphPoint, MetricGraph, Partition, build_graph
from metric_partition.hardy import singular_values
from metric_partition.measures import (
    Measure,
    PiecewiseFunction,
    conjugate_exponent,
    derivative_norm,
    ess_sup,
    lp_norm,
    power_sum,
    weight_function,
)
from metric_partition.partition import PartitionResult, partition

logger = logging.getLogger("metric_partition.approx")

SHARPNESS_TOLERANCE = {"uniform": 1e-8, "lp": 1e-6}


@dataclass(frozen=True)
class StepFunction:
    """One value per part of a partition; membership follows the parts' exclusions."""

    parts: Partition
    values: tuple[float, ...]
    source: PartitionResult | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.values) != len(self.parts):
            raise ValueError(
                f"A step function needs one value per part: {len(self.parts)} part(s), "
                f"{len(self.values)} value(s)"
            )

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def graph(self) -> MetricGraph:
        return self.parts.graph

    def value(self, x: GraphPoint) -> float:
        return self.values[self.parts.owner(self.graph.canonical(x))]


@dataclass(frozen=True)
class ApproxOperator:
    """``P_n u = Σ u(x_j) χ_j`` for a fixed partition and fixed evaluation points."""

    parts: Partition
    points: tuple[GraphPoint, ...]
    result: PartitionResult | None = field(default=None, repr=False, compare=False)

    @property
    def rank(self) -> int:
        return len(self.parts)

    def apply(self, u: PiecewiseFunction) -> StepFunction:
        return StepFunction(self.parts, tuple(u.value(x) for x in self.points), self.result)


def _require_sobolev(u: PiecewiseFunction) -> None:
    if u.degree != 1 or not u.continuous:
        raise DiscontinuousInput("u must be continuous and piecewise linear")


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def approximate_uniform(
    u: PiecewiseFunction,
    p: float,
    a: PiecewiseFunction,
    n: int,
    tol: float | None = None,
) -> StepFunction:
    """Step function with at most ``n`` values and ``||u - v||_∞`` within :func:`uniform_bound`.

    For ``p = ∞`` the partition depends on ``a`` only, so ``u -> v`` is linear.
    """
    _require_sobolev(u)
    phi: Functional
    if math.isinf(p):
        phi = WeightedMeasureFunctional(a, p, Measure.length(u.graph))
    else:
        phi = SobolevFunctional(u, a, p)
    result = partition(u.graph, phi, n, tol)
    values = tuple(u.value(x) for x in result.minimizers())
    return StepFunction(result.parts, values, result)


def uniform_bound(u: PiecewiseFunction, p: float, a: PiecewiseFunction, n: int) -> float:
    """``||w_a||_{p'} ||u'||_{p,a} / (n+1)``."""
    whole = u.graph.whole()
    w = weight_function(a, p)
    return lp_norm(w, conjugate_exponent(p), whole) * derivative_norm(u, p, a, whole) / (n + 1)


def build_lp_operator(
    mu: Measure,
    a: PiecewiseFunction,
    p: float,
    n: int,
    tol: float | None = None,
) -> ApproxOperator:
    """Rank ``<= n`` operator with ``||u - P_n u||_{p,μ}`` within :func:`lp_bound`.

    ``p = ∞`` needs ``μ`` to have a bounded density; atoms raise ``UnboundedWeight``.
    """
    result = partition(mu.graph, WeightedMeasureFunctional(a, p, mu), n, tol)
    operator = ApproxOperator(result.parts, tuple(result.minimizers()), result)
    logger.debug("L^p operator of rank %d at %s", operator.rank, [str(x) for x in operator.points])
    return operator


def lp_bound(
    mu: Measure, a: PiecewiseFunction, p: float, n: int, u: PiecewiseFunction
) -> float:
    """``||w_a||_{p'} μ(Γ)^(1/p) ||u'||_{p,a} / (n+1)``.

    At ``p = ∞`` the middle factor becomes ``||V||_∞`` and ``w_a`` is measured in ``L^1``.
    """
    whole = mu.graph.whole()
    w = weight_function(a, p)
    seminorm = derivative_norm(u, p, a, whole)
    if math.isinf(p):
        return lp_norm(w, 1.0, whole) * mu.sup_density() * seminorm / (n + 1)
    factor = lp_norm(w, conjugate_exponent(p), whole) * mu.total ** (1.0 / p)
    return factor * seminorm / (n + 1)


# ---------------------------------------------------------------------------
# Exact errors
# ---------------------------------------------------------------------------


def sup_error(u: PiecewiseFunction, v: StepFunction) -> float:
    """``sup |u - v|`` part by part; one-sided limits at excluded points count."""
    best = 0.0
    for part, value in zip(v.parts, v.values, strict=True):
        best = max(best, ess_sup(u, part, shift=value))
        for x in part.closure_points():
            if part.contains(x):
                best = max(best, abs(u.value(x) - value))
    return best


def lp_error(u: PiecewiseFunction, v: StepFunction, mu: Measure, p: float) -> float:
    """``||u - v||_{L^p(μ)}``; at ``p = ∞`` the essential sup of ``|u - v| V``."""
    if math.isinf(p):
        return max(
            ess_sup(u, part, mu, shift=value)
            for part, value in zip(v.parts, v.values, strict=True)
        )
    total = math.fsum(
        power_sum(u, p, part, mu, shift=value)
        for part, value in zip(v.parts, v.values, strict=True)
    )
    return float(total ** (1.0 / p))


# ---------------------------------------------------------------------------
# Sharpness on stars
# ---------------------------------------------------------------------------


def star_graph(count: int) -> MetricGraph:
    """``count`` unit edges ``e1..eN`` from the centre ``o`` to leaves ``v1..vN``."""
    if count < 1:
        raise ValueError(f"A star needs at least one edge, got {count}")
    return build_graph([(f"e{i}", "o", f"v{i}", 1.0) for i in range(1, count + 1)])


def _ray(graph: MetricGraph, leaf: str) -> PiecewiseFunction:
    """Distance to the centre on the edge ending at ``leaf``, zero elsewhere."""
    values = {v: 1.0 if v == leaf else 0.0 for v in graph.vertices}
    return PiecewiseFunction.linear(graph, values)


@dataclass
class SharpnessReport:
    mode: str
    N: int
    n: int
    p: float
    achieved: float
    expected: float
    tolerance: float
    error: float | None = None
    residuals: list[float] = field(default_factory=list)

    @property
    def relative_gap(self) -> float:
        return abs(self.achieved - self.expected) / self.expected

    @property
    def passed(self) -> bool:
        if self.relative_gap > self.tolerance:
            return False
        if self.error is None:
            return True
        return abs(self.error - self.expected) <= self.tolerance * self.expected


def _sharpness_uniform(graph: MetricGraph, count: int, p: float) -> SharpnessReport:
    n = count - 1
    result = partition(graph, LengthFunctional(graph), n)
    expected = graph.total_length / (n + 1)
    centre = graph.vertex_point("o")
    rho = PiecewiseFunction.linear(
        graph, {v: graph.distance(centre, graph.vertex_point(v)) for v in graph.vertices}
    )
    one = PiecewiseFunction.constant(graph, 1.0)
    v = approximate_uniform(rho, math.inf, one, n)
    return SharpnessReport(
        "uniform",
        count,
        n,
        p,
        result.max_tilde,
        expected,
        SHARPNESS_TOLERANCE["uniform"],
        error=sup_error(rho, v),
    )


def _star_lp_bound(graph: MetricGraph, mu: Measure, p: float, n: int) -> float:
    """Weighted bound for ``a ≡ 1`` and ``||u'||_p = 1``: ``|Γ|^(1/p') μ(Γ)^(1/p) / (n+1)``."""
    q = conjugate_exponent(p)
    length_factor = graph.total_length ** (0.0 if math.isinf(q) else 1.0 / q)
    return float(length_factor * mu.total ** (1.0 / p) / (n + 1))


def _sharpness_lp(graph: MetricGraph, count: int, p: float) -> SharpnessReport:
    if not 1.0 <= p < math.inf:
        raise ValueError(f"Sharpness in lp mode needs 1 <= p < inf, got {p}")
    n = count - 1
    leaves = [f"v{i}" for i in range(1, count + 1)]
    mu = Measure.dirac(graph, *(graph.vertex_point(v) for v in leaves))
    one = PiecewiseFunction.constant(graph, 1.0)
    operator = build_lp_operator(mu, one, p, n)
    rays = [_ray(graph, leaf) for leaf in leaves]
    images = [operator.apply(u) for u in rays]
    matrix = np.array(
        [[image.value(graph.vertex_point(leaf)) for image in images] for leaf in leaves]
    )
    residual = np.eye(count) - matrix
    # Coordinate elements have ||u'||_{p,a} = 1.
    residuals = [lp_error(u, image, mu, p) for u, image in zip(rays, images, strict=True)]
    if p == 2.0:
        achieved = singular_values(residual, 1)[0]
    else:
        uniform = np.full(count, count ** (-1.0 / p))
        combined = float(np.sum(np.abs(residual @ uniform) ** p) ** (1.0 / p))
        achieved = max([*residuals, combined])
    expected = _star_lp_bound(graph, mu, p, n)
    return SharpnessReport(
        "lp", count, n, p, achieved, expected, SHARPNESS_TOLERANCE["lp"], residuals=residuals
    )


def sharpness_star(count: int, p: float = 2.0, mode: str = "uniform") -> SharpnessReport:
    """Run the star-graph construction with ``n = N - 1`` and compare with the bound."""
    if count < 2:
        raise ValueError(f"Sharpness needs N >= 2, got {count}")
    runners = {"uniform": _sharpness_uniform, "lp": _sharpness_lp}
    runner = runners.get(mode)
    if runner is None:
        raise ValueError(f"Unknown sharpness mode: {mode!r}. Choose from: {list(runners)}")
    report = runner(star_graph(count), count, p)
    logger.info(
        "Sharpness (%s, N=%d): achieved %.12g vs bound %.12g, %s",
        mode,
        count,
        report.achieved,
        report.expected,
        "equal" if report.passed else "not equal",
    )
    return report

