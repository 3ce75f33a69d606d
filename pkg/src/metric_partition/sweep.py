"""Seeded random sweeps over graphs, functionals and approximation problems.

Instance ``i`` of a sweep with seed ``s`` draws from ``default_rng((s, i))``,
so any single failing case can be replayed on its own.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat

import numpy as np

from metric_partition.approx import (
    approximate_uniform,
    build_lp_operator,
    lp_bound,
    lp_error,
    sup_error,
    uniform_bound,
)
from metric_partition.errors import MetricPartitionError
from metric_partition.functionals import (
    Functional,
    LengthFunctional,
    ProductFunctional,
    ThetaFunctional,
    WeightedMeasureFunctional,
    canonical_split,
)
from metric_partition.graph_core import ConnectedSubset, GraphPoint, MetricGraph, build_graph
from metric_partition.hardy import RootedTree, check_bound
from metric_partition.measures import Measure, PiecewiseFunction
from metric_partition.partition import PartitionResult, partition
from metric_partition.verifier import BOUND_RELATIVE_SLACK, verify_result

logger = logging.getLogger("metric_partition.sweep")

MAX_EDGES = 12
LENGTH_RELATIVE_TOLERANCE = 1e-12
HARDY_CELLS_PER_UNIT = 40
HARDY_N_MAX = 10
GRID_MAX_EDGES = 6
GRID_POINTS_PER_INTERVAL = 16


def instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng((seed, index))


# ---------------------------------------------------------------------------
# Random inputs
# ---------------------------------------------------------------------------


def random_graph(
    rng: np.random.Generator, *, tree: bool = False, max_edges: int = MAX_EDGES
) -> MetricGraph:
    """Random connected graph; cycles, loops and parallel edges unless ``tree`` is set."""
    vertex_count = int(rng.integers(2, min(7, max_edges + 1) + 1))
    vertices = [f"v{i}" for i in range(vertex_count)]
    pairs = [(vertices[int(rng.integers(0, i))], vertices[i]) for i in range(1, vertex_count)]
    if not tree:
        extra = int(rng.integers(0, max_edges - len(pairs) + 1))
        for _ in range(extra):
            start = vertices[int(rng.integers(0, vertex_count))]
            kind = rng.random()
            if kind < 0.2:
                end = start
            elif kind < 0.4 and pairs:
                start, end = pairs[int(rng.integers(0, len(pairs)))]
            else:
                end = vertices[int(rng.integers(0, vertex_count))]
            pairs.append((start, end))
    edges = [
        (f"e{i}", a, b, round(float(rng.uniform(0.25, 2.0)), 6))
        for i, (a, b) in enumerate(pairs, start=1)
    ]
    return build_graph(edges, vertices)


def random_point(rng: np.random.Generator, graph: MetricGraph) -> GraphPoint:
    if rng.random() < 0.3:
        return graph.vertex_point(graph.vertices[int(rng.integers(0, len(graph.vertices)))])
    edge = graph.edges[int(rng.integers(0, len(graph.edges)))]
    return graph.point(edge.id, float(rng.uniform(0.05, 0.95)) * edge.length)


def random_step(
    rng: np.random.Generator, graph: MetricGraph, low: float, high: float
) -> PiecewiseFunction:
    """Piecewise-constant function with up to two pieces per edge, values in ``[low, high]``."""
    pieces: dict[str, list[tuple[float, float, float]]] = {}
    for edge in graph.edges:
        values = rng.uniform(low, high, size=2)
        if rng.random() < 0.5:
            pieces[edge.id] = [(0.0, edge.length, float(values[0]))]
        else:
            cut = float(rng.uniform(0.2, 0.8)) * edge.length
            pieces[edge.id] = [(0.0, cut, float(values[0])), (cut, edge.length, float(values[1]))]
    return PiecewiseFunction.step(graph, low, pieces)


def random_function(rng: np.random.Generator, graph: MetricGraph) -> PiecewiseFunction:
    """Continuous piecewise-linear function with up to two interior knots per edge."""
    values = {v: float(rng.normal()) for v in graph.vertices}
    knots: dict[str, list[tuple[float, float]]] = {}
    for edge in graph.edges:
        count = int(rng.integers(0, 3))
        offsets = np.sort(rng.uniform(0.1, 0.9, size=count)) * edge.length
        knots[edge.id] = [(float(t), float(rng.normal())) for t in offsets]
    return PiecewiseFunction.linear(graph, values, knots)


def random_measure(
    rng: np.random.Generator, graph: MetricGraph, *, atoms: bool = True
) -> Measure:
    """Density plus (optionally) up to three atoms; never the zero measure."""
    density = random_step(rng, graph, 0.1, 2.0) if not atoms or rng.random() < 0.7 else None
    points = []
    if atoms:
        count = int(rng.integers(1 if density is None else 0, 4))
        points = [(random_point(rng, graph), float(rng.uniform(0.1, 2.0))) for _ in range(count)]
    return Measure.build(graph, points, density)


def random_functional(rng: np.random.Generator, graph: MetricGraph) -> Functional:
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return LengthFunctional(graph)
    if kind == 1:
        mu1 = random_measure(rng, graph, atoms=False)
        return ProductFunctional(mu1, random_measure(rng, graph), float(rng.uniform(0.2, 0.8)))
    if kind == 2:
        p = float(rng.choice([1.0, 2.0, 3.0]))
        a = random_step(rng, graph, 0.2, 3.0)
        return WeightedMeasureFunctional(a, p, random_measure(rng, graph))
    theta = float(rng.choice([0.6, 0.75]))
    return ThetaFunctional(theta, float(rng.choice([2.0, 3.0])), random_measure(rng, graph))


# ---------------------------------------------------------------------------
# Cases
# ---------------------------------------------------------------------------


@dataclass
class SweepCase:
    kind: str
    index: int
    passed: bool
    detail: str
    margin: float = 0.0


def _within(value: float, bound: float, scale: float) -> bool:
    return value <= bound * (1.0 + BOUND_RELATIVE_SLACK) + LENGTH_RELATIVE_TOLERANCE * scale


def grid_tilde_phi(
    phi: Functional, subset: ConnectedSubset, points_per_interval: int = GRID_POINTS_PER_INTERVAL
) -> float:
    """Largest punctured branch value, minimized over a uniform grid of base points.

    Every closure point and ``points_per_interval + 1`` evenly spaced points of
    each interval are tried, so the result is an upper bound for ``Φ̃``.
    """
    graph = subset.graph
    points = set(subset.closure_points())
    for edge_id, a, b in subset.intervals:
        points.update(
            graph.point(edge_id, min(b, a + (b - a) * j / points_per_interval))
            for j in range(points_per_interval + 1)
        )
    return min(canonical_split(subset, x).value(phi) for x in points)


def _grid_disagrees(result: PartitionResult) -> bool:
    """Whether the engine's Φ̃ is off from a direct evaluation or beaten by the grid."""
    slack = BOUND_RELATIVE_SLACK * result.total
    for part, tilde in zip(result.tree_parts, result.tilde, strict=True):
        at_minimizer = canonical_split(part, tilde.point).value(result.lifted)
        if abs(at_minimizer - tilde.value) > slack:
            return True
        if tilde.value > grid_tilde_phi(result.lifted, part) + slack:
            return True
    return False


def partition_case(seed: int, index: int) -> SweepCase:
    rng = instance_rng(seed, index)
    graph = random_graph(rng)
    phi = random_functional(rng, graph)
    n = int(rng.integers(1, 9))
    result = partition(graph, phi, n)
    check = verify_result(result)
    covered = math.fsum(part.length for part in result.parts)
    length_ok = abs(covered - graph.total_length) <= LENGTH_RELATIVE_TOLERANCE * graph.total_length
    failures = [clause for clause, _ in check.failures]
    if not length_ok:
        failures.append("length")
    if len(graph.edges) <= GRID_MAX_EDGES and _grid_disagrees(result):
        failures.append("grid")
    detail = f"{phi.kind} on {len(graph.edges)} edge(s), n={n}, k={result.k}"
    if failures:
        detail += f": failed {', '.join(failures)}"
    return SweepCase("partition", index, not failures, detail, result.bound - result.max_tilde)


def uniform_case(seed: int, index: int) -> SweepCase:
    rng = instance_rng(seed, index)
    graph = random_graph(rng)
    u = random_function(rng, graph)
    a = random_step(rng, graph, 0.2, 3.0)
    p = float(rng.choice([1.0, 2.0, 3.0, math.inf]))
    n = int(rng.integers(1, 7))
    v = approximate_uniform(u, p, a, n)
    error = sup_error(u, v)
    bound = uniform_bound(u, p, a, n)
    passed = v.k <= n and _within(error, bound, 1.0 + max(map(abs, u.piece_values())))
    detail = f"p={p:g}, n={n}: error {error:.12g} vs bound {bound:.12g}"
    return SweepCase("uniform", index, passed, detail, bound - error)


def weighted_case(seed: int, index: int) -> SweepCase:
    rng = instance_rng(seed, index)
    graph = random_graph(rng)
    u = random_function(rng, graph)
    a = random_step(rng, graph, 0.2, 3.0)
    p = float(rng.choice([1.0, 2.0, 3.0, math.inf]))
    mu = random_measure(rng, graph, atoms=not math.isinf(p))
    n = int(rng.integers(1, 7))
    operator = build_lp_operator(mu, a, p, n)
    error = lp_error(u, operator.apply(u), mu, p)
    bound = lp_bound(mu, a, p, n, u)
    scale = 1.0 + max(map(abs, u.piece_values()))
    passed = operator.rank <= n and _within(error, bound, scale)

    other = random_function(rng, graph)
    alpha = float(rng.normal())
    mixed = operator.apply(u.combine(alpha, other, 1.0)).values
    split = [
        alpha * x + y
        for x, y in zip(operator.apply(u).values, operator.apply(other).values, strict=True)
    ]
    linear = all(
        abs(m - s) <= LENGTH_RELATIVE_TOLERANCE * (abs(alpha) + 1.0) * scale * 10.0
        for m, s in zip(mixed, split, strict=True)
    )
    constant = PiecewiseFunction.constant(graph, 1.5, degree=1)
    reproduces = all(value == 1.5 for value in operator.apply(constant).values)
    detail = f"p={p:g}, n={n}: error {error:.12g} vs bound {bound:.12g}"
    if not linear:
        detail += ", not linear"
    if not reproduces:
        detail += ", constants not reproduced"
    return SweepCase("weighted", index, passed and linear and reproduces, detail, bound - error)


def hardy_case(seed: int, index: int) -> SweepCase:
    rng = instance_rng(seed, index)
    graph = random_graph(rng, tree=True, max_edges=6)
    root: GraphPoint | str = graph.vertices[int(rng.integers(0, len(graph.vertices)))]
    if rng.random() < 0.3:
        edge = graph.edges[int(rng.integers(0, len(graph.edges)))]
        root = graph.point(edge.id, 0.5 * edge.length)
    tree = RootedTree.build(
        graph, root, random_step(rng, graph, 0.2, 2.0), random_step(rng, graph, 0.2, 2.0)
    )
    report = check_bound(tree, HARDY_N_MAX, HARDY_CELLS_PER_UNIT)
    worst = min(row.bound + row.slack - row.value for row in report.rows)
    detail = f"{len(graph.edges)} edge(s), root {tree.root}: worst margin {worst:.6g}"
    return SweepCase("hardy", index, report.passed, detail, worst)


CASES: dict[str, Callable[[int, int], SweepCase]] = {
    "partition": partition_case,
    "uniform": uniform_case,
    "weighted": weighted_case,
    "hardy": hardy_case,
}


def _guarded(kind: str, seed: int, index: int) -> SweepCase:
    try:
        return CASES[kind](seed, index)
    except (MetricPartitionError, ArithmeticError) as exc:
        return SweepCase(kind, index, False, f"{type(exc).__name__}: {exc}", -math.inf)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


@dataclass
class SweepReport:
    kind: str
    seed: int
    cases: list[SweepCase] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(case.passed for case in self.cases)

    @property
    def failures(self) -> list[SweepCase]:
        return [case for case in self.cases if not case.passed]


def run_sweep(kind: str, count: int, seed: int = 0, jobs: int = 1) -> SweepReport:
    """Run ``count`` instances of one sweep kind, in parallel when ``jobs > 1``."""
    if kind not in CASES:
        raise ValueError(f"Unknown sweep: {kind!r}. Choose from: {list(CASES)}")
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    indices = range(count)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cases = list(pool.map(_guarded, repeat(kind), repeat(seed), indices))
    else:
        cases = [_guarded(kind, seed, i) for i in indices]
    report = SweepReport(kind, seed, cases)
    for case in report.failures:
        logger.info("  FAIL %s #%d: %s", kind, case.index, case.detail)
    logger.info(
        "Sweep %s: %d/%d passed (seed %d)", kind, count - len(report.failures), count, seed
    )
    return report
