"""Finite measures and piecewise functions on metric graphs, with exact norms.

Weights and densities are piecewise constant; Sobolev inputs are continuous
and piecewise linear. With those restrictions every integral below has a
closed form, except ``|f|^p`` for non-integer ``p`` which goes through
:func:`scipy.integrate.quad`.
"""

from __future__ import annotations

import logging
import math
from bisect import bisect_right
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

from numpy.polynomial import Polynomial
from scipy.integrate import quad

from metric_partition.errors import DiscontinuousInput, PointNotOnGraph, UnboundedWeight
from metric_partition.graph_core import ConnectedSubset, GraphPoint, MetricGraph

logger = logging.getLogger("metric_partition.measures")

QUAD_RELATIVE_TOLERANCE = 1e-12


@dataclass(frozen=True, slots=True)
class EdgePieces:
    """Piecewise polynomial of degree <= 1 along one edge.

    On piece ``i`` (between ``breaks[i]`` and ``breaks[i + 1]``) the value is
    ``c0[i] + c1[i] * (t - breaks[i])``.
    """

    breaks: tuple[float, ...]
    c0: tuple[float, ...]
    c1: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.breaks) != len(self.c0) + 1 or len(self.c0) != len(self.c1):
            raise ValueError("EdgePieces needs one more breakpoint than pieces")
        if any(b <= a for a, b in zip(self.breaks, self.breaks[1:], strict=False)):
            raise ValueError(f"Breakpoints must be strictly increasing: {self.breaks}")

    @classmethod
    def constant(cls, length: float, value: float) -> EdgePieces:
        return cls((0.0, length), (value,), (0.0,))

    @classmethod
    def from_knots(cls, knots: Sequence[tuple[float, float]]) -> EdgePieces:
        """Linear interpolation through ``(offset, value)`` knots."""
        breaks = tuple(t for t, _ in knots)
        c0 = tuple(y for _, y in knots[:-1])
        c1 = tuple(
            (y1 - y0) / (t1 - t0) for (t0, y0), (t1, y1) in zip(knots, knots[1:], strict=False)
        )
        return cls(breaks, c0, c1)

    @property
    def length(self) -> float:
        return self.breaks[-1]

    def locate(self, t: float) -> int:
        index = bisect_right(self.breaks, t) - 1
        return min(max(index, 0), len(self.c0) - 1)

    def value(self, t: float) -> float:
        i = self.locate(t)
        return self.c0[i] + self.c1[i] * (t - self.breaks[i])

    def value_in(self, i: int, t: float) -> float:
        return self.c0[i] + self.c1[i] * (t - self.breaks[i])

    def knots(self) -> list[tuple[float, float]]:
        points = [(t, self.value_in(i, t)) for i, t in enumerate(self.breaks[:-1])]
        points.append((self.breaks[-1], self.value_in(len(self.c0) - 1, self.breaks[-1])))
        return points


def _joint_pieces(
    f: EdgePieces, weight: EdgePieces | None, a: float, b: float
) -> Iterator[tuple[float, float, float, float]]:
    """Yield ``(width, f_start, f_end, weight)`` over [a, b] cut at both breakpoint sets."""
    cuts = {a, b}
    cuts.update(t for t in f.breaks if a < t < b)
    if weight is not None:
        cuts.update(t for t in weight.breaks if a < t < b)
    ordered = sorted(cuts)
    for s0, s1 in zip(ordered, ordered[1:], strict=False):
        mid = 0.5 * (s0 + s1)
        i = f.locate(mid)
        w = 1.0 if weight is None else weight.value(mid)
        yield s1 - s0, f.value_in(i, s0), f.value_in(i, s1), w


def _abs_power_integral(f0: float, f1: float, width: float, p: float) -> float:
    """Integral of ``|f|^p`` over a piece where ``f`` runs linearly from f0 to f1."""
    if width <= 0.0:
        return 0.0
    if f0 == f1:
        return width * abs(f0) ** p
    if f0 * f1 < 0.0:
        root = width * f0 / (f0 - f1)
        return _abs_power_integral(f0, 0.0, root, p) + _abs_power_integral(
            0.0, f1, width - root, p
        )
    g0, g1 = abs(f0), abs(f1)
    if float(p).is_integer():
        antiderivative = (Polynomial([g0, (g1 - g0) / width]) ** int(p)).integ()
        return float(antiderivative(width))
    value, _ = quad(
        lambda s: (g0 + (g1 - g0) * s / width) ** p,
        0.0,
        width,
        epsrel=QUAD_RELATIVE_TOLERANCE,
    )
    return float(value)


# ---------------------------------------------------------------------------
# Piecewise functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PiecewiseFunction:
    """A function on a metric graph given edge by edge.

    ``degree`` is 0 for weights and densities, 1 for Sobolev inputs.
    ``vertex_values`` is filled for continuous degree-1 functions only.
    """

    graph: MetricGraph = field(repr=False)
    pieces: Mapping[str, EdgePieces]
    degree: int
    vertex_values: Mapping[str, float] = field(default_factory=dict)
    continuous: bool = True

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, graph: MetricGraph, value: float, *, degree: int = 0) -> PiecewiseFunction:
        pieces = {e.id: EdgePieces.constant(e.length, value) for e in graph.edges}
        vertex_values = {v: value for v in graph.vertices} if degree == 1 else {}
        return cls(graph, pieces, degree, vertex_values)

    @classmethod
    def step(
        cls,
        graph: MetricGraph,
        default: float,
        edge_pieces: Mapping[str, Sequence[tuple[float, float, float]]] | None = None,
    ) -> PiecewiseFunction:
        """Piecewise-constant function from ``(from, to, value)`` triples; ``default`` elsewhere."""
        pieces: dict[str, EdgePieces] = {}
        given = dict(edge_pieces or {})
        for edge_id in given:
            graph.edge(edge_id)
        for edge in graph.edges:
            spans = sorted(given.get(edge.id, ()))
            breaks: list[float] = [0.0]
            values: list[float] = []
            for start, end, value in spans:
                if not 0.0 <= start < end <= edge.length:
                    raise PointNotOnGraph(
                        f"Piece [{start}, {end}] does not fit on edge {edge.id!r} "
                        f"of length {edge.length}"
                    )
                if start < breaks[-1]:
                    raise ValueError(f"Overlapping pieces on edge {edge.id!r} near {start}")
                if start > breaks[-1]:
                    values.append(default)
                    breaks.append(start)
                values.append(value)
                breaks.append(end)
            if breaks[-1] < edge.length:
                values.append(default)
                breaks.append(edge.length)
            pieces[edge.id] = EdgePieces(tuple(breaks), tuple(values), (0.0,) * len(values))
        return cls(graph, pieces, 0)

    @classmethod
    def linear(
        cls,
        graph: MetricGraph,
        vertex_values: Mapping[str, float],
        knots: Mapping[str, Sequence[tuple[float, float]]] | None = None,
    ) -> PiecewiseFunction:
        """Continuous piecewise-linear function from vertex values and interior knots."""
        missing = [v for v in graph.vertices if v not in vertex_values]
        if missing:
            raise DiscontinuousInput(f"No value given at vertex {missing[0]!r}")
        interior = dict(knots or {})
        pieces: dict[str, EdgePieces] = {}
        for edge in graph.edges:
            points = sorted(interior.get(edge.id, ()))
            for (t0, y0), (t1, y1) in zip(points, points[1:], strict=False):
                if t0 == t1 and y0 != y1:
                    raise DiscontinuousInput(f"Conflicting knots on edge {edge.id!r} at {t0}")
            inner = dict(points)
            for t in inner:
                if not 0.0 < t < edge.length:
                    raise PointNotOnGraph(
                        f"Knot offset {t} is not interior to edge {edge.id!r}"
                    )
            path = [
                (0.0, float(vertex_values[edge.start])),
                *sorted(inner.items()),
                (edge.length, float(vertex_values[edge.end])),
            ]
            pieces[edge.id] = EdgePieces.from_knots(path)
        values = {v: float(vertex_values[v]) for v in graph.vertices}
        return cls(graph, pieces, 1, values)

    @classmethod
    def from_edge_knots(
        cls, graph: MetricGraph, edge_knots: Mapping[str, Sequence[tuple[float, float]]]
    ) -> PiecewiseFunction:
        """Piecewise-linear function from full knot lists (endpoints included) per edge.

        Continuity at vertices is checked, not assumed; a mismatch leaves
        ``continuous`` false.
        """
        pieces: dict[str, EdgePieces] = {}
        at_vertex: dict[str, list[float]] = {}
        for edge in graph.edges:
            if edge.id not in edge_knots:
                raise PointNotOnGraph(f"No knots given for edge {edge.id!r}")
            path = sorted(edge_knots[edge.id])
            if path[0][0] != 0.0 or path[-1][0] != edge.length:
                raise PointNotOnGraph(f"Knots on edge {edge.id!r} must span [0, {edge.length}]")
            pieces[edge.id] = EdgePieces.from_knots(path)
            at_vertex.setdefault(edge.start, []).append(path[0][1])
            at_vertex.setdefault(edge.end, []).append(path[-1][1])
        continuous = all(
            max(vals) - min(vals) <= 1e-12 * (1.0 + max(map(abs, vals)))
            for vals in at_vertex.values()
        )
        vertex_values = {v: vals[0] for v, vals in at_vertex.items()} if continuous else {}
        return cls(graph, pieces, 1, vertex_values, continuous)

    # -- evaluation ----------------------------------------------------------

    def on_edge(self, edge_id: str) -> EdgePieces:
        return self.pieces[edge_id]

    def value(self, x: GraphPoint) -> float:
        x = self.graph.canonical(x)
        if x.vertex is not None:
            if x.vertex in self.vertex_values:
                return self.vertex_values[x.vertex]
            edge_id, t = self.graph.position_key(x)
            return self.pieces[edge_id].value(t)
        assert x.edge is not None
        return self.pieces[x.edge].value(x.offset)

    def derivative(self) -> PiecewiseFunction:
        pieces = {
            edge_id: EdgePieces(p.breaks, p.c1, (0.0,) * len(p.c1))
            for edge_id, p in self.pieces.items()
        }
        return PiecewiseFunction(self.graph, pieces, 0)

    def map_values(self, fn: Callable[[float], float]) -> PiecewiseFunction:
        """Apply ``fn`` to every piece value of a piecewise-constant function."""
        if self.degree != 0:
            raise ValueError("map_values needs a piecewise-constant function")
        pieces = {
            edge_id: EdgePieces(p.breaks, tuple(fn(c) for c in p.c0), p.c1)
            for edge_id, p in self.pieces.items()
        }
        return PiecewiseFunction(self.graph, pieces, 0)

    def combine(self, alpha: float, other: PiecewiseFunction, beta: float) -> PiecewiseFunction:
        """``alpha * self + beta * other`` on the common refinement."""
        pieces: dict[str, EdgePieces] = {}
        for edge in self.graph.edges:
            mine, theirs = self.pieces[edge.id], other.pieces[edge.id]
            breaks = sorted(set(mine.breaks) | set(theirs.breaks))
            c0: list[float] = []
            c1: list[float] = []
            for s0, s1 in zip(breaks, breaks[1:], strict=False):
                mid = 0.5 * (s0 + s1)
                i, j = mine.locate(mid), theirs.locate(mid)
                c0.append(alpha * mine.value_in(i, s0) + beta * theirs.value_in(j, s0))
                c1.append(alpha * mine.c1[i] + beta * theirs.c1[j])
            pieces[edge.id] = EdgePieces(tuple(breaks), tuple(c0), tuple(c1))
        degree = max(self.degree, other.degree)
        vertex_values: dict[str, float] = {}
        if degree == 1 and self.vertex_values and other.vertex_values:
            vertex_values = {
                v: alpha * self.vertex_values[v] + beta * other.vertex_values[v]
                for v in self.graph.vertices
            }
        continuous = self.continuous and other.continuous
        return PiecewiseFunction(self.graph, pieces, degree, vertex_values, continuous)

    def piece_values(self) -> list[float]:
        """Values at every knot (degree 1) or every piece (degree 0)."""
        if self.degree == 0:
            return [c for p in self.pieces.values() for c in p.c0]
        return [y for p in self.pieces.values() for _, y in p.knots()]

    def sup_on(self, subset: ConnectedSubset) -> float:
        """Supremum of ``|f|`` over the closure of ``subset`` (pieces of positive length)."""
        best = 0.0
        for edge_id, a, b in subset.intervals:
            for _, f0, f1, _ in _joint_pieces(self.pieces[edge_id], None, a, b):
                best = max(best, abs(f0), abs(f1))
        return best


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Measure:
    """A finite Borel measure: point masses plus a piecewise-constant density."""

    graph: MetricGraph = field(repr=False)
    atoms: Mapping[GraphPoint, float]
    density: PiecewiseFunction | None = None

    @classmethod
    def build(
        cls,
        graph: MetricGraph,
        atoms: Iterable[tuple[GraphPoint, float]] = (),
        density: PiecewiseFunction | None = None,
    ) -> Measure:
        merged: dict[GraphPoint, float] = {}
        for x, mass in atoms:
            if not mass > 0.0 or not math.isfinite(mass):
                raise ValueError(f"Atom mass must be positive and finite, got {mass} at {x}")
            point = graph.canonical(x)
            merged[point] = merged.get(point, 0.0) + float(mass)
        if density is not None:
            if density.degree != 0:
                raise ValueError("A measure density must be piecewise constant")
            if any(c < 0.0 for c in density.piece_values()):
                raise ValueError("A measure density must be nonnegative")
        return cls(graph, merged, density)

    @classmethod
    def length(cls, graph: MetricGraph) -> Measure:
        return cls.build(graph, density=PiecewiseFunction.constant(graph, 1.0))

    @classmethod
    def dirac(cls, graph: MetricGraph, *points: GraphPoint) -> Measure:
        return cls.build(graph, [(x, 1.0) for x in points])

    @property
    def is_atomless(self) -> bool:
        return not self.atoms

    def singular_points(self) -> frozenset[GraphPoint]:
        return frozenset(self.atoms)

    @property
    def total(self) -> float:
        return measure_of(self, self.graph.whole())

    def sup_density(self) -> float:
        if self.atoms:
            raise UnboundedWeight("A measure with atoms has no bounded density")
        if self.density is None:
            return 0.0
        return max(self.density.piece_values())


def _as_weight(
    graph: MetricGraph, weight: Measure | PiecewiseFunction | None
) -> Measure | None:
    if isinstance(weight, PiecewiseFunction):
        return Measure.build(graph, density=weight)
    return weight


def measure_of(mu: Measure, subset: ConnectedSubset) -> float:
    """``mu(E)``: density over the intervals plus atoms at points of ``E``."""
    terms = [mass for x, mass in mu.atoms.items() if subset.contains(x)]
    if mu.density is not None:
        for edge_id, a, b in subset.intervals:
            terms.extend(
                width * f0
                for width, f0, _, _ in _joint_pieces(mu.density.pieces[edge_id], None, a, b)
            )
    return math.fsum(terms)


def power_sum(
    f: PiecewiseFunction,
    p: float,
    subset: ConnectedSubset,
    weight: Measure | PiecewiseFunction | None = None,
    *,
    shift: float = 0.0,
) -> float:
    """``integral over E of |f - shift|^p`` against ``weight`` (Lebesgue when omitted)."""
    measure = _as_weight(f.graph, weight)
    density = None if measure is None else measure.density
    terms: list[float] = []
    spans = subset.intervals if measure is None or density is not None else ()
    for edge_id, a, b in spans:
        if b <= a:
            continue
        w_pieces = None if density is None else density.pieces[edge_id]
        for width, f0, f1, w in _joint_pieces(f.pieces[edge_id], w_pieces, a, b):
            if w != 0.0:
                terms.append(w * _abs_power_integral(f0 - shift, f1 - shift, width, p))
    if measure is not None:
        terms.extend(
            mass * abs(f.value(x) - shift) ** p
            for x, mass in measure.atoms.items()
            if subset.contains(x)
        )
    return math.fsum(terms)


def ess_sup(
    f: PiecewiseFunction,
    subset: ConnectedSubset,
    weight: Measure | PiecewiseFunction | None = None,
    *,
    shift: float = 0.0,
) -> float:
    """Essential supremum of ``|f - shift| * V`` over ``E`` for a bounded density ``V``."""
    measure = _as_weight(f.graph, weight)
    if measure is not None and measure.atoms:
        raise UnboundedWeight("The p = infinity norm needs a weight without atoms")
    density = None if measure is None else measure.density
    if measure is not None and density is None:
        return 0.0
    best = 0.0
    for edge_id, a, b in subset.intervals:
        w_pieces = None if density is None else density.pieces[edge_id]
        for _, f0, f1, w in _joint_pieces(f.pieces[edge_id], w_pieces, a, b):
            best = max(best, abs(f0 - shift) * w, abs(f1 - shift) * w)
    return best


def lp_norm(
    f: PiecewiseFunction,
    p: float,
    subset: ConnectedSubset,
    weight: Measure | PiecewiseFunction | None = None,
) -> float:
    """``||f||_{L^p(E, weight)}`` for ``1 <= p <= inf``."""
    if p < 1.0:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    if math.isinf(p):
        return ess_sup(f, subset, weight)
    return power_sum(f, p, subset, weight) ** (1.0 / p)


def derivative_norm(
    u: PiecewiseFunction, p: float, a: PiecewiseFunction, subset: ConnectedSubset
) -> float:
    """``||u'||_{L^p(E, a)}``; for ``p = inf`` the essential sup of ``a |u'|``."""
    if u.degree != 1 or not u.continuous:
        raise DiscontinuousInput("derivative_norm needs a continuous piecewise-linear input")
    return lp_norm(u.derivative(), p, subset, a)


def conjugate_exponent(p: float) -> float:
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def weight_function(a: PiecewiseFunction, p: float) -> PiecewiseFunction:
    """``w_a = a^(-1/p)`` (``a^(-1)`` when ``p = inf``), set to ``inf`` where ``a <= 0``."""
    exponent = -1.0 if math.isinf(p) else -1.0 / p
    return a.map_values(lambda c: c**exponent if c > 0.0 else math.inf)
