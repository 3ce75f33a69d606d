"""Constructive partition engine: cycle cutting, the tree splitting lemma, and the induction.

Everything happens on a tree. A graph with cycles is first cut open at edge
midpoints; the functional is lifted to the tree, the tree is partitioned, and
the parts are pushed forward to the original graph.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

from scipy.optimize import brentq

from metric_partition.errors import EpsilonOutOfRange, NoConvergence, NotATree
from metric_partition.functionals import (
    DEFAULT_RELATIVE_TOLERANCE,
    Functional,
    TildePhi,
    tilde_phi,
)
from metric_partition.graph_core import (
    ConnectedSubset,
    Edge,
    GraphPoint,
    Interval,
    MetricGraph,
    Partition,
    Skeleton,
)

logger = logging.getLogger("metric_partition.partition")


# ---------------------------------------------------------------------------
# Cycle cutting
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SplitPair:
    """Two tree vertices that both map to ``point`` on the original graph.

    ``x1`` ends the first half of the cut edge and ``x2`` starts the second.
    """

    x1: GraphPoint
    x2: GraphPoint
    point: GraphPoint

    @property
    def edge(self) -> str:
        return self.point.edge or ""

    @property
    def offset(self) -> float:
        return self.point.offset


@dataclass(frozen=True, slots=True)
class EdgeOrigin:
    """Where a tree edge lies on the original graph: ``edge`` from offset ``base``."""

    edge: str
    base: float


@dataclass(frozen=True)
class CutResult:
    """A spanning tree obtained by cutting cycles, with the map ``τ`` back to the graph."""

    graph: MetricGraph
    tree: MetricGraph
    splits: tuple[SplitPair, ...]
    origins: Mapping[str, EdgeOrigin] = field(repr=False)

    @property
    def is_identity(self) -> bool:
        return not self.splits

    @property
    def cycle_rank(self) -> int:
        return len(self.splits)

    @cached_property
    def _split_by_vertex(self) -> dict[str, SplitPair]:
        table: dict[str, SplitPair] = {}
        for pair in self.splits:
            table[pair.x1.vertex or ""] = pair
            table[pair.x2.vertex or ""] = pair
        return table

    @cached_property
    def _edge_pieces(self) -> dict[str, list[tuple[Edge, float]]]:
        table: dict[str, list[tuple[Edge, float]]] = {}
        for tree_id, origin in sorted(self.origins.items()):
            table.setdefault(origin.edge, []).append((self.tree.edge(tree_id), origin.base))
        return table

    def _pieces(self, edge_id: str) -> list[tuple[Edge, float]]:
        return self._edge_pieces.get(edge_id, [])

    def tau(self, y: GraphPoint) -> GraphPoint:
        """Image of a tree point on the original graph."""
        if self.is_identity:
            return y
        y = self.tree.canonical(y)
        if y.vertex is not None:
            pair = self._split_by_vertex.get(y.vertex)
            return pair.point if pair is not None else self.graph.vertex_point(y.vertex)
        origin = self.origins[y.edge or ""]
        return self.graph.point(origin.edge, origin.base + y.offset)

    def preimages(self, x: GraphPoint) -> list[GraphPoint]:
        """Every tree point mapped onto ``x``; two for a split point, one otherwise."""
        if self.is_identity:
            return [x]
        x = self.graph.canonical(x)
        if x.vertex is not None:
            return [self.tree.vertex_point(x.vertex)]
        found: list[GraphPoint] = []
        for edge, base in self._pieces(x.edge or ""):
            if base <= x.offset <= base + edge.length:
                y = self.tree.point(edge.id, x.offset - base)
                if y not in found:
                    found.append(y)
        return found

    def push_forward(self, subset: ConnectedSubset) -> ConnectedSubset:
        """``τ(E)``, keeping a split point only when its ``x1`` copy belongs to ``E``."""
        if self.is_identity:
            return subset
        split_vertices = self._split_by_vertex
        intervals: list[Interval] = []
        for edge_id, a, b in subset.intervals:
            origin = self.origins[edge_id]
            intervals.append((origin.edge, origin.base + a, origin.base + b))
        vertices = [v for v in subset.vertices if v not in split_vertices]
        excluded = [
            self.tau(y)
            for y in subset.excluded
            if y.vertex is None or y.vertex not in split_vertices
        ]
        for pair in self.splits:
            touched = subset.closure_contains(pair.x1) or subset.closure_contains(pair.x2)
            if not touched:
                continue
            intervals.append((pair.edge, pair.offset, pair.offset))
            if not subset.contains(pair.x1):
                excluded.append(pair.point)
        return ConnectedSubset.build(self.graph, intervals, vertices, excluded)

    def _assign_copies(
        self, parts: Sequence[ConnectedSubset]
    ) -> dict[GraphPoint, int]:
        owners: dict[GraphPoint, int] = {}
        for pair in self.splits:
            c = pair.offset

            def before(part: ConnectedSubset, c: float = c, edge: str = pair.edge) -> bool:
                return any(a < c <= b for a, b in part.on_edge(edge))

            def after(part: ConnectedSubset, c: float = c, edge: str = pair.edge) -> bool:
                return any(a <= c < b for a, b in part.on_edge(edge))

            holder = next((i for i, p in enumerate(parts) if p.contains(pair.point)), None)
            if holder is not None and (before(parts[holder]) or not after(parts[holder])):
                owners[pair.x1] = holder
            else:
                first = next((i for i, p in enumerate(parts) if before(p)), None)
                if first is not None:
                    owners[pair.x1] = first
            if holder is not None and after(parts[holder]):
                owners[pair.x2] = holder
            else:
                second = next((i for i, p in enumerate(parts) if after(p)), None)
                if second is not None:
                    owners[pair.x2] = second
        return owners

    def pull_back(self, parts: Iterable[ConnectedSubset]) -> tuple[ConnectedSubset, ...]:
        """Carry a partition of the graph over to the cut tree.

        Off the split pairs points map one to one. ``x1`` joins the part that
        holds the split point when that part reaches it from the first half
        (or is that single point); otherwise it joins the part covering the
        first half. ``x2`` joins the part covering the second half.
        """
        parts = tuple(parts)
        if self.is_identity:
            return parts
        owners = self._assign_copies(parts)
        copies = {y for pair in self.splits for y in (pair.x1, pair.x2)}
        pulled: list[ConnectedSubset] = []
        for index, part in enumerate(parts):
            intervals: list[Interval] = []
            for edge_id, a, b in part.intervals:
                if a == b:
                    point = self.graph.point(edge_id, a)
                    intervals.extend(
                        (y.edge, y.offset, y.offset)
                        for y in self.preimages(point)
                        if y.edge is not None
                    )
                    continue
                for edge, base in self._pieces(edge_id):
                    lo, hi = max(a, base), min(b, base + edge.length)
                    if lo < hi:
                        intervals.append((edge.id, lo - base, hi - base))
            vertices = list(part.vertices)
            vertices.extend(y.vertex or "" for y, owner in owners.items() if owner == index)
            excluded = [y for x in part.excluded for y in self.preimages(x) if y not in copies]
            excluded.extend(y for y in copies if owners.get(y) != index)
            pulled.append(ConnectedSubset.build(self.tree, intervals, vertices, excluded))
        return tuple(pulled)


def _fresh(name: str, taken: set[str]) -> str:
    candidate, suffix = name, 1
    while candidate in taken:
        suffix += 1
        candidate = f"{name}{suffix}"
    taken.add(candidate)
    return candidate


def cut_cycles(g: MetricGraph) -> CutResult:
    """Cut the smallest-id edge on a cycle at its midpoint until a tree is left.

    The edge ``e`` from ``u`` to ``v`` becomes ``e.1`` (``u`` to ``e.x1``) and
    ``e.2`` (``e.x2`` to ``v``); a loop becomes two pendant edges at its vertex.
    """
    origins: dict[str, EdgeOrigin] = {e.id: EdgeOrigin(e.id, 0.0) for e in g.edges}
    vertex_names = set(g.vertices)
    edge_names = {e.id for e in g.edges}
    vertices = list(g.vertices)
    edges = list(g.edges)
    splits: list[SplitPair] = []
    current = g
    while (edge_id := current.find_noncycle_free_edge()) is not None:
        edge = current.edge(edge_id)
        half = 0.5 * edge.length
        x1 = _fresh(f"{edge_id}.x1", vertex_names)
        x2 = _fresh(f"{edge_id}.x2", vertex_names)
        first = Edge(_fresh(f"{edge_id}.1", edge_names), edge.start, x1, half)
        second = Edge(_fresh(f"{edge_id}.2", edge_names), x2, edge.end, edge.length - half)

        origin = origins.pop(edge_id)
        origins[first.id] = origin
        origins[second.id] = EdgeOrigin(origin.edge, origin.base + half)
        splits.append(
            SplitPair(
                GraphPoint.at_vertex(x1),
                GraphPoint.at_vertex(x2),
                g.point(origin.edge, origin.base + half),
            )
        )
        edges = [e for e in edges if e.id != edge_id] + [first, second]
        vertices += [x1, x2]
        current = MetricGraph(vertices, edges)
        logger.debug("Cut edge %s at offset %.12g", edge_id, half)

    if splits:
        logger.info("Cut %d cycle(s); tree has %d edges", len(splits), len(current.edges))
    return CutResult(g, current, tuple(splits), origins)


class LiftedFunctional(Functional):
    """``Φ`` carried to the cut tree: ``E -> Φ(τ(E))`` with the split-point rule of ``τ``."""

    def __init__(self, base: Functional, cut: CutResult) -> None:
        if base.graph is not cut.graph:
            raise ValueError("The functional and the cut belong to different graphs")
        super().__init__(cut.tree)
        self.base = base
        self.cut = cut
        self.kind = base.kind

    def __call__(self, subset: ConnectedSubset) -> float:
        return self.base(self.cut.push_forward(subset))

    def singular_points(self) -> frozenset[GraphPoint]:
        lifted = {y for x in self.base.singular_points() for y in self.cut.preimages(x)}
        lifted.update(y for pair in self.cut.splits for y in (pair.x1, pair.x2))
        return frozenset(lifted)


def lift_functional(phi: Functional, cut: CutResult) -> Functional:
    if cut.is_identity:
        return phi
    return LiftedFunctional(phi, cut)


# ---------------------------------------------------------------------------
# Splitting lemma
# ---------------------------------------------------------------------------


@dataclass
class SplitResult:
    """One application of the splitting lemma on a tree.

    ``part`` is the closed piece beyond ``x_star`` along the greedy path and
    ``remainder`` the rest of the tree with ``x_star`` removed (``None`` when
    the whole tree was taken). ``samples`` holds ``(arc length, F)`` pairs
    recorded while walking the path.
    """

    part: ConnectedSubset
    remainder: ConnectedSubset | None
    x_star: GraphPoint
    epsilon: float
    path: tuple[GraphPoint, ...] = ()
    samples: list[tuple[float, float]] = field(default_factory=list)

    def is_monotone(self, tol: float = 0.0) -> bool:
        ordered = sorted(self.samples)
        return all(b[1] <= a[1] + tol for a, b in zip(ordered, ordered[1:], strict=False))


class _SegmentCrossing:
    """The lemma's ``F`` along one segment, parametrised by distance from ``node``."""

    def __init__(
        self, phi: Functional, skeleton: Skeleton, index: int, node: GraphPoint, epsilon: float
    ) -> None:
        self.phi = phi
        self.skeleton = skeleton
        self.index = index
        self.seg = skeleton.segments[index]
        self.node = node
        self.epsilon = epsilon
        self.forward = node == self.seg.head
        self.ahead = skeleton.side(index, self.seg.other(node))
        self.samples: list[tuple[float, float]] = []

    def position(self, d: float) -> float:
        seg = self.seg
        s = seg.start + d if self.forward else seg.end - d
        return min(max(s, seg.start), seg.end)

    def ahead_span(self, s: float) -> Interval:
        seg = self.seg
        return (seg.edge, s, seg.end) if self.forward else (seg.edge, seg.start, s)

    def behind_span(self, s: float) -> Interval:
        seg = self.seg
        return (seg.edge, seg.start, s) if self.forward else (seg.edge, s, seg.end)

    def excess(self, d: float) -> float:
        s = self.position(d)
        value = self.phi(self.skeleton.assemble(*self.ahead, [self.ahead_span(s)]))
        self.samples.append((d, value))
        return value - self.epsilon

    def split(self, d: float) -> tuple[ConnectedSubset, ConnectedSubset, GraphPoint]:
        s = self.position(d)
        x_star = self.skeleton.subset.graph.point(self.seg.edge, s)
        part = self.skeleton.assemble(*self.ahead, [self.ahead_span(s)])
        behind = self.skeleton.side(self.index, self.node)
        remainder = self.skeleton.assemble(*behind, [self.behind_span(s)], [x_star])
        return part, remainder, x_star


def lemma_split(
    tree: MetricGraph | ConnectedSubset,
    phi: Functional,
    epsilon: float,
    tol: float | None = None,
    *,
    length_tol: float | None = None,
) -> SplitResult:
    """Find ``x*`` and a closed subtree ``T`` beyond it with ``Φ(T) >= ε >= Φ°(T, x*)``.

    The walk starts at the smallest boundary node and always follows the
    branch with the largest punctured value (ties go to the smallest
    neighbour). Along that path ``F(x) = Φ(T_x)`` does not increase; a crossing
    of ``ε`` within ``tol`` of a node stops at that node, any other crossing is
    located inside one segment with Brent's method.
    """
    subset = tree.whole() if isinstance(tree, MetricGraph) else tree
    graph = subset.graph
    total = phi(subset)
    if not 0.0 < epsilon < total:
        raise EpsilonOutOfRange(f"epsilon must lie in (0, {total:.12g}), got {epsilon}")
    skeleton = Skeleton(subset, phi.singular_points())
    if not skeleton.is_tree():
        raise NotATree(f"Subset {subset.describe()} is not a tree")
    if tol is None:
        tol = DEFAULT_RELATIVE_TOLERANCE * total
    if length_tol is None:
        length_tol = DEFAULT_RELATIVE_TOLERANCE * graph.total_length

    node = min(skeleton.boundary_nodes(), key=MetricGraph.node_key)
    incoming: int | None = None
    arc = 0.0
    path = [node]
    samples = [(0.0, total)]

    while True:
        outgoing = [i for i in skeleton.incident(node) if i != incoming]
        values = {
            i: phi(skeleton.assemble(*skeleton.branch(node, i), extra_excluded=[node]))
            for i in outgoing
        }
        order = {
            i: (-values[i], MetricGraph.node_key(skeleton.segments[i].other(node)))
            for i in outgoing
        }
        best = min(outgoing, key=order.__getitem__, default=None)
        if best is None or values[best] <= epsilon + tol:
            if incoming is None:
                result = SplitResult(subset, None, node, epsilon, tuple(path), samples)
            else:
                part = skeleton.assemble(*skeleton.side(incoming, node))
                remainder = skeleton.assemble(
                    *skeleton.branch(node, incoming), extra_excluded=[node]
                )
                result = SplitResult(part, remainder, node, epsilon, tuple(path), samples)
            logger.debug("Split at node %s (epsilon %.12g)", node, epsilon)
            return result

        seg = skeleton.segments[best]
        nxt = seg.other(node)
        ahead = skeleton.side(best, nxt)
        f_next = phi(skeleton.assemble(*ahead))
        if f_next >= epsilon - tol:
            arc += seg.length
            samples.append((arc, f_next))
            incoming, node = best, nxt
            path.append(node)
            continue

        crossing = _SegmentCrossing(phi, skeleton, best, node, epsilon)
        d_star = float(brentq(crossing.excess, 0.0, seg.length, xtol=length_tol))
        samples.extend((arc + d, value) for d, value in crossing.samples)
        # F(0+) > ε + tol and F(length) < ε - tol leave the root strictly inside.
        if not 0.0 < d_star < seg.length:
            raise NoConvergence(
                f"Crossing of epsilon {epsilon:.12g} on {seg.edge} landed on a segment end "
                f"(d={d_star!r}, length {seg.length!r})"
            )
        part, remainder, x_star = crossing.split(d_star)
        path.append(nxt)
        logger.debug("Split inside %s at %s (epsilon %.12g)", seg.edge, x_star, epsilon)
        return SplitResult(part, remainder, x_star, epsilon, tuple(path), samples)


# ---------------------------------------------------------------------------
# Induction
# ---------------------------------------------------------------------------


@dataclass
class PartitionResult:
    """A partition of the graph plus its tree-side record."""

    graph: MetricGraph
    functional: Functional
    n: int
    cut: CutResult
    lifted: Functional
    tree_parts: tuple[ConnectedSubset, ...]
    parts: Partition
    tilde: tuple[TildePhi, ...]
    splits: tuple[SplitResult, ...]
    total: float

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def bound(self) -> float:
        return self.total / (self.n + 1)

    @property
    def max_tilde(self) -> float:
        return max(t.value for t in self.tilde)

    def minimizers(self) -> list[GraphPoint]:
        """Tree-side minimizers mapped onto the graph."""
        return [self.cut.tau(t.point) for t in self.tilde]


def partition(
    g: MetricGraph, phi: Functional, n: int, tol: float | None = None
) -> PartitionResult:
    """Split ``g`` into at most ``n`` connected parts with ``Φ̃(E_j) <= Φ(Γ)/(n+1)``.

    Each level takes ``ε = Φ(current)/(budget + 1)``, keeps the lemma's ``T``
    as a part and continues on the remainder with one part less.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    cut = cut_cycles(g)
    lifted = lift_functional(phi, cut)
    total = lifted.total()
    if tol is None:
        tol = DEFAULT_RELATIVE_TOLERANCE * total
    length_tol = DEFAULT_RELATIVE_TOLERANCE * g.total_length

    taken: list[ConnectedSubset] = []
    splits: list[SplitResult] = []
    current: ConnectedSubset | None = cut.tree.whole()
    budget = n
    while current is not None and budget > 1:
        mass = lifted(current)
        if mass <= 0.0:
            break
        step = lemma_split(current, lifted, mass / (budget + 1), tol, length_tol=length_tol)
        splits.append(step)
        taken.append(step.part)
        current = step.remainder
        budget -= 1
    if current is not None:
        taken.append(current)
    tree_parts = tuple(reversed(taken))

    tilde = tuple(tilde_phi(lifted, part, tol, length_tol=length_tol) for part in tree_parts)
    parts = Partition(tuple(cut.push_forward(part) for part in tree_parts))
    result = PartitionResult(
        g, phi, n, cut, lifted, tree_parts, parts, tilde, tuple(splits), total
    )
    logger.info(
        "Partitioned into %d part(s) for n=%d: max tilde %.12g, bound %.12g",
        result.k,
        n,
        result.max_tilde,
        result.bound,
    )
    return result
