"""Compact metric graphs, points on them, connected subsets and partitions.

A :class:`ConnectedSubset` is stored as closed intervals per edge plus the set
of vertices in its closure, minus a finite set of excluded points. That is
enough to tell ``E`` from its closure, which matters once measures carry atoms.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from itertools import pairwise

import networkx as nx

from metric_partition.errors import (
    DisconnectedGraph,
    DuplicateId,
    GraphSpecError,
    NonpositiveLength,
    PointNotOnGraph,
)

logger = logging.getLogger("metric_partition.graph_core")

# (edge id, start offset, end offset)
Interval = tuple[str, float, float]
NodeKey = tuple[int, str, str, float]
# segment indices and nodes of a skeleton region
Reach = tuple[frozenset[int], frozenset["GraphPoint"]]


@dataclass(frozen=True, slots=True)
class Edge:
    id: str
    start: str
    end: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.start == self.end


@dataclass(frozen=True, slots=True)
class GraphPoint:
    """A location on a metric graph.

    Vertex points set ``vertex`` only. Interior points set ``edge`` and an
    ``offset`` strictly between 0 and the edge length. Build them through
    :meth:`MetricGraph.point` so the representation stays canonical.
    """

    vertex: str | None = None
    edge: str | None = None
    offset: float = 0.0

    @classmethod
    def at_vertex(cls, vertex: str) -> GraphPoint:
        return cls(vertex=vertex)

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __str__(self) -> str:
        if self.vertex is not None:
            return self.vertex
        return f"{self.edge}@{self.offset:.12g}"


class MetricGraph:
    """A compact connected metric multigraph.

    Instances are immutable; use :func:`build_graph` to construct a validated
    one. Loops and parallel edges are allowed.
    """

    def __init__(self, vertices: Sequence[str], edges: Sequence[Edge]) -> None:
        self._vertices = tuple(vertices)
        self._edges = tuple(edges)
        self._edge_index = {e.id: e for e in self._edges}
        self._incident: dict[str, list[tuple[Edge, float]]] = {v: [] for v in self._vertices}
        for e in self._edges:
            self._incident[e.start].append((e, 0.0))
            self._incident[e.end].append((e, e.length))

    def __repr__(self) -> str:
        return f"MetricGraph(vertices={len(self._vertices)}, edges={len(self._edges)})"

    # -- structure ---------------------------------------------------------

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._edge_index[edge_id]
        except KeyError:
            raise PointNotOnGraph(f"Unknown edge id: {edge_id!r}") from None

    def has_vertex(self, vertex: str) -> bool:
        return vertex in self._incident

    def incident(self, vertex: str) -> list[tuple[Edge, float]]:
        """Edges at ``vertex`` with the offset at which they touch it (loops twice)."""
        if vertex not in self._incident:
            raise PointNotOnGraph(f"Unknown vertex id: {vertex!r}")
        return list(self._incident[vertex])

    def degree(self, vertex: str) -> int:
        return len(self.incident(vertex))

    @property
    def boundary(self) -> tuple[str, ...]:
        return tuple(v for v in self._vertices if len(self._incident[v]) == 1)

    @cached_property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self._edges)

    def is_tree(self) -> bool:
        no_loops = not any(e.is_loop for e in self._edges)
        return no_loops and len(self._edges) == len(self._vertices) - 1

    @cached_property
    def bridges(self) -> frozenset[str]:
        """Ids of edges whose removal disconnects the graph."""
        pairs = Counter(frozenset((e.start, e.end)) for e in self._edges if not e.is_loop)
        simple = nx.Graph()
        simple.add_nodes_from(self._vertices)
        simple.add_edges_from((e.start, e.end) for e in self._edges if not e.is_loop)
        simple_bridges = {frozenset(pair) for pair in nx.bridges(simple)}
        return frozenset(
            e.id
            for e in self._edges
            if not e.is_loop
            and pairs[frozenset((e.start, e.end))] == 1
            and frozenset((e.start, e.end)) in simple_bridges
        )

    def find_noncycle_free_edge(self) -> str | None:
        """Smallest edge id lying on a cycle, or ``None`` for a tree."""
        on_cycles = sorted(e.id for e in self._edges if e.id not in self.bridges)
        return on_cycles[0] if on_cycles else None

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self._vertices)
        for e in self._edges:
            g.add_edge(e.start, e.end, key=e.id, length=e.length)
        return g

    # -- points ------------------------------------------------------------

    def point(self, edge_id: str, offset: float) -> GraphPoint:
        """Canonical point at ``offset`` along ``edge_id``."""
        edge = self.edge(edge_id)
        if not 0.0 <= offset <= edge.length:
            raise PointNotOnGraph(
                f"Offset {offset} is outside edge {edge_id!r} of length {edge.length}"
            )
        if offset == 0.0:
            return GraphPoint.at_vertex(edge.start)
        if offset == edge.length:
            return GraphPoint.at_vertex(edge.end)
        return GraphPoint(edge=edge_id, offset=float(offset))

    def vertex_point(self, vertex: str) -> GraphPoint:
        if vertex not in self._incident:
            raise PointNotOnGraph(f"Unknown vertex id: {vertex!r}")
        return GraphPoint.at_vertex(vertex)

    def canonical(self, x: GraphPoint) -> GraphPoint:
        if x.vertex is not None:
            return self.vertex_point(x.vertex)
        if x.edge is None:
            raise PointNotOnGraph("A point needs either a vertex or an edge")
        return self.point(x.edge, x.offset)

    def locations(self, x: GraphPoint) -> list[tuple[str, float]]:
        """Every ``(edge id, offset)`` pair naming ``x``."""
        if x.vertex is not None:
            return [(e.id, t) for e, t in self.incident(x.vertex)]
        assert x.edge is not None
        return [(x.edge, x.offset)]

    def position_key(self, x: GraphPoint) -> tuple[str, float]:
        """Order points by edge id, then offset (vertices by their smallest location)."""
        return min(self.locations(x))

    @staticmethod
    def node_key(x: GraphPoint) -> NodeKey:
        """Order vertices before interior points, each by id."""
        if x.vertex is not None:
            return (0, x.vertex, "", 0.0)
        return (1, "", x.edge or "", x.offset)

    # -- distances ---------------------------------------------------------

    @cached_property
    def _vertex_distances(self) -> dict[str, dict[str, float]]:
        skeleton = nx.Graph()
        skeleton.add_nodes_from(self._vertices)
        for e in self._edges:
            if e.is_loop:
                continue
            current = skeleton.get_edge_data(e.start, e.end)
            if current is None or e.length < current["length"]:
                skeleton.add_edge(e.start, e.end, length=e.length)
        return dict(nx.all_pairs_dijkstra_path_length(skeleton, weight="length"))

    def _anchors(self, x: GraphPoint) -> list[tuple[str, float]]:
        if x.vertex is not None:
            return [(x.vertex, 0.0)]
        edge = self.edge(x.edge or "")
        return [(edge.start, x.offset), (edge.end, edge.length - x.offset)]

    def distance(self, x: GraphPoint, y: GraphPoint) -> float:
        """Length of the shortest path between two points of the graph."""
        x, y = self.canonical(x), self.canonical(y)
        best = math.inf
        if x.vertex is None and y.vertex is None and x.edge == y.edge:
            best = abs(x.offset - y.offset)
        table = self._vertex_distances
        for vx, dx in self._anchors(x):
            for vy, dy in self._anchors(y):
                best = min(best, dx + table[vx][vy] + dy)
        return best

    # -- subsets -----------------------------------------------------------

    def whole(self) -> ConnectedSubset:
        return ConnectedSubset.build(
            self, [(e.id, 0.0, e.length) for e in self._edges], self._vertices
        )

    def subset(
        self,
        intervals: Iterable[Interval] = (),
        vertices: Iterable[str] = (),
        excluded: Iterable[GraphPoint] = (),
    ) -> ConnectedSubset:
        return ConnectedSubset.build(self, intervals, vertices, excluded)

    def singleton(self, x: GraphPoint) -> ConnectedSubset:
        x = self.canonical(x)
        if x.vertex is not None:
            return ConnectedSubset.build(self, vertices=[x.vertex])
        assert x.edge is not None
        return ConnectedSubset.build(self, [(x.edge, x.offset, x.offset)])


def build_graph(
    edges: Iterable[Edge | tuple[str, str, str, float]],
    vertices: Iterable[str] | None = None,
) -> MetricGraph:
    """Validate an edge list and return a :class:`MetricGraph`.

    ``edges`` holds ``(id, from, to, length)`` tuples or :class:`Edge` objects.
    When ``vertices`` is omitted it is inferred from the edge endpoints in
    order of first appearance.
    """
    edge_list = [
        e if isinstance(e, Edge) else Edge(str(e[0]), str(e[1]), str(e[2]), float(e[3]))
        for e in edges
    ]
    if not edge_list:
        raise GraphSpecError("A metric graph needs at least one edge")

    seen_edges: set[str] = set()
    for e in edge_list:
        if e.id in seen_edges:
            raise DuplicateId(f"Duplicate edge id: {e.id!r}")
        seen_edges.add(e.id)
        if not math.isfinite(e.length):
            raise GraphSpecError(f"Edge {e.id!r} has non-finite length {e.length}")
        if e.length <= 0:
            raise NonpositiveLength(f"Edge {e.id!r} has non-positive length {e.length}")

    if vertices is None:
        vertex_list = list(dict.fromkeys(v for e in edge_list for v in (e.start, e.end)))
    else:
        vertex_list = list(vertices)
        duplicates = [v for v, count in Counter(vertex_list).items() if count > 1]
        if duplicates:
            raise DuplicateId(f"Duplicate vertex id: {duplicates[0]!r}")
        known = set(vertex_list)
        for e in edge_list:
            for endpoint in (e.start, e.end):
                if endpoint not in known:
                    raise GraphSpecError(
                        f"Edge {e.id!r} references undeclared vertex {endpoint!r}"
                    )

    graph = MetricGraph(vertex_list, edge_list)
    pieces = nx.number_connected_components(graph.to_networkx())
    if pieces != 1:
        raise DisconnectedGraph(f"Graph has {pieces} connected components, expected 1")
    logger.debug(
        "Built graph with %d vertices, %d edges, total length %.6g",
        len(vertex_list),
        len(edge_list),
        graph.total_length,
    )
    return graph


def distance(g: MetricGraph, x: GraphPoint, y: GraphPoint) -> float:
    return g.distance(x, y)


def is_tree(g: MetricGraph) -> bool:
    return g.is_tree()


def find_noncycle_free_edge(g: MetricGraph) -> str | None:
    return g.find_noncycle_free_edge()


# ---------------------------------------------------------------------------
# Connected subsets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConnectedSubset:
    """A subset of a metric graph: closed intervals per edge minus excluded points.

    ``vertices`` lists the vertices of the closure. Build instances with
    :meth:`build` (or :meth:`MetricGraph.subset`), which merges overlapping
    intervals, records touched vertices and drops exclusions outside the closure.
    """

    graph: MetricGraph = field(repr=False, compare=False)
    intervals: tuple[Interval, ...]
    vertices: frozenset[str]
    excluded: frozenset[GraphPoint]

    @classmethod
    def build(
        cls,
        graph: MetricGraph,
        intervals: Iterable[Interval] = (),
        vertices: Iterable[str] = (),
        excluded: Iterable[GraphPoint] = (),
    ) -> ConnectedSubset:
        vertex_set = set(vertices)
        for v in vertex_set:
            graph.vertex_point(v)
        per_edge: dict[str, list[tuple[float, float]]] = {}
        for edge_id, a, b in intervals:
            edge = graph.edge(edge_id)
            if not 0.0 <= a <= b <= edge.length:
                raise PointNotOnGraph(
                    f"Interval [{a}, {b}] does not fit on edge {edge_id!r} "
                    f"of length {edge.length}"
                )
            if a == 0.0:
                vertex_set.add(edge.start)
            if b == edge.length:
                vertex_set.add(edge.end)
            if a == b and (a == 0.0 or b == edge.length):
                continue
            per_edge.setdefault(edge_id, []).append((a, b))

        merged: list[Interval] = []
        for edge_id in sorted(per_edge):
            spans = sorted(per_edge[edge_id])
            cur_a, cur_b = spans[0]
            for a, b in spans[1:]:
                if a <= cur_b:
                    cur_b = max(cur_b, b)
                else:
                    merged.append((edge_id, cur_a, cur_b))
                    cur_a, cur_b = a, b
            merged.append((edge_id, cur_a, cur_b))

        closure = cls(graph, tuple(merged), frozenset(vertex_set), frozenset())
        kept = (graph.canonical(x) for x in excluded)
        return cls(
            graph,
            closure.intervals,
            closure.vertices,
            frozenset(x for x in kept if closure.closure_contains(x)),
        )

    @cached_property
    def _by_edge(self) -> dict[str, tuple[tuple[float, float], ...]]:
        grouped: dict[str, list[tuple[float, float]]] = {}
        for edge_id, a, b in self.intervals:
            grouped.setdefault(edge_id, []).append((a, b))
        return {k: tuple(v) for k, v in grouped.items()}

    def on_edge(self, edge_id: str) -> tuple[tuple[float, float], ...]:
        return self._by_edge.get(edge_id, ())

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(self._by_edge)

    @cached_property
    def length(self) -> float:
        return math.fsum(b - a for _, a, b in self.intervals)

    def closure_contains(self, x: GraphPoint) -> bool:
        if x.vertex is not None:
            return x.vertex in self.vertices
        return any(a <= x.offset <= b for a, b in self.on_edge(x.edge or ""))

    def contains(self, x: GraphPoint) -> bool:
        return x not in self.excluded and self.closure_contains(x)

    def closure_points(self) -> list[GraphPoint]:
        """Vertices and interval endpoints of the closure."""
        points = {GraphPoint.at_vertex(v) for v in self.vertices}
        for edge_id, a, b in self.intervals:
            points.add(self.graph.point(edge_id, a))
            points.add(self.graph.point(edge_id, b))
        return sorted(points, key=MetricGraph.node_key)

    @property
    def is_empty(self) -> bool:
        if any(b > a for _, a, b in self.intervals):
            return False
        return all(x in self.excluded for x in self.closure_points())

    def without(self, *points: GraphPoint) -> ConnectedSubset:
        return ConnectedSubset.build(
            self.graph, self.intervals, self.vertices, self.excluded | set(points)
        )

    def union(self, other: ConnectedSubset) -> ConnectedSubset:
        excluded = {
            x
            for x in self.excluded | other.excluded
            if not self.contains(x) and not other.contains(x)
        }
        return ConnectedSubset.build(
            self.graph,
            self.intervals + other.intervals,
            self.vertices | other.vertices,
            excluded,
        )

    def is_connected(self) -> bool:
        return not self.is_empty and len(Skeleton(self).components()) == 1

    def describe(self) -> str:
        """Compact human-readable form, e.g. ``e1[0,0.5) + e2[0,1]``."""
        pieces = []
        for edge_id, a, b in self.intervals:
            left = "(" if self.graph.point(edge_id, a) in self.excluded else "["
            right = ")" if self.graph.point(edge_id, b) in self.excluded else "]"
            pieces.append(f"{edge_id}{left}{a:.12g},{b:.12g}{right}")
        lone = sorted(
            v
            for v in self.vertices
            if not any(
                a <= t <= b for e, t in self.graph.incident(v) for a, b in self.on_edge(e.id)
            )
        )
        pieces.extend(f"{{{v}}}" for v in lone)
        return " + ".join(pieces) if pieces else "{}"


def subset_length(subset: ConnectedSubset) -> float:
    return subset.length


# ---------------------------------------------------------------------------
# Skeleton: closure of a subset as nodes joined by segments
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Segment:
    edge: str
    start: float
    end: float
    head: GraphPoint
    tail: GraphPoint

    @property
    def length(self) -> float:
        return self.end - self.start

    def other(self, node: GraphPoint) -> GraphPoint:
        return self.tail if node == self.head else self.head


class Skeleton:
    """The closure of a subset cut into segments at vertices and marked points.

    Nodes are the closure's vertices, interval endpoints, its excluded points
    and any ``extra`` points that fall inside it. Every segment is an open
    stretch of one edge without nodes inside.
    """

    def __init__(self, subset: ConnectedSubset, extra: Iterable[GraphPoint] = ()) -> None:
        graph = subset.graph
        self.subset = subset
        cuts_by_edge: dict[str, set[float]] = {}
        for x in (*subset.excluded, *extra):
            if x.vertex is None and subset.closure_contains(x):
                cuts_by_edge.setdefault(x.edge or "", set()).add(x.offset)

        nodes: set[GraphPoint] = {GraphPoint.at_vertex(v) for v in subset.vertices}
        segments: list[Segment] = []
        for edge_id, a, b in subset.intervals:
            inner = (t for t in cuts_by_edge.get(edge_id, ()) if a < t < b)
            cuts = sorted({a, b, *inner})
            points = [graph.point(edge_id, t) for t in cuts]
            nodes.update(points)
            for (t0, p0), (t1, p1) in pairwise(zip(cuts, points, strict=True)):
                segments.append(Segment(edge_id, t0, t1, p0, p1))

        self.nodes: tuple[GraphPoint, ...] = tuple(sorted(nodes, key=MetricGraph.node_key))
        self.segments: tuple[Segment, ...] = tuple(segments)
        self._adjacency: dict[GraphPoint, list[int]] = {node: [] for node in self.nodes}
        for index, seg in enumerate(self.segments):
            self._adjacency[seg.head].append(index)
            if seg.tail != seg.head:
                self._adjacency[seg.tail].append(index)
        self._side_cache: dict[tuple[int, GraphPoint], Reach] = {}

    def incident(self, node: GraphPoint) -> tuple[int, ...]:
        return tuple(self._adjacency.get(node, ()))

    def degree(self, node: GraphPoint) -> int:
        return sum(
            2 if self.segments[i].head == self.segments[i].tail else 1
            for i in self._adjacency.get(node, ())
        )

    def boundary_nodes(self) -> list[GraphPoint]:
        return [node for node in self.nodes if self.degree(node) <= 1]

    def is_forest(self) -> bool:
        closure = nx.MultiGraph()
        closure.add_nodes_from(self.nodes)
        closure.add_edges_from((seg.head, seg.tail) for seg in self.segments)
        pieces = nx.number_connected_components(closure)
        return len(self.segments) == len(self.nodes) - pieces

    def is_tree(self) -> bool:
        """The closure is connected and has no cycles."""
        if not self.nodes:
            return False
        closure = nx.MultiGraph()
        closure.add_nodes_from(self.nodes)
        closure.add_edges_from((seg.head, seg.tail) for seg in self.segments)
        return nx.is_tree(closure)

    def side(self, seg_index: int, node: GraphPoint) -> Reach:
        """Segments and nodes reachable from ``node`` without crossing ``seg_index``."""
        key = (seg_index, node)
        cached = self._side_cache.get(key)
        if cached is None:
            segs: set[int] = set()
            seen = {node}
            stack = [node]
            while stack:
                current = stack.pop()
                for index in self._adjacency[current]:
                    if index == seg_index or index in segs:
                        continue
                    segs.add(index)
                    nxt = self.segments[index].other(current)
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            cached = (frozenset(segs), frozenset(seen))
            self._side_cache[key] = cached
        return cached

    def branch(self, node: GraphPoint, seg_index: int) -> Reach:
        """``node`` plus everything reached by leaving it through ``seg_index``."""
        segs, nodes = self.side(seg_index, self.segments[seg_index].other(node))
        return segs | {seg_index}, nodes | {node}

    def assemble(
        self,
        segs: Iterable[int],
        nodes: Iterable[GraphPoint],
        extra_intervals: Iterable[Interval] = (),
        extra_excluded: Iterable[GraphPoint] = (),
    ) -> ConnectedSubset:
        """Turn skeleton pieces back into a subset, keeping the parent's exclusions."""
        intervals: list[Interval] = [
            (self.segments[i].edge, self.segments[i].start, self.segments[i].end) for i in segs
        ]
        vertices: list[str] = []
        for node in nodes:
            if node.vertex is not None:
                vertices.append(node.vertex)
            else:
                intervals.append((node.edge or "", node.offset, node.offset))
        intervals.extend(extra_intervals)
        return ConnectedSubset.build(
            self.subset.graph,
            intervals,
            vertices,
            self.subset.excluded | set(extra_excluded),
        )

    def components(self) -> list[Reach]:
        """Connected pieces of the subset's point set (excluded nodes disconnect)."""
        excluded = self.subset.excluded
        g = nx.Graph()
        for node in self.nodes:
            if node not in excluded:
                g.add_node(("n", node))
        for index, seg in enumerate(self.segments):
            g.add_node(("s", index))
            for end in (seg.head, seg.tail):
                if end not in excluded:
                    g.add_edge(("s", index), ("n", end))

        pieces: list[Reach] = []
        for component in nx.connected_components(g):
            segs = frozenset(item for kind, item in component if kind == "s")
            nodes = {item for kind, item in component if kind == "n"}
            for index in segs:
                nodes.update((self.segments[index].head, self.segments[index].tail))
            pieces.append((segs, frozenset(nodes)))
        pieces.sort(key=lambda piece: min(MetricGraph.node_key(n) for n in piece[1]))
        return pieces


def components_of_complement(g: MetricGraph, subset: ConnectedSubset) -> list[ConnectedSubset]:
    """Maximal connected pieces of ``g`` minus ``subset``."""
    gaps: list[Interval] = []
    for edge in g.edges:
        pos = 0.0
        for a, b in subset.on_edge(edge.id):
            if a > pos:
                gaps.append((edge.id, pos, a))
            pos = max(pos, b)
        if pos < edge.length:
            gaps.append((edge.id, pos, edge.length))

    lone_points: list[Interval] = [
        (x.edge or "", x.offset, x.offset) for x in subset.excluded if x.vertex is None
    ]
    lone_vertices = [v for v in g.vertices if not subset.contains(GraphPoint.at_vertex(v))]
    closure = ConnectedSubset.build(g, gaps + lone_points, lone_vertices)
    owned = [x for x in closure.closure_points() if subset.contains(x)]
    complement = ConnectedSubset.build(g, closure.intervals, closure.vertices, owned)
    if complement.is_empty:
        return []

    skeleton = Skeleton(complement)
    return [skeleton.assemble(segs, nodes) for segs, nodes in skeleton.components()]


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """An ordered family of pairwise disjoint connected subsets covering a graph."""

    parts: tuple[ConnectedSubset, ...]

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self) -> Iterator[ConnectedSubset]:
        return iter(self.parts)

    def __getitem__(self, index: int) -> ConnectedSubset:
        return self.parts[index]

    @property
    def graph(self) -> MetricGraph:
        return self.parts[0].graph

    def owner(self, x: GraphPoint) -> int:
        """Index of the part containing ``x``."""
        for index, part in enumerate(self.parts):
            if part.contains(x):
                return index
        raise PointNotOnGraph(f"Point {x} is not covered by the partition")

    def problems(self, rel_tol: float = 1e-12) -> list[tuple[str, str]]:
        """Every way in which this family fails to be a partition, as ``(clause, detail)``.

        Clauses are ``"connected"``, ``"cover"`` and ``"disjoint"``; an empty list
        means the parts form a partition.
        """
        if not self.parts:
            return [("cover", "partition has no parts")]
        graph = self.graph
        issues: list[tuple[str, str]] = []
        for index, part in enumerate(self.parts):
            if part.is_empty:
                issues.append(("connected", f"part {index} is empty"))
            elif not part.is_connected():
                issues.append(("connected", f"part {index} is not connected"))

        for edge in graph.edges:
            tol = rel_tol * edge.length
            spans = sorted(
                (a, b)
                for part in self.parts
                for a, b in part.on_edge(edge.id)
                if b > a
            )
            pos = 0.0
            for a, b in spans:
                if a > pos + tol:
                    gap = f"({pos:.12g}, {a:.12g})"
                    issues.append(("cover", f"edge {edge.id} is not covered on {gap}"))
                elif a < pos - tol:
                    issues.append(("disjoint", f"parts overlap on edge {edge.id} near {a:.12g}"))
                pos = max(pos, b)
            if pos < edge.length - tol:
                issues.append(
                    ("cover", f"edge {edge.id} is not covered on ({pos:.12g}, {edge.length:.12g})")
                )

        critical: set[GraphPoint] = {GraphPoint.at_vertex(v) for v in graph.vertices}
        for part in self.parts:
            critical.update(part.closure_points())
            critical.update(part.excluded)
        for x in sorted(critical, key=MetricGraph.node_key):
            owners = sum(1 for part in self.parts if part.contains(x))
            if owners != 1:
                clause = "cover" if owners == 0 else "disjoint"
                issues.append((clause, f"point {x} belongs to {owners} parts"))
        return issues
