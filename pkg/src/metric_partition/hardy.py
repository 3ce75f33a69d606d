"""Hardy-type operators ``(H f)(x) = v(x) ∫_{<o,x>} f w`` on rooted trees, at p = 2.

The operator is discretized on a uniform mesh per edge with the midpoint
rule. Singular values come from a one-sided Jacobi SVD; large matrices are
first compressed onto their dominant subspace by block power iteration.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from metric_partition.errors import MeshTooCoarse, NoConvergence, NotATree
from metric_partition.graph_core import GraphPoint, MetricGraph, build_graph
from metric_partition.measures import PiecewiseFunction, lp_norm, power_sum

logger = logging.getLogger("metric_partition.hardy")

FloatArray = NDArray[np.float64]

MIN_CELLS_PER_EDGE = 4
JACOBI_MAX_SWEEPS = 60
JACOBI_TOLERANCE = 1e-12
DIRECT_JACOBI_LIMIT = 64
SUBSPACE_PADDING = 16
SUBSPACE_TOLERANCE = 1e-13
SUBSPACE_MAX_ITERATIONS = 2000
BOUND_CELLS_PER_UNIT = 200
ASYMPTOTICS_CELLS_PER_UNIT = 400


@dataclass(frozen=True)
class RootedTree:
    """A compact metric tree with a root and piecewise-constant weights ``v`` and ``w``."""

    graph: MetricGraph = field(repr=False)
    root: GraphPoint
    v: PiecewiseFunction = field(repr=False)
    w: PiecewiseFunction = field(repr=False)

    @classmethod
    def build(
        cls,
        graph: MetricGraph,
        root: GraphPoint | str,
        v: PiecewiseFunction | None = None,
        w: PiecewiseFunction | None = None,
    ) -> RootedTree:
        if not graph.is_tree():
            raise NotATree("Hardy operators need a tree")
        point = graph.vertex_point(root) if isinstance(root, str) else graph.canonical(root)
        v = v or PiecewiseFunction.constant(graph, 1.0)
        w = w or PiecewiseFunction.constant(graph, 1.0)
        for name, weight in (("v", v), ("w", w)):
            if weight.degree != 0:
                raise ValueError(f"Weight {name} must be piecewise constant")
            if not all(math.isfinite(c) for c in weight.piece_values()):
                raise ValueError(f"Weight {name} must be bounded")
        return cls(graph, point, v, w)


@dataclass(frozen=True, slots=True)
class _Branch:
    """A stretch of one edge oriented away from the root."""

    edge: str
    near: float
    far: float
    parent: int | None

    @property
    def length(self) -> float:
        return abs(self.far - self.near)

    def offset(self, d: float) -> float:
        return self.near + d if self.far > self.near else self.near - d


def _branches(tree: RootedTree) -> list[_Branch]:
    """Edges (or the two halves of the root edge) ordered so parents come first."""
    graph = tree.graph
    branches: list[_Branch] = []
    queue: list[tuple[str, int | None]] = []
    seen: set[str] = set()
    if tree.root.vertex is not None:
        queue.append((tree.root.vertex, None))
    else:
        edge = graph.edge(tree.root.edge or "")
        t = tree.root.offset
        branches.append(_Branch(edge.id, t, 0.0, None))
        branches.append(_Branch(edge.id, t, edge.length, None))
        seen.add(edge.id)
        queue.extend([(edge.start, 0), (edge.end, 1)])
    while queue:
        vertex, parent = queue.pop(0)
        for edge, t in graph.incident(vertex):
            if edge.id in seen:
                continue
            seen.add(edge.id)
            far = edge.length - t
            branches.append(_Branch(edge.id, t, far, parent))
            queue.append((edge.end if t == 0.0 else edge.start, len(branches) - 1))
    return branches


@dataclass
class DiscreteOperator:
    """Midpoint discretization of ``H_{v,w}`` scaled so that it acts on ``L²`` coordinates."""

    tree: RootedTree = field(repr=False)
    cells_per_unit: int
    matrix: FloatArray = field(repr=False)
    widths: FloatArray = field(repr=False)
    branch_of_cell: NDArray[np.int64] = field(repr=False)
    offsets: FloatArray = field(repr=False)
    branches: list[_Branch] = field(repr=False)
    path_matrix: FloatArray = field(repr=False)
    v_cells: FloatArray = field(repr=False)
    w_cells: FloatArray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    def midpoints(self) -> list[GraphPoint]:
        graph = self.tree.graph
        return [
            graph.point(self.branches[b].edge, float(t))
            for b, t in zip(self.branch_of_cell, self.offsets, strict=True)
        ]


def discretize(tree: RootedTree, cells_per_unit: int) -> DiscreteOperator:
    """Assemble ``diag(√h·v) C diag(w·√h)`` where ``C`` marks root-ward cells.

    ``C[i, j]`` is 1 when cell ``j`` lies on the path from the root to cell
    ``i``, 1/2 on the diagonal and 0 elsewhere.
    """
    branches = _branches(tree)
    branch_index: list[int] = []
    positions: list[int] = []
    offsets: list[float] = []
    widths: list[float] = []
    for b, branch in enumerate(branches):
        cells = math.ceil(branch.length * cells_per_unit - 1e-9)
        if cells < MIN_CELLS_PER_EDGE:
            raise MeshTooCoarse(
                f"Edge {branch.edge!r} gets {cells} cells; at least {MIN_CELLS_PER_EDGE} needed"
            )
        h = branch.length / cells
        for k in range(cells):
            branch_index.append(b)
            positions.append(k)
            offsets.append(branch.offset((k + 0.5) * h))
            widths.append(h)

    count = len(branches)
    ancestors = np.zeros((count, count), dtype=bool)
    for b, branch in enumerate(branches):
        parent = branch.parent
        while parent is not None:
            ancestors[b, parent] = True
            parent = branches[parent].parent

    cell_branch = np.asarray(branch_index, dtype=np.int64)
    cell_pos = np.asarray(positions, dtype=np.int64)
    upstream = ancestors[cell_branch[:, None], cell_branch[None, :]]
    same = cell_branch[:, None] == cell_branch[None, :]
    earlier = cell_pos[None, :] < cell_pos[:, None]
    path = (upstream | (same & earlier)).astype(np.float64)
    np.fill_diagonal(path, 0.5)

    graph = tree.graph
    points = [
        graph.point(branches[b].edge, t) for b, t in zip(branch_index, offsets, strict=True)
    ]
    v_cells = np.array([tree.v.value(x) for x in points])
    w_cells = np.array([tree.w.value(x) for x in points])
    h = np.asarray(widths)
    root_h = np.sqrt(h)
    matrix = (root_h * v_cells)[:, None] * path * (w_cells * root_h)[None, :]
    logger.debug("Discretized Hardy operator: %d cells, %d branches", len(h), count)
    return DiscreteOperator(
        tree,
        cells_per_unit,
        matrix,
        h,
        cell_branch,
        np.asarray(offsets),
        branches,
        path,
        v_cells,
        w_cells,
    )


# ---------------------------------------------------------------------------
# Singular values
# ---------------------------------------------------------------------------


def _jacobi(columns: FloatArray) -> FloatArray:
    """One-sided Hestenes Jacobi: orthogonalize columns, return their norms descending."""
    u = np.array(columns, dtype=np.float64, copy=True)
    k = u.shape[1]
    total = float(np.sum(u * u))
    if total == 0.0:
        return np.zeros(k)
    for sweep in range(1, JACOBI_MAX_SWEEPS + 1):
        off = 0.0
        for i in range(k - 1):
            for j in range(i + 1, k):
                alpha = float(u[:, i] @ u[:, i])
                beta = float(u[:, j] @ u[:, j])
                gamma = float(u[:, i] @ u[:, j])
                off += gamma * gamma
                if gamma == 0.0:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                ui = u[:, i].copy()
                u[:, i] = c * ui - s * u[:, j]
                u[:, j] = s * ui + c * u[:, j]
        if math.sqrt(off) <= JACOBI_TOLERANCE * total:
            logger.debug("Jacobi converged after %d sweep(s) on %d columns", sweep, k)
            return np.sort(np.sqrt(np.sum(u * u, axis=0)))[::-1]
    raise NoConvergence(f"Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def _dominant_subspace(matrix: FloatArray, wanted: int, block: int, seed: int = 0) -> FloatArray:
    """Orthonormal basis of the dominant left singular subspace, by block power iteration.

    Stops once the leading ``wanted`` estimates settle.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((matrix.shape[1], block))
    previous = np.zeros(wanted)
    for _ in range(SUBSPACE_MAX_ITERATIONS):
        q, r = np.linalg.qr(matrix @ x)
        x, _ = np.linalg.qr(matrix.T @ q)
        estimate = np.sort(np.abs(np.diag(r)))[::-1][:wanted]
        scale = max(float(estimate[0]), 1e-300)
        if float(np.max(np.abs(estimate - previous))) <= SUBSPACE_TOLERANCE * scale:
            return np.asarray(q)
        previous = estimate
    raise NoConvergence(f"Subspace iteration did not settle in {SUBSPACE_MAX_ITERATIONS} steps")


def singular_values(
    operator: DiscreteOperator | FloatArray, count: int | None = None
) -> list[float]:
    """The largest ``count`` singular values (all of them when ``count`` is omitted)."""
    matrix = np.asarray(
        operator.matrix if isinstance(operator, DiscreteOperator) else operator, dtype=np.float64
    )
    if matrix.ndim != 2:
        raise ValueError("singular_values needs a 2-d matrix")
    if matrix.shape[0] < matrix.shape[1]:
        matrix = matrix.T
    smallest = matrix.shape[1]
    wanted = smallest if count is None else min(count, smallest)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Matrix has non-finite entries")
    if smallest <= DIRECT_JACOBI_LIMIT or wanted + SUBSPACE_PADDING >= smallest:
        values = _jacobi(matrix)
    elif not np.any(matrix):
        values = np.zeros(smallest)
    else:
        basis = _dominant_subspace(matrix, wanted, wanted + SUBSPACE_PADDING)
        values = _jacobi((basis.T @ matrix).T)
    return [float(s) for s in values[:wanted]]


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


@dataclass
class BoundRow:
    n: int
    value: float
    bound: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.value <= self.bound + self.slack


@dataclass
class HardyBoundReport:
    """``s_n <= ||v||_2 ||w||_2 / n``, with slack estimated by mesh doubling."""

    norm_v: float
    norm_w: float
    cells_per_unit: int
    rows: list[BoundRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def check_bound(
    tree: RootedTree, n_max: int, cells_per_unit: int = BOUND_CELLS_PER_UNIT
) -> HardyBoundReport:
    whole = tree.graph.whole()
    norm_v = lp_norm(tree.v, 2.0, whole)
    norm_w = lp_norm(tree.w, 2.0, whole)
    coarse = singular_values(discretize(tree, cells_per_unit), n_max)
    fine = singular_values(discretize(tree, 2 * cells_per_unit), n_max)
    report = HardyBoundReport(norm_v, norm_w, 2 * cells_per_unit)
    for n, (s_coarse, s_fine) in enumerate(zip(coarse, fine, strict=False), start=1):
        report.rows.append(
            BoundRow(n, s_fine, norm_v * norm_w / n, 2.0 * abs(s_coarse - s_fine))
        )
    logger.info(
        "Hardy bound for n <= %d: %s", n_max, "holds" if report.passed else "violated"
    )
    return report


def extrapolate(ns: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares fit of ``n·s_n = A + B/n``; returns ``A``."""
    n = np.asarray(ns, dtype=np.float64)
    design = np.column_stack([np.ones_like(n), 1.0 / n])
    target = n * np.asarray(values, dtype=np.float64)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return float(coef[0])


def _limit(tree: RootedTree, ns: Sequence[int], cells_per_unit: int) -> float:
    operator = discretize(tree, cells_per_unit)
    if operator.size < max(ns):
        raise MeshTooCoarse(
            f"{operator.size} cells give fewer than {max(ns)} singular values; refine the mesh"
        )
    values = singular_values(operator, max(ns))
    return extrapolate(ns, [values[n - 1] for n in ns])


def volterra_constant(ns: Sequence[int], cells_per_unit: int) -> float:
    """``lim n·s_n`` for ``v = w = 1`` on the unit interval, measured on the same mesh."""
    segment = build_graph([("e1", "a", "b", 1.0)])
    return _limit(RootedTree.build(segment, "a"), ns, cells_per_unit)


def volterra_oracle(ns: Sequence[int]) -> float:
    """``lim n·s_n`` extrapolated from the exact Volterra values ``s_n = 2/((2n - 1)π)``."""
    return extrapolate(ns, [2.0 / ((2 * n - 1) * math.pi) for n in ns])


@dataclass
class AsymptoticsReport:
    """Extrapolated ``lim n·s_n`` against ``α ∫ |v||w|``.

    ``alpha`` is measured on the tree's mesh; it must also agree with the
    continuous Volterra value ``oracle`` for the mesh to count as resolved.
    """

    alpha: float
    oracle: float
    integral: float
    limit: float
    ns: list[int]
    tolerance: float = 0.05

    @property
    def prediction(self) -> float:
        return self.alpha * self.integral

    @property
    def relative_error(self) -> float:
        return abs(self.limit - self.prediction) / self.prediction

    @property
    def alpha_error(self) -> float:
        return abs(self.alpha - self.oracle) / self.oracle

    @property
    def passed(self) -> bool:
        return self.relative_error <= self.tolerance and self.alpha_error <= self.tolerance


def check_asymptotics(
    tree: RootedTree,
    ns: Sequence[int] = tuple(range(20, 41)),
    cells_per_unit: int = ASYMPTOTICS_CELLS_PER_UNIT,
) -> AsymptoticsReport:
    """Compare the extrapolated ``lim n·s_n`` with ``α ∫ |v||w|``.

    In the Sobolev reading ``V = v²`` and ``a = w^-2``. The mesh has to
    resolve ``max(ns)`` oscillations per unit length; below about ten cells
    per oscillation ``alpha`` drifts away from the oracle and the check fails.
    """
    if any(c <= 0.0 for c in tree.w.piece_values()) or any(
        c <= 0.0 for c in tree.v.piece_values()
    ):
        raise ValueError("Asymptotics need strictly positive weights")
    ns = list(ns)
    alpha = volterra_constant(ns, cells_per_unit)
    integral = power_sum(tree.w, 1.0, tree.graph.whole(), tree.v.map_values(abs))
    report = AsymptoticsReport(
        alpha, volterra_oracle(ns), integral, _limit(tree, ns, cells_per_unit), ns
    )
    logger.info(
        "Hardy asymptotics: limit %.6g vs predicted %.6g (alpha %.6g, oracle %.6g)",
        report.limit,
        report.prediction,
        alpha,
        report.oracle,
    )
    return report


def integrate_along_root(
    operator: DiscreteOperator, f_cells: Sequence[float] | FloatArray
) -> PiecewiseFunction:
    """``u(x) = ∫_{<o,x>} f w`` for cell-constant ``f``.

    The result is continuous and piecewise linear with knots at cell boundaries.
    """
    f = np.asarray(f_cells, dtype=np.float64)
    if f.shape != operator.widths.shape:
        raise ValueError(f"Expected {operator.widths.size} cell values, got {f.size}")
    increments = f * operator.w_cells * operator.widths
    start_value = [0.0] * len(operator.branches)
    knots: dict[str, list[tuple[float, float]]] = {}
    for b, branch in enumerate(operator.branches):
        if branch.parent is not None:
            upstream = operator.branch_of_cell == branch.parent
            start_value[b] = start_value[branch.parent] + float(np.sum(increments[upstream]))
        mask = operator.branch_of_cell == b
        running = start_value[b] + np.concatenate([[0.0], np.cumsum(increments[mask])])
        cells = int(np.sum(mask))
        h = branch.length / cells
        points = [(branch.offset(k * h), float(running[k])) for k in range(cells + 1)]
        points[-1] = (branch.far, points[-1][1])
        knots.setdefault(branch.edge, []).extend(points)
    merged = {edge: sorted(dict(points).items()) for edge, points in knots.items()}
    return PiecewiseFunction.from_edge_knots(operator.tree.graph, merged)


def isometry_gap(operator: DiscreteOperator, f_cells: Sequence[float] | FloatArray) -> float:
    """Relative gap between ``||H f||_2`` from the matrix and ``||Q_w f||_{2,v²}``."""
    f = np.asarray(f_cells, dtype=np.float64)
    from_matrix = float(np.linalg.norm(operator.matrix @ (np.sqrt(operator.widths) * f)))
    u = integrate_along_root(operator, f)
    tree = operator.tree
    density = tree.v.map_values(lambda c: c * c)
    from_norms = lp_norm(u, 2.0, tree.graph.whole(), density)
    if from_norms == 0.0:
        return abs(from_matrix)
    return abs(from_matrix - from_norms) / from_norms
