"""Super-additive set functions on connected subsets, and their tree minimax ``Φ̃``.

Every functional reports its *singular points*: places where a branch value
can jump because a measure has an atom there. Tree walks insert them as
nodes so that branch values are continuous along every open segment.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field

from metric_partition.errors import (
    AtomicFirstMeasure,
    NotATree,
    PointNotOnGraph,
    WeightNotIntegrable,
)
from metric_partition.graph_core import (
    ConnectedSubset,
    GraphPoint,
    Interval,
    MetricGraph,
    Reach,
    Skeleton,
)
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

logger = logging.getLogger("metric_partition.functionals")

DEFAULT_RELATIVE_TOLERANCE = 1e-10


class Functional(ABC):
    """A set function ``E -> Φ(E) >= 0`` on connected subsets of one graph."""

    kind: str

    def __init__(self, graph: MetricGraph) -> None:
        self.graph = graph

    @abstractmethod
    def __call__(self, subset: ConnectedSubset) -> float:
        """Evaluate on ``subset``."""

    def singular_points(self) -> frozenset[GraphPoint]:
        return frozenset()

    def total(self) -> float:
        return self(self.graph.whole())

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind!r})"


class LengthFunctional(Functional):
    kind = "length"

    def __call__(self, subset: ConnectedSubset) -> float:
        return subset.length


class MeasureFunctional(Functional):
    kind = "measure"

    def __init__(self, mu: Measure) -> None:
        super().__init__(mu.graph)
        self.mu = mu

    def __call__(self, subset: ConnectedSubset) -> float:
        return measure_of(self.mu, subset)

    def singular_points(self) -> frozenset[GraphPoint]:
        return self.mu.singular_points()


class ProductFunctional(Functional):
    """``μ1(E)^α · μ2(E)^(1-α)`` with ``μ1`` atom-free."""

    kind = "product"

    def __init__(self, mu1: Measure, mu2: Measure, alpha: float) -> None:
        if not mu1.is_atomless:
            raise AtomicFirstMeasure(
                f"The first measure of a product must be atom-free; it has {len(mu1.atoms)} atoms"
            )
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"Product exponent must lie in (0, 1), got {alpha}")
        super().__init__(mu1.graph)
        self.mu1, self.mu2, self.alpha = mu1, mu2, alpha

    def __call__(self, subset: ConnectedSubset) -> float:
        first = measure_of(self.mu1, subset)
        second = measure_of(self.mu2, subset)
        return float(first**self.alpha * second ** (1.0 - self.alpha))

    def singular_points(self) -> frozenset[GraphPoint]:
        return self.mu2.singular_points()


def _checked_weight(a: PiecewiseFunction, p: float) -> PiecewiseFunction:
    w = weight_function(a, p)
    if any(math.isinf(c) for c in w.piece_values()):
        raise WeightNotIntegrable("w_a is infinite where a <= 0; a must be positive")
    return w


class SobolevFunctional(Functional):
    """``Φ_u`` controlling the oscillation of a Sobolev function ``u`` on a set.

    * ``1 < p < inf``: ``||w_a||_{p',E} · ||u'||_{p,a,E}``
    * ``p = 1``: ``||w_a||_{inf,Γ} · ∫_E a|u'|``
    * ``p = inf``: ``||u'||_{inf,a,Γ} · ∫_E w_a``, the same partition for every ``u``
      with the same seminorm, so the resulting operator is linear.
    """

    kind = "phi_u"

    def __init__(self, u: PiecewiseFunction, a: PiecewiseFunction, p: float) -> None:
        if p < 1.0:
            raise ValueError(f"phi_u needs p >= 1, got {p}")
        super().__init__(u.graph)
        self.u, self.a, self.p = u, a, p
        self.w = _checked_weight(a, p)
        self._slope = u.derivative()
        whole = u.graph.whole()
        self.seminorm = derivative_norm(u, p, a, whole)
        if p == 1.0:
            self._scale = ess_sup(self.w, whole)
        elif math.isinf(p):
            self._scale = self.seminorm
        else:
            self._scale = 1.0

    def __call__(self, subset: ConnectedSubset) -> float:
        if self.p == 1.0:
            return self._scale * power_sum(self._slope, 1.0, subset, self.a)
        if math.isinf(self.p):
            return self._scale * power_sum(self.w, 1.0, subset)
        q = conjugate_exponent(self.p)
        return lp_norm(self.w, q, subset) * lp_norm(self._slope, self.p, subset, self.a)


class WeightedMeasureFunctional(Functional):
    """``Φ_μ`` for weighted ``L^p(μ)`` approximation.

    * ``1 < p < inf``: ``||w_a||_{p',E} · μ(E)^(1/p)``
    * ``p = 1``: ``||w_a||_{inf,Γ} · μ(E)``
    * ``p = inf`` (``dμ = V dx``, ``V`` bounded): ``||V||_inf · ∫_E w_a``
    """

    kind = "phi_mu"

    def __init__(self, a: PiecewiseFunction, p: float, mu: Measure) -> None:
        if p < 1.0:
            raise ValueError(f"phi_mu needs p >= 1, got {p}")
        super().__init__(mu.graph)
        self.a, self.p, self.mu = a, p, mu
        self.w = _checked_weight(a, p)
        if p == 1.0:
            self._scale = ess_sup(self.w, mu.graph.whole())
        elif math.isinf(p):
            self._scale = mu.sup_density()
        else:
            self._scale = 1.0

    def __call__(self, subset: ConnectedSubset) -> float:
        if self.p == 1.0:
            return self._scale * measure_of(self.mu, subset)
        if math.isinf(self.p):
            return self._scale * power_sum(self.w, 1.0, subset)
        q = conjugate_exponent(self.p)
        return float(lp_norm(self.w, q, subset) * measure_of(self.mu, subset) ** (1.0 / self.p))

    def singular_points(self) -> frozenset[GraphPoint]:
        return self.mu.singular_points()


class ThetaFunctional(Functional):
    """``|E|^(1 - 1/(θp)) · μ(E)^(1/(θp))`` for ``θ ∈ (0, 1)``, ``θp > 1``."""

    kind = "phi_theta"

    def __init__(self, theta: float, p: float, mu: Measure) -> None:
        if not 0.0 < theta < 1.0:
            raise ValueError(f"phi_theta needs theta in (0, 1), got {theta}")
        if not theta * p > 1.0:
            raise ValueError(f"phi_theta needs p > 1/theta, got p={p}, theta={theta}")
        super().__init__(mu.graph)
        self.theta, self.p, self.mu = theta, p, mu
        self.beta = 1.0 / (theta * p)

    def __call__(self, subset: ConnectedSubset) -> float:
        mass = measure_of(self.mu, subset)
        return float(subset.length ** (1.0 - self.beta) * mass**self.beta)

    def singular_points(self) -> frozenset[GraphPoint]:
        return self.mu.singular_points()


def make_product(mu1: Measure, mu2: Measure, alpha: float) -> Functional:
    return ProductFunctional(mu1, mu2, alpha)


def make_phi_u(u: PiecewiseFunction, a: PiecewiseFunction, p: float) -> Functional:
    return SobolevFunctional(u, a, p)


def make_phi_mu(a: PiecewiseFunction, p: float, mu: Measure) -> Functional:
    return WeightedMeasureFunctional(a, p, mu)


def make_phi_theta(theta: float, p: float, mu: Measure) -> Functional:
    return ThetaFunctional(theta, p, mu)


# ---------------------------------------------------------------------------
# Factory
# ---------------------------------------------------------------------------


@dataclass
class FunctionalInputs:
    """Named data a functional spec string can draw on."""

    graph: MetricGraph
    measures: dict[str, Measure] = field(default_factory=dict)
    functions: dict[str, PiecewiseFunction] = field(default_factory=dict)
    weights: dict[str, PiecewiseFunction] = field(default_factory=dict)
    p: float = 2.0
    alpha: float | None = None
    theta: float | None = None

    def measure(self, name: str, *fallbacks: str) -> Measure:
        for key in (name, *fallbacks):
            if key in self.measures:
                return self.measures[key]
        raise ValueError(f"Missing measure {name!r} in the spec file")

    def function(self, name: str) -> PiecewiseFunction:
        if name not in self.functions:
            raise ValueError(f"Missing function {name!r} in the spec file")
        return self.functions[name]

    def weight(self, name: str) -> PiecewiseFunction:
        return self.weights.get(name) or PiecewiseFunction.constant(self.graph, 1.0)


def _need(arg: float | None, kind: str, default: float | None = None) -> float:
    if arg is None:
        arg = default
    if arg is None:
        raise ValueError(f"Functional {kind!r} needs a parameter, e.g. '{kind}:0.5'")
    return arg


def create_functional(spec: str, inputs: FunctionalInputs) -> Functional:
    """Build a functional from ``kind[:param]``, e.g. ``product:0.5`` or ``phi_theta:0.75``."""
    kind, _, raw = spec.partition(":")
    try:
        arg = float(raw) if raw else None
    except ValueError:
        raise ValueError(f"Bad functional parameter in {spec!r}") from None

    builders: dict[str, Callable[[], Functional]] = {
        "length": lambda: LengthFunctional(inputs.graph),
        "measure": lambda: MeasureFunctional(inputs.measure("mu")),
        "product": lambda: ProductFunctional(
            inputs.measures.get("mu1") or Measure.length(inputs.graph),
            inputs.measure("mu2", "mu"),
            _need(arg, kind, inputs.alpha),
        ),
        "phi_u": lambda: SobolevFunctional(inputs.function("u"), inputs.weight("a"), inputs.p),
        "phi_mu": lambda: WeightedMeasureFunctional(
            inputs.weight("a"), inputs.p, inputs.measure("mu")
        ),
        "phi_theta": lambda: ThetaFunctional(
            _need(arg, kind, inputs.theta), inputs.p, inputs.measure("mu")
        ),
    }
    builder = builders.get(kind)
    if builder is None:
        raise ValueError(f"Unknown functional: {kind!r}. Choose from: {list(builders)}")
    return builder()


# ---------------------------------------------------------------------------
# Punctured subtrees
# ---------------------------------------------------------------------------


def _tree_skeleton(subset: ConnectedSubset, extra: frozenset[GraphPoint]) -> Skeleton:
    if subset.is_empty:
        raise ValueError("Cannot work on an empty subset")
    skeleton = Skeleton(subset, extra)
    if not skeleton.is_tree():
        raise NotATree(f"Subset {subset.describe()} is not a tree")
    return skeleton


@dataclass(frozen=True)
class PuncturedTreeSplit:
    """The branches of a subtree ``T`` at a base point ``x``.

    Every branch is closed and contains ``x``; exclusions of ``T`` are kept.
    """

    base: GraphPoint
    branches: tuple[ConnectedSubset, ...]

    def value(self, phi: Functional) -> float:
        """``max_j Φ(Θ_j minus x)``; 0 when ``x`` is an isolated point."""
        return max((phi(b.without(self.base)) for b in self.branches), default=0.0)

    def closed_value(self, phi: Functional) -> float:
        return max((phi(b) for b in self.branches), default=0.0)


def canonical_split(subset: ConnectedSubset, x: GraphPoint) -> PuncturedTreeSplit:
    graph = subset.graph
    x = graph.canonical(x)
    if not subset.closure_contains(x):
        raise PointNotOnGraph(f"Point {x} is not in the closure of {subset.describe()}")
    skeleton = _tree_skeleton(subset, frozenset({x}))
    ordered = sorted(
        skeleton.incident(x),
        key=lambda i: (skeleton.segments[i].edge, skeleton.segments[i].start),
    )
    branches = tuple(skeleton.assemble(*skeleton.branch(x, i)) for i in ordered)
    return PuncturedTreeSplit(x, branches)


# ---------------------------------------------------------------------------
# Φ̃ on trees
# ---------------------------------------------------------------------------


class _SegmentSides:
    """Branch values on either side of a cut point ``t`` moving along one segment.

    ``left(t)`` covers the head side plus ``[start, t]`` and ``right(t)`` the
    tail side plus ``[t, end]``; ``punctured`` removes ``t`` itself.
    """

    def __init__(self, phi: Functional, skeleton: Skeleton, index: int) -> None:
        self.phi = phi
        self.skeleton = skeleton
        self.seg = skeleton.segments[index]
        self._head_side = skeleton.side(index, self.seg.head)
        self._tail_side = skeleton.side(index, self.seg.tail)

    def _value(self, reach: Reach, span: Interval, cut: float, punctured: bool) -> float:
        excluded = [self.skeleton.subset.graph.point(self.seg.edge, cut)] if punctured else []
        return self.phi(self.skeleton.assemble(*reach, [span], excluded))

    def left(self, t: float, punctured: bool) -> float:
        return self._value(self._head_side, (self.seg.edge, self.seg.start, t), t, punctured)

    def right(self, t: float, punctured: bool) -> float:
        return self._value(self._tail_side, (self.seg.edge, t, self.seg.end), t, punctured)

    def at(self, t: float) -> float:
        return max(self.left(t, True), self.right(t, True))


@dataclass(frozen=True)
class TildePhi:
    """Result of minimizing the largest punctured branch value over a subtree.

    ``jump`` is set when the closed branches at the minimizer are worth more
    than the punctured ones by more than the tolerance (an atom sits there).
    """

    value: float
    point: GraphPoint
    jump: bool = False


def tilde_phi(
    phi: Functional,
    subset: ConnectedSubset,
    tol: float | None = None,
    *,
    length_tol: float | None = None,
) -> TildePhi:
    """``min over x in closure(T)`` of ``max_j Φ(Θ_j minus x)``, with a minimizer.

    Node values are computed exactly. Inside a segment the left branch value
    grows and the right one shrinks, so their crossing is found by bisection.
    Segments whose endpoint bounds cannot beat the best value are skipped.
    """
    graph = subset.graph
    skeleton = _tree_skeleton(subset, phi.singular_points())
    if tol is None:
        tol = DEFAULT_RELATIVE_TOLERANCE * phi(subset)
    if length_tol is None:
        length_tol = DEFAULT_RELATIVE_TOLERANCE * graph.total_length

    def punctured(node: GraphPoint) -> float:
        values = (
            phi(skeleton.assemble(*skeleton.branch(node, i), extra_excluded=[node]))
            for i in skeleton.incident(node)
        )
        return max(values, default=0.0)

    candidates: list[tuple[float, GraphPoint]] = [(punctured(n), n) for n in skeleton.nodes]
    best = min(value for value, _ in candidates)

    for index, seg in enumerate(skeleton.segments):
        sides = _SegmentSides(phi, skeleton, index)
        if max(sides.left(seg.start, False), sides.right(seg.end, False)) >= best:
            continue
        # A sign that does not change means the infimum sits at an end node.
        if sides.left(seg.start, False) >= sides.right(seg.start, True):
            continue
        if sides.left(seg.end, True) <= sides.right(seg.end, False):
            continue

        lo, hi = seg.start, seg.end
        while hi - lo > length_tol:
            mid = 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
            l_val, r_val = sides.left(mid, True), sides.right(mid, True)
            if abs(l_val - r_val) <= tol:
                lo = hi = mid
                break
            if l_val < r_val:
                lo = mid
            else:
                hi = mid
        for t in sorted({lo, hi}):
            if seg.start < t < seg.end:
                value = sides.at(t)
                candidates.append((value, graph.point(seg.edge, t)))
                best = min(best, value)

    near = [(value, x) for value, x in candidates if value <= best + tol]
    value, point = min(near, key=lambda c: (graph.position_key(c[1]), c[0]))
    jump = False
    if point in skeleton.nodes and skeleton.incident(point):
        closed = max(
            phi(skeleton.assemble(*skeleton.branch(point, i))) for i in skeleton.incident(point)
        )
        jump = closed - value > tol
    logger.debug("tilde_phi on %s: %.12g at %s", subset.describe(), value, point)
    return TildePhi(value, point, jump)
