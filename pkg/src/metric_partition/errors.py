"""Exception hierarchy for metric-partition.

Input problems derive from :class:`ValueError` so callers that only care about
"bad input" can keep catching that.
"""

from __future__ import annotations


class MetricPartitionError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------------------
# Graph input
# ---------------------------------------------------------------------------


class GraphSpecError(MetricPartitionError, ValueError):
    """A graph specification is structurally invalid."""


class DisconnectedGraph(GraphSpecError):
    pass


class NonpositiveLength(GraphSpecError):
    pass


class DuplicateId(GraphSpecError):
    pass


class PointNotOnGraph(MetricPartitionError, ValueError):
    """A point refers to an unknown edge/vertex or lies outside the edge."""


# ---------------------------------------------------------------------------
# Analysis input
# ---------------------------------------------------------------------------


class UnboundedWeight(MetricPartitionError, ValueError):
    """An essential supremum was requested against a weight with atoms."""


class DiscontinuousInput(MetricPartitionError, ValueError):
    """A Sobolev input disagrees with itself at a shared vertex."""


class AtomicFirstMeasure(MetricPartitionError, ValueError):
    """The first factor of a product functional must be atom-free."""


class WeightNotIntegrable(MetricPartitionError, ValueError):
    """``w_a`` has infinite norm (``a`` vanishes on a set of positive length)."""


class NotATree(MetricPartitionError, ValueError):
    pass


class EpsilonOutOfRange(MetricPartitionError, ValueError):
    pass


class MeshTooCoarse(MetricPartitionError, ValueError):
    pass


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------


class VerificationFailed(MetricPartitionError):
    """A claimed partition or bound does not hold.

    ``clause`` names the violated condition (e.g. ``"cover"``, ``"budget"``,
    ``"tilde_bound"``).
    """

    def __init__(self, clause: str, detail: str) -> None:
        super().__init__(f"{clause}: {detail}")
        self.clause = clause
        self.detail = detail


class NoConvergence(MetricPartitionError, ArithmeticError):
    pass
