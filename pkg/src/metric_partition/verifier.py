"""Verify engine: check a claimed partition against the balanced-partition bound."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from metric_partition.errors import NotATree, VerificationFailed
from metric_partition.functionals import (
    DEFAULT_RELATIVE_TOLERANCE,
    Functional,
    tilde_phi,
)
from metric_partition.graph_core import ConnectedSubset, GraphPoint, MetricGraph, Partition
from metric_partition.partition import CutResult, PartitionResult, cut_cycles, lift_functional

logger = logging.getLogger("metric_partition.verifier")

# Relative slack on the bound; absorbs bisection and root-finding tolerances.
BOUND_RELATIVE_SLACK = 1e-8

CLAUSES = ("graph", "connected", "cover", "disjoint", "budget", "tree", "tilde_bound")


@dataclass
class PartCheck:
    """Outcome of checking a single part."""

    index: int
    description: str
    value: float
    tilde: float | None = None
    minimizer: GraphPoint | None = None
    image: GraphPoint | None = None
    slack: float | None = None
    jump: bool = False


@dataclass
class PartitionCheck:
    """Aggregate verification outcome."""

    n: int
    k: int
    bound: float
    parts: list[PartCheck] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_tilde(self) -> float:
        return max((p.tilde for p in self.parts if p.tilde is not None), default=0.0)

    def verdicts(self) -> dict[str, bool]:
        """One pass/fail flag per clause."""
        failed = {clause for clause, _ in self.failures}
        return {clause: clause not in failed for clause in CLAUSES}

    def raise_for_failures(self) -> None:
        if self.failures:
            clause, detail = self.failures[0]
            raise VerificationFailed(clause, detail)


def verify_partition(
    g: MetricGraph,
    phi: Functional,
    parts: Partition | Sequence[ConnectedSubset],
    n: int,
    tol: float | None = None,
    *,
    cut: CutResult | None = None,
) -> PartitionCheck:
    """Check disjointness, exact cover, ``k <= n`` and ``Φ̃(E_j) <= Φ(Γ)/(n+1)`` per part.

    ``Φ̃`` is evaluated on the cut tree: the parts are pulled back through ``τ``
    and the lifted functional is used there.
    """
    family = parts if isinstance(parts, Partition) else Partition(tuple(parts))
    cut = cut or cut_cycles(g)
    lifted = lift_functional(phi, cut)
    total = phi.total()
    bound = total / (n + 1)
    if tol is None:
        tol = DEFAULT_RELATIVE_TOLERANCE * total
    allowed = bound * (1.0 + BOUND_RELATIVE_SLACK) + tol

    check = PartitionCheck(n=n, k=len(family), bound=bound)
    if any(part.graph is not g for part in family):
        check.failures.append(("graph", "parts do not belong to the given graph"))
        return check
    check.failures.extend(family.problems())
    if len(family) > n:
        check.failures.append(("budget", f"{len(family)} parts exceed n={n}"))

    for index, (part, tree_part) in enumerate(zip(family, cut.pull_back(family), strict=True)):
        row = PartCheck(index=index, description=part.describe(), value=phi(part))
        check.parts.append(row)
        if tree_part.is_empty:
            continue
        try:
            result = tilde_phi(lifted, tree_part, tol)
        except NotATree:
            check.failures.append(("tree", f"part {index} is not a tree on the cut graph"))
            continue
        row.tilde = result.value
        row.minimizer = result.point
        row.image = cut.tau(result.point)
        row.slack = bound - result.value
        row.jump = result.jump
        if result.value > allowed:
            check.failures.append(
                (
                    "tilde_bound",
                    f"part {index} ({row.description}) has tilde {result.value:.12g} "
                    f"> bound {bound:.12g}",
                )
            )

    if check.passed:
        logger.info(
            "Partition verified: %d part(s), max tilde %.12g <= %.12g",
            check.k,
            check.max_tilde,
            bound,
        )
    else:
        logger.info(
            "Partition failed %d check(s); first: %s", len(check.failures), check.failures[0][0]
        )
    return check


def verify_result(result: PartitionResult, tol: float | None = None) -> PartitionCheck:
    """Verify the output of :func:`~metric_partition.partition.partition` on its own cut."""
    return verify_partition(
        result.graph, result.functional, result.parts, result.n, tol, cut=result.cut
    )
