"""Shared test fixtures for metric-partition."""

from __future__ import annotations

from pathlib import Path

import pytest

from metric_partition.graph_core import MetricGraph, build_graph
from metric_partition.measures import PiecewiseFunction

GRAPHS_DIR = Path(__file__).parent / "graphs"


@pytest.fixture
def graphs_dir() -> Path:
    return GRAPHS_DIR


@pytest.fixture
def segment() -> MetricGraph:
    """The unit interval as a single edge ``e1`` from ``a`` to ``b``."""
    return build_graph([("e1", "a", "b", 1.0)])


@pytest.fixture
def star3() -> MetricGraph:
    return build_graph([(f"e{i}", "o", f"v{i}", 1.0) for i in (1, 2, 3)])


@pytest.fixture
def triangle() -> MetricGraph:
    return build_graph([("e1", "a", "b", 1.0), ("e2", "b", "c", 1.0), ("e3", "c", "a", 1.0)])


@pytest.fixture
def loop() -> MetricGraph:
    return build_graph([("l", "a", "a", 1.0)])


@pytest.fixture
def triangle_pendant() -> MetricGraph:
    """Triangle ``a b c`` with a pendant edge ``d0`` hanging off ``a``.

    The pendant id sorts before the triangle edges, so a search that picked
    the smallest id regardless of cycles would choose it.
    """
    return build_graph(
        [
            ("d0", "a", "p", 2.0),
            ("e1", "a", "b", 1.0),
            ("e2", "b", "c", 1.0),
            ("e3", "c", "a", 1.0),
        ]
    )


@pytest.fixture
def identity_u(segment: MetricGraph) -> PiecewiseFunction:
    """``u(x) = x`` on the unit segment."""
    return PiecewiseFunction.linear(segment, {"a": 0.0, "b": 1.0})


@pytest.fixture
def one(segment: MetricGraph) -> PiecewiseFunction:
    return PiecewiseFunction.constant(segment, 1.0)
