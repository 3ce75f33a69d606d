"""Pytest plugin for metric-partition (registered via pytest11 entry point).

Provides fixtures and markers for graph-based tests:

    @pytest.mark.graph_spec("graphs/star3.yaml")
    def test_star(spec_graph):
        result = partition(spec_graph.graph, LengthFunctional(spec_graph.graph), 2)
        assert ...

Random sweeps take their seed from ``sweep_seed`` (or draw from ``sweep_rng``)
and size themselves with ``sweep_size``; these follow ``--sweep-seed`` and
``--sweep-size``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from metric_partition._types import GraphFile
from metric_partition._utils import build_inputs, load_spec, stable_hash
from metric_partition.functionals import FunctionalInputs
from metric_partition.graph_core import MetricGraph

logger = logging.getLogger("metric_partition.plugin")

DEFAULT_SWEEP_SIZE = 200


# ---------------------------------------------------------------------------
# pytest CLI options
# ---------------------------------------------------------------------------


def pytest_addoption(parser: pytest.Parser) -> None:
    group = parser.getgroup("metric-partition", "Metric graph partition sweeps")
    group.addoption(
        "--sweep-seed",
        type=int,
        default=0,
        help="Base seed for random sweeps (default: 0).",
    )
    group.addoption(
        "--sweep-size",
        type=int,
        default=None,
        help=f"Instances per random sweep (default: {DEFAULT_SWEEP_SIZE}).",
    )


# ---------------------------------------------------------------------------
# Marker registration
# ---------------------------------------------------------------------------


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line(
        "markers",
        "graph_spec(path): bind a graph spec file to this test",
    )


# ---------------------------------------------------------------------------
# Public fixtures
# ---------------------------------------------------------------------------


@dataclass
class LoadedSpec:
    path: Path
    spec: GraphFile
    inputs: FunctionalInputs

    @property
    def graph(self) -> MetricGraph:
        return self.inputs.graph


@pytest.fixture
def spec_graph(request: pytest.FixtureRequest) -> LoadedSpec:
    """Load the spec file named by ``@pytest.mark.graph_spec``.

    Relative paths resolve against the test file's directory.
    """
    marker = request.node.get_closest_marker("graph_spec")
    if marker is None:
        pytest.fail("spec_graph requires @pytest.mark.graph_spec('path')")
    if not marker.args:
        pytest.fail("@pytest.mark.graph_spec requires a spec path as the first argument")

    path = Path(marker.args[0])
    if not path.is_absolute():
        path = (request.path.parent / path).resolve()
    if not path.exists():
        pytest.fail(f"Graph spec file not found: {path}")
    spec = load_spec(path)
    return LoadedSpec(path, spec, build_inputs(spec))


@pytest.fixture
def sweep_size(request: pytest.FixtureRequest) -> int:
    size: int | None = request.config.getoption("--sweep-size")
    return DEFAULT_SWEEP_SIZE if size is None else size


@pytest.fixture
def sweep_seed(request: pytest.FixtureRequest) -> int:
    seed: int = request.config.getoption("--sweep-seed")
    return seed


@pytest.fixture
def sweep_rng(request: pytest.FixtureRequest) -> np.random.Generator:
    """Generator seeded from ``--sweep-seed`` and the test id, stable across runs."""
    seed: int = request.config.getoption("--sweep-seed")
    salt = int(stable_hash(request.node.nodeid.encode()), 16)
    logger.debug("sweep_rng for %s: seed %d, salt %x", request.node.nodeid, seed, salt)
    return np.random.default_rng((seed, salt))
