"""metric-partition: balanced partitions of metric graphs and the approximation bounds they give."""

from importlib.metadata import version

from metric_partition.approx import (
    ApproxOperator,
    StepFunction,
    approximate_uniform,
    build_lp_operator,
    lp_error,
    sharpness_star,
    sup_error,
)
from metric_partition.functionals import LengthFunctional, create_functional, tilde_phi
from metric_partition.graph_core import ConnectedSubset, GraphPoint, MetricGraph, build_graph
from metric_partition.measures import Measure, PiecewiseFunction
from metric_partition.partition import cut_cycles, lemma_split, partition
from metric_partition.verifier import verify_partition

__all__ = [
    "ApproxOperator",
    "ConnectedSubset",
    "GraphPoint",
    "LengthFunctional",
    "Measure",
    "MetricGraph",
    "PiecewiseFunction",
    "StepFunction",
    "__version__",
    "approximate_uniform",
    "build_graph",
    "build_lp_operator",
    "create_functional",
    "cut_cycles",
    "lemma_split",
    "lp_error",
    "partition",
    "sharpness_star",
    "sup_error",
    "tilde_phi",
    "verify_partition",
]
__version__ = version("metric-partition")
