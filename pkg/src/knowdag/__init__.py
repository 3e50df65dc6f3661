"""knowdag: DAG structure learning with expert knowledge in the loop."""

__version__ = "0.1.0"

from .constraints import EdgeConstraint, Kind, known_active, known_inactive  # noqa: F401
from .graphs import DirectedGraph, MetricReport, expected_graph, structural_metrics  # noqa: F401
from .model import MlpSem, WeightedAdjacency, adjacency, h_acyc, loss  # noqa: F401
from .sem import DataMatrix, load_csv_dataset, simulate_index_sem  # noqa: F401
from .solver import FitResult, SolverConfig, fit, threshold  # noqa: F401

__all__ = [
    "DirectedGraph", "MetricReport", "expected_graph", "structural_metrics",
    "DataMatrix", "load_csv_dataset", "simulate_index_sem",
    "MlpSem", "WeightedAdjacency", "adjacency", "h_acyc", "loss",
    "EdgeConstraint", "Kind", "known_active", "known_inactive",
    "FitResult", "SolverConfig", "fit", "threshold",
    "__version__",
]
