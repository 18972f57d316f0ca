"""Causal topology of dynamic graphs: time-respecting walk statistics,
higher-order De Bruijn graph models with statistical order selection, and a
causality-aware graph neural network for node classification."""

from .debruijn import (
    BipartiteProjection,
    DeBruijnGraph,
    FeasibilityCapError,
    bipartite_projection,
    build_debruijn,
    feasible_debruijn,
    in_strength,
)
from .experiment import (
    Dataset,
    ExperimentResult,
    Metrics,
    TrainConfig,
    TrainingDivergedError,
    evaluate,
    export_embeddings,
    run_experiment,
    split,
    train,
)
from .model import DbgnnConfig, DbgnnModel, GcnBaseline
from .order_selection import (
    OrderSelectionResult,
    analyze_orders,
    dof,
    likelihood_ratio_test,
    log_likelihood,
    select_order,
)
from .synthetic import ClusterAssignment, generate_temp_clusters, shuffle_timestamps
from .temporal import (
    ParseError,
    StaticWeightedGraph,
    TemporalEdge,
    TemporalGraph,
    aggregate,
    coarsen,
    dedup_events,
    parse_edge_list,
)
from .walks import WalkBag, count_causal_walks, enumerate_causal_walks

__version__ = "0.1.0"

__all__ = [
    "BipartiteProjection",
    "ClusterAssignment",
    "Dataset",
    "DbgnnConfig",
    "DbgnnModel",
    "DeBruijnGraph",
    "ExperimentResult",
    "FeasibilityCapError",
    "GcnBaseline",
    "Metrics",
    "OrderSelectionResult",
    "ParseError",
    "StaticWeightedGraph",
    "TemporalEdge",
    "TemporalGraph",
    "TrainConfig",
    "TrainingDivergedError",
    "WalkBag",
    "aggregate",
    "analyze_orders",
    "bipartite_projection",
    "build_debruijn",
    "coarsen",
    "count_causal_walks",
    "dedup_events",
    "dof",
    "enumerate_causal_walks",
    "evaluate",
    "export_embeddings",
    "feasible_debruijn",
    "generate_temp_clusters",
    "in_strength",
    "likelihood_ratio_test",
    "log_likelihood",
    "parse_edge_list",
    "run_experiment",
    "select_order",
    "shuffle_timestamps",
    "split",
    "train",
]
