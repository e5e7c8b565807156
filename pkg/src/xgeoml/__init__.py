"""Geographically weighted machine learning with per-point explanations."""

from .engine import (AttributionField, EngineError, ExplainConfig, LOOResult, Recovery, ScanResult,
                     explain_all, gwr_coefficient_surface, gwr_smooth_attributions, holdout_evaluate,
                     field_recovery, loo_evaluate, ols_fit, recovery_metrics, scan_bandwidth)
from .explain import lime_explain, partial_dependence, shapley_exact, tree_importance
from .kernels import DegenerateNeighborhoodError, KernelSpec, weight_matrix, weights_for
from .learners import LearnerConfig, SingularFitError, fit
from .spatial import (DatasetError, DistanceIndex, Schema, SpatialDataset, build_index, load_dataset,
                      pearson_correlation, write_dataset)
from .synth import GroundTruth, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AttributionField", "DatasetError", "DegenerateNeighborhoodError", "DistanceIndex", "EngineError",
    "ExplainConfig", "GroundTruth", "KernelSpec", "LOOResult", "LearnerConfig", "Recovery", "ScanResult",
    "Schema", "SingularFitError", "SpatialDataset", "SynthSpec", "build_index", "explain_all", "field_recovery", "fit",
    "generate", "gwr_coefficient_surface", "gwr_smooth_attributions", "holdout_evaluate", "lime_explain",
    "load_dataset", "loo_evaluate", "ols_fit", "partial_dependence", "pearson_correlation",
    "recovery_metrics", "scan_bandwidth", "shapley_exact", "tree_importance", "weight_matrix",
    "weights_for", "write_dataset",
]
