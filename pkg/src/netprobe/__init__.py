"""Budgeted network discovery: probe a hidden graph from a partial sample."""

from .features import FEATURE_NAMES, FeatureVector, compute_features, feature_matrix
from .generators import GeneratorConfig, build_oracle, transitivity
from .graph import (GraphFormatError, ObservedState, OracleGraph, ProbeError, load_edge_list,
                    probe, write_edge_list)
from .harness import (ExperimentConfig, ExperimentTrace, aggregate, performance_gain,
                      prediction_error, run_experiment, run_trial, sweep)
from .learners import LearnerModel, htr_fit, k_from_policy, nol_update, pinv, pseudo_solve
from .policies import PolicyConfig, epsilon_at, select_next
from .samplers import SampleConfig, SamplingError, sample

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES", "FeatureVector", "compute_features", "feature_matrix",
    "GeneratorConfig", "build_oracle", "transitivity",
    "GraphFormatError", "ObservedState", "OracleGraph", "ProbeError", "load_edge_list",
    "probe", "write_edge_list",
    "ExperimentConfig", "ExperimentTrace", "aggregate", "performance_gain",
    "prediction_error", "run_experiment", "run_trial", "sweep",
    "LearnerModel", "htr_fit", "k_from_policy", "nol_update", "pinv", "pseudo_solve",
    "PolicyConfig", "epsilon_at", "select_next",
    "SampleConfig", "SamplingError", "sample",
]
