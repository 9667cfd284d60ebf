"""Positive-unlabeled learning with bagged asymmetric-cost classifiers."""

from .classifiers import TrainConfig, WeightedClassifier, decision, train_logit, train_svm
from .data import (
    Dataset,
    PUSplit,
    SimConfig,
    generate_gaussian_pu,
    load_sparse,
    make_pu_split,
    write_sparse,
)
from .errors import ConfigError, DataError, Error, SparseFormatError, UnsupportedConfigurationError
from .evaluation import (
    FoldPlan,
    MetricsReport,
    auc,
    compute_metrics,
    grid_search,
    grouped_kfold,
    precision_recall,
    roc_curve,
    wilcoxon_paired,
)
from .experiments import ExperimentConfig, MethodSpec, TimingRecord, run_experiment
from .pu import (
    BaggedClassifier,
    BaggingConfig,
    EnsembleScore,
    bagged_decision,
    bagging_inductive,
    bagging_transductive,
    biased_baseline,
    contamination_diagnostics,
    mean_similarity_baseline,
    speedup_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "PUSplit", "SimConfig", "generate_gaussian_pu", "load_sparse",
    "write_sparse", "make_pu_split",
    "TrainConfig", "WeightedClassifier", "decision", "train_logit", "train_svm",
    "Error", "ConfigError", "DataError", "SparseFormatError",
    "UnsupportedConfigurationError",
    "FoldPlan", "MetricsReport", "auc", "compute_metrics", "grid_search",
    "grouped_kfold", "precision_recall", "roc_curve", "wilcoxon_paired",
    "BaggedClassifier", "BaggingConfig", "EnsembleScore", "bagged_decision",
    "bagging_inductive", "bagging_transductive", "biased_baseline",
    "contamination_diagnostics", "mean_similarity_baseline", "speedup_threshold",
    "ExperimentConfig", "MethodSpec", "TimingRecord", "run_experiment",
]
