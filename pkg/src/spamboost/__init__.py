"""Gradient-boosted tree spam detector and benchmark pipeline."""

__version__ = "0.1.0"

from .booster import (
    Hyperparams,
    Model,
    Tree,
    load_model,
    predict_label,
    predict_proba,
    predict_raw,
    save_model,
    train,
)
from .dataset import Dataset, SplitSpec, kfold_indices, load_dataset, stratified_split
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    confusion,
    pr_curve,
    roc_curve,
    scalar_metrics,
)
from .resampling import (
    ResampleSpec,
    apply_resample,
    random_oversample,
    random_undersample,
    smote,
    smote_tomek,
    tomek_links,
)
from .tuning import ParamGrid, ValidationConfig, grid_search

__all__ = [
    "__version__",
    "Hyperparams",
    "Model",
    "Tree",
    "Dataset",
    "SplitSpec",
    "ConfusionMatrix",
    "MetricsReport",
    "ResampleSpec",
    "ParamGrid",
    "ValidationConfig",
    "load_dataset",
    "stratified_split",
    "kfold_indices",
    "train",
    "predict_raw",
    "predict_proba",
    "predict_label",
    "save_model",
    "load_model",
    "confusion",
    "scalar_metrics",
    "roc_curve",
    "pr_curve",
    "random_oversample",
    "random_undersample",
    "smote",
    "tomek_links",
    "smote_tomek",
    "apply_resample",
    "grid_search",
]
