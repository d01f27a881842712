"""Attribute-weighted naive Bayes with adaptive two-index fusion."""

__version__ = "0.1.0"

from .dataset import (DataError, Dataset, DiscretizationMap, RawDataset, apply_discretization,
                      chimerge_discretize, impute_missing, load_csv, split)
from .nb import FrequencyModel, accuracy, class_scores, fit_counts, predict
from .pipeline import WeightedNB, fit
from .qsf import BetaInterval, QsfResult, optimal_interval, sls
from .weighting import NAMED, SchemeSpec, fusion_weights

__all__ = [
    "BetaInterval", "DataError", "Dataset", "DiscretizationMap", "FrequencyModel", "NAMED",
    "QsfResult", "RawDataset", "SchemeSpec", "WeightedNB", "accuracy", "apply_discretization",
    "chimerge_discretize", "class_scores", "fit", "fit_counts", "fusion_weights", "impute_missing",
    "load_csv", "optimal_interval", "predict", "sls", "split",
]
