"""Fit a weighting scheme on a training set and wrap the result as a classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import indexes, nb, weighting
from .dataset import Dataset
from .qsf import QsfResult, qsf
from .weighting import SchemeSpec


@dataclass(frozen=True, eq=False)
class WeightedNB:
    spec: SchemeSpec
    model: nb.FrequencyModel
    weights: np.ndarray
    beta: float | None = None
    qsf_result: QsfResult | None = None
    ca: indexes.IndexVector | None = None
    aa: indexes.IndexVector | None = None

    def predict(self, X) -> np.ndarray:
        return nb.predict_batch(self.model, self.weights, X)

    def accuracy(self, data: Dataset) -> float:
        return nb.accuracy(self.model, self.weights, data)

    def to_dict(self) -> dict:
        return {
            "scheme": self.spec.to_dict(),
            "weights": [float(w) for w in self.weights],
            "beta": self.beta,
            "indexes": {k: v.to_dict() for k, v in (("ca", self.ca), ("aa", self.aa)) if v is not None},
            "qsf": None if self.qsf_result is None else self.qsf_result.to_dict(),
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def fusion_indexes(train: Dataset, spec: SchemeSpec):
    return (indexes.class_attribute_index(train, spec.ca_index),
            indexes.attribute_attribute_index(train, spec.aa_index))


def fit(train: Dataset, spec: SchemeSpec) -> WeightedNB:
    """Count, weight and (for adaptive fusion) infer beta on ``train`` only."""
    model = nb.fit_counts(train)
    if spec.scheme == "uniform":
        return WeightedNB(spec, model, weighting.uniform_weights(train.n))
    if spec.scheme == "wnb":
        return WeightedNB(spec, model, weighting.wnb_weights(train))
    if spec.scheme == "kl":
        return WeightedNB(spec, model, weighting.kl_weights(train))
    if spec.scheme == "cfw":
        return WeightedNB(spec, model, weighting.cfw_weights(train))
    ca, aa = fusion_indexes(train, spec)
    result = None
    if spec.adaptive:
        result = qsf(train, ca, aa, model)
        beta = result.representative
    else:
        beta = float(spec.beta)
    return WeightedNB(spec, model, weighting.fusion_weights(ca, aa, beta), beta, result, ca, aa)
