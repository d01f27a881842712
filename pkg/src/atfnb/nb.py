"""Laplace-smoothed naive Bayes counts and weighted log-space prediction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import DataError, Dataset


@dataclass(frozen=True, eq=False)
class FrequencyModel:
    """Count statistics of a training set.

    ``joint_counts[j]`` has shape ``(len(alphabets[j]), K)``. ``alphabet_sizes[j]``
    counts only the values actually observed in training, so codes that never
    occurred (or that lie past the fitted alphabet) smooth to ``1 / (N_c + size)``.
    """

    attributes: tuple[str, ...]
    alphabets: tuple[tuple[str, ...], ...]
    classes: tuple[str, ...]
    class_counts: np.ndarray
    joint_counts: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return int(self.class_counts.sum())

    @property
    def n(self) -> int:
        return len(self.attributes)

    @property
    def K(self) -> int:
        return len(self.classes)

    @property
    def alphabet_sizes(self) -> np.ndarray:
        return np.array([int((jc.sum(axis=1) > 0).sum()) for jc in self.joint_counts])

    def log_prior(self) -> np.ndarray:
        return np.log(self.class_counts + 1.0) - np.log(self.m + self.K)

    def log_tables(self) -> np.ndarray:
        """Padded ``(n, V_max + 1, K)`` log-conditional table.

        Slot ``V_max`` holds the unseen-value probability for every attribute.
        """
        vmax = max(len(a) for a in self.alphabets)
        sizes = self.alphabet_sizes
        table = np.empty((self.n, vmax + 1, self.K))
        for j, jc in enumerate(self.joint_counts):
            denom = np.log(self.class_counts + sizes[j])
            table[j, :, :] = -denom
            table[j, : jc.shape[0], :] = np.log(jc + 1.0) - denom
        return table

    def log_conditionals(self, X: np.ndarray) -> np.ndarray:
        """``log P(x_ij | c)`` for a batch of coded instances, shape ``(m, n, K)``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        if X.shape[1] != self.n:
            raise DataError(f"instance has {X.shape[1]} attributes, model expects {self.n}")
        table = self.log_tables()
        vmax = table.shape[1] - 1
        limits = np.array([len(a) for a in self.alphabets])
        codes = np.where((X >= 0) & (X < limits), X, vmax)
        return table[np.arange(self.n)[None, :], codes, :]

    def to_dict(self) -> dict:
        return {
            "attributes": list(self.attributes),
            "alphabets": [list(a) for a in self.alphabets],
            "classes": list(self.classes),
            "class_counts": self.class_counts.astype(int).tolist(),
            "joint_counts": [jc.astype(int).tolist() for jc in self.joint_counts],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FrequencyModel":
        K = len(doc["classes"])
        return cls(tuple(doc["attributes"]), tuple(tuple(a) for a in doc["alphabets"]),
                   tuple(doc["classes"]), np.asarray(doc["class_counts"], dtype=float),
                   tuple(np.asarray(jc, dtype=float).reshape(-1, K) for jc in doc["joint_counts"]))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "FrequencyModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_counts(train: Dataset) -> FrequencyModel:
    if train.m == 0:
        raise DataError("cannot fit on an empty dataset")
    y = train.labels
    class_counts = np.bincount(y, minlength=train.K).astype(float)
    joint = []
    for j, alphabet in enumerate(train.alphabets):
        jc = np.zeros((len(alphabet), train.K))
        np.add.at(jc, (train.X[:, j], y), 1.0)
        joint.append(jc)
    return FrequencyModel(train.attributes, train.alphabets, train.classes, class_counts, tuple(joint))


def _class_index(model: FrequencyModel, c) -> int:
    if isinstance(c, (int, np.integer)):
        if not 0 <= c < model.K:
            raise KeyError(f"unknown class index {c}")
        return int(c)
    try:
        return model.classes.index(c)
    except ValueError:
        raise KeyError(f"unknown class label {c!r}") from None


def prior(model: FrequencyModel, c) -> float:
    """``(count_c + 1) / (m + K)``."""
    k = _class_index(model, c)
    return (model.class_counts[k] + 1.0) / (model.m + model.K)


def conditional(model: FrequencyModel, j: int, a, c) -> float:
    """``(joint + 1) / (count_c + |A_j|)``; ``a`` is a code or a symbol, unseen values count 0."""
    k = _class_index(model, c)
    if isinstance(a, str):
        a = model.alphabets[j].index(a) if a in model.alphabets[j] else -1
    jc = model.joint_counts[j]
    joint = jc[a, k] if 0 <= a < jc.shape[0] else 0.0
    return (joint + 1.0) / (model.class_counts[k] + model.alphabet_sizes[j])


def class_scores(model: FrequencyModel, weights: Sequence[float], x) -> np.ndarray:
    """``log P(c) + sum_j w_j log P(x_j | c)`` for one instance, one entry per class."""
    return batch_scores(model, weights, np.asarray(x, dtype=np.int64)[None, :])[0]


def batch_scores(model: FrequencyModel, weights: Sequence[float], X) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (model.n,):
        raise DataError(f"weight vector has length {w.size}, model has {model.n} attributes")
    logc = model.log_conditionals(X)
    return model.log_prior()[None, :] + np.einsum("j,mjk->mk", w, logc)


# scores this close (relative) to the maximum count as tied
TIE_RTOL = 1e-12


def argmax_scores(scores) -> np.ndarray:
    """Row-wise argmax where near-equal scores tie and the lowest class index wins.

    Equal products of probabilities can differ by an ulp once summed as logs;
    the tolerance keeps the canonical-order tie rule from depending on that.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    best = scores.max(axis=1, keepdims=True)
    tied = scores >= best - TIE_RTOL * np.maximum(1.0, np.abs(best))
    return np.argmax(tied, axis=1)


def predict(model: FrequencyModel, weights, x) -> int:
    """Class index with the highest score; ties go to the lowest index."""
    return int(argmax_scores(class_scores(model, weights, x))[0])


def predict_batch(model: FrequencyModel, weights, X) -> np.ndarray:
    return argmax_scores(batch_scores(model, weights, X))


def accuracy(model: FrequencyModel, weights, data: Dataset) -> float:
    if data.m == 0:
        raise DataError("accuracy of an empty dataset is undefined")
    return float(np.mean(predict_batch(model, weights, data.X) == data.labels))
