"""Class-attribute and attribute-attribute correlation indexes.

All entropies and informations are in bits. ``0 log 0`` is taken as 0 and
values within ``-1e-12`` of zero are clamped to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

CA_INDEXES = ("info_gain", "gain_ratio", "mutual_info", "kl_weight", "pearson")
AA_INDEXES = ("pearson", "mutual_info")
NEG_FLOOR = -1e-12


@dataclass(frozen=True)
class IndexVector:
    kind: str  # "CA" or "AA"
    name: str
    values: np.ndarray

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.name, "values": [float(v) for v in self.values]}


def _clamp(value: float) -> float:
    return 0.0 if NEG_FLOOR <= value < 0 else float(value)


def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return _clamp(float(-(p * np.log2(p)).sum()))


def contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    table = np.zeros((int(a.max()) + 1 if a.size else 1, int(b.max()) + 1 if b.size else 1))
    np.add.at(table, (a, b), 1.0)
    return table


def _mutual_info(table: np.ndarray) -> float:
    total = table.sum()
    if total == 0:
        return 0.0
    p = table / total
    outer = p.sum(axis=1, keepdims=True) * p.sum(axis=0, keepdims=True)
    nz = p > 0
    return _clamp(float((p[nz] * np.log2(p[nz] / outer[nz])).sum()))


def information_gain(data: Dataset, j: int) -> float:
    """``Ent(D) - sum_v |D_v|/|D| Ent(D_v)`` for attribute ``j``."""
    table = contingency(data.X[:, j], data.labels)
    cond = sum(row.sum() / data.m * entropy(row) for row in table if row.sum() > 0)
    return _clamp(entropy(table.sum(axis=0)) - cond)


def split_information(data: Dataset, j: int) -> float:
    return entropy(np.bincount(data.X[:, j]))


def gain_ratio(data: Dataset, j: int) -> float:
    si = split_information(data, j)
    return 0.0 if si == 0 else information_gain(data, j) / si


def mutual_information_ca(data: Dataset, j: int) -> float:
    return _mutual_info(contingency(data.X[:, j], data.labels))


def mutual_information_aa(data: Dataset, i: int, j: int) -> float:
    if i == j:
        return split_information(data, i)
    if i > j:
        i, j = j, i
    return _mutual_info(contingency(data.X[:, i], data.X[:, j]))


def _abs_pearson(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt((dx * dx).sum())
    sy = np.sqrt((dy * dy).sum())
    if sx == 0 or sy == 0:
        return 0.0
    return float(min(1.0, abs((dx * dy).sum()) / (sx * sy)))


def pearson_aa(data: Dataset, i: int, j: int) -> float:
    """Absolute Pearson correlation of the ordinal codes of two attributes."""
    return _abs_pearson(data.X[:, i], data.X[:, j])


def pearson_ca(data: Dataset, j: int) -> float:
    """Absolute Pearson correlation between attribute codes and class codes."""
    return _abs_pearson(data.X[:, j], data.labels)


def kl_weight(data: Dataset, j: int) -> float:
    """Expected ``KL(P(C|a) || P(C))`` over values, divided by the attribute entropy.

    The outer normalising constant is applied when weights are built.
    """
    table = contingency(data.X[:, j], data.labels)
    table = table[table.sum(axis=1) > 0]
    h = entropy(table.sum(axis=1))
    if h == 0:
        return 0.0
    p_a = table.sum(axis=1) / data.m
    p_c = table.sum(axis=0) / data.m
    post = table / table.sum(axis=1, keepdims=True)
    nz = post > 0
    kl = np.where(nz, post * np.log2(np.where(nz, post, 1.0) / np.where(p_c > 0, p_c, 1.0)), 0.0).sum(axis=1)
    return _clamp(float((p_a * kl).sum())) / h


def normalize(values) -> np.ndarray:
    """Min-max scale to ``[0, 1]``; a constant vector maps to zeros."""
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def pair_matrix(data: Dataset, name: str) -> np.ndarray:
    """Symmetric ``n x n`` matrix of raw attribute-attribute index values."""
    func = {"pearson": pearson_aa, "mutual_info": mutual_information_aa}[name]
    n = data.n
    mat = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            mat[i, j] = mat[j, i] = func(data, i, j)
    return mat


def normalize_pairs(matrix: np.ndarray) -> np.ndarray:
    """Min-max over all off-diagonal entries jointly; the diagonal is zeroed."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    out = np.zeros_like(matrix)
    if n < 2:
        return out
    off = ~np.eye(n, dtype=bool)
    out[off] = normalize(matrix[off])
    return out


def avg_redundancy(matrix: np.ndarray, j: int) -> float:
    """Mean of row ``j`` of an already-normalized pair matrix, diagonal excluded."""
    n = matrix.shape[0]
    if n < 2:
        return 0.0
    return float((np.delete(matrix[j], j)).sum() / (n - 1))


def class_attribute_values(data: Dataset, name: str) -> np.ndarray:
    func = {
        "info_gain": information_gain,
        "gain_ratio": gain_ratio,
        "mutual_info": mutual_information_ca,
        "kl_weight": kl_weight,
        "pearson": pearson_ca,
    }.get(name)
    if func is None:
        raise ValueError(f"unknown class-attribute index {name!r}; choose from {CA_INDEXES}")
    return np.array([func(data, j) for j in range(data.n)])


def class_attribute_index(data: Dataset, name: str) -> IndexVector:
    """Normalized CA index vector."""
    return IndexVector("CA", name, normalize(class_attribute_values(data, name)))


def attribute_attribute_index(data: Dataset, name: str) -> IndexVector:
    """Per-attribute averaged redundancy over the globally normalized pair matrix."""
    if name not in AA_INDEXES:
        raise ValueError(f"unknown attribute-attribute index {name!r}; choose from {AA_INDEXES}")
    norm = normalize_pairs(pair_matrix(data, name))
    return IndexVector("AA", name, np.array([avg_redundancy(norm, j) for j in range(data.n)]))
