"""Attribute weight vectors: uniform, gain-ratio (WNB), CFW and beta fusion."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import indexes
from .dataset import Dataset

SCHEMES = ("uniform", "wnb", "cfw", "kl", "fusion")


@dataclass(frozen=True)
class SchemeSpec:
    """Which weighting to fit.

    ``beta`` is a float in ``[0, 1]`` or the string ``"adaptive"``; it only
    matters for ``fusion``.
    """

    scheme: str
    ca_index: str | None = None
    aa_index: str | None = None
    beta: float | str = "adaptive"
    label: str = ""

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.scheme == "fusion":
            if self.ca_index not in indexes.CA_INDEXES:
                raise ValueError(f"fusion needs a class-attribute index from {indexes.CA_INDEXES}")
            if self.aa_index not in indexes.AA_INDEXES:
                raise ValueError(f"fusion needs an attribute-attribute index from {indexes.AA_INDEXES}")
            if self.beta != "adaptive":
                beta = float(self.beta)
                if not 0.0 <= beta <= 1.0:
                    raise ValueError("beta must lie in [0, 1]")
                object.__setattr__(self, "beta", beta)
        elif self.scheme == "cfw":
            object.__setattr__(self, "ca_index", "mutual_info")
            object.__setattr__(self, "aa_index", "mutual_info")
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    @property
    def adaptive(self) -> bool:
        return self.scheme == "fusion" and self.beta == "adaptive"

    def _default_label(self) -> str:
        if self.scheme != "fusion":
            return {"uniform": "NB", "wnb": "WNB", "cfw": "CFW", "kl": "KLNB"}[self.scheme]
        tag = {"info_gain": "I", "gain_ratio": "G", "mutual_info": "M", "kl_weight": "K", "pearson": "P"}
        name = f"ATFNB-{tag[self.ca_index]}{tag[self.aa_index]}"
        return name if self.adaptive else f"{name}({self.beta:g})"

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "ca_index": self.ca_index, "aa_index": self.aa_index,
                "beta": self.beta, "label": self.label}

    @classmethod
    def from_dict(cls, doc: dict) -> "SchemeSpec":
        return cls(doc["scheme"], doc.get("ca_index"), doc.get("aa_index"),
                   doc.get("beta", "adaptive"), doc.get("label", ""))


# The five algorithms of the benchmark tables plus the index-combination family.
NAMED = {
    "NB": SchemeSpec("uniform", label="NB"),
    "WNB": SchemeSpec("wnb", label="WNB"),
    "CFW": SchemeSpec("cfw", label="CFW"),
    "ATFNB": SchemeSpec("fusion", "info_gain", "pearson", label="ATFNB"),
    "CFW-beta": SchemeSpec("fusion", "mutual_info", "mutual_info", label="CFW-beta"),
}
for _ca, _c in (("info_gain", "I"), ("mutual_info", "M"), ("pearson", "P")):
    for _aa, _a in (("pearson", "P"), ("mutual_info", "M")):
        NAMED[f"ATFNB-{_c}{_a}"] = SchemeSpec("fusion", _ca, _aa, label=f"ATFNB-{_c}{_a}")


def resolve_scheme(text: str) -> SchemeSpec:
    """Look up a named algorithm (``ATFNB``, ``CFW-beta``, ``ATFNB-MP``...)."""
    key = text.strip()
    for name, spec in NAMED.items():
        if name.lower() == key.lower() or name.lower() == key.lower().replace("β", "beta"):
            return spec
    raise ValueError(f"unknown algorithm {text!r}; known: {', '.join(NAMED)}")


def uniform_weights(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one attribute")
    return np.ones(n)


def wnb_weights(data: Dataset) -> np.ndarray:
    """Gain ratios divided by their mean; uniform if every gain ratio is 0."""
    return _mean_scaled(indexes.class_attribute_values(data, "gain_ratio"), "gain ratio")


def kl_weights(data: Dataset) -> np.ndarray:
    """KL-based weights scaled so they average 1."""
    return _mean_scaled(indexes.class_attribute_values(data, "kl_weight"), "KL")


def _mean_scaled(values: np.ndarray, what: str) -> np.ndarray:
    mean = values.mean()
    if mean <= 0:
        warnings.warn(f"all {what} values are zero; falling back to uniform weights", stacklevel=3)
        return uniform_weights(len(values))
    return values / mean


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def cfw_weights(data: Dataset) -> np.ndarray:
    """Sigmoid of normalized class relevance minus mean normalized redundancy (both MI)."""
    relevance = indexes.class_attribute_index(data, "mutual_info").values
    redundancy = indexes.attribute_attribute_index(data, "mutual_info").values
    return sigmoid(relevance - redundancy)


def fusion_weights(ca, aa, beta: float) -> np.ndarray:
    """``beta * CA - (1 - beta) * AA``. Negative weights are kept."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    ca = np.asarray(getattr(ca, "values", ca), dtype=float)
    aa = np.asarray(getattr(aa, "values", aa), dtype=float)
    if ca.shape != aa.shape:
        raise ValueError("index vectors differ in length")
    return beta * ca - (1.0 - beta) * aa
