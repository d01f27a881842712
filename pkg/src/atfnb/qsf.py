"""Exact inference of the fusion switching factor, plus the grid-search baseline.

For fusion weights ``w(beta) = beta * (CA + AA) - AA`` every class score of an
instance is affine in beta: ``T(x, c) = beta * K_c + M_c``. An instance is
classified correctly on an interval of beta cut out by ``K - 1`` linear
inequalities, so training accuracy is a step function of beta whose maximum
is found by sweeping the sorted interval endpoints.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import DataError, Dataset
from .nb import FrequencyModel, accuracy, argmax_scores, fit_counts
from .weighting import fusion_weights

# endpoints closer than this are treated as one point
SNAP_EPS = 1e-12


@dataclass(frozen=True)
class BetaInterval:
    lo: float
    hi: float
    empty: bool = False

    @classmethod
    def nothing(cls) -> "BetaInterval":
        return cls(0.0, 0.0, True)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, other: "BetaInterval", eps: float = SNAP_EPS) -> bool:
        if other.empty:
            return True
        return not self.empty and self.lo <= other.lo + eps and other.hi <= self.hi + eps

    def to_list(self) -> list[float] | None:
        return None if self.empty else [self.lo, self.hi]


@dataclass(frozen=True)
class InstanceCoeffs:
    """Slope ``K`` and intercept ``M`` of each class score as a function of beta."""

    K: np.ndarray
    M: np.ndarray
    label: int

    def scores(self, beta: float) -> np.ndarray:
        return beta * self.K + self.M


@dataclass(frozen=True)
class QsfResult:
    optimal: BetaInterval
    representative: float
    coverage: int
    n_instances: int
    candidates: list = field(default_factory=list)
    degenerate: bool = False
    intervals: list = field(default_factory=list)

    def to_dict(self, with_intervals: bool = False) -> dict:
        doc = {
            "beta_star": self.optimal.to_list(),
            "representative": self.representative,
            "coverage": self.coverage,
            "n_instances": self.n_instances,
            "degenerate": self.degenerate,
            "candidates": [{"interval": [g.lo, g.hi], "coverage": c} for g, c in self.candidates],
        }
        if with_intervals:
            doc["instance_intervals"] = [iv.to_list() for iv in self.intervals]
        return doc


def _vec(index) -> np.ndarray:
    return np.asarray(getattr(index, "values", index), dtype=float)


def coefficient_matrices(model: FrequencyModel, ca, aa, X) -> tuple[np.ndarray, np.ndarray]:
    """``K`` and ``M`` for a batch of instances, each of shape ``(m, K)``."""
    ca, aa = _vec(ca), _vec(aa)
    if ca.shape != (model.n,) or aa.shape != (model.n,):
        raise DataError("index vectors must have one entry per attribute")
    logc = model.log_conditionals(X)
    slope = np.einsum("j,mjk->mk", ca + aa, logc)
    intercept = model.log_prior()[None, :] - np.einsum("j,mjk->mk", aa, logc)
    return slope, intercept


def instance_coeffs(model: FrequencyModel, ca, aa, x, label: int) -> InstanceCoeffs:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (model.n,):
        raise DataError(f"instance has {x.size} attributes, model expects {model.n}")
    slope, intercept = coefficient_matrices(model, ca, aa, x[None, :])
    return InstanceCoeffs(slope[0], intercept[0], int(label))


def _feasible(slope: np.ndarray, intercept: np.ndarray, label: int) -> tuple[float, float]:
    lo, hi = 0.0, 1.0
    a = slope[label] - np.delete(slope, label)
    b = np.delete(intercept, label) - intercept[label]
    # a * beta > b for every rival class
    flat = a == 0
    if np.any(b[flat] >= 0):
        return 1.0, 0.0
    up, down = a > 0, a < 0
    if up.any():
        lo = max(lo, float(np.max(b[up] / a[up])))
    if down.any():
        hi = min(hi, float(np.min(b[down] / a[down])))
    return lo, hi


def feasible_interval(coeffs: InstanceCoeffs) -> BetaInterval:
    """Range of beta in ``[0, 1]`` where the true label strictly beats every rival.

    The constraints are strict, so a range that collapses to a point is empty.
    """
    lo, hi = _feasible(np.asarray(coeffs.K, float), np.asarray(coeffs.M, float), coeffs.label)
    if lo >= hi:
        return BetaInterval.nothing()
    return BetaInterval(lo, hi)


def optimal_interval(intervals) -> QsfResult:
    """Subinterval of ``[0, 1]`` contained in the largest number of ``intervals``.

    Endpoints of non-empty intervals plus 0 and 1 are sorted; each gap between
    neighbours is a candidate and its coverage is the number of intervals that
    contain it. The leftmost maximal candidate wins; its midpoint is returned as
    the representative.
    """
    intervals = list(intervals)
    live = [iv for iv in intervals if not iv.empty]
    if not live:
        return QsfResult(BetaInterval(0.0, 1.0), 0.5, 0, len(intervals),
                         [(BetaInterval(0.0, 1.0), 0)], True, intervals)

    los = np.array([iv.lo for iv in live])
    his = np.array([iv.hi for iv in live])
    points = np.sort(np.concatenate([los, his, [0.0, 1.0]]))
    keep = np.concatenate([[True], np.diff(points) > SNAP_EPS])
    q = points[keep]
    # snap each endpoint to its cluster
    lo_idx = np.searchsorted(q, los + SNAP_EPS, side="right") - 1
    hi_idx = np.searchsorted(q, his + SNAP_EPS, side="right") - 1
    n_gaps = len(q) - 1
    if n_gaps == 0:
        return QsfResult(BetaInterval(0.0, 1.0), 0.5, 0, len(intervals),
                         [(BetaInterval(0.0, 1.0), 0)], True, intervals)

    diff = np.zeros(len(q) + 1, dtype=np.int64)
    valid = hi_idx > lo_idx
    np.add.at(diff, lo_idx[valid], 1)
    np.add.at(diff, hi_idx[valid], -1)
    coverage = np.cumsum(diff)[:n_gaps]

    best = int(coverage.max())
    first = int(np.argmax(coverage))
    starts = np.bincount(lo_idx[valid], minlength=len(q))
    ends = np.bincount(hi_idx[valid], minlength=len(q))
    last = first
    # merge neighbours covered by exactly the same set of intervals
    while last + 1 < n_gaps and starts[last + 1] == 0 and ends[last + 1] == 0:
        last += 1
    optimal = BetaInterval(float(q[first]), float(q[last + 1]))
    candidates = [(BetaInterval(float(q[k]), float(q[k + 1])), int(coverage[k])) for k in range(n_gaps)]
    return QsfResult(optimal, optimal.midpoint, best, len(intervals), candidates, False, intervals)


def interval_bounds(slope: np.ndarray, intercept: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised feasible bounds for every row; ``lo >= hi`` marks an empty interval."""
    m, K = slope.shape
    rows = np.arange(m)
    labels = np.asarray(labels, dtype=np.int64)
    known = labels < K
    lab = np.where(known, labels, 0)
    a = slope[rows, lab][:, None] - slope
    b = intercept - intercept[rows, lab][:, None]
    rival = np.ones((m, K), dtype=bool)
    rival[rows, lab] = False
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = b / a
    lo = np.max(np.where(rival & (a > 0), ratio, -np.inf), axis=1, initial=-np.inf)
    hi = np.min(np.where(rival & (a < 0), ratio, np.inf), axis=1, initial=np.inf)
    lo = np.maximum(lo, 0.0)
    hi = np.minimum(hi, 1.0)
    blocked = np.any(rival & (a == 0) & (b >= 0), axis=1) | ~known
    lo[blocked], hi[blocked] = 1.0, 0.0
    return lo, hi


def instance_intervals(model: FrequencyModel, ca, aa, data: Dataset) -> list[BetaInterval]:
    slope, intercept = coefficient_matrices(model, ca, aa, data.X)
    lo, hi = interval_bounds(slope, intercept, data.labels)
    return [BetaInterval(float(l), float(h)) if l < h else BetaInterval.nothing() for l, h in zip(lo, hi)]


def qsf(train: Dataset, ca, aa, model: FrequencyModel | None = None) -> QsfResult:
    """Optimal switching-factor interval on the training set."""
    model = fit_counts(train) if model is None else model
    return optimal_interval(instance_intervals(model, ca, aa, train))


@dataclass(frozen=True)
class SlsResult:
    best_betas: list[float]
    best_accuracy: float
    per_beta: list[tuple[float, float]]

    @property
    def span(self) -> tuple[float, float]:
        return min(self.best_betas), max(self.best_betas)


def beta_grid(step: float) -> np.ndarray:
    if not 0 < step < 1:
        raise ValueError("step must lie in (0, 1)")
    count = int(np.floor(1.0 / step + 1e-9))
    grid = np.arange(count + 1) * step
    if grid[-1] < 1.0 - 1e-12:
        grid = np.append(grid, 1.0)
    return np.minimum(grid, 1.0)


def sls(train: Dataset, ca, aa, step: float = 0.01, model: FrequencyModel | None = None) -> SlsResult:
    """Step-length search: training accuracy of the fused weights on a beta grid."""
    model = fit_counts(train) if model is None else model
    logc = model.log_conditionals(train.X)
    log_prior = model.log_prior()
    y = train.labels
    per_beta = []
    for beta in beta_grid(step):
        w = fusion_weights(ca, aa, float(beta))
        scores = log_prior[None, :] + np.einsum("j,mjk->mk", w, logc)
        per_beta.append((float(beta), float(np.mean(argmax_scores(scores) == y))))
    best = max(acc for _, acc in per_beta)
    return SlsResult([b for b, acc in per_beta if acc == best], best, per_beta)


def compare_qsf_sls(train: Dataset, ca, aa, step: float = 0.01) -> dict:
    """Wall-clock and accuracy comparison of the two searches on one training set."""
    t0 = time.perf_counter()
    q = qsf(train, ca, aa)
    t1 = time.perf_counter()
    s = sls(train, ca, aa, step)
    t2 = time.perf_counter()
    model = fit_counts(train)
    qsf_acc = accuracy(model, fusion_weights(ca, aa, q.representative), train)
    qsf_ms, sls_ms = (t1 - t0) * 1e3, (t2 - t1) * 1e3
    return {
        "qsf_interval": q.optimal.to_list(),
        "qsf_representative": q.representative,
        "qsf_accuracy": qsf_acc,
        "sls_best_points": s.best_betas,
        "sls_interval": list(s.span),
        "sls_accuracy": s.best_accuracy,
        "sls_step": step,
        "qsf_ms": qsf_ms,
        "sls_ms": sls_ms,
        "speedup": sls_ms / qsf_ms if qsf_ms > 0 else float("inf"),
    }
