"""Repeated-split benchmarking, significance tests and summary tables."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from . import pipeline
from .dataset import (RawDataset, apply_discretization, chimerge_discretize, impute_missing,
                      imputation_values, stratified_indices)
from .weighting import SchemeSpec

log = logging.getLogger(__name__)

DEFAULT_ALGORITHMS = ("NB", "WNB", "CFW", "ATFNB", "CFW-beta")
COMPARED = ("ATFNB", "WNB", "CFW", "NB")


@dataclass(frozen=True)
class RunRecord:
    dataset: str
    algorithm: str
    run_index: int
    seed: int
    accuracy: float
    beta_interval: list | None = None
    wall_time_ms: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BenchmarkRun:
    records: list[RunRecord]
    failures: dict[str, str] = field(default_factory=dict)


def derive_seed(master_seed: int, dataset: str, run_index: int) -> int:
    """Stable per-(dataset, run) seed shared by every algorithm."""
    digest = hashlib.sha256(f"{master_seed}:{dataset}:{run_index}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def _one_run(name: str, raw: RawDataset, algorithms: Sequence[SchemeSpec], run_index: int,
             master_seed: int, train_fraction: float, significance: float) -> list[RunRecord]:
    seed = derive_seed(master_seed, name, run_index)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        parts = stratified_indices(raw.labels, train_fraction, seed)
    train_raw, test_raw = raw.subset(parts.train_idx), raw.subset(parts.test_idx)
    fill = imputation_values(train_raw) if raw.has_missing() else None
    train_raw = impute_missing(train_raw, fill)
    test_raw = impute_missing(test_raw, fill)
    train, dmap = chimerge_discretize(train_raw, significance)
    test = apply_discretization(test_raw, dmap)
    out = []
    for spec in algorithms:
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fitted = pipeline.fit(train, spec)
        acc = fitted.accuracy(test)
        ms = (time.perf_counter() - t0) * 1e3
        interval = fitted.qsf_result.optimal.to_list() if fitted.qsf_result is not None else None
        out.append(RunRecord(name, spec.label, run_index, seed, acc, interval, ms))
    return out


def run_benchmark(datasets: Sequence[tuple[str, RawDataset]], algorithms: Sequence[SchemeSpec],
                  repeats: int = 30, master_seed: int = 0, train_fraction: float = 0.7,
                  significance: float = 0.05, jobs: int = 1) -> BenchmarkRun:
    """Evaluate every algorithm on ``repeats`` seeded splits of every dataset.

    Imputation and discretization are fitted on each training split and applied
    to its test split. A dataset that fails is recorded in ``failures`` and the
    batch continues.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    labels = [s.label for s in algorithms]
    if len(set(labels)) != len(labels):
        raise ValueError(f"algorithm labels must be unique: {labels}")
    tasks = [(name, raw, tuple(algorithms), r, master_seed, train_fraction, significance)
             for name, raw in datasets for r in range(repeats)]
    results: dict[tuple[str, int], list[RunRecord] | Exception] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {(t[0], t[3]): pool.submit(_one_run, *t) for t in tasks}
            for key, fut in futures.items():
                try:
                    results[key] = fut.result()
                except Exception as exc:  # noqa: BLE001 - reported per dataset
                    results[key] = exc
    else:
        for t in tasks:
            try:
                results[(t[0], t[3])] = _one_run(*t)
            except Exception as exc:  # noqa: BLE001 - reported per dataset
                results[(t[0], t[3])] = exc

    failures: dict[str, str] = {}
    for (name, _), res in results.items():
        if isinstance(res, Exception) and name not in failures:
            failures[name] = f"{type(res).__name__}: {res}"
            log.warning("dataset %s failed: %s", name, res)
    records = [rec for (name, _), res in results.items() if name not in failures for rec in res]
    order = {lab: i for i, lab in enumerate(labels)}
    records.sort(key=lambda r: (r.dataset, order[r.algorithm], r.run_index))
    return BenchmarkRun(records, failures)


# ---------------------------------------------------------------- t-test

@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    p_value: float
    significant: bool
    direction: str | None  # "a", "b" or None


def paired_t_test(a, b, alpha: float = 0.05, train_frac: float = 0.7,
                  corrected: bool = True) -> TTestResult:
    """Two-tailed paired t-test over repeated-split accuracies.

    With ``corrected`` the variance is inflated by ``1/R + n_test/n_train`` to
    account for overlapping training sets; otherwise the plain ``1/R`` is used.
    Zero variance is significant exactly when the mean difference is nonzero.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    R = d.size
    if R < 2 or np.asarray(b).size != R:
        raise ValueError("need two equal-length samples of size >= 2")
    mean = float(d.mean())
    var = float(d.var(ddof=1))
    factor = 1.0 / R + ((1.0 - train_frac) / train_frac if corrected else 0.0)
    if var == 0.0 or math.isclose(var, 0.0, abs_tol=1e-300):
        if mean == 0.0:
            return TTestResult(0.0, 1.0, False, None)
        return TTestResult(math.copysign(math.inf, mean), 0.0, True, "a" if mean > 0 else "b")
    t = mean / math.sqrt(var * factor)
    p = float(2.0 * stats.t.sf(abs(t), R - 1))
    significant = p < alpha
    direction = ("a" if t > 0 else "b") if significant else None
    return TTestResult(float(t), p, significant, direction)


# ---------------------------------------------------------------- Wilcoxon

@lru_cache(maxsize=None)
def _signed_rank_counts(N: int) -> np.ndarray:
    counts = np.zeros(N * (N + 1) // 2 + 1)
    counts[0] = 1.0
    for k in range(1, N + 1):
        counts[k:] = counts[k:] + counts[:-k].copy()
    return counts


def wilcoxon_critical(N: int, alpha: float = 0.05) -> float | None:
    """Largest ``T`` with two-tailed ``P(min(R+, R-) <= T) <= alpha``.

    Exact null distribution up to N = 50, normal approximation above; None when
    no value is small enough (N <= 5 at alpha 0.05).
    """
    if N < 1:
        raise ValueError("N must be positive")
    if N > 50:
        mu = N * (N + 1) / 4
        sigma = math.sqrt(N * (N + 1) * (2 * N + 1) / 24)
        return math.floor(mu + stats.norm.ppf(alpha / 2) * sigma)
    cdf = np.cumsum(_signed_rank_counts(N)) / 2.0 ** N
    ok = np.flatnonzero(cdf <= alpha / 2 + 1e-15)
    return int(ok.max()) if ok.size else None


@dataclass(frozen=True)
class WilcoxonResult:
    r_plus: float
    r_minus: float
    critical: float | None
    significant: bool


def wilcoxon_signed_rank(acc_a, acc_b, critical: float | None = None, alpha: float = 0.05) -> WilcoxonResult:
    """Signed-rank sums over datasets.

    ``R+`` collects ranks where ``a`` is better. Ties in ``|d|`` share their
    average rank and zero differences are ranked and split evenly between the
    two sums, so ``R+ + R- = N(N+1)/2``.
    """
    d = np.asarray(acc_a, dtype=float) - np.asarray(acc_b, dtype=float)
    if d.size == 0:
        raise ValueError("no paired values")
    # rounding keeps equal printed differences tied
    d = np.round(d, 10)
    ranks = stats.rankdata(np.abs(d))
    zero = ranks[d == 0].sum() / 2.0
    r_plus = float(ranks[d > 0].sum() + zero)
    r_minus = float(ranks[d < 0].sum() + zero)
    if critical is None:
        critical = wilcoxon_critical(d.size, alpha)
    significant = critical is not None and min(r_plus, r_minus) <= critical
    return WilcoxonResult(r_plus, r_minus, critical, significant)


# ---------------------------------------------------------------- summaries

@dataclass
class EvalReport:
    algorithms: list[str]
    datasets: list[str]
    means: dict[str, dict[str, float]]
    averages: dict[str, float]
    reference: str
    gwl: dict[str, tuple[int, int | None, int | None]]
    wins: dict[str, dict[str, int]]
    significant_wins: dict[str, dict[str, int]] | None
    wilcoxon: dict[str, dict[str, float]]
    wilcoxon_significant: dict[str, dict[str, bool]]
    wilcoxon_critical: float | None
    excluded: list[str] = field(default_factory=list)
    buckets: list[dict] | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def means_from_records(records: Sequence[RunRecord]) -> dict[str, dict[str, float]]:
    acc: dict[str, dict[str, list[float]]] = {}
    for r in sorted(records, key=lambda r: (r.dataset, r.algorithm, r.run_index)):
        acc.setdefault(r.dataset, {}).setdefault(r.algorithm, []).append(r.accuracy)
    return {d: {a: float(np.mean(v)) for a, v in algs.items()} for d, algs in acc.items()}


def _runs_by_cell(records: Sequence[RunRecord]) -> dict[tuple[str, str], np.ndarray]:
    cells: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for r in records:
        cells.setdefault((r.dataset, r.algorithm), []).append((r.run_index, r.accuracy))
    return {k: np.array([acc for _, acc in sorted(v)]) for k, v in cells.items()}


def summarize(means: Mapping[str, Mapping[str, float]] | None = None, *,
              records: Sequence[RunRecord] | None = None,
              algorithms: Sequence[str] | None = None,
              reference: str = "ATFNB", compared: Sequence[str] | None = None,
              alpha: float = 0.05, train_frac: float = 0.7, wilcoxon_crit: float | None = None) -> EvalReport:
    """Tables of per-dataset means, G/W/L, pairwise t-test wins and Wilcoxon ranks.

    Pass either ``means`` (fixture mode, no per-run significance) or ``records``.
    ``G`` counts datasets where an algorithm is strictly best among ``compared``;
    ``W``/``L`` count datasets where it beats / loses to ``reference``.
    ``wins[row][col]`` counts datasets where ``col`` beats ``row`` and
    ``wilcoxon[row][col]`` is the rank sum in favour of ``row``.
    """
    if (means is None) == (records is None):
        raise ValueError("pass exactly one of means or records")
    runs = None
    if records is not None:
        means = means_from_records(records)
        runs = _runs_by_cell(records)
    if algorithms is None:
        seen: list[str] = []
        for row in means.values():
            seen.extend(a for a in row if a not in seen)
        algorithms = seen
    algorithms = list(algorithms)
    compared = [a for a in (compared or COMPARED) if a in algorithms] or algorithms

    datasets, excluded = [], []
    for name, row in means.items():
        if all(a in row and row[a] is not None and math.isfinite(row[a]) for a in algorithms):
            if runs is not None and len({len(runs[(name, a)]) for a in algorithms}) != 1:
                excluded.append(name)
                continue
            datasets.append(name)
        else:
            excluded.append(name)
    for name in excluded:
        warnings.warn(f"dataset {name!r} has missing cells and is excluded", stacklevel=2)
    table = {d: {a: float(means[d][a]) for a in algorithms} for d in datasets}
    averages = {a: float(np.mean([table[d][a] for d in datasets])) if datasets else math.nan for a in algorithms}

    best_of = {}
    for d in datasets:
        vals = {a: table[d][a] for a in compared}
        top = max(vals.values())
        winners = [a for a, v in vals.items() if v == top]
        best_of[d] = winners[0] if len(winners) == 1 else None
    gwl = {}
    for a in algorithms:
        g = sum(best_of[d] == a for d in datasets)
        if a == reference or reference not in algorithms:
            gwl[a] = (g, None, None)
        else:
            w = sum(table[d][a] > table[d][reference] for d in datasets)
            l_ = sum(table[d][a] < table[d][reference] for d in datasets)
            gwl[a] = (g, w, l_)

    wins = {r: {c: sum(table[d][c] > table[d][r] for d in datasets) for c in algorithms if c != r}
            for r in algorithms}
    sig = None
    if runs is not None:
        sig = {r: {} for r in algorithms}
        for r in algorithms:
            for c in algorithms:
                if c == r:
                    continue
                sig[r][c] = sum(
                    paired_t_test(runs[(d, c)], runs[(d, r)], alpha, train_frac).direction == "a"
                    for d in datasets)

    crit = wilcoxon_crit
    if crit is None and datasets:
        crit = wilcoxon_critical(len(datasets), alpha)
    wil: dict[str, dict[str, float]] = {r: {} for r in algorithms}
    wil_sig: dict[str, dict[str, bool]] = {r: {} for r in algorithms}
    if datasets:
        for r in algorithms:
            for c in algorithms:
                if c == r:
                    continue
                res = wilcoxon_signed_rank([table[d][r] for d in datasets], [table[d][c] for d in datasets], crit)
                wil[r][c] = res.r_plus
                wil_sig[r][c] = res.significant
    return EvalReport(algorithms, datasets, table, averages, reference, gwl, wins, sig, wil, wil_sig,
                      crit, excluded)


# ---------------------------------------------------------------- buckets

INSTANCE_SPLIT = 500
ATTRIBUTE_SPLIT = 15


def bucket_analysis(means: Mapping[str, Mapping[str, float]], meta: Mapping[str, Mapping[str, int]],
                    algorithm: str = "ATFNB", compared: Sequence[str] = COMPARED) -> list[dict]:
    """Share of datasets, per size bucket, where ``algorithm`` is strictly best.

    Buckets split on instances (< 500 / >= 500), attributes (< 15 / >= 15) and
    their four crossings. Empty buckets report ``None`` percentages.
    """
    lookup = {k.lower(): v for k, v in meta.items()}
    missing = [d for d in means if d.lower() not in lookup]
    if missing:
        raise KeyError(f"no metadata for datasets {missing}")

    def strictly_best(d):
        vals = {a: means[d][a] for a in compared}
        top = vals[algorithm]
        return all(top > v for a, v in vals.items() if a != algorithm)

    def small(d):
        return lookup[d.lower()]["instances"] < INSTANCE_SPLIT

    def narrow(d):
        return lookup[d.lower()]["attributes"] < ATTRIBUTE_SPLIT

    buckets = [
        ("instances", "<500", lambda d: small(d)),
        ("instances", ">=500", lambda d: not small(d)),
        ("attributes", "<15", lambda d: narrow(d)),
        ("attributes", ">=15", lambda d: not narrow(d)),
        ("instances&attributes", "<500&<15", lambda d: small(d) and narrow(d)),
        ("instances&attributes", "<500&>=15", lambda d: small(d) and not narrow(d)),
        ("instances&attributes", ">=500&<15", lambda d: not small(d) and narrow(d)),
        ("instances&attributes", ">=500&>=15", lambda d: not small(d) and not narrow(d)),
    ]
    rows = []
    for group, label, pred in buckets:
        members = [d for d in means if pred(d)]
        if members:
            share = 100.0 * sum(strictly_best(d) for d in members) / len(members)
            rows.append({"group": group, "bucket": label, "count": len(members),
                         "algorithm_pct": share, "competitors_pct": 100.0 - share})
        else:
            rows.append({"group": group, "bucket": label, "count": 0,
                         "algorithm_pct": None, "competitors_pct": None})
    return rows


# ---------------------------------------------------------------- fixtures

def fixture_path(name: str) -> Path:
    """Path of a packaged fixture: ``table5``, ``table9`` or ``table2_meta``."""
    return Path(str(resources.files("atfnb").joinpath("data", f"{name}.csv")))


def load_fixture(path) -> tuple[dict[str, dict[str, float]], list[str]]:
    """Read a ``dataset,<alg>,<alg>...`` accuracy table."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        algorithms = [c for c in reader.fieldnames if c != "dataset"]
        means = {}
        for row in reader:
            means[row["dataset"]] = {a: float(row[a]) if row[a].strip() else math.nan for a in algorithms}
    return means, algorithms


def load_meta(path) -> dict[str, dict[str, int]]:
    with open(path, newline="") as fh:
        return {row["dataset"]: {k: int(row[k]) for k in ("instances", "attributes", "classes") if k in row}
                for row in csv.DictReader(fh)}


# ---------------------------------------------------------------- text output

def _grid(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    fmt = lambda r: "  ".join(str(x).ljust(w) if i == 0 else str(x).rjust(w)  # noqa: E731
                              for i, (x, w) in enumerate(zip(r, widths)))
    line = "-" * len(fmt(header))
    return "\n".join([fmt(header), line] + [fmt(r) for r in rows])


def _num(x) -> str:
    return f"{x:g}" if isinstance(x, float) else str(x)


def render_text(report: EvalReport) -> str:
    algs = report.algorithms
    parts = ["Mean accuracy"]
    rows = [[d] + [f"{report.means[d][a]:.4f}" for a in algs] for d in report.datasets]
    rows.append(["Average"] + [f"{report.averages[a]:.4f}" for a in algs])
    rows.append(["G/W/L"] + ["/".join("" if v is None else str(v) for v in report.gwl[a]) for a in algs])
    parts.append(_grid(["dataset"] + algs, rows))

    parts.append("\nPairwise wins i(j): column beats row on i datasets, j of them significant")
    rows = []
    for r in algs:
        cells = []
        for c in algs:
            if c == r:
                cells.append("---")
            elif report.significant_wins is None:
                cells.append(str(report.wins[r][c]))
            else:
                cells.append(f"{report.wins[r][c]}({report.significant_wins[r][c]})")
        rows.append([r] + cells)
    parts.append(_grid(["algorithm"] + algs, rows))

    parts.append(f"\nWilcoxon rank sums (row better than column), critical value {report.wilcoxon_critical}")
    rows = [[r] + ["---" if c == r else _num(report.wilcoxon[r][c]) for c in algs] for r in algs]
    parts.append(_grid(["algorithm"] + algs, rows))

    parts.append("\nWilcoxon summary: o = row significantly better, * = column significantly better")
    rows = []
    for r in algs:
        cells = []
        for c in algs:
            if c == r:
                cells.append("---")
            elif report.wilcoxon_significant[r][c]:
                cells.append("o" if report.wilcoxon[r][c] > report.wilcoxon[c][r] else "*")
            else:
                cells.append("")
        rows.append([r] + cells)
    parts.append(_grid(["algorithm"] + algs, rows))

    if report.buckets:
        parts.append(f"\nShare of datasets where {report.reference} is best")
        rows = [[b["group"], b["bucket"], str(b["count"]),
                 "undefined" if b["algorithm_pct"] is None else f"{b['algorithm_pct']:.2f}",
                 "undefined" if b["competitors_pct"] is None else f"{b['competitors_pct']:.2f}"]
                for b in report.buckets]
        parts.append(_grid(["group", "bucket", "number", f"{report.reference} %", "competitors %"], rows))
    if report.excluded:
        parts.append(f"\nexcluded (incomplete): {', '.join(report.excluded)}")
    return "\n".join(parts) + "\n"
