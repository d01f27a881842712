"""Tabular ingestion, imputation, ChiMerge discretization and stratified splits."""

from __future__ import annotations

import csv
import json
import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"
DEFAULT_MISSING = ("", "?")

# keeps chi-square finite when a column of the 2xK table is empty
CHI2_EPS = 1e-10


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


def natural_key(symbol: str):
    """Sort key ordering embedded integers numerically (``b2`` < ``b10``)."""
    return [(0, int(tok), "") if tok.isdigit() else (1, 0, tok)
            for tok in re.split(r"(\d+)", symbol) if tok != ""]


def _sorted_symbols(values: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(values), key=natural_key))


@dataclass(frozen=True)
class RawDataset:
    """Undiscretized table. Numeric cells are floats, categorical cells str, missing None.

    ``class_column`` is None only for unlabeled prediction input.
    """

    columns: tuple[tuple[str, str], ...]
    rows: tuple[tuple, ...]
    class_column: int | None

    def __post_init__(self):
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise DataError(f"row {i} has {len(row)} cells, expected {width}")
        if self.class_column is not None:
            if self.columns[self.class_column][1] != CATEGORICAL:
                raise DataError("class column must be categorical")
            if width < 2:
                raise DataError("need at least one non-class attribute")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.columns]

    @property
    def attribute_indices(self) -> list[int]:
        return [i for i in range(len(self.columns)) if i != self.class_column]

    @property
    def labels(self) -> list[str]:
        if self.class_column is None:
            raise DataError("dataset has no class column")
        return [row[self.class_column] for row in self.rows]

    def column(self, i: int) -> list:
        return [row[i] for row in self.rows]

    def subset(self, idx: Sequence[int]) -> "RawDataset":
        return replace(self, rows=tuple(self.rows[i] for i in idx))

    def has_missing(self) -> bool:
        return any(cell is None for row in self.rows for cell in row)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Discretized categorical table with integer-coded cells.

    ``X[i, j]`` indexes ``alphabets[j]`` and ``y[i]`` indexes ``classes``.
    Alphabet order is meaningful: for discretized attributes it is bin order,
    which is what the Pearson index relies on. ``y`` is None for unlabeled data.
    """

    attributes: tuple[str, ...]
    alphabets: tuple[tuple[str, ...], ...]
    classes: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray | None
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.int64)
        if X.ndim != 2:
            X = X.reshape(len(X), len(self.attributes))
        object.__setattr__(self, "X", X)
        if X.shape[1] != len(self.attributes) or len(self.alphabets) != len(self.attributes):
            raise DataError("attribute count mismatch")
        if len(self.attributes) < 1:
            raise DataError("need at least one attribute")
        for j, alphabet in enumerate(self.alphabets):
            if X.shape[0] and (X[:, j].min() < 0 or X[:, j].max() >= len(alphabet)):
                raise DataError(f"value outside alphabet of {self.attributes[j]!r}")
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.int64)
            object.__setattr__(self, "y", y)
            if y.shape != (X.shape[0],):
                raise DataError("label vector length mismatch")
            if len(self.classes) < 2:
                raise DataError("fewer than 2 classes")
            if y.size and (y.min() < 0 or y.max() >= len(self.classes)):
                raise DataError("label outside class set")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def K(self) -> int:
        return len(self.classes)

    @property
    def labels(self) -> np.ndarray:
        if self.y is None:
            raise DataError("dataset is unlabeled")
        return self.y

    def subset(self, idx: Sequence[int]) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, X=self.X[idx], y=None if self.y is None else self.y[idx])

    def symbol_rows(self) -> list[list[str]]:
        out = []
        for i in range(self.m):
            row = [self.alphabets[j][self.X[i, j]] for j in range(self.n)]
            if self.y is not None:
                row.append(self.classes[self.y[i]])
            out.append(row)
        return out

    @classmethod
    def from_symbols(cls, rows: Sequence[Sequence[str]], labels: Sequence[str],
                     attributes: Sequence[str] | None = None, classes: Sequence[str] | None = None,
                     name: str = "") -> "Dataset":
        """Build a dataset from symbol rows; alphabets are the natural-sorted distinct values."""
        n = len(rows[0]) if rows else len(attributes or ())
        attributes = tuple(attributes) if attributes is not None else tuple(f"A{j + 1}" for j in range(n))
        alphabets = tuple(_sorted_symbols(str(r[j]) for r in rows) for j in range(n))
        classes = tuple(classes) if classes is not None else _sorted_symbols(str(c) for c in labels)
        X = np.array([[alphabets[j].index(str(r[j])) for j in range(n)] for r in rows],
                     dtype=np.int64).reshape(len(rows), n)
        y = np.array([classes.index(str(c)) for c in labels], dtype=np.int64)
        return cls(attributes, alphabets, classes, X, y, name)


# ---------------------------------------------------------------- loading

def _parse_number(text: str):
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(path, class_column: str | int | None = -1,
             missing_marker: str | Sequence[str] = DEFAULT_MISSING,
             delimiter: str = ",", kinds: dict[str, str] | None = None) -> RawDataset:
    """Read a headered CSV into a RawDataset.

    A column is numeric when every non-missing cell parses as a number, unless
    ``kinds`` overrides it. ``class_column`` may be a header name, an index
    (negative allowed) or None for unlabeled input.
    """
    markers = {missing_marker} if isinstance(missing_marker, str) else set(missing_marker)
    try:
        with open(path, newline="") as fh:
            records = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not records:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in records[0]]
    body = records[1:]
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise DataError(f"{path}: ragged row {i + 2} ({len(r)} cells, header has {len(header)})")

    cidx = None
    if class_column is not None:
        if isinstance(class_column, int) or (isinstance(class_column, str) and class_column.lstrip("-").isdigit()
                                             and class_column not in header):
            cidx = int(class_column)
            if not -len(header) <= cidx < len(header):
                raise DataError(f"class column index {cidx} out of range")
            cidx %= len(header)
        elif class_column in header:
            cidx = header.index(class_column)
        else:
            raise DataError(f"class column {class_column!r} not found in header")

    cells = [[None if c.strip() in markers else c.strip() for c in r] for r in body]
    columns = []
    for j, name in enumerate(header):
        if j == cidx:
            columns.append((name, CATEGORICAL))
            continue
        kind = (kinds or {}).get(name)
        if kind is None:
            present = [row[j] for row in cells if row[j] is not None]
            kind = NUMERIC if present and all(_parse_number(v) is not None for v in present) else CATEGORICAL
        columns.append((name, kind))

    rows = []
    for r, row in enumerate(cells):
        out = []
        for j, cell in enumerate(row):
            if cell is not None and columns[j][1] == NUMERIC:
                value = _parse_number(cell)
                if value is None:
                    raise DataError(f"{path}: non-numeric value {cell!r} in numeric column {header[j]!r}")
                cell = value
            out.append(cell)
        rows.append(tuple(out))

    if cidx is not None:
        labels = [row[cidx] for row in rows]
        if any(lab is None for lab in labels):
            raise DataError("class column contains missing values")
        if len(set(labels)) < 2:
            raise DataError("fewer than 2 classes")
    return RawDataset(tuple(columns), tuple(rows), cidx)


# ---------------------------------------------------------------- imputation

def imputation_values(raw: RawDataset) -> dict[int, object]:
    """Column mean (numeric) or mode (categorical) over non-missing cells."""
    fill = {}
    for j in raw.attribute_indices:
        present = [v for v in raw.column(j) if v is not None]
        if not present:
            raise DataError(f"column {raw.columns[j][0]!r} is entirely missing")
        if raw.columns[j][1] == NUMERIC:
            fill[j] = float(np.mean(present))
        else:
            counts = Counter(present)
            top = max(counts.values())
            fill[j] = min((v for v, c in counts.items() if c == top), key=natural_key)
    return fill


def impute_missing(raw: RawDataset, fill: dict[int, object] | None = None) -> RawDataset:
    """Replace missing cells; pass ``fill`` from the training set to impute test data."""
    if raw.class_column is not None and any(v is None for v in raw.labels):
        raise DataError("class column contains missing values")
    if not raw.has_missing():
        return raw
    if fill is None:
        fill = imputation_values(raw)
    rows = tuple(tuple(fill[j] if (v is None and j in fill) else v for j, v in enumerate(row))
                 for row in raw.rows)
    return replace(raw, rows=rows)


# ---------------------------------------------------------------- discretization

@dataclass(frozen=True)
class DiscretizationMap:
    """Training-set cut points for numeric attributes and alphabets for categorical ones.

    ``cuts[name]`` is strictly increasing; bin ``b`` covers ``[cuts[b-1], cuts[b])``.
    ``target_bins`` is the class count the merge aimed for.
    """

    attributes: tuple[str, ...]
    cuts: dict[str, tuple[float, ...]]
    alphabets: dict[str, tuple[str, ...]]
    classes: tuple[str, ...]
    class_column: str
    target_bins: int
    significance: float = 0.05

    def bins(self, name: str) -> int:
        return len(self.cuts[name]) + 1

    def bin_symbols(self, name: str) -> tuple[str, ...]:
        return tuple(f"b{i}" for i in range(self.bins(name)))

    def alphabet(self, name: str) -> tuple[str, ...]:
        return self.bin_symbols(name) if name in self.cuts else self.alphabets[name]

    def to_dict(self) -> dict:
        attrs = {}
        for name in self.attributes:
            if name in self.cuts:
                attrs[name] = {"cuts": list(self.cuts[name]), "bins": self.bins(name)}
            else:
                attrs[name] = {"alphabet": list(self.alphabets[name])}
        return {"class_column": self.class_column, "classes": list(self.classes),
                "target_bins": self.target_bins, "significance": self.significance,
                "attributes": attrs}

    @classmethod
    def from_dict(cls, doc: dict) -> "DiscretizationMap":
        cuts, alphabets = {}, {}
        for name, spec in doc["attributes"].items():
            if "cuts" in spec:
                cuts[name] = tuple(float(c) for c in spec["cuts"])
            else:
                alphabets[name] = tuple(spec["alphabet"])
        return cls(tuple(doc["attributes"]), cuts, alphabets, tuple(doc["classes"]),
                   doc["class_column"], int(doc["target_bins"]), float(doc.get("significance", 0.05)))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "DiscretizationMap":
        return cls.from_dict(json.loads(Path(path).read_text()))


def chi_square(table: np.ndarray) -> float:
    """Pearson chi-square of a 2 x K contingency table of adjacent intervals."""
    table = np.asarray(table, dtype=float)
    rows = table.sum(axis=1, keepdims=True)
    cols = table.sum(axis=0, keepdims=True)
    expected = rows * cols / table.sum()
    expected = np.where(expected == 0, CHI2_EPS, expected)
    return float(((table - expected) ** 2 / expected).sum())


def _adjacent_chi2(counts: np.ndarray) -> np.ndarray:
    a, b = counts[:-1], counts[1:]
    ra = a.sum(axis=1, keepdims=True)
    rb = b.sum(axis=1, keepdims=True)
    col = a + b
    total = ra + rb
    ea = np.where(ra * col == 0, CHI2_EPS, ra * col / total)
    eb = np.where(rb * col == 0, CHI2_EPS, rb * col / total)
    return ((a - ea) ** 2 / ea + (b - eb) ** 2 / eb).sum(axis=1)


def chimerge_cuts(values: Sequence[float], labels: Sequence[int], n_classes: int,
                  target_bins: int | None = None) -> tuple[float, ...]:
    """Bottom-up ChiMerge on one numeric column.

    Starts from one interval per distinct value and merges the adjacent pair with
    the smallest chi-square (leftmost on ties) until ``target_bins`` intervals
    remain. Cut points sit halfway between neighbouring intervals.
    """
    target = n_classes if target_bins is None else target_bins
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    distinct, inverse = np.unique(values, return_inverse=True)
    counts = np.zeros((len(distinct), n_classes))
    np.add.at(counts, (inverse, labels), 1)
    lows = list(distinct)
    highs = list(distinct)
    counts = list(counts)
    while len(counts) > max(target, 1):
        stats = _adjacent_chi2(np.array(counts))
        k = int(np.argmin(stats))
        counts[k] = counts[k] + counts[k + 1]
        highs[k] = highs[k + 1]
        del counts[k + 1], lows[k + 1], highs[k + 1]
    return tuple(float((highs[i] + lows[i + 1]) / 2) for i in range(len(counts) - 1))


def chimerge_discretize(raw: RawDataset, significance: float = 0.05) -> tuple[Dataset, DiscretizationMap]:
    """Fit a DiscretizationMap on ``raw`` and return the discretized dataset with it.

    Every numeric attribute ends with ``min(K, distinct values)`` bins. The
    significance level is recorded but never stops merging before K bins.
    """
    if not 0 < significance < 1:
        raise ValueError("significance must lie in (0, 1)")
    if raw.class_column is None:
        raise DataError("discretization needs a labeled dataset")
    if raw.has_missing():
        raise DataError("impute missing values before discretizing")
    classes = _sorted_symbols(raw.labels)
    codes = np.array([classes.index(c) for c in raw.labels], dtype=np.int64)
    K = len(classes)
    cuts, alphabets = {}, {}
    for j in raw.attribute_indices:
        name, kind = raw.columns[j]
        if kind == NUMERIC:
            cuts[name] = chimerge_cuts(raw.column(j), codes, K)
        else:
            alphabets[name] = _sorted_symbols(raw.column(j))
    dmap = DiscretizationMap(tuple(raw.columns[j][0] for j in raw.attribute_indices), cuts, alphabets,
                             classes, raw.columns[raw.class_column][0], K, significance)
    return apply_discretization(raw, dmap), dmap


def apply_discretization(raw: RawDataset, dmap: DiscretizationMap, name: str = "") -> Dataset:
    """Encode ``raw`` with a fitted map.

    Numeric values go to the half-open bin containing them (ties at a cut go up).
    Categorical values, and class labels, unseen at fit time are appended after
    the fitted alphabet so existing codes stay stable. A column already holding
    this map's bin symbols is passed through, which makes the map idempotent.
    """
    names = raw.names
    attrs = [raw.columns[j][0] for j in raw.attribute_indices]
    for attr in attrs:
        if attr not in dmap.cuts and attr not in dmap.alphabets:
            raise DataError(f"attribute {attr!r} is not covered by the discretization map")
    missing = [a for a in dmap.attributes if a not in attrs]
    if missing:
        raise DataError(f"input lacks attributes {missing}")
    if raw.has_missing():
        raise DataError("impute missing values before discretizing")

    columns, alphabets = [], []
    for attr in dmap.attributes:
        j = names.index(attr)
        col = raw.column(j)
        if attr in dmap.cuts:
            symbols = dmap.bin_symbols(attr)
            if raw.columns[j][1] == NUMERIC:
                codes = np.searchsorted(np.asarray(dmap.cuts[attr]), np.asarray(col, dtype=float), side="right")
            elif set(col) <= set(symbols):
                codes = np.array([symbols.index(v) for v in col], dtype=np.int64)
            else:
                raise DataError(f"attribute {attr!r} is numeric in the map but categorical in the input")
            alphabet = symbols
        else:
            col = [v if isinstance(v, str) else _format_number(v) for v in col]
            fitted = dmap.alphabets[attr]
            extra = tuple(s for s in _sorted_symbols(col) if s not in set(fitted))
            alphabet = fitted + extra
            lookup = {s: i for i, s in enumerate(alphabet)}
            codes = np.array([lookup[v] for v in col], dtype=np.int64)
        columns.append(np.asarray(codes, dtype=np.int64))
        alphabets.append(alphabet)

    X = np.stack(columns, axis=1) if raw.rows else np.zeros((0, len(dmap.attributes)), dtype=np.int64)
    classes = dmap.classes
    y = None
    if raw.class_column is not None:
        labels = raw.labels
        classes = classes + tuple(s for s in _sorted_symbols(labels) if s not in set(classes))
        lookup = {s: i for i, s in enumerate(classes)}
        y = np.array([lookup[v] for v in labels], dtype=np.int64)
    return Dataset(tuple(dmap.attributes), tuple(alphabets), classes, X, y, name)


def _format_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(value)


def write_dataset_csv(data: Dataset, path, class_column: str = "class") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.attributes) + ([class_column] if data.y is not None else []))
        writer.writerows(data.symbol_rows())


# ---------------------------------------------------------------- splitting

@dataclass(frozen=True)
class Split:
    train_idx: np.ndarray
    test_idx: np.ndarray
    singleton_classes: tuple = field(default=())


def stratified_indices(labels: Sequence, train_fraction: float, seed: int) -> Split:
    """Seeded stratified partition of row indices.

    Per-class train counts are ``floor(fraction * count)`` plus largest-remainder
    top-ups so the global train size is ``round(fraction * m)``. Classes with a
    single instance go to train and are reported in ``singleton_classes``.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    classes, codes = np.unique(labels, return_inverse=True)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(labels))
    members = [perm[codes[perm] == k] for k in range(len(classes))]
    sizes = np.array([len(m) for m in members])
    exact = train_fraction * sizes
    take = np.floor(exact).astype(int)
    singletons = sizes == 1
    take[singletons] = 1
    goal = int(round(train_fraction * len(labels)))
    order = sorted(np.flatnonzero(~singletons), key=lambda k: (-(exact[k] - take[k]), k))
    for k in order:
        if take.sum() >= goal:
            break
        if take[k] < sizes[k]:
            take[k] += 1
    train = np.sort(np.concatenate([m[:t] for m, t in zip(members, take)]))
    test = np.sort(np.concatenate([m[t:] for m, t in zip(members, take)]))
    if len(train) == 0 or len(test) == 0:
        raise DataError("split leaves an empty partition")
    single = tuple(classes[singletons].tolist())
    if single:
        warnings.warn(f"classes with a single instance kept in train: {single}", stacklevel=2)
    return Split(train, test, single)


def split(data, train_fraction: float = 0.7, seed: int = 0):
    """Stratified split of a Dataset or RawDataset; returns ``(train, test, Split)``."""
    parts = stratified_indices(data.labels, train_fraction, seed)
    return data.subset(parts.train_idx), data.subset(parts.test_idx), parts
