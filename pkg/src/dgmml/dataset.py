"""Tabular binary-classification data: CSV loading, fold plans, resampling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, IoError, LabelError, ParseError

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, index: int) -> int:
    """Mix a master seed and a stream index into an independent 64-bit seed.

    splitmix64 finalizer applied to ``master + (index + 1) * golden``, so any
    number of streams can be derived in any order with stable results.
    """
    z = (master + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Dataset:
    """Immutable n x d feature matrix with labels in {-1, +1}.

    ``label_mapping`` records how raw label values were encoded when the
    dataset came from a file (lexicographically smaller raw value -> -1).
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    name: str = "dataset"
    label_mapping: dict[str, int] | None = None

    def __post_init__(self):
        features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise ContractError("features must be a non-empty 2-D matrix")
        if labels.shape != (features.shape[0],):
            raise ContractError("labels must have one entry per row")
        if not np.isfinite(features).all():
            raise ContractError("features must be finite")
        if not np.isin(labels, (-1, 1)).all():
            raise ContractError("labels must be -1 or +1")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != features.shape[1]:
            raise ContractError("feature_names must have one entry per column")
        if len(set(names)) != len(names):
            raise ContractError("feature names must be distinct")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def full_view(self) -> "NodeView":
        return NodeView(self, np.arange(self.n, dtype=np.intp))


@dataclass(frozen=True)
class NodeView:
    """A sorted multiset of row indices into a dataset.

    Duplicate indices carry bootstrap multiplicity (a row drawn twice counts
    twice in every statistic). Partitioning may transiently produce an empty
    view; the scoring operations reject those.
    """

    dataset: Dataset
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        if idx.ndim != 1:
            raise ContractError("indices must be a 1-D array")
        if idx.size:
            if idx[0] < 0 or int(idx.max()) >= self.dataset.n:
                raise ContractError("indices out of range")
            if idx.size > 1 and np.any(np.diff(idx) < 0):
                raise ContractError("indices must be sorted ascending")
        object.__setattr__(self, "indices", idx)

    @property
    def n(self) -> int:
        return int(self.indices.size)

    @cached_property
    def labels(self) -> np.ndarray:
        return self.dataset.labels[self.indices]

    @cached_property
    def pos_count(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def neg_count(self) -> int:
        return self.n - self.pos_count

    def feature_values(self, j: int) -> np.ndarray:
        """Values of feature ``j`` at this node, multiplicity included."""
        return self.dataset.features[self.indices, j]

    def feature_matrix(self, features) -> np.ndarray:
        """Sub-matrix restricted to this node's rows and the given columns."""
        cols = np.asarray(features, dtype=np.intp)
        return self.dataset.features[np.ix_(self.indices, cols)]


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every row to one of ``k`` cross-validation folds."""

    k: int
    fold_assignments: np.ndarray

    def __post_init__(self):
        assign = np.asarray(self.fold_assignments, dtype=np.intp)
        if self.k < 2:
            raise ContractError("k must be at least 2")
        present = np.unique(assign)
        if present.size != self.k or present[0] != 0 or present[-1] != self.k - 1:
            raise ContractError("every fold id in [0, k) must appear at least once")
        assign.setflags(write=False)
        object.__setattr__(self, "fold_assignments", assign)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_assignments != fold)


def load_csv(path, label_column: str | None = None) -> Dataset:
    """Load a comma-separated file with a header row into a Dataset.

    Every non-label cell must parse as a finite real. The label column is
    ``label_column`` when given, else the last column; its raw values must
    take exactly two distinct forms, mapped to -1 (lexicographically smaller)
    and +1.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise LabelError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if label_column is None:
        label_idx = len(header) - 1
    else:
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise ConfigError(f"no column named {label_column!r} in {path}") from None
    if len(header) < 2:
        raise LabelError(f"{path}: need at least one feature column and one label column")
    feature_cols = [j for j in range(len(header)) if j != label_idx]
    names = [header[j] for j in feature_cols]
    seen = set()
    for j, name in zip(feature_cols, names):
        if name in seen:
            raise ParseError(1, j + 1, f"duplicate feature name {name!r}")
        seen.add(name)

    data_rows = rows[1:]
    if not data_rows:
        raise LabelError(f"{path}: no data rows")
    features = np.empty((len(data_rows), len(feature_cols)), dtype=np.float64)
    raw_labels = []
    for i, row in enumerate(data_rows):
        line_no = i + 2
        if len(row) != len(header):
            raise ParseError(line_no, len(row) + 1, f"expected {len(header)} fields, got {len(row)}")
        for out_j, j in enumerate(feature_cols):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(line_no, j + 1, f"cell {cell!r} is not a number") from None
            if not math.isfinite(value):
                raise ParseError(line_no, j + 1, f"cell {cell!r} is not finite")
            features[i, out_j] = value
        raw_labels.append(row[label_idx].strip())

    distinct = sorted(set(raw_labels))
    if len(distinct) != 2:
        raise LabelError(f"{path}: expected exactly 2 distinct label values, got {len(distinct)}")
    mapping = {distinct[0]: -1, distinct[1]: 1}
    labels = np.array([mapping[v] for v in raw_labels], dtype=np.int64)
    return Dataset(features, labels, tuple(names), name=path.stem, label_mapping=mapping)


def stratified_kfold(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """Assign rows to k folds, keeping per-class counts within 1 across folds.

    Each class is shuffled and dealt round-robin; the dealing position rolls
    over between classes so overall fold sizes also differ by at most one.
    """
    if k < 2:
        raise ConfigError("k must be at least 2")
    if k > ds.n:
        raise ConfigError(f"k={k} exceeds sample count n={ds.n}")
    rng = np.random.default_rng(derive_seed(seed, 0))
    assign = np.empty(ds.n, dtype=np.intp)
    offset = 0
    for cls in (-1, 1):
        idx = np.flatnonzero(ds.labels == cls)
        rng.shuffle(idx)
        for i, row in enumerate(idx):
            assign[row] = (offset + i) % k
        offset = (offset + idx.size) % k
    return FoldPlan(k, assign)


def bootstrap_sample(ds: Dataset, seed: int) -> NodeView:
    """Draw n rows uniformly with replacement; duplicates keep multiplicity."""
    rng = np.random.default_rng(derive_seed(seed, 0))
    idx = np.sort(rng.integers(0, ds.n, size=ds.n))
    return NodeView(ds, idx)


def subsample_features(d: int, mtry: int, seed) -> np.ndarray:
    """Draw mtry distinct feature indices from [0, d) uniformly.

    ``seed`` may be an integer or an existing numpy Generator (the tree
    builder threads one generator through all of its nodes).
    """
    if mtry < 1 or mtry > d:
        raise ConfigError(f"mtry={mtry} must be within [1, {d}]")
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.default_rng(derive_seed(seed, 0))
    return rng.choice(d, size=mtry, replace=False)
