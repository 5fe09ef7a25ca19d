"""Decision-tree induction, prediction, and JSON serialization.

One induction routine covers all criteria. At every node it draws mtry
candidate features, then either ranks them by the closed-form metric weights
(criterion "dgmml", optionally combining the candidates into an oblique
projection) or runs the exhaustive threshold search (the baseline criteria).
Samples with test value <= threshold go left. Degenerate situations never
raise out of induction; they resolve to majority leaves.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .criteria import (
    SPLIT_STRATEGIES,
    ClassCounts,
    best_exhaustive_split,
    gmml_weights,
    split_point,
)
from .dataset import Dataset, NodeView, subsample_features
from .errors import (
    ConfigError,
    ContractError,
    DegenerateError,
    DimensionError,
    IoError,
    NoValidSplitError,
)

TRAIN_CRITERIA = ("dgmml", "info_gain", "gain_ratio", "gini", "ihd")

# TrainConfig tag -> exhaustive-search scoring tag
_SEARCH_TAG = {
    "info_gain": "info_gain",
    "gain_ratio": "gain_ratio",
    "gini": "gini_reduction",
    "ihd": "ihd",
}


@dataclass(frozen=True)
class AxisSplit:
    """Axis-parallel test: sample goes left iff x[feature] <= threshold."""

    feature: int
    threshold: float


@dataclass(frozen=True)
class ObliqueSplit:
    """Linear test: sample goes left iff weights . x <= threshold.

    ``weights`` has one entry per dataset feature; non-candidate features
    hold zero.
    """

    weights: np.ndarray
    threshold: float


@dataclass(frozen=True)
class Leaf:
    label: int
    counts: ClassCounts
    depth: int


@dataclass
class Internal:
    """Binary internal node; children are attached as induction proceeds."""

    split: AxisSplit | ObliqueSplit
    left: "Leaf | Internal | None" = None
    right: "Leaf | Internal | None" = None


@dataclass(frozen=True)
class TrainConfig:
    """Induction settings shared by single trees and forest members."""

    criterion: str = "dgmml"
    oblique: bool = False
    mtry: int | str = "all"
    minleaf: int = 1
    split_strategy: str = "closest_means"
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.criterion not in TRAIN_CRITERIA:
            raise ConfigError(f"unknown criterion {self.criterion!r}")
        if self.oblique and self.criterion != "dgmml":
            raise ConfigError("oblique splits require the dgmml criterion")
        if isinstance(self.mtry, str):
            if self.mtry not in ("all", "sqrt"):
                raise ConfigError(f"mtry must be an integer, 'all', or 'sqrt', got {self.mtry!r}")
        elif not isinstance(self.mtry, int) or self.mtry < 1:
            raise ConfigError(f"mtry must be a positive integer, got {self.mtry!r}")
        if not isinstance(self.minleaf, int) or self.minleaf < 1:
            raise ConfigError(f"minleaf must be a positive integer, got {self.minleaf!r}")
        if self.split_strategy not in SPLIT_STRATEGIES:
            raise ConfigError(f"unknown split strategy {self.split_strategy!r}")
        if self.max_depth is not None and (not isinstance(self.max_depth, int) or self.max_depth < 0):
            raise ConfigError(f"max_depth must be None or a non-negative integer, got {self.max_depth!r}")


@dataclass(frozen=True)
class TreeStats:
    node_count: int
    leaf_count: int
    max_depth: int
    train_time_ms: float


@dataclass(frozen=True)
class Tree:
    root: Leaf | Internal
    config: TrainConfig
    d: int
    stats: TreeStats


def resolve_mtry(mtry: int | str, d: int) -> int:
    """Concrete candidate count: 'all' -> d, 'sqrt' -> ceil(sqrt(d))."""
    if mtry == "all":
        return d
    if mtry == "sqrt":
        return int(np.ceil(np.sqrt(d)))
    if mtry < 1 or mtry > d:
        raise ConfigError(f"mtry={mtry} must be within [1, {d}]")
    return int(mtry)


def partition(node: NodeView, split: AxisSplit | ObliqueSplit) -> tuple[NodeView, NodeView]:
    """Split a node's samples on the test value; <= threshold goes left.

    Either side may be empty; the caller decides what that means.
    """
    if isinstance(split, AxisSplit):
        values = node.feature_values(split.feature)
    else:
        values = node.dataset.features[node.indices] @ split.weights
    mask = values <= split.threshold
    return (
        NodeView(node.dataset, node.indices[mask]),
        NodeView(node.dataset, node.indices[~mask]),
    )


def fit_oblique_node(node: NodeView, candidates, strategy: str = "closest_means") -> ObliqueSplit:
    """Linear split from the metric weights of the candidate features.

    The weight vector is embedded into full feature space (zeros outside the
    candidates); perfect-separator sentinels are clamped to 10x the largest
    finite candidate weight (1.0 if there is none) so the projection stays
    finite. The threshold applies ``strategy`` to the projected values, with
    class sides given by the projected class means.
    """
    fw, _ = gmml_weights(node, candidates)
    if not np.any(fw.weights > 0.0):
        raise DegenerateError("all candidate weights are zero")

    w = fw.weights.copy()
    if fw.sentinel.any():
        finite = w[~fw.sentinel & (w > 0.0)]
        w[fw.sentinel] = 10.0 * finite.max() if finite.size else 1.0

    full = np.zeros(node.dataset.d, dtype=np.float64)
    full[fw.candidate_indices] = w
    full.setflags(write=False)

    p = node.dataset.features[node.indices] @ full
    is_pos = node.labels == 1
    b = split_point(p[is_pos], p[~is_pos], strategy)
    return ObliqueSplit(full, float(b))


def _leaf(counts: ClassCounts, depth: int, label: int | None = None) -> Leaf:
    return Leaf(counts.majority_label() if label is None else label, counts, depth)


def _choose_split(node: NodeView, candidates: np.ndarray, config: TrainConfig):
    """Pick this node's split, or None to make it a leaf.

    dgmml ranks candidates by weight and walks down the ranking past any
    whose threshold would leave a child empty; a non-empty but undersized
    child stops induction here (minleaf), as does an all-zero weight vector.
    Baselines take the exhaustive-search winner, subject to the same minleaf
    rule.
    """
    minleaf = config.minleaf
    if config.criterion != "dgmml":
        try:
            found = best_exhaustive_split(node, candidates, _SEARCH_TAG[config.criterion])
        except NoValidSplitError:
            return None
        split = AxisSplit(found.feature, found.threshold)
        left, right = partition(node, split)
        if left.n < minleaf or right.n < minleaf:
            return None
        return split, left, right

    if config.oblique:
        try:
            split = fit_oblique_node(node, candidates, config.split_strategy)
        except DegenerateError:
            return None
        left, right = partition(node, split)
        if left.n < minleaf or right.n < minleaf:
            return None
        return split, left, right

    fw, _ = gmml_weights(node, candidates)
    is_pos = node.labels == 1
    for pos in fw.ranking():
        j = int(fw.candidate_indices[pos])
        values = node.feature_values(j)
        b = split_point(values[is_pos], values[~is_pos], config.split_strategy)
        split = AxisSplit(j, float(b))
        left, right = partition(node, split)
        if left.n == 0 or right.n == 0:
            continue
        if left.n < minleaf or right.n < minleaf:
            return None
        return split, left, right
    return None


def grow(node: NodeView, config: TrainConfig) -> Leaf | Internal:
    """Induce a subtree on the node's samples.

    Leaves appear on purity, on |node| < 2*minleaf, at the depth cap, and on
    every degenerate-split outcome. Built iteratively so deep chains cannot
    exhaust the interpreter stack; candidate draws happen in parent, left
    subtree, right subtree order, which keeps the random stream equal to the
    recursive formulation's.
    """
    if node.n == 0:
        raise ContractError("cannot grow a tree on an empty node")
    d = node.dataset.d
    mtry = resolve_mtry(config.mtry, d)
    rng = np.random.default_rng(config.seed)
    all_features = np.arange(d, dtype=np.intp)

    root: Leaf | Internal | None = None
    # each entry: (view, depth, parent Internal or None, attribute to attach to)
    stack: list = [(node, 0, None, "")]
    while stack:
        view, depth, parent, side = stack.pop()
        counts = ClassCounts(view.pos_count, view.neg_count)

        built: Leaf | Internal
        if counts.pos == 0 or counts.neg == 0:
            built = _leaf(counts, depth, 1 if counts.pos else -1)
        elif view.n < 2 * config.minleaf:
            built = _leaf(counts, depth)
        elif config.max_depth is not None and depth >= config.max_depth:
            built = _leaf(counts, depth)
        else:
            candidates = all_features if mtry == d else subsample_features(d, mtry, rng)
            chosen = _choose_split(view, candidates, config)
            if chosen is None:
                built = _leaf(counts, depth)
            else:
                split, left, right = chosen
                built = Internal(split)
                stack.append((right, depth + 1, built, "right"))
                stack.append((left, depth + 1, built, "left"))

        if parent is None:
            root = built
        else:
            setattr(parent, side, built)

    return root


def train_tree(data: Dataset | NodeView, config: TrainConfig) -> Tree:
    """Grow a full Tree on a dataset (or a re-weighted view of one)."""
    view = data.full_view() if isinstance(data, Dataset) else data
    start = time.perf_counter()
    root = grow(view, config)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    n_nodes, n_leaves, depth = _structure(root)
    return Tree(root, config, view.dataset.d, TreeStats(n_nodes, n_leaves, depth, elapsed_ms))


def _structure(root: Leaf | Internal) -> tuple[int, int, int]:
    nodes = leaves = max_depth = 0
    stack = [(root, 0)]
    while stack:
        n, depth = stack.pop()
        nodes += 1
        max_depth = max(max_depth, depth)
        if isinstance(n, Leaf):
            leaves += 1
        else:
            stack.append((n.left, depth + 1))
            stack.append((n.right, depth + 1))
    return nodes, leaves, max_depth


def tree_stats(tree: Tree) -> dict:
    """Structural summary recomputed from the nodes themselves."""
    nodes, leaves, depth = _structure(tree.root)
    return {"node_count": nodes, "leaf_count": leaves, "max_depth": depth}


def predict(tree: Tree, x) -> int:
    """Route one sample to a leaf and return its label."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != tree.d:
        raise DimensionError(f"expected a vector of length {tree.d}, got shape {x.shape}")
    node = tree.root
    while isinstance(node, Internal):
        s = node.split
        if isinstance(s, AxisSplit):
            value = x[s.feature]
        else:
            value = float(s.weights @ x)
        node = node.left if value <= s.threshold else node.right
    return node.label


def predict_many(tree: Tree, X) -> np.ndarray:
    """Labels for each row of an (n, d) matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.d:
        raise DimensionError(f"expected an (n, {tree.d}) matrix, got shape {X.shape}")
    return np.array([predict(tree, row) for row in X], dtype=np.int64)


# ---------------------------------------------------------------------------
# JSON serialization. Nested node records; floats go through repr, which
# round-trips binary64 exactly.
# ---------------------------------------------------------------------------

def config_to_dict(config: TrainConfig) -> dict:
    return {
        "criterion": config.criterion,
        "oblique": config.oblique,
        "mtry": config.mtry,
        "minleaf": config.minleaf,
        "split_strategy": config.split_strategy,
        "max_depth": config.max_depth,
        "seed": config.seed,
    }


def config_from_dict(doc: dict) -> TrainConfig:
    try:
        return TrainConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad train-config document: {exc}") from None


def _node_to_dict(root: Leaf | Internal) -> dict:
    def shell(n):
        if isinstance(n, Leaf):
            return {
                "type": "leaf",
                "label": n.label,
                "counts": [n.counts.pos, n.counts.neg],
            }
        if isinstance(n.split, AxisSplit):
            return {
                "type": "axis",
                "feature": n.split.feature,
                "threshold": n.split.threshold,
            }
        return {
            "type": "oblique",
            "weights": [float(w) for w in n.split.weights],
            "threshold": n.split.threshold,
        }

    top = shell(root)
    stack = [(root, top)]
    while stack:
        n, doc = stack.pop()
        if isinstance(n, Internal):
            doc["left"] = shell(n.left)
            doc["right"] = shell(n.right)
            stack.append((n.left, doc["left"]))
            stack.append((n.right, doc["right"]))
    return top


def _node_from_dict(doc: dict, d: int) -> Leaf | Internal:
    def shell(rec, depth):
        kind = rec.get("type")
        if kind == "leaf":
            pos, neg = rec["counts"]
            return Leaf(int(rec["label"]), ClassCounts(int(pos), int(neg)), depth)
        if kind == "axis":
            return Internal(AxisSplit(int(rec["feature"]), float(rec["threshold"])))
        if kind == "oblique":
            w = np.asarray(rec["weights"], dtype=np.float64)
            w.setflags(write=False)
            return Internal(ObliqueSplit(w, float(rec["threshold"])))
        raise ConfigError(f"bad tree document: unknown node type {kind!r}")

    root = shell(doc, 0)
    stack = [(doc, root, 0)]
    while stack:
        rec, n, depth = stack.pop()
        if isinstance(n, Internal):
            if isinstance(n.split, AxisSplit) and not 0 <= n.split.feature < d:
                raise ConfigError("bad tree document: split feature out of range")
            n.left = shell(rec["left"], depth + 1)
            n.right = shell(rec["right"], depth + 1)
            stack.append((rec["left"], n.left, depth + 1))
            stack.append((rec["right"], n.right, depth + 1))
    return root


def tree_to_dict(tree: Tree) -> dict:
    # Documents carry structure only; timings are a property of one training
    # run, not of the model, and keeping them out makes saved bytes a pure
    # function of (data, config).
    return {
        "kind": "tree",
        "config": config_to_dict(tree.config),
        "d": tree.d,
        "root": _node_to_dict(tree.root),
    }


def tree_from_dict(doc: dict) -> Tree:
    try:
        config = config_from_dict(doc["config"])
        d = int(doc["d"])
        root = _node_from_dict(doc["root"], d)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad tree document: {exc}") from None
    nodes, leaves, depth = _structure(root)
    return Tree(root, config, d, TreeStats(nodes, leaves, depth, 0.0))


class _DeepJson:
    """Raise the recursion limit while (de)serializing deeply nested trees."""

    def __init__(self, depth_hint: int):
        self.limit = max(sys.getrecursionlimit(), 2000 + 8 * depth_hint)

    def __enter__(self):
        self.saved = sys.getrecursionlimit()
        sys.setrecursionlimit(self.limit)

    def __exit__(self, *exc):
        sys.setrecursionlimit(self.saved)


def save_tree(tree: Tree, path):
    doc = tree_to_dict(tree)
    with _DeepJson(tree.stats.max_depth):
        text = json.dumps(doc, indent=None, separators=(",", ":"))
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def load_tree(path) -> Tree:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    with _DeepJson(len(text) // 40):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad tree document: {exc}") from None
    return tree_from_dict(doc)
