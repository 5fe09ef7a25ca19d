"""Random forests over any tree criterion.

Variance reduction comes from two independently toggleable sources: bagging
(bootstrap resampling per tree) and random subspaces (per-node candidate
draws, inherited from the tree config's mtry). Prediction is an unweighted
majority vote. Each tree owns a seed derived from the master seed and its
index, so results do not depend on construction order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import Dataset, bootstrap_sample, derive_seed
from .errors import ConfigError, ContractError, DimensionError, IoError, SingleClassError
from .tree import (
    Tree,
    TrainConfig,
    _DeepJson,
    config_from_dict,
    config_to_dict,
    predict,
    train_tree,
    tree_from_dict,
    tree_to_dict,
)


def _default_tree_config() -> TrainConfig:
    return TrainConfig(mtry="sqrt")


@dataclass(frozen=True)
class ForestConfig:
    """Ensemble settings; member trees default to sqrt-sized candidate draws."""

    n_trees: int = 20
    tree_config: TrainConfig = field(default_factory=_default_tree_config)
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if not isinstance(self.n_trees, int) or self.n_trees < 1:
            raise ConfigError(f"n_trees must be a positive integer, got {self.n_trees!r}")


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    per_tree_seeds: tuple[int, ...]
    config: ForestConfig

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "per_tree_seeds", tuple(int(s) for s in self.per_tree_seeds))
        if len(self.trees) != self.config.n_trees:
            raise ContractError("forest must hold exactly n_trees trees")
        if len(self.per_tree_seeds) != self.config.n_trees:
            raise ContractError("forest must hold one seed per tree")
        if len({t.d for t in self.trees}) > 1:
            raise ContractError("all trees must share the feature count")

    @property
    def d(self) -> int:
        return self.trees[0].d


def grow_forest(ds: Dataset, config: ForestConfig) -> Forest:
    """Grow n_trees independent trees, each on its own derived seed.

    Tree t bootstraps (when enabled) with seed_t = derive_seed(seed, t) and
    grows with a further-derived node seed, so the resample stream and the
    candidate-draw stream never alias.
    """
    if ds.labels.min() == ds.labels.max():
        raise SingleClassError("forest training needs both classes present")
    trees = []
    seeds = []
    for t in range(config.n_trees):
        seed_t = derive_seed(config.seed, t)
        seeds.append(seed_t)
        view = bootstrap_sample(ds, seed_t) if config.bootstrap else ds.full_view()
        tree_cfg = replace(config.tree_config, seed=derive_seed(seed_t, 1))
        trees.append(train_tree(view, tree_cfg))
    return Forest(tuple(trees), tuple(seeds), config)


def predict_forest(forest: Forest, x) -> int:
    """Unweighted majority vote over the trees; a tie votes -1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != forest.d:
        raise DimensionError(f"expected a vector of length {forest.d}, got shape {x.shape}")
    total = sum(predict(tree, x) for tree in forest.trees)
    return 1 if total > 0 else -1


def predict_forest_many(forest: Forest, X) -> np.ndarray:
    """Majority-vote labels for each row of an (n, d) matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.d:
        raise DimensionError(f"expected an (n, {forest.d}) matrix, got shape {X.shape}")
    return np.array([predict_forest(forest, row) for row in X], dtype=np.int64)


def forest_config_to_dict(config: ForestConfig) -> dict:
    return {
        "n_trees": config.n_trees,
        "tree_config": config_to_dict(config.tree_config),
        "seed": config.seed,
        "bootstrap": config.bootstrap,
    }


def forest_config_from_dict(doc: dict) -> ForestConfig:
    try:
        tree_cfg = config_from_dict(doc["tree_config"])
        return ForestConfig(
            n_trees=int(doc["n_trees"]),
            tree_config=tree_cfg,
            seed=int(doc["seed"]),
            bootstrap=bool(doc["bootstrap"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad forest-config document: {exc}") from None


def forest_to_dict(forest: Forest) -> dict:
    return {
        "kind": "forest",
        "config": forest_config_to_dict(forest.config),
        "per_tree_seeds": list(forest.per_tree_seeds),
        "trees": [tree_to_dict(t) for t in forest.trees],
    }


def forest_from_dict(doc: dict) -> Forest:
    try:
        config = forest_config_from_dict(doc["config"])
        trees = tuple(tree_from_dict(t) for t in doc["trees"])
        seeds = tuple(int(s) for s in doc["per_tree_seeds"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad forest document: {exc}") from None
    return Forest(trees, seeds, config)


def save_forest(forest: Forest, path):
    deepest = max(t.stats.max_depth for t in forest.trees)
    with _DeepJson(deepest):
        text = json.dumps(forest_to_dict(forest), separators=(",", ":"))
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def load_forest(path) -> Forest:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    with _DeepJson(len(text) // 40):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad forest document: {exc}") from None
    return forest_from_dict(doc)
