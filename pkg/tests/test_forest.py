"""Tests for forest growth, voting, and serialization."""

import numpy as np
import pytest

from dgmml import (
    AxisSplit,
    ClassCounts,
    ConfigError,
    ContractError,
    Dataset,
    DimensionError,
    Forest,
    ForestConfig,
    Internal,
    Leaf,
    SingleClassError,
    TrainConfig,
    Tree,
    TreeStats,
    derive_seed,
    forest_from_dict,
    forest_to_dict,
    grow_forest,
    load_forest,
    predict_forest,
    predict_forest_many,
    predict_many,
    save_forest,
    train_tree,
    tree_to_dict,
)
from synthdata import gaussian_dataset


def constant_tree(label: int, d: int = 1) -> Tree:
    counts = ClassCounts(1, 0) if label == 1 else ClassCounts(0, 1)
    return Tree(Leaf(label, counts, 0), TrainConfig(), d, TreeStats(1, 1, 0, 0.0))


def hand_forest(labels) -> Forest:
    trees = tuple(constant_tree(v) for v in labels)
    cfg = ForestConfig(n_trees=len(labels), tree_config=TrainConfig(), seed=0, bootstrap=False)
    return Forest(trees, tuple(range(len(labels))), cfg)


def test_forest_config_validation():
    with pytest.raises(ConfigError):
        ForestConfig(n_trees=0)
    with pytest.raises(ConfigError):
        ForestConfig(n_trees=2.5)


def test_forest_shape_contracts():
    t = constant_tree(1)
    with pytest.raises(ContractError):
        Forest((t,), (0, 1), ForestConfig(n_trees=1))
    with pytest.raises(ContractError):
        Forest((t, constant_tree(-1, d=2)), (0, 1), ForestConfig(n_trees=2))


def test_vote_majority_and_tie():
    assert predict_forest(hand_forest([1, 1, -1]), [0.0]) == 1
    assert predict_forest(hand_forest([1, -1]), [0.0]) == -1
    assert predict_forest(hand_forest([-1, -1, 1]), [0.0]) == -1


def test_per_tree_seeds_are_derived_from_master():
    ds = gaussian_dataset(60, 3, separation=1.0, seed=1)
    forest = grow_forest(ds, ForestConfig(n_trees=5, seed=99))
    assert forest.per_tree_seeds == tuple(derive_seed(99, t) for t in range(5))


def test_forest_is_deterministic():
    ds = gaussian_dataset(80, 4, separation=0.8, seed=6)
    cfg = ForestConfig(n_trees=6, seed=11)
    a = grow_forest(ds, cfg)
    b = grow_forest(ds, cfg)
    assert forest_to_dict(a) == forest_to_dict(b)


def test_bootstrap_produces_distinct_trees():
    ds = gaussian_dataset(80, 4, separation=0.5, seed=6)
    forest = grow_forest(ds, ForestConfig(n_trees=4, seed=3))
    docs = [tree_to_dict(t) for t in forest.trees]
    assert any(doc != docs[0] for doc in docs[1:])


def test_no_bootstrap_full_mtry_degenerates_to_one_tree():
    ds = gaussian_dataset(70, 3, separation=0.7, seed=10)
    cfg = ForestConfig(
        n_trees=4,
        tree_config=TrainConfig(mtry="all"),
        seed=5,
        bootstrap=False,
    )
    forest = grow_forest(ds, cfg)
    # per-tree seeds differ but with every feature in play the structure cannot
    roots = [tree_to_dict(t)["root"] for t in forest.trees]
    assert all(root == roots[0] for root in roots[1:])
    # unanimous copies vote exactly like the single tree
    lone = train_tree(ds, TrainConfig(mtry="all"))
    assert np.array_equal(predict_forest_many(forest, ds.features),
                          predict_many(lone, ds.features))


def test_single_tree_forest_matches_tree():
    ds = gaussian_dataset(60, 3, separation=0.9, seed=14)
    cfg = ForestConfig(n_trees=1, tree_config=TrainConfig(mtry="all"), seed=7, bootstrap=False)
    forest = grow_forest(ds, cfg)
    lone = train_tree(ds, TrainConfig(mtry="all"))
    assert tree_to_dict(forest.trees[0])["root"] == tree_to_dict(lone)["root"]


def test_forest_rejects_single_class_data():
    X = np.zeros((4, 2))
    ds = Dataset(X, np.array([1, 1, 1, 1]), ("f0", "f1"))
    with pytest.raises(SingleClassError):
        grow_forest(ds, ForestConfig(n_trees=2))


def test_forest_dimension_errors():
    ds = gaussian_dataset(40, 3, separation=1.0, seed=2)
    forest = grow_forest(ds, ForestConfig(n_trees=2, seed=1))
    with pytest.raises(DimensionError):
        predict_forest(forest, [0.0, 0.0])
    with pytest.raises(DimensionError):
        predict_forest_many(forest, np.zeros((5, 4)))


def test_forest_fits_separable_data():
    ds = gaussian_dataset(100, 5, separation=2.0, seed=21)
    forest = grow_forest(ds, ForestConfig(n_trees=9, seed=4))
    acc = float(np.mean(predict_forest_many(forest, ds.features) == ds.labels))
    assert acc >= 0.99


def test_forest_round_trip(tmp_path):
    ds = gaussian_dataset(60, 4, separation=0.6, seed=17)
    forest = grow_forest(ds, ForestConfig(n_trees=5, seed=23))
    path = tmp_path / "forest.json"
    save_forest(forest, path)
    loaded = load_forest(path)
    assert forest_to_dict(loaded) == forest_to_dict(forest)
    assert loaded.per_tree_seeds == forest.per_tree_seeds
    probe = np.random.default_rng(1).standard_normal((30, 4))
    assert np.array_equal(predict_forest_many(loaded, probe),
                          predict_forest_many(forest, probe))


def test_forest_dict_round_trip_preserves_config():
    ds = gaussian_dataset(40, 2, separation=1.0, seed=5)
    cfg = ForestConfig(
        n_trees=3,
        tree_config=TrainConfig(criterion="gini", minleaf=2, mtry=1),
        seed=8,
        bootstrap=False,
    )
    forest = grow_forest(ds, cfg)
    again = forest_from_dict(forest_to_dict(forest))
    assert again.config == cfg
