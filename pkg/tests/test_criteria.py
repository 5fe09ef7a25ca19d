"""Unit tests for the scoring mathematics.

The two oracles defined up top are deliberately independent of the library's
internals: a golden-section minimizer for the per-feature objective
f(w) = w * within + between / w, and a brute-force (feature x midpoint)
enumerator for the exhaustive search. Both recompute scatter from scratch in
plain Python.
"""

import math

import numpy as np
import pytest

from dgmml import (
    ClassCounts,
    ConfigError,
    ContractError,
    Dataset,
    NoValidSplitError,
    SingleClassError,
    W_MAX,
    best_exhaustive_split,
    best_weighted_feature,
    entropy,
    gain_ratio,
    gini,
    gini_reduction,
    gmml_weights,
    hellinger_sq,
    ihd,
    info_gain,
    misclassification_error,
    split_point,
)
from oracles import enumerate_best_split, golden_min_weight, one_feature_node, scatter_oracle
from synthdata import names, random_node


# ---------------------------------------------------------------------------
# Impurity measures: pinned values
# ---------------------------------------------------------------------------

def test_entropy_values():
    assert entropy(ClassCounts(5, 5)) == 1.0
    assert entropy(ClassCounts(10, 0)) == 0.0
    assert entropy(ClassCounts(0, 10)) == 0.0
    assert entropy(ClassCounts(3, 1)) == 0.8112781244591328


def test_info_gain_values():
    assert info_gain(ClassCounts(5, 5), ClassCounts(5, 0), ClassCounts(0, 5)) == 1.0
    assert info_gain(ClassCounts(5, 5), ClassCounts(3, 3), ClassCounts(2, 2)) == 0.0
    got = info_gain(ClassCounts(4, 4), ClassCounts(3, 1), ClassCounts(1, 3))
    assert got == pytest.approx(0.18872187554086717, abs=1e-15)


def test_gain_ratio_values():
    assert gain_ratio(ClassCounts(5, 5), ClassCounts(5, 0), ClassCounts(0, 5)) == 1.0
    assert gain_ratio(ClassCounts(5, 5), ClassCounts(3, 3), ClassCounts(2, 2)) == 0.0
    # equal-size children make split information exactly 1 bit
    ig = info_gain(ClassCounts(4, 4), ClassCounts(3, 1), ClassCounts(1, 3))
    gr = gain_ratio(ClassCounts(4, 4), ClassCounts(3, 1), ClassCounts(1, 3))
    assert gr == ig


def test_gini_values():
    assert gini(ClassCounts(5, 5)) == 0.5
    assert gini(ClassCounts(7, 0)) == 0.0
    assert gini(ClassCounts(3, 1)) == 0.375


def test_gini_reduction_values():
    assert gini_reduction(ClassCounts(5, 5), ClassCounts(5, 0), ClassCounts(0, 5)) == 0.5
    assert gini_reduction(ClassCounts(5, 5), ClassCounts(3, 3), ClassCounts(2, 2)) == 0.0
    assert gini_reduction(ClassCounts(4, 4), ClassCounts(3, 1), ClassCounts(1, 3)) == 0.125


def test_misclassification_values():
    assert misclassification_error(ClassCounts(5, 5)) == 0.5
    assert misclassification_error(ClassCounts(9, 0)) == 0.0
    assert misclassification_error(ClassCounts(3, 1)) == 0.25


def test_hellinger_values():
    assert hellinger_sq((0.3, 0.7), (0.3, 0.7)) == 0.0
    assert hellinger_sq((1.0, 0.0), (0.0, 1.0)) == 1.0
    got = hellinger_sq((0.75, 0.25), (0.5, 0.5))
    assert got == pytest.approx(1.0 - (math.sqrt(0.375) + math.sqrt(0.125)), abs=1e-15)


def test_hellinger_symmetry_and_zero_iff_equal():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = rng.random()
        q = rng.random()
        a, b = (p, 1 - p), (q, 1 - q)
        assert hellinger_sq(a, b) == hellinger_sq(b, a)
        if p != q:
            assert hellinger_sq(a, b) > 0.0


def test_hellinger_rejects_non_distributions():
    with pytest.raises(ContractError):
        hellinger_sq((0.5, 0.6), (0.5, 0.5))
    with pytest.raises(ContractError):
        hellinger_sq((-0.1, 1.1), (0.5, 0.5))


def test_ihd_values():
    assert ihd(ClassCounts(10, 6), ClassCounts(5, 3), ClassCounts(5, 3)) == 0.0
    pure = ihd(ClassCounts(5, 5), ClassCounts(5, 0), ClassCounts(0, 5))
    assert pure == pytest.approx(1.0 - math.sqrt(0.5), abs=1e-15)
    mixed = ihd(ClassCounts(4, 4), ClassCounts(3, 1), ClassCounts(1, 3))
    # both children sit at the same distance from the parent
    assert mixed == hellinger_sq((0.75, 0.25), (0.5, 0.5))


def test_count_consistency_is_enforced():
    bad = (ClassCounts(4, 4), ClassCounts(3, 1), ClassCounts(2, 3))
    for fn in (info_gain, gain_ratio, gini_reduction, ihd):
        with pytest.raises(ContractError):
            fn(*bad)


def test_gain_ratio_rejects_empty_child():
    with pytest.raises(ContractError):
        gain_ratio(ClassCounts(4, 4), ClassCounts(4, 4), ClassCounts(0, 0))


def test_class_counts_invariants():
    with pytest.raises(ContractError):
        ClassCounts(0, 0)
    with pytest.raises(ContractError):
        ClassCounts(-1, 2)
    assert ClassCounts(3, 3).majority_label() == -1
    assert ClassCounts(4, 3).majority_label() == 1


def test_impurity_bounds_and_nonnegative_reductions():
    rng = np.random.default_rng(11)
    for _ in range(200):
        pp, pn = int(rng.integers(0, 20)), int(rng.integers(0, 20))
        if pp + pn < 2 or pp == 0 and pn == 0:
            continue
        parent = ClassCounts(pp, pn)
        assert 0.0 <= entropy(parent) <= 1.0
        assert 0.0 <= gini(parent) <= 0.5
        assert 0.0 <= misclassification_error(parent) <= 0.5
        lp = int(rng.integers(0, pp + 1))
        ln = int(rng.integers(0, pn + 1))
        if lp + ln == 0 or lp + ln == pp + pn:
            continue
        left = ClassCounts(lp, ln)
        right = ClassCounts(pp - lp, pn - ln)
        assert info_gain(parent, left, right) >= 0.0
        assert info_gain(parent, left, right) <= entropy(parent) + 1e-15
        assert gini_reduction(parent, left, right) >= 0.0
        assert gain_ratio(parent, left, right) >= 0.0
        assert ihd(parent, left, right) >= 0.0


# ---------------------------------------------------------------------------
# Closed-form weights
# ---------------------------------------------------------------------------

def test_gmml_weights_worked_example():
    node = one_feature_node([0.0, 2.0], [4.0, 6.0])
    fw, stats = gmml_weights(node, [0])
    assert fw.weights[0] == 2.0
    assert stats.within_scatter[0] == 4.0
    assert stats.between_scatter[0] == 16.0
    assert stats.mean_pos[0] == 1.0 and stats.mean_neg[0] == 5.0


def test_gmml_weights_zero_when_means_coincide():
    node = one_feature_node([0.0, 2.0], [0.0, 2.0])
    fw, _ = gmml_weights(node, [0])
    assert fw.weights[0] == 0.0
    assert not fw.sentinel[0]


def test_gmml_weights_sentinel_on_perfect_separator():
    node = one_feature_node([0.0, 0.0], [1.0, 1.0])
    fw, stats = gmml_weights(node, [0])
    assert fw.weights[0] == W_MAX
    assert fw.sentinel[0]
    assert stats.within_scatter[0] == 0.0
    assert stats.between_scatter[0] == 1.0
    assert math.isfinite(W_MAX)


def test_gmml_weights_constant_feature_is_zero():
    node = one_feature_node([3.0, 3.0], [3.0, 3.0])
    fw, stats = gmml_weights(node, [0])
    assert fw.weights[0] == 0.0
    assert stats.within_scatter[0] == 0.0 and stats.between_scatter[0] == 0.0


def test_gmml_weights_rejects_pure_node_and_empty_candidates():
    X = np.array([[1.0], [2.0]])
    ds = Dataset(X, np.array([1, 1]), ("f0",))
    with pytest.raises(SingleClassError):
        gmml_weights(ds.full_view(), [0])
    node = one_feature_node([1.0], [2.0])
    with pytest.raises(ContractError):
        gmml_weights(node, [])


def test_gmml_weights_candidate_subset_keeps_original_indices():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((12, 5))
    y = np.array([1, -1] * 6)
    node = Dataset(X, y, names(5)).full_view()
    fw, _ = gmml_weights(node, [4, 1])
    assert list(fw.candidate_indices) == [4, 1]
    full, _ = gmml_weights(node, [0, 1, 2, 3, 4])
    assert fw.weights[0] == full.weights[4]
    assert fw.weights[1] == full.weights[1]


def test_best_weighted_feature_examples():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((40, 10))
    y = np.where(rng.random(40) < 0.5, 1, -1)
    y[0], y[1] = 1, -1
    # argmax by construction: amplify the class gap on original feature 7
    X[y == 1, 7] += 10.0
    node = Dataset(X, y, names(10)).full_view()
    fw, _ = gmml_weights(node, [3, 7, 9])
    assert best_weighted_feature(fw) == 7


def test_best_weighted_feature_tie_and_sentinel_rules():
    # duplicate columns tie exactly; smaller original index must win
    pos = np.array([0.0, 2.0])
    neg = np.array([4.0, 6.0])
    X = np.column_stack([np.concatenate([pos, neg])] * 3)
    y = np.array([1, 1, -1, -1])
    node = Dataset(X, y, names(3)).full_view()
    fw, _ = gmml_weights(node, [2, 1])
    assert best_weighted_feature(fw) == 1

    # a sentinel outranks any finite weight
    X2 = np.column_stack([
        np.array([0.0, 2.0, 4.0, 6.0]),   # finite weight 2.0
        np.array([0.0, 0.0, 1.0, 1.0]),   # perfect separator
    ])
    node2 = Dataset(X2, y, names(2)).full_view()
    fw2, _ = gmml_weights(node2, [0, 1])
    assert best_weighted_feature(fw2) == 1

    # two sentinels: larger between-class scatter wins
    X3 = np.column_stack([
        np.array([0.0, 0.0, 1.0, 1.0]),
        np.array([0.0, 0.0, 9.0, 9.0]),
    ])
    node3 = Dataset(X3, y, names(2)).full_view()
    fw3, _ = gmml_weights(node3, [0, 1])
    assert best_weighted_feature(fw3) == 1

    # all zero weights: smallest candidate index
    X4 = np.column_stack([
        np.array([0.0, 2.0, 0.0, 2.0]),
        np.array([1.0, 3.0, 1.0, 3.0]),
    ])
    node4 = Dataset(X4, y, names(2)).full_view()
    fw4, _ = gmml_weights(node4, [1, 0])
    assert list(fw4.ranking()) == []
    assert best_weighted_feature(fw4) == 0


def test_closed_form_matches_golden_section_small():
    rng = np.random.default_rng(17)
    for _ in range(50):
        node = random_node(rng, 4, 30, 1, 6)
        fw, stats = gmml_weights(node, list(range(node.dataset.d)))
        for p in range(node.dataset.d):
            w = fw.weights[p]
            if w == 0.0 or fw.sentinel[p]:
                continue
            within, between = scatter_oracle(
                node.feature_values(p), node.labels)
            w_star = golden_min_weight(within, between)
            assert w == pytest.approx(w_star, rel=1e-6)
            # analytic stationarity
            assert abs(within - between / (w * w)) <= 1e-9


def test_objective_convexity_at_optimum():
    rng = np.random.default_rng(23)
    for _ in range(30):
        node = random_node(rng, 4, 30, 1, 4)
        fw, stats = gmml_weights(node, list(range(node.dataset.d)))
        for p in range(node.dataset.d):
            w = fw.weights[p]
            if w == 0.0 or fw.sentinel[p]:
                continue
            s = float(stats.within_scatter[p])
            b = float(stats.between_scatter[p])
            f_opt = w * s + b / w
            for eps in (0.01, 0.1, 0.5):
                assert (w * (1 + eps)) * s + b / (w * (1 + eps)) >= f_opt
                assert (w * (1 - eps)) * s + b / (w * (1 - eps)) >= f_opt


def test_finite_difference_matches_analytic_derivative():
    rng = np.random.default_rng(29)
    for _ in range(20):
        node = random_node(rng, 6, 30, 1, 3)
        fw, stats = gmml_weights(node, list(range(node.dataset.d)))
        for p in range(node.dataset.d):
            w = fw.weights[p]
            if w == 0.0 or fw.sentinel[p]:
                continue
            s = float(stats.within_scatter[p])
            b = float(stats.between_scatter[p])
            for point in (0.5 * w, 2.0 * w):
                analytic = s - b / (point * point)
                h = point * 1e-6
                fd = ((point + h) * s + b / (point + h)
                      - (point - h) * s - b / (point - h)) / (2 * h)
                assert fd == pytest.approx(analytic, rel=1e-5)


def test_weight_affine_invariance_and_negation():
    rng = np.random.default_rng(31)
    for _ in range(30):
        node = random_node(rng, 5, 40, 2, 6)
        ds = node.dataset
        fw, _ = gmml_weights(node, list(range(ds.d)))
        a = rng.uniform(0.1, 10.0, size=ds.d)
        c = rng.uniform(-10.0, 10.0, size=ds.d)
        transformed = Dataset(ds.features * a + c, ds.labels, ds.feature_names)
        fw2, _ = gmml_weights(transformed.full_view(), list(range(ds.d)))
        np.testing.assert_allclose(fw2.weights, fw.weights, rtol=1e-12)
        negated = Dataset(-ds.features, ds.labels, ds.feature_names)
        fw3, _ = gmml_weights(negated.full_view(), list(range(ds.d)))
        assert np.array_equal(fw3.weights, fw.weights)
        assert best_weighted_feature(fw) == best_weighted_feature(fw2)
        assert best_weighted_feature(fw) == best_weighted_feature(fw3)


# ---------------------------------------------------------------------------
# Split points
# ---------------------------------------------------------------------------

def test_split_point_closest_means_worked_example():
    pos = np.arange(1.0, 7.0)        # mean 3.5, the low class
    neg = np.arange(7.0, 12.0)
    assert split_point(pos, neg, "closest_means", h=5) == 6.5


def test_split_point_closest_means_small_classes_use_all_values():
    assert split_point([0.0, 2.0], [4.0, 6.0], "closest_means", h=5) == 3.0


def test_split_point_closest_means_orientation_flip():
    # same data with classes swapped picks the same boundary
    pos = np.arange(1.0, 7.0)
    neg = np.arange(7.0, 12.0)
    assert split_point(neg, pos, "closest_means") == 6.5


def test_split_point_median_and_mean():
    assert split_point([1.0, 2.0, 3.0], [4.0, 5.0], "median") == 3.0
    assert split_point([2.0], [4.0], "mean") == 3.0
    assert split_point([1.0, 2.0], [3.0, 4.0], "median") == 2.5


def test_split_point_permutation_invariance():
    rng = np.random.default_rng(37)
    for _ in range(30):
        pos = rng.standard_normal(int(rng.integers(1, 20)))
        neg = rng.standard_normal(int(rng.integers(1, 20)))
        for strategy in ("closest_means", "median", "mean"):
            base = split_point(pos, neg, strategy)
            shuffled = split_point(rng.permutation(pos), rng.permutation(neg), strategy)
            assert shuffled == base


def test_split_point_errors():
    with pytest.raises(ConfigError):
        split_point([1.0], [2.0], "nonsense")
    with pytest.raises(ConfigError):
        split_point([1.0], [2.0], "closest_means", h=0)
    with pytest.raises(ContractError):
        split_point([], [2.0], "closest_means")
    with pytest.raises(ContractError):
        split_point([], [], "median")


# ---------------------------------------------------------------------------
# Exhaustive search
# ---------------------------------------------------------------------------

def test_best_exhaustive_split_worked_example():
    node = one_feature_node([1.0, 2.0], [8.0, 9.0])
    s = best_exhaustive_split(node, [0], "gini_reduction")
    assert (s.feature, s.threshold, s.score) == (0, 5.0, 0.5)
    assert s.criterion == "gini_reduction"


def test_best_exhaustive_split_all_constant():
    X = np.full((6, 2), 3.0)
    y = np.array([1, 1, 1, -1, -1, -1])
    node = Dataset(X, y, names(2)).full_view()
    with pytest.raises(NoValidSplitError):
        best_exhaustive_split(node, [0, 1], "gini_reduction")


def test_best_exhaustive_split_tie_prefers_smaller_feature_then_threshold():
    # two identical columns: any split score ties across features
    col = np.array([1.0, 2.0, 8.0, 9.0])
    X = np.column_stack([col, col])
    y = np.array([1, 1, -1, -1])
    node = Dataset(X, y, names(2)).full_view()
    s = best_exhaustive_split(node, [1, 0], "info_gain")
    assert s.feature == 0

    # one feature, symmetric label pattern: thresholds 1.5 and 2.5 tie
    node2 = one_feature_node([1.0, 3.0], [2.0])
    s2 = best_exhaustive_split(node2, [0], "gini_reduction")
    assert s2.threshold == 1.5


def test_best_exhaustive_split_unknown_criterion():
    node = one_feature_node([1.0, 2.0], [8.0, 9.0])
    with pytest.raises(ConfigError):
        best_exhaustive_split(node, [0], "gini")


def test_best_exhaustive_split_children_nonempty_even_for_adjacent_floats():
    lo = 1.0
    hi = np.nextafter(1.0, 2.0)
    node = one_feature_node([lo], [hi])
    s = best_exhaustive_split(node, [0], "gini_reduction")
    values = node.feature_values(0)
    left = values <= s.threshold
    assert 0 < left.sum() < len(values)


def test_exhaustive_matches_enumeration_oracle():
    score_fns = {
        "info_gain": info_gain,
        "gain_ratio": gain_ratio,
        "gini_reduction": gini_reduction,
        "ihd": ihd,
    }
    rng = np.random.default_rng(41)
    for _ in range(60):
        node = random_node(rng, 4, 50, 1, 6)
        candidates = list(range(node.dataset.d))
        for tag, fn in score_fns.items():
            try:
                got = best_exhaustive_split(node, candidates, tag)
            except NoValidSplitError:
                assert enumerate_best_split(node, candidates, fn) is None
                continue
            _, j, thr, score = enumerate_best_split(node, candidates, fn)
            assert (got.feature, got.threshold, got.score) == (j, thr, score)
