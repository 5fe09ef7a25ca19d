"""Node-scoring mathematics.

Two families live here. The impurity-reduction criteria (information gain,
gain ratio, Gini reduction, inter-node Hellinger distance) score a concrete
(feature, threshold) split and are maximised by exhaustive search over all
candidate thresholds. The metric-learned criterion instead assigns every
candidate feature a closed-form importance weight

    w_j = sqrt(between_scatter_j / within_scatter_j)

which minimises f(w_j) = w_j * within_j + between_j / w_j, the diagonal
trace objective trading within-class compactness against between-class
separation. Ranking features by w_j replaces the threshold search entirely;
the split point on the winning feature comes from one of three cheap
strategies (boundary-means midpoint, median, mean).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from math import fsum

import numpy as np

from .dataset import NodeView
from .errors import (
    ConfigError,
    ContractError,
    NoValidSplitError,
    SingleClassError,
)

# Stand-in weight for a perfect separator: a feature whose classes have zero
# within-class scatter but distinct means. Finite so weight vectors stay
# arithmetic-safe; ranking among several perfect separators uses their
# between-class scatter instead of this value.
W_MAX = sys.float_info.max

SPLIT_STRATEGIES = ("closest_means", "median", "mean")
SEARCH_CRITERIA = ("info_gain", "gain_ratio", "gini_reduction", "ihd")


@dataclass(frozen=True)
class ClassCounts:
    """Sample counts of the two classes at a node."""

    pos: int
    neg: int

    def __post_init__(self):
        if self.pos < 0 or self.neg < 0 or self.pos + self.neg < 1:
            raise ContractError("counts must be non-negative and sum to at least 1")

    @property
    def total(self) -> int:
        return self.pos + self.neg

    def majority_label(self) -> int:
        """Majority class, ties resolved to -1."""
        return 1 if self.pos > self.neg else -1


@dataclass(frozen=True)
class ScatterStats:
    """Per-candidate class means and scatter terms used by the weights."""

    candidate_indices: np.ndarray
    mean_pos: np.ndarray
    mean_neg: np.ndarray
    within_scatter: np.ndarray
    between_scatter: np.ndarray


@dataclass(frozen=True)
class FeatureWeights:
    """Importance weights for a candidate feature set.

    ``sentinel`` marks perfect separators (zero within-class scatter with
    distinct class means); their stored weight is W_MAX and they outrank all
    finite weights, ordered among themselves by ``between_scatter``.
    """

    weights: np.ndarray
    candidate_indices: np.ndarray
    sentinel: np.ndarray
    between_scatter: np.ndarray

    def ranking(self) -> list[int]:
        """Positions of positive-weight candidates, best first.

        Sentinels first (larger between-class scatter wins), then finite
        weights descending; all ties break toward the smaller original
        feature index. Zero-weight candidates are excluded.
        """
        positions = [p for p in range(len(self.weights)) if self.weights[p] > 0.0]
        return sorted(
            positions,
            key=lambda p: (
                not bool(self.sentinel[p]),
                -(self.between_scatter[p] if self.sentinel[p] else self.weights[p]),
                self.candidate_indices[p],
            ),
        )


@dataclass(frozen=True)
class SplitScore:
    """Best (feature, threshold) found by exhaustive search, with its score."""

    feature: int
    threshold: float
    score: float
    criterion: str


# ---------------------------------------------------------------------------
# Impurity measures on raw counts. These are the single source of arithmetic
# for both the tree builder and the test oracles, so tie comparisons stay
# bit-exact.
# ---------------------------------------------------------------------------

def _entropy_counts(pos: int, neg: int) -> float:
    total = pos + neg
    h = 0.0
    for c in (pos, neg):
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def _gini_counts(pos: int, neg: int) -> float:
    total = pos + neg
    p = pos / total
    q = neg / total
    return 1.0 - (p * p + q * q)


def _error_counts(pos: int, neg: int) -> float:
    return 1.0 - max(pos, neg) / (pos + neg)


def _hellinger_sq_probs(child: tuple[float, float], parent: tuple[float, float]) -> float:
    s = math.sqrt(child[0] * parent[0]) + math.sqrt(child[1] * parent[1])
    d = 1.0 - s
    return d if d > 0.0 else 0.0


def _info_gain_counts(pp: int, pn: int, lp: int, ln: int) -> float:
    n = pp + pn
    rp, rn = pp - lp, pn - ln
    g = _entropy_counts(pp, pn)
    if lp + ln:
        g -= (lp + ln) / n * _entropy_counts(lp, ln)
    if rp + rn:
        g -= (rp + rn) / n * _entropy_counts(rp, rn)
    return g if g > 0.0 else 0.0


def _gain_ratio_counts(pp: int, pn: int, lp: int, ln: int) -> float:
    n = pp + pn
    nl = lp + ln
    nr = n - nl
    split_info = -(nl / n * math.log2(nl / n) + nr / n * math.log2(nr / n))
    return _info_gain_counts(pp, pn, lp, ln) / split_info


def _gini_reduction_counts(pp: int, pn: int, lp: int, ln: int) -> float:
    n = pp + pn
    rp, rn = pp - lp, pn - ln
    g = _gini_counts(pp, pn)
    if lp + ln:
        g -= (lp + ln) / n * _gini_counts(lp, ln)
    if rp + rn:
        g -= (rp + rn) / n * _gini_counts(rp, rn)
    return g if g > 0.0 else 0.0


def _ihd_counts(pp: int, pn: int, lp: int, ln: int) -> float:
    n = pp + pn
    rp, rn = pp - lp, pn - ln
    parent = (pp / n, pn / n)
    v = 0.0
    nl = lp + ln
    if nl:
        v += nl / n * _hellinger_sq_probs((lp / nl, ln / nl), parent)
    nr = rp + rn
    if nr:
        v += nr / n * _hellinger_sq_probs((rp / nr, rn / nr), parent)
    return v


_COUNT_CRITERIA = {
    "info_gain": _info_gain_counts,
    "gain_ratio": _gain_ratio_counts,
    "gini_reduction": _gini_reduction_counts,
    "ihd": _ihd_counts,
}


def _check_split_counts(parent: ClassCounts, left: ClassCounts, right: ClassCounts):
    if left.pos + right.pos != parent.pos or left.neg + right.neg != parent.neg:
        raise ContractError("child counts do not add up to the parent's")


# ---------------------------------------------------------------------------
# Public impurity API
# ---------------------------------------------------------------------------

def entropy(c: ClassCounts) -> float:
    """Information entropy of a node, in bits; 0 log 0 counts as 0."""
    return _entropy_counts(c.pos, c.neg)


def gini(c: ClassCounts) -> float:
    """Gini index of a node; 0 on pure nodes, 0.5 on a uniform binary node."""
    return _gini_counts(c.pos, c.neg)


def misclassification_error(c: ClassCounts) -> float:
    """Fraction misclassified when the node predicts its majority class."""
    return _error_counts(c.pos, c.neg)


def info_gain(parent: ClassCounts, left: ClassCounts, right: ClassCounts) -> float:
    """Entropy reduction from splitting ``parent`` into the two children."""
    _check_split_counts(parent, left, right)
    return _info_gain_counts(parent.pos, parent.neg, left.pos, left.neg)


def gain_ratio(parent: ClassCounts, left: ClassCounts, right: ClassCounts) -> float:
    """Information gain normalised by the split information of the children."""
    _check_split_counts(parent, left, right)
    if left.total == 0 or right.total == 0:
        raise ContractError("gain ratio needs both children non-empty")
    return _gain_ratio_counts(parent.pos, parent.neg, left.pos, left.neg)


def gini_reduction(parent: ClassCounts, left: ClassCounts, right: ClassCounts) -> float:
    """Gini index reduction from splitting ``parent`` into the two children."""
    _check_split_counts(parent, left, right)
    return _gini_reduction_counts(parent.pos, parent.neg, left.pos, left.neg)


def hellinger_sq(child, parent) -> float:
    """Squared Hellinger distance between two binary class distributions."""
    dists = []
    for vec in (child, parent):
        p = (float(vec[0]), float(vec[1]))
        if p[0] < -1e-12 or p[1] < -1e-12 or abs(p[0] + p[1] - 1.0) > 1e-9:
            raise ContractError(f"{vec!r} is not a probability vector")
        dists.append(p)
    return _hellinger_sq_probs(dists[0], dists[1])


def ihd(parent: ClassCounts, left: ClassCounts, right: ClassCounts) -> float:
    """Size-weighted squared Hellinger distance of each child to the parent."""
    _check_split_counts(parent, left, right)
    return _ihd_counts(parent.pos, parent.neg, left.pos, left.neg)


# ---------------------------------------------------------------------------
# Closed-form feature weights
# ---------------------------------------------------------------------------

def gmml_weights(node: NodeView, candidates) -> tuple[FeatureWeights, ScatterStats]:
    """Closed-form importance weight of every candidate feature at a node.

    For candidate j with class means m1_j, m2_j, within-class scatter
    s_j = sum_c sum_i (x_ij - m_cj)^2 and between-class scatter
    b_j = (m1_j - m2_j)^2, the weight is sqrt(b_j / s_j), the unique
    minimiser of w * s_j + b_j / w over w > 0. Degenerate cases: s_j = 0
    with b_j > 0 marks a perfect separator (sentinel weight W_MAX); b_j = 0
    gives weight 0.
    """
    cand = np.asarray(candidates, dtype=np.intp)
    if cand.size == 0:
        raise ContractError("candidates must be non-empty")
    n_pos = node.pos_count
    if n_pos == 0 or n_pos == node.n:
        raise SingleClassError("weights need at least one sample of each class")

    X = node.feature_matrix(cand)
    pos_mask = node.labels == 1
    Xp = X[pos_mask]
    Xn = X[~pos_mask]

    mean_pos = Xp.mean(axis=0)
    mean_neg = Xn.mean(axis=0)
    # Columns constant within a class get an exact mean and zero scatter, so
    # the "perfect separator" case is not lost to accumulated rounding.
    const_p = Xp.min(axis=0) == Xp.max(axis=0)
    const_n = Xn.min(axis=0) == Xn.max(axis=0)
    mean_pos = np.where(const_p, Xp[0], mean_pos)
    mean_neg = np.where(const_n, Xn[0], mean_neg)

    scatter_p = ((Xp - mean_pos) ** 2).sum(axis=0)
    scatter_n = ((Xn - mean_neg) ** 2).sum(axis=0)
    scatter_p[const_p] = 0.0
    scatter_n[const_n] = 0.0
    within = scatter_p + scatter_n
    diff = mean_pos - mean_neg
    between = diff * diff

    weights = np.zeros(cand.size, dtype=np.float64)
    separated = between > 0.0
    regular = separated & (within > 0.0)
    with np.errstate(over="ignore"):
        weights[regular] = np.sqrt(between[regular] / within[regular])
    sentinel = separated & (within == 0.0)
    overflowed = regular & ~np.isfinite(weights)
    sentinel |= overflowed
    weights[sentinel] = W_MAX

    stats = ScatterStats(cand, mean_pos, mean_neg, within, between)
    return FeatureWeights(weights, cand, sentinel, between.copy()), stats


def best_weighted_feature(w: FeatureWeights) -> int:
    """Original index of the top-weighted candidate.

    Ties break toward the smaller original index; if every weight is zero the
    smallest candidate index is returned.
    """
    if len(w.weights) == 0:
        raise ContractError("weights must be non-empty")
    ranked = w.ranking()
    if not ranked:
        return int(w.candidate_indices.min())
    return int(w.candidate_indices[ranked[0]])


# ---------------------------------------------------------------------------
# Split points
# ---------------------------------------------------------------------------

def _window_mean(values: np.ndarray) -> float:
    # fsum over a sorted copy: exact, hence invariant to input order
    return fsum(np.sort(values)) / values.size


def split_point(values_pos, values_neg, strategy: str = "closest_means", h: int = 5) -> float:
    """Split threshold for one feature from the node's per-class values.

    closest_means: averages the h boundary values of each class (the largest
    of the low-mean class, the smallest of the high-mean class) and returns
    the midpoint of those two averages. median / mean: the node-wide median
    or mean of all values, class-blind.
    """
    if strategy not in SPLIT_STRATEGIES:
        raise ConfigError(f"unknown split strategy {strategy!r}")
    if h < 1:
        raise ConfigError("h must be at least 1")
    pos = np.asarray(values_pos, dtype=np.float64)
    neg = np.asarray(values_neg, dtype=np.float64)

    if strategy == "closest_means":
        if pos.size == 0 or neg.size == 0:
            raise ContractError("closest_means needs values from both classes")
        mean_p = fsum(pos) / pos.size
        mean_n = fsum(neg) / neg.size
        low, high = (pos, neg) if mean_p <= mean_n else (neg, pos)
        kl = min(h, low.size)
        kh = min(h, high.size)
        b1 = _window_mean(np.partition(low, low.size - kl)[low.size - kl:])
        b2 = _window_mean(np.partition(high, kh - 1)[:kh])
        return (b1 + b2) / 2.0

    values = np.concatenate([pos, neg])
    if values.size == 0:
        raise ContractError(f"{strategy} needs at least one value")
    if strategy == "median":
        return float(np.median(values))
    return fsum(values) / values.size


# ---------------------------------------------------------------------------
# Exhaustive threshold search (the baseline trees)
# ---------------------------------------------------------------------------

def _midpoint(a: float, b: float) -> float:
    # Midpoint of consecutive distinct sorted values; falls back to the lower
    # value if rounding would land on b (keeps both children non-empty).
    t = (a + b) / 2.0
    return t if t < b else a


def best_exhaustive_split(node: NodeView, candidates, criterion: str) -> SplitScore:
    """Best (feature, threshold) over all candidates and all midpoints.

    Thresholds are midpoints of consecutive distinct sorted values; scores
    compare by exact float equality, tied scores resolve to the smaller
    feature index, then the smaller threshold.
    """
    try:
        score_fn = _COUNT_CRITERIA[criterion]
    except KeyError:
        raise ConfigError(f"unknown search criterion {criterion!r}") from None
    if node.n < 2:
        raise ContractError("need at least 2 samples to split")
    total_pos = node.pos_count
    total_neg = node.neg_count
    if total_pos == 0 or total_neg == 0:
        raise ContractError("exhaustive search needs both classes present")

    best: SplitScore | None = None
    for j in sorted(int(j) for j in set(np.asarray(candidates).tolist())):
        values = node.feature_values(j)
        order = np.argsort(values, kind="stable")
        sv = values[order]
        is_pos = node.labels[order] == 1
        cum_pos = np.cumsum(is_pos)
        boundaries = np.flatnonzero(sv[:-1] != sv[1:])
        for i in boundaries:
            lp = int(cum_pos[i])
            ln = int(i) + 1 - lp
            score = score_fn(total_pos, total_neg, lp, ln)
            if best is None or score > best.score:
                threshold = _midpoint(float(sv[i]), float(sv[i + 1]))
                best = SplitScore(j, threshold, score, criterion)
    if best is None:
        raise NoValidSplitError("all candidate features are constant in this node")
    return best
