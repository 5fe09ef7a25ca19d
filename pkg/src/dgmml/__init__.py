"""Decision trees and random forests built on a closed-form, metric-learned
splitting criterion, with exhaustive-search baselines and a benchmark CLI.

The headline criterion scores each candidate feature in closed form as
sqrt(between-class scatter / within-class scatter), replacing per-threshold
search with a single pass over the node; baselines (information gain, gain
ratio, Gini, inter-node Hellinger distance) use classic exhaustive midpoint
search. Both plug into the same induction loop, forest layer, and
cross-validation harness.
"""

from ._version import __version__
from .bench import (
    BenchRow,
    CvReport,
    StrategyRow,
    WeightImpurityRow,
    bench_speed,
    cli_main,
    compare_strategies,
    model_descriptor,
    run_cv,
    weight_vs_impurity,
)
from .criteria import (
    SEARCH_CRITERIA,
    SPLIT_STRATEGIES,
    W_MAX,
    ClassCounts,
    FeatureWeights,
    ScatterStats,
    SplitScore,
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
from .dataset import (
    Dataset,
    FoldPlan,
    NodeView,
    bootstrap_sample,
    derive_seed,
    load_csv,
    stratified_kfold,
    subsample_features,
)
from .errors import (
    ConfigError,
    ContractError,
    DegenerateError,
    DimensionError,
    Error,
    IoError,
    LabelError,
    NoValidSplitError,
    ParseError,
    SingleClassError,
)
from .forest import (
    Forest,
    ForestConfig,
    forest_from_dict,
    forest_to_dict,
    grow_forest,
    load_forest,
    predict_forest,
    predict_forest_many,
    save_forest,
)
from .tree import (
    TRAIN_CRITERIA,
    AxisSplit,
    Internal,
    Leaf,
    ObliqueSplit,
    Tree,
    TrainConfig,
    TreeStats,
    fit_oblique_node,
    grow,
    load_tree,
    partition,
    predict,
    predict_many,
    resolve_mtry,
    save_tree,
    train_tree,
    tree_from_dict,
    tree_stats,
    tree_to_dict,
)

__all__ = [
    "__version__",
    "AxisSplit", "BenchRow", "ClassCounts", "ConfigError", "ContractError",
    "CvReport", "Dataset", "DegenerateError", "DimensionError", "Error",
    "FeatureWeights", "FoldPlan", "Forest", "ForestConfig", "Internal",
    "IoError", "LabelError", "Leaf", "NoValidSplitError", "NodeView",
    "ObliqueSplit", "ParseError", "SEARCH_CRITERIA", "SPLIT_STRATEGIES",
    "ScatterStats", "SingleClassError", "SplitScore", "StrategyRow",
    "TRAIN_CRITERIA", "TrainConfig", "Tree", "TreeStats", "W_MAX",
    "WeightImpurityRow", "bench_speed", "best_exhaustive_split",
    "best_weighted_feature", "bootstrap_sample", "cli_main",
    "compare_strategies", "derive_seed", "entropy", "fit_oblique_node",
    "forest_from_dict", "forest_to_dict", "gain_ratio", "gini",
    "gini_reduction", "gmml_weights", "grow", "grow_forest", "hellinger_sq",
    "ihd", "info_gain", "load_csv", "load_forest", "load_tree",
    "misclassification_error", "model_descriptor", "partition", "predict",
    "predict_forest", "predict_forest_many", "predict_many", "resolve_mtry",
    "run_cv", "save_forest", "save_tree", "split_point", "stratified_kfold",
    "subsample_features", "train_tree", "tree_from_dict", "tree_stats",
    "tree_to_dict", "weight_vs_impurity",
]
