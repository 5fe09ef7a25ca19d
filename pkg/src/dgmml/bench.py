"""Experiment harness: cross-validation, timing, weight analysis, CLI.

Reports are pure functions of (input files, flags, seed); anything measured
from the wall clock is kept out of default emissions so repeated runs are
byte-identical. Timing, where requested, is construction time only, taken as
the median of 5 repetitions per fold.

The command-line interface lives here too (``cli_main``); the ``dgmml``
console script in ``cli.py`` is a thin wrapper around it.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import statistics
import sys
import time
from dataclasses import dataclass, replace
from math import fsum
from pathlib import Path

import numpy as np

from ._version import __version__
from .criteria import SPLIT_STRATEGIES, ClassCounts, gini, gmml_weights, split_point
from .dataset import Dataset, NodeView, derive_seed, load_csv, stratified_kfold
from .errors import (
    ConfigError,
    ContractError,
    DegenerateError,
    DimensionError,
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
    predict_forest_many,
)
from .tree import (
    TRAIN_CRITERIA,
    TrainConfig,
    Tree,
    _DeepJson,
    predict_many,
    train_tree,
    tree_from_dict,
    tree_to_dict,
)

TIMING_REPS = 5
# per-criterion means under this many milliseconds sit too close to the
# timer floor for ratios to mean much
RESOLUTION_FLOOR_MS = 1.0


@dataclass(frozen=True)
class CvReport:
    """Cross-validation outcome for one (dataset, model) pair.

    ``fold_confusions`` rows are (tp, fn, fp, tn) with +1 as the positive
    class, so every fold accuracy can be recounted from its confusion row.
    """

    dataset: str
    model: str
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    train_time_ms: float
    seed: int
    fold_confusions: tuple[tuple[int, int, int, int], ...]
    fold_train_times_ms: tuple[float, ...]

    def __post_init__(self):
        k = len(self.fold_accuracies)
        if k == 0 or len(self.fold_confusions) != k or len(self.fold_train_times_ms) != k:
            raise ContractError("per-fold fields must align")
        if self.mean_accuracy != fsum(self.fold_accuracies) / k:
            raise ContractError("mean_accuracy must be the mean of fold_accuracies")

    @property
    def k(self) -> int:
        return len(self.fold_accuracies)


@dataclass(frozen=True)
class WeightImpurityRow:
    rank: int
    feature: int
    weight: float
    post_split_impurity: float


@dataclass(frozen=True)
class BenchRow:
    criterion: str
    mean_train_time_ms: float
    ratio_vs_dgmml: float
    below_resolution: bool


@dataclass(frozen=True)
class StrategyRow:
    strategy: str
    mean_accuracy: float
    per_dataset: tuple[tuple[str, float], ...]


def model_descriptor(config: TrainConfig | ForestConfig) -> str:
    """Compact model tag, e.g. 'dgmml-dt', 'dgmml-oblique-dt', 'gini-rf20'."""
    if isinstance(config, ForestConfig):
        base, kind = config.tree_config, f"rf{config.n_trees}"
    else:
        base, kind = config, "dt"
    parts = [base.criterion]
    if base.oblique:
        parts.append("oblique")
    parts.append(kind)
    return "-".join(parts)


def _confusion(preds: np.ndarray, truth: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(np.count_nonzero((preds == 1) & (truth == 1)))
    fn = int(np.count_nonzero((preds == -1) & (truth == 1)))
    fp = int(np.count_nonzero((preds == 1) & (truth == -1)))
    tn = int(np.count_nonzero((preds == -1) & (truth == -1)))
    return tp, fn, fp, tn


def _sub_dataset(ds: Dataset, rows: np.ndarray) -> Dataset:
    return Dataset(ds.features[rows], ds.labels[rows], ds.feature_names, ds.name)


def run_cv(
    ds: Dataset,
    config: TrainConfig | ForestConfig,
    k: int = 10,
    seed: int = 0,
    reps: int = TIMING_REPS,
) -> CvReport:
    """Stratified k-fold cross-validation of one model on one dataset.

    The replicable seed governs fold assignment and per-fold training seeds;
    the seed inside ``config`` is overridden fold by fold. Per-fold training
    time is the median of ``reps`` identical constructions.
    """
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    plan = stratified_kfold(ds, k, seed)
    accuracies: list[float] = []
    confusions: list[tuple[int, int, int, int]] = []
    fold_times: list[float] = []

    for fold in range(k):
        train_rows = plan.train_indices(fold)
        test_rows = plan.test_indices(fold)
        fold_seed = derive_seed(seed, fold + 1)

        if isinstance(config, ForestConfig):
            fold_cfg = replace(config, seed=fold_seed)
            sub = _sub_dataset(ds, train_rows)
            times = []
            for _ in range(reps):
                start = time.perf_counter()
                model: Forest | Tree = grow_forest(sub, fold_cfg)
                times.append((time.perf_counter() - start) * 1e3)
            preds = predict_forest_many(model, ds.features[test_rows])
        else:
            fold_cfg = replace(config, seed=fold_seed)
            view = NodeView(ds, train_rows)
            times = []
            for _ in range(reps):
                model = train_tree(view, fold_cfg)
                times.append(model.stats.train_time_ms)
            preds = predict_many(model, ds.features[test_rows])

        truth = ds.labels[test_rows]
        tp, fn, fp, tn = _confusion(preds, truth)
        accuracies.append((tp + tn) / test_rows.size)
        confusions.append((tp, fn, fp, tn))
        fold_times.append(statistics.median(times))

    return CvReport(
        dataset=ds.name,
        model=model_descriptor(config),
        fold_accuracies=tuple(accuracies),
        mean_accuracy=fsum(accuracies) / k,
        train_time_ms=fsum(fold_times) / k,
        seed=seed,
        fold_confusions=tuple(confusions),
        fold_train_times_ms=tuple(fold_times),
    )


def bench_speed(
    ds: Dataset,
    criteria,
    k: int = 3,
    seed: int = 0,
    base: TrainConfig | None = None,
    reps: int = TIMING_REPS,
) -> list[BenchRow]:
    """Construction-time comparison of single trees across criteria.

    All criteria share the fold plan, mtry, and minleaf. Ratios are against
    the dgmml row when present, else against the first row (so a length-1
    table reports 1.0).
    """
    names = list(criteria)
    if not names:
        raise ConfigError("criteria list must be non-empty")
    for name in names:
        if name not in TRAIN_CRITERIA:
            raise ConfigError(f"unknown criterion {name!r}")
    if base is None:
        base = TrainConfig(mtry="sqrt")
    plan = stratified_kfold(ds, k, seed)

    means: dict[str, float] = {}
    for name in names:
        cfg = replace(base, criterion=name, oblique=base.oblique and name == "dgmml")
        fold_times = []
        for fold in range(k):
            view = NodeView(ds, plan.train_indices(fold))
            fold_cfg = replace(cfg, seed=derive_seed(seed, fold + 1))
            times = [train_tree(view, fold_cfg).stats.train_time_ms for _ in range(reps)]
            fold_times.append(statistics.median(times))
        means[name] = fsum(fold_times) / k

    baseline = means.get("dgmml", means[names[0]])
    return [
        BenchRow(
            criterion=name,
            mean_train_time_ms=means[name],
            ratio_vs_dgmml=means[name] / baseline if baseline > 0 else float("nan"),
            below_resolution=means[name] < RESOLUTION_FLOOR_MS,
        )
        for name in names
    ]


def weight_vs_impurity(ds: Dataset, strategy: str = "closest_means") -> list[WeightImpurityRow]:
    """Rank all features by weight; record each one's post-split Gini.

    For every feature, the full dataset is split at that feature's own split
    point and the size-weighted Gini of the two sides is recorded (an empty
    side leaves the parent's Gini unchanged). Zero-weight features follow the
    ranked ones in index order.
    """
    view = ds.full_view()
    fw, _ = gmml_weights(view, np.arange(ds.d, dtype=np.intp))
    ranked = fw.ranking()
    order = ranked + [p for p in range(ds.d) if fw.weights[p] == 0.0]

    labels = view.labels
    is_pos = labels == 1
    rows = []
    for rank, p in enumerate(order, start=1):
        j = int(fw.candidate_indices[p])
        values = view.feature_values(j)
        b = split_point(values[is_pos], values[~is_pos], strategy)
        mask = values <= b
        impurity = 0.0
        n = values.size
        for side in (mask, ~mask):
            cnt = int(np.count_nonzero(side))
            if cnt:
                side_pos = int(np.count_nonzero(is_pos & side))
                impurity += cnt / n * gini(ClassCounts(side_pos, cnt - side_pos))
        rows.append(WeightImpurityRow(rank, j, float(fw.weights[p]), impurity))
    return rows


def compare_strategies(
    datasets,
    seed: int = 0,
    k: int = 10,
    mtry: int | str = "sqrt",
) -> list[StrategyRow]:
    """Mean CV accuracy of the dgmml tree under each split strategy."""
    sets = list(datasets)
    if not sets:
        raise ConfigError("need at least one dataset")
    rows = []
    for strategy in SPLIT_STRATEGIES:
        cfg = TrainConfig(criterion="dgmml", split_strategy=strategy, mtry=mtry)
        per_dataset = tuple(
            (ds.name, run_cv(ds, cfg, k=k, seed=seed, reps=1).mean_accuracy) for ds in sets
        )
        mean = fsum(acc for _, acc in per_dataset) / len(per_dataset)
        rows.append(StrategyRow(strategy, mean, per_dataset))
    return rows


# ---------------------------------------------------------------------------
# Command-line interface
# ---------------------------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _parse_mtry(text: str):
    if text in ("all", "sqrt"):
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"mtry must be a positive integer, 'all', or 'sqrt', got {text!r}"
        ) from None
    if value < 1:
        raise argparse.ArgumentTypeError("mtry must be at least 1")
    return value


def _build_parser() -> _Parser:
    shared = _Parser(add_help=False)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--mtry", type=_parse_mtry, default=None,
                        help="candidate features per node: int, 'all', or 'sqrt'")
    shared.add_argument("--minleaf", type=int, default=1)
    shared.add_argument("--strategy", choices=SPLIT_STRATEGIES, default="closest_means")
    shared.add_argument("--oblique", action="store_true")
    shared.add_argument("--trees", type=int, default=20, help="forest size (with --forest)")
    shared.add_argument("--forest", action="store_true", help="train an ensemble, not a single tree")
    shared.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = _Parser(prog="dgmml", description="Decision trees and forests "
                     "with a closed-form metric-learned splitting criterion.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("train", parents=[shared], help="fit a model, write it as JSON")
    p.add_argument("dataset")
    p.add_argument("--criterion", choices=TRAIN_CRITERIA, default="dgmml")
    p.add_argument("--out", default=None, help="model file (default: stdout)")

    p = sub.add_parser("predict", parents=[shared], help="label a CSV with a saved model")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--out", default=None, help="label CSV (default: stdout)")

    p = sub.add_parser("cv", parents=[shared], help="cross-validate on a dataset or directory")
    p.add_argument("dataset")
    p.add_argument("--criterion", choices=TRAIN_CRITERIA, default="dgmml")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--times", action="store_true", help="include measured training times")

    p = sub.add_parser("bench", parents=[shared], help="compare training time across criteria")
    p.add_argument("dataset")
    p.add_argument("--criteria", default=",".join(TRAIN_CRITERIA),
                   help="comma-separated criterion list")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--reps", type=int, default=TIMING_REPS)

    p = sub.add_parser("weights", parents=[shared], help="feature weights vs post-split impurity")
    p.add_argument("dataset")

    p = sub.add_parser("strategies", parents=[shared], help="compare the three split strategies")
    p.add_argument("datasets", nargs="+")
    p.add_argument("--k", type=int, default=10)

    return parser


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def _tree_config(args, default_mtry, criterion: str | None = None) -> TrainConfig:
    return TrainConfig(
        criterion=criterion or getattr(args, "criterion", "dgmml"),
        oblique=args.oblique,
        mtry=args.mtry if args.mtry is not None else default_mtry,
        minleaf=args.minleaf,
        split_strategy=args.strategy,
        seed=args.seed,
    )


def _model_config(args, default_mtry) -> TrainConfig | ForestConfig:
    tree_cfg = _tree_config(args, default_mtry)
    if args.forest:
        return ForestConfig(n_trees=args.trees, tree_config=tree_cfg, seed=args.seed)
    return tree_cfg


def _expand_dataset_paths(paths) -> list[Path]:
    out: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found = sorted(p.glob("*.csv"))
            if not found:
                raise IoError(f"no .csv files in directory {p}")
            out.extend(found)
        else:
            out.append(p)
    return out


def _cell(value, fourdec: bool) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.4f}" if fourdec else repr(value)
    return str(value)


def _emit(rows: list[dict], fmt: str, fourdec: set, out) -> None:
    """Write report rows as RFC-4180 CSV or JSON lines.

    Columns in ``fourdec`` are rounded to 4 decimal places in both formats,
    so the two emissions carry identical values.
    """
    if not rows:
        return
    rounded = [
        {k: round(v, 4) if k in fourdec and isinstance(v, float) else v for k, v in row.items()}
        for row in rows
    ]
    if fmt == "json":
        for row in rounded:
            out.write(json.dumps(row, separators=(",", ":")) + "\n")
        return
    writer = csv.writer(out)
    writer.writerow(list(rounded[0].keys()))
    for row in rounded:
        writer.writerow([_cell(v, k in fourdec) for k, v in row.items()])


def _provenance(args, command: str, **extra) -> dict:
    payload = {
        "command": command,
        "seed": args.seed,
        "mtry": args.mtry,
        "minleaf": args.minleaf,
        "strategy": args.strategy,
        "oblique": args.oblique,
        "forest": args.forest,
        "trees": args.trees if args.forest else None,
        **extra,
    }
    return {"version": __version__, "seed": args.seed, "config": _config_hash(payload)}


def _cmd_train(args) -> int:
    ds = load_csv(args.dataset)
    config = _model_config(args, default_mtry="all")
    if isinstance(config, ForestConfig):
        doc = forest_to_dict(grow_forest(ds, config))
    else:
        doc = tree_to_dict(train_tree(ds, config))
    with _DeepJson(2000):
        text = json.dumps(doc, separators=(",", ":"))
    if args.out is None:
        sys.stdout.write(text + "\n")
    else:
        try:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {args.out}: {exc}") from None
    return 0


def _load_model(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    with _DeepJson(len(text) // 40):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad model document {path}: {exc}") from None
    kind = doc.get("kind")
    if kind == "tree":
        return tree_from_dict(doc)
    if kind == "forest":
        return forest_from_dict(doc)
    raise ConfigError(f"bad model document {path}: unknown kind {kind!r}")


def _read_unlabeled(path: Path, d: int) -> np.ndarray:
    """Feature matrix from a header+rows CSV with exactly d numeric columns."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    rows = list(csv.reader(text.splitlines()))
    if len(rows) < 2:
        raise LabelError(f"{path}: need a header row and at least one data row")
    X = np.empty((len(rows) - 1, d), dtype=np.float64)
    for i, row in enumerate(rows[1:]):
        line_no = i + 2
        if len(row) != d:
            raise ParseError(line_no, len(row) + 1, f"expected {d} fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                value = float(cell.strip())
            except ValueError:
                raise ParseError(line_no, j + 1, f"cell {cell.strip()!r} is not a number") from None
            X[i, j] = value
    if not np.isfinite(X).all():
        raise ParseError(2, 1, f"{path}: non-finite feature value")
    return X


def _cmd_predict(args) -> int:
    model = _load_model(Path(args.model))
    d = model.d
    path = Path(args.data)
    truth = None
    header = _peek_width(path)
    if header == d + 1:
        ds = load_csv(path)
        X, truth = ds.features, ds.labels
    elif header == d:
        X = _read_unlabeled(path, d)
    else:
        raise DimensionError(f"{path} has {header} columns; model expects {d} or {d + 1}")

    if isinstance(model, Forest):
        preds = predict_forest_many(model, X)
    else:
        preds = predict_many(model, X)

    lines = ["label"] + [str(int(p)) for p in preds]
    text = "\r\n".join(lines) + "\r\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {args.out}: {exc}") from None
    if truth is not None:
        accuracy = float(np.mean(preds == truth))
        sys.stderr.write(f"accuracy {accuracy:.4f}\n")
    return 0


def _peek_width(path: Path) -> int:
    try:
        with path.open(encoding="utf-8", newline="") as fh:
            first = next(csv.reader(fh), None)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    if first is None:
        raise LabelError(f"{path}: empty file")
    return len(first)


def _cmd_cv(args) -> int:
    config = _model_config(args, default_mtry="sqrt")
    prov = _provenance(args, "cv", criterion=getattr(args, "criterion", "dgmml"), k=args.k)
    reps = TIMING_REPS if args.times else 1
    rows = []
    for path in _expand_dataset_paths([args.dataset]):
        ds = load_csv(path)
        report = run_cv(ds, config, k=args.k, seed=args.seed, reps=reps)
        for fold in range(report.k):
            tp, fn, fp, tn = report.fold_confusions[fold]
            row = {
                **prov,
                "dataset": report.dataset,
                "model": report.model,
                "k": report.k,
                "fold": str(fold),
                "accuracy": report.fold_accuracies[fold],
                "tp": tp, "fn": fn, "fp": fp, "tn": tn,
            }
            if args.times:
                row["train_time_ms"] = report.fold_train_times_ms[fold]
            rows.append(row)
        totals = [sum(c[i] for c in report.fold_confusions) for i in range(4)]
        summary = {
            **prov,
            "dataset": report.dataset,
            "model": report.model,
            "k": report.k,
            "fold": "mean",
            "accuracy": report.mean_accuracy,
            "tp": totals[0], "fn": totals[1], "fp": totals[2], "tn": totals[3],
        }
        if args.times:
            summary["train_time_ms"] = report.train_time_ms
        rows.append(summary)
    _emit(rows, args.format, {"accuracy", "train_time_ms"}, sys.stdout)
    return 0


def _cmd_bench(args) -> int:
    names = [c.strip() for c in args.criteria.split(",") if c.strip()]
    base = _tree_config(args, default_mtry="sqrt", criterion="dgmml")
    prov = _provenance(args, "bench", criteria=names, k=args.k, reps=args.reps)
    rows = []
    for path in _expand_dataset_paths([args.dataset]):
        ds = load_csv(path)
        for r in bench_speed(ds, names, k=args.k, seed=args.seed, base=base, reps=args.reps):
            rows.append({
                **prov,
                "dataset": ds.name,
                "criterion": r.criterion,
                "mean_train_time_ms": r.mean_train_time_ms,
                "ratio_vs_dgmml": r.ratio_vs_dgmml,
                "below_resolution": r.below_resolution,
            })
    _emit(rows, args.format, {"mean_train_time_ms", "ratio_vs_dgmml"}, sys.stdout)
    return 0


def _cmd_weights(args) -> int:
    prov = _provenance(args, "weights")
    rows = []
    for path in _expand_dataset_paths([args.dataset]):
        ds = load_csv(path)
        for r in weight_vs_impurity(ds, args.strategy):
            rows.append({
                **prov,
                "dataset": ds.name,
                "impurity_measure": "gini",
                "rank": r.rank,
                "feature": r.feature,
                "feature_name": ds.feature_names[r.feature],
                "weight": r.weight,
                "post_split_impurity": r.post_split_impurity,
            })
    _emit(rows, args.format, set(), sys.stdout)
    return 0


def _cmd_strategies(args) -> int:
    paths = _expand_dataset_paths(args.datasets)
    datasets = [load_csv(p) for p in paths]
    mtry = args.mtry if args.mtry is not None else "sqrt"
    prov = _provenance(args, "strategies", k=args.k)
    rows = []
    for r in compare_strategies(datasets, seed=args.seed, k=args.k, mtry=mtry):
        for name, acc in r.per_dataset:
            rows.append({**prov, "strategy": r.strategy, "dataset": name, "accuracy": acc})
        rows.append({**prov, "strategy": r.strategy, "dataset": "mean",
                     "accuracy": r.mean_accuracy})
    _emit(rows, args.format, {"accuracy"}, sys.stdout)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "cv": _cmd_cv,
    "bench": _cmd_bench,
    "weights": _cmd_weights,
    "strategies": _cmd_strategies,
}

_DATA_ERRORS = (
    IoError, ParseError, LabelError, ContractError, DimensionError,
    SingleClassError, NoValidSplitError, DegenerateError,
)


def cli_main(argv) -> int:
    """Entry point: 0 on success, 1 on usage errors, 2 on data errors."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.command is None:
            parser.error("a command is required")
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        sys.stderr.write(str(exc) + "\n")
        return 1
    except ConfigError as exc:
        sys.stderr.write(f"dgmml: {exc}\n")
        return 1
    except _DATA_ERRORS as exc:
        sys.stderr.write(f"dgmml: {exc}\n")
        return 2
