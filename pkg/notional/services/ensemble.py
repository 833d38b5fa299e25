"""
Extremely randomized trees for binary agreement prediction

Every tree sees all training rows. At each node K candidate features are
drawn without replacement among the non-constant ones, each gets one
uniform random cut point, and the cut with the largest Gini decrease wins.
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.model_selection import ParameterGrid, StratifiedKFold

from notional.core.artifacts import read_json, write_json
from notional.core.exceptions import (
    ConfigurationError,
    EmptyDatasetError,
    EncodingMismatchError,
    SchemaError,
    StratificationError,
)
from notional.schemas.model import (
    ENCODING_VERSION,
    LEAF,
    ClassScores,
    CVRow,
    Dataset,
    DatasetEncoding,
    EvalReport,
    FeatureEncoding,
    FeatureKind,
    Forest,
    ForestParams,
    GridSearchResult,
    ImportanceEntry,
    ImportanceReport,
    MaxFeatures,
    Tree,
)
from notional.schemas.pairs import NUMERIC_FEATURES, AgreementLabel
from notional.services.lexicons import DEFAULT_GRID, lexicon_service

logger = logging.getLogger(__name__)

NON_FEATURE_COLUMNS = ("doc_id", "label", "type_iii")
LABELS = (AgreementLabel.STRICT.value, AgreementLabel.NOTIONAL.value)
GRID_KEYS = ("n_trees", "max_depth", "max_features")


def gini(counts: Sequence[float]) -> float:
    """1 - sum of squared class proportions; 0 for an empty node"""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


# Encoding

def feature_columns_of(frame: pd.DataFrame) -> List[str]:
    return [c for c in frame.columns if c not in NON_FEATURE_COLUMNS]


def _numeric_column(frame: pd.DataFrame, name: str) -> np.ndarray:
    values = frame[name]
    if name == "t_generic":
        mapping = {"True": 1.0, "true": 1.0, "1": 1.0, "False": 0.0, "false": 0.0, "0": 0.0}
        unknown = set(values) - set(mapping)
        if unknown:
            raise SchemaError(name, f"expected True/False, got {sorted(unknown)[0]!r}")
        return values.map(mapping).to_numpy(dtype=float)
    try:
        return pd.to_numeric(values).to_numpy(dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(name, "expected numbers")


def build_encoding(frame: pd.DataFrame) -> DatasetEncoding:
    """Numeric features raw, every other feature one-hot over sorted categories"""
    features = []
    for name in feature_columns_of(frame):
        if name in NUMERIC_FEATURES:
            features.append(FeatureEncoding(name=name, kind=FeatureKind.NUMERIC))
        else:
            categories = sorted(set(frame[name]))
            features.append(FeatureEncoding(name=name, kind=FeatureKind.ONEHOT, categories=categories))
    return DatasetEncoding(features=features)


def encode(frame: pd.DataFrame, encoding: DatasetEncoding) -> np.ndarray:
    """Unknown categories encode as an all-zero group"""
    present = feature_columns_of(frame)
    if encoding.version != ENCODING_VERSION:
        raise EncodingMismatchError(
            f"Model encoding version {encoding.version}, expected {ENCODING_VERSION}"
        )
    if present != encoding.feature_names:
        raise EncodingMismatchError(
            f"Feature columns {present} do not match model features {encoding.feature_names}"
        )
    blocks = []
    for feature in encoding.features:
        if feature.kind is FeatureKind.NUMERIC:
            blocks.append(_numeric_column(frame, feature.name)[:, None])
        else:
            values = frame[feature.name].to_numpy()
            blocks.append(
                np.stack([values == c for c in feature.categories], axis=1).astype(float)
                if feature.categories
                else np.zeros((len(frame), 0))
            )
    if not blocks:
        return np.zeros((len(frame), 0))
    return np.hstack(blocks)


def labels_of(frame: pd.DataFrame) -> np.ndarray:
    if "label" not in frame.columns:
        raise SchemaError("label", "missing")
    unknown = set(frame["label"]) - set(LABELS)
    if unknown:
        raise SchemaError("label", f"unknown label {sorted(unknown)[0]!r}")
    return (frame["label"] == AgreementLabel.NOTIONAL.value).to_numpy(dtype=np.int64)


def dataset_from_frame(frame: pd.DataFrame, encoding: Optional[DatasetEncoding] = None) -> Dataset:
    """Encode a features table; builds the encoding when none is given"""
    if encoding is None:
        encoding = build_encoding(frame)
    type_iii: List[Optional[bool]] = []
    for value in frame["type_iii"] if "type_iii" in frame.columns else [""] * len(frame):
        type_iii.append(None if value == "" else value in ("True", "true", "1"))
    return Dataset(
        X=encode(frame, encoding),
        y=labels_of(frame),
        encoding=encoding,
        doc_ids=list(frame["doc_id"]) if "doc_id" in frame.columns else [],
        genres=list(frame["genre"]) if "genre" in frame.columns else [],
        type_iii=type_iii,
    )


def subset(data: Dataset, rows: np.ndarray) -> Dataset:
    def pick(values):
        return [values[i] for i in rows] if values else []

    return Dataset(
        X=data.X[rows],
        y=data.y[rows],
        encoding=data.encoding,
        doc_ids=pick(data.doc_ids),
        genres=pick(data.genres),
        type_iii=pick(data.type_iii),
    )


# Tree fitting

def k_features(rule: MaxFeatures, width: int) -> int:
    if width <= 0:
        return 0
    if rule is MaxFeatures.SQRT:
        return max(1, math.ceil(math.sqrt(width)))
    if rule is MaxFeatures.LOG2:
        return max(1, math.ceil(math.log2(width)))
    return width


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Independent stream per (seed, tree index)"""
    return np.random.default_rng([seed, tree_index])


# decreases this close to the best count as ties; the earliest drawn wins
TIE_TOLERANCE = 1e-12


def _weighted_gini(n_pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Gini of each child times its size, 0 for empty children"""
    n_safe = np.maximum(n, 1)
    p = n_pos / n_safe
    return n * (1.0 - p * p - (1.0 - p) * (1.0 - p))


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    k: int,
    rng: np.random.Generator,
    impurity: float,
) -> Optional[Tuple[int, float, np.ndarray]]:
    """
    Score K random cuts at once. Draws: one permutation of all columns,
    then one uniform per candidate in permutation order.
    """
    Xn = X[rows]
    yn = y[rows].astype(float)
    lo, hi = Xn.min(axis=0), Xn.max(axis=0)
    order = rng.permutation(X.shape[1])
    candidates = order[hi[order] > lo[order]][:k]
    if candidates.size == 0:
        return None

    lo_c, hi_c = lo[candidates], hi[candidates]
    thresholds = rng.uniform(lo_c, hi_c)
    thresholds = np.where(thresholds <= lo_c, (lo_c + hi_c) / 2.0, thresholds)

    go_left = Xn[:, candidates] <= thresholds
    n = float(len(rows))
    n_left = go_left.sum(axis=0).astype(float)
    pos_left = yn @ go_left
    weighted = _weighted_gini(pos_left, n_left) + _weighted_gini(yn.sum() - pos_left, n - n_left)
    decrease = impurity - weighted / n

    best = int(np.flatnonzero(decrease >= decrease.max() - TIE_TOLERANCE)[0])
    return int(candidates[best]), float(thresholds[best]), go_left[:, best]


def fit_tree(X: np.ndarray, y: np.ndarray, params: ForestParams, seed: int, tree_index: int) -> Tree:
    """Grow one tree depth-first, left subtree before right"""
    rng = tree_rng(seed, tree_index)
    k = k_features(params.max_features, X.shape[1])
    tree = Tree()
    # (rows, depth, parent id, is left child)
    stack: List[Tuple[np.ndarray, int, int, bool]] = [(np.arange(len(y)), 0, LEAF, True)]

    while stack:
        rows, depth, parent, is_left = stack.pop()
        node = tree.node_count
        if parent != LEAF:
            if is_left:
                tree.left[parent] = node
            else:
                tree.right[parent] = node

        counts = np.bincount(y[rows], minlength=2)
        impurity = gini(counts)
        tree.value.append([int(counts[0]), int(counts[1])])
        tree.impurity.append(impurity)
        tree.n_samples.append(int(len(rows)))
        tree.left.append(LEAF)
        tree.right.append(LEAF)

        split = None
        at_depth_bound = params.max_depth is not None and depth >= params.max_depth
        if len(rows) >= 2 and impurity > 0.0 and not at_depth_bound:
            split = _best_split(X, y, rows, k, rng, impurity)

        if split is None:
            tree.feature.append(LEAF)
            tree.threshold.append(0.0)
            continue

        feature, threshold, go_left = split
        tree.feature.append(feature)
        tree.threshold.append(threshold)
        stack.append((rows[~go_left], depth + 1, node, False))
        stack.append((rows[go_left], depth + 1, node, True))

    return tree


def fit(data: Dataset, params: ForestParams, seed: int, n_jobs: int = 1) -> Forest:
    if len(data) == 0:
        raise EmptyDatasetError("Cannot fit a forest on zero rows")
    if len(set(data.y.tolist())) < 2:
        logger.warning("Training data has a single class; every tree is one leaf")
    trees = Parallel(n_jobs=n_jobs)(
        delayed(fit_tree)(data.X, data.y, params, seed, index) for index in range(params.n_trees)
    )
    return Forest(params=params, seed=seed, encoding=data.encoding, trees=list(trees))


# Prediction

def _tree_proba(tree: Tree, X: np.ndarray) -> np.ndarray:
    arrays = tree.arrays()
    nodes = np.zeros(X.shape[0], dtype=np.int64)
    active = arrays["feature"][nodes] != LEAF
    while active.any():
        rows = np.flatnonzero(active)
        at = nodes[rows]
        go_left = X[rows, arrays["feature"][at]] <= arrays["threshold"][at]
        nodes[rows] = np.where(go_left, arrays["left"][at], arrays["right"][at])
        active = arrays["feature"][nodes] != LEAF
    return arrays["proba"][nodes]


def predict_proba(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Mean notional leaf frequency across trees"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != forest.encoding.width:
        raise EncodingMismatchError(
            f"Vector width {X.shape[1]} does not match model width {forest.encoding.width}"
        )
    if not forest.trees:
        return np.zeros(X.shape[0])
    return np.mean([_tree_proba(tree, X) for tree in forest.trees], axis=0)


def predict(forest: Forest, vector: Sequence[float]) -> Tuple[AgreementLabel, float]:
    """Notional only when probability exceeds 0.5"""
    probability = float(predict_proba(forest, vector)[0])
    label = AgreementLabel.NOTIONAL if probability > 0.5 else AgreementLabel.STRICT
    return label, probability


def predict_rows(forest: Forest, frame: pd.DataFrame) -> pd.DataFrame:
    """Predicted label and notional probability for every row of a features table"""
    probabilities = predict_proba(forest, encode(frame, forest.encoding))
    return pd.DataFrame(
        {
            "doc_id": frame["doc_id"].to_numpy() if "doc_id" in frame.columns else np.arange(len(frame)),
            "predicted": np.where(
                probabilities > 0.5, AgreementLabel.NOTIONAL.value, AgreementLabel.STRICT.value
            ),
            "probability": probabilities,
        }
    )


# Importances

def tree_importances(tree: Tree, width: int) -> np.ndarray:
    """Weighted impurity decreases per encoded feature, normalized to 1"""
    totals = np.zeros(width)
    for node, feature in enumerate(tree.feature):
        if feature == LEAF:
            continue
        left, right = tree.left[node], tree.right[node]
        totals[feature] += (
            tree.n_samples[node] * tree.impurity[node]
            - tree.n_samples[left] * tree.impurity[left]
            - tree.n_samples[right] * tree.impurity[right]
        )
    total = totals.sum()
    return totals / total if total > 0 else totals


def importances(forest: Forest) -> ImportanceReport:
    width = forest.encoding.width
    per_tree = [
        tree_importances(tree, width)
        for tree in forest.trees
        if tree.split_count > 0
    ]
    per_tree = [values for values in per_tree if values.sum() > 0]
    columns = forest.encoding.column_names()
    names = forest.encoding.feature_names

    if not per_tree:
        logger.warning("Forest has no informative splits; importances are all zero")
        return ImportanceReport(
            grouped=[ImportanceEntry(feature=n, mean=0.0, std=0.0) for n in names],
            encoded=[ImportanceEntry(feature=c, mean=0.0, std=0.0) for c in columns],
            trees_with_splits=0,
            flagged=True,
        )

    matrix = np.vstack(per_tree)
    owners = np.asarray(forest.encoding.groups())
    grouped_matrix = np.column_stack([matrix[:, owners == name].sum(axis=1) for name in names])
    return ImportanceReport(
        grouped=[
            ImportanceEntry(feature=n, mean=float(m), std=float(s))
            for n, m, s in zip(names, grouped_matrix.mean(axis=0), grouped_matrix.std(axis=0))
        ],
        encoded=[
            ImportanceEntry(feature=c, mean=float(m), std=float(s))
            for c, m, s in zip(columns, matrix.mean(axis=0), matrix.std(axis=0))
        ],
        trees_with_splits=len(per_tree),
    )


# Splitting and model selection

def stratified_test_mask(
    frame: pd.DataFrame,
    test_fraction: float = 0.10,
    seed: int = 42,
    keys: Sequence[str] = ("genre", "label"),
) -> np.ndarray:
    """
    True for held-out rows. Every stratum gets the floor of its share, and
    at least one row when its share rounds to one or more; the remaining
    rows up to round(test_fraction * N) go by largest remainder. Many small
    strata can push the total past that target. Rows are drawn without
    replacement inside each stratum.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"Test fraction must be in (0, 1), got {test_fraction}")
    for key in keys:
        if key not in frame.columns:
            raise SchemaError(key, "needed for stratification")
    n = len(frame)
    if n == 0:
        raise EmptyDatasetError("Nothing to split")

    strata = frame.groupby(list(keys), sort=True).indices
    ordered = sorted(strata)
    exact = np.array([test_fraction * len(strata[key]) for key in ordered])
    quota = np.floor(exact).astype(int)
    quota[(quota == 0) & (np.rint(exact) >= 1)] = 1
    target = int(math.floor(test_fraction * n + 0.5))
    remainder = target - int(quota.sum())
    # stable sort keeps stratum order among equal remainders
    for position in np.argsort(-(exact - quota), kind="stable")[:max(remainder, 0)]:
        quota[position] += 1

    rng = np.random.default_rng(seed)
    is_test = np.zeros(n, dtype=bool)
    for key, size in zip(ordered, quota):
        members = np.sort(strata[key])
        if size == 0:
            logger.warning(f"Stratum {key} ({len(members)} rows) contributes no test rows")
            continue
        is_test[rng.choice(members, size=int(size), replace=False)] = True
    return is_test


def stratified_split(
    frame: pd.DataFrame,
    test_fraction: float = 0.10,
    seed: int = 42,
    keys: Sequence[str] = ("genre", "label"),
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Train and test frames; see stratified_test_mask"""
    is_test = stratified_test_mask(frame, test_fraction, seed, keys)
    held = int(is_test.sum())
    logger.info(f"Split {len(frame)} rows into {len(frame) - held} train and {held} test")
    return frame[~is_test].reset_index(drop=True), frame[is_test].reset_index(drop=True)


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold number per row, classes spread evenly over folds"""
    if folds < 2:
        raise ConfigurationError(f"Need at least 2 folds, got {folds}")
    for label in (0, 1):
        members = int(np.sum(y == label))
        if members < folds:
            raise StratificationError(
                f"Class {LABELS[label]} has {members} rows, fewer than {folds} folds"
            )
    assignment = np.empty(len(y), dtype=np.int64)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    for fold, (_, held_out) in enumerate(splitter.split(np.zeros((len(y), 1)), y)):
        assignment[held_out] = fold
    return assignment


def accuracy(forest: Forest, data: Dataset) -> float:
    predicted = (predict_proba(forest, data.X) > 0.5).astype(np.int64)
    return float(np.mean(predicted == data.y))


def load_grid(path: Optional[Path] = None) -> List[ForestParams]:
    """Cartesian grid from a JSON file of n_trees, max_depth and max_features lists"""
    text = path.read_text(encoding="utf-8") if path is not None else lexicon_service.read_resource(DEFAULT_GRID)
    try:
        spec = json.loads(text)
        cells = ParameterGrid({key: spec[key] for key in GRID_KEYS})
        grid = [
            ForestParams(
                n_trees=cell["n_trees"],
                max_depth=cell["max_depth"],
                max_features=MaxFeatures(cell["max_features"]),
            )
            for cell in cells
        ]
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigurationError(f"Bad grid specification: {exc}")
    if not grid:
        raise ConfigurationError("Grid is empty")
    return grid


def grid_search(
    train: Dataset,
    grid: Sequence[ForestParams],
    folds: int = 5,
    seed: int = 42,
    n_jobs: int = 1,
) -> GridSearchResult:
    """
    Stratified k-fold accuracy per grid cell; the winner is refit on all
    training rows. Ties go to fewer trees, then shallower depth.
    """
    if not grid:
        raise ConfigurationError("Grid is empty")
    assignment = stratified_folds(train.y, folds, seed)
    table: List[CVRow] = []
    for params in grid:
        scores = []
        for fold in range(folds):
            held_out = assignment == fold
            forest = fit(subset(train, np.flatnonzero(~held_out)), params, seed, n_jobs)
            scores.append(accuracy(forest, subset(train, np.flatnonzero(held_out))))
        row = CVRow(
            n_trees=params.n_trees,
            max_depth=params.max_depth,
            max_features=params.max_features,
            fold_accuracies=scores,
            mean_accuracy=float(np.mean(scores)),
        )
        logger.info(
            f"CV {params.n_trees} trees, depth {params.max_depth}, "
            f"{params.max_features.value}: {row.mean_accuracy:.4f}"
        )
        table.append(row)

    order = sorted(
        range(len(grid)),
        key=lambda i: (-table[i].mean_accuracy, grid[i].n_trees, grid[i].depth_key, i),
    )
    best = grid[order[0]]
    return GridSearchResult(best=best, table=table, forest=fit(train, best, seed, n_jobs))


# Evaluation

def report_from_confusion(
    confusion: Sequence[Sequence[int]],
    corpus_counts: Optional[Tuple[int, int]] = None,
    type_iii_total: Optional[int] = None,
    type_iii_errors: Optional[int] = None,
) -> EvalReport:
    """Scores from a (strict, notional) x (strict, notional) confusion matrix"""
    matrix = np.asarray(confusion, dtype=np.int64)
    total = int(matrix.sum())
    if total == 0:
        raise EmptyDatasetError("Cannot evaluate on zero rows")

    def scores(c: int) -> ClassScores:
        predicted = matrix[:, c].sum()
        actual = matrix[c, :].sum()
        return ClassScores(
            precision=float(matrix[c, c] / predicted) if predicted else 0.0,
            recall=float(matrix[c, c] / actual) if actual else 0.0,
        )

    corpus_baseline = None
    if corpus_counts is not None and sum(corpus_counts) > 0:
        corpus_baseline = max(corpus_counts) / sum(corpus_counts)

    return EvalReport(
        accuracy=float(np.trace(matrix) / total),
        confusion=matrix.tolist(),
        majority_baseline=float(matrix.sum(axis=1).max() / total),
        strict=scores(0),
        notional=scores(1),
        n=total,
        corpus_baseline=corpus_baseline,
        type_iii_total=type_iii_total,
        type_iii_errors=type_iii_errors,
    )


def evaluate(
    forest: Forest, test: Dataset, corpus_counts: Optional[Tuple[int, int]] = None
) -> EvalReport:
    if len(test) == 0:
        raise EmptyDatasetError("Test set is empty")
    predicted = (predict_proba(forest, test.X) > 0.5).astype(np.int64)
    confusion = np.zeros((2, 2), dtype=np.int64)
    np.add.at(confusion, (test.y, predicted), 1)

    type_iii_total = type_iii_errors = None
    flagged = [i for i, flag in enumerate(test.type_iii) if flag]
    if any(flag is not None for flag in test.type_iii):
        type_iii_total = len(flagged)
        type_iii_errors = int(sum(predicted[i] != test.y[i] for i in flagged))
    return report_from_confusion(confusion, corpus_counts, type_iii_total, type_iii_errors)


# Persistence

def save_forest(forest: Forest, path: Path, meta: Optional[Dict] = None) -> Path:
    return write_json(
        path,
        forest.model_dump(mode="json"),
        message=f"Forest of {len(forest.trees)} trees",
        meta=meta,
    )


def load_forest(path: Path) -> Forest:
    envelope = read_json(path)
    try:
        forest = Forest.model_validate(envelope.data)
    except ValueError as exc:
        raise SchemaError("data", f"{path.name} is not a forest: {exc}")
    if forest.encoding.version != ENCODING_VERSION:
        raise EncodingMismatchError(
            f"Model encoding version {forest.encoding.version}, expected {ENCODING_VERSION}"
        )
    return forest
