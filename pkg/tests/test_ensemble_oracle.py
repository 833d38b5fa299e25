"""
Reference implementations the forest is checked against: a brute-force
partitioner with exact Gini arithmetic replaying the same random draws,
and scikit-learn's extremely randomized trees.
"""

from fractions import Fraction

import numpy as np
import pandas as pd
import pytest
from sklearn.ensemble import ExtraTreesClassifier

from notional.config import settings
from notional.schemas.model import LEAF, Dataset, DatasetEncoding, FeatureEncoding, FeatureKind, ForestParams, MaxFeatures
from notional.services import ensemble


def numeric_dataset(X, y):
    encoding = DatasetEncoding(
        features=[FeatureEncoding(name=f"x{i}", kind=FeatureKind.NUMERIC) for i in range(X.shape[1])]
    )
    return Dataset(X=np.asarray(X, dtype=float), y=np.asarray(y, dtype=np.int64), encoding=encoding)


def exact_gini(labels):
    n = len(labels)
    if n == 0:
        return Fraction(0)
    p = Fraction(int(np.sum(labels)), n)
    return 1 - p * p - (1 - p) * (1 - p)


def brute_force_tree(X, y, k, rng):
    """
    Nested tuples (feature, n_samples, left, right), or ("leaf", n_samples,
    n_notional). Every non-constant candidate is scored exactly; the first
    best in draw order wins.
    """

    def grow(rows):
        labels = y[rows]
        impurity = exact_gini(labels)
        leaf = ("leaf", len(rows), int(labels.sum()))
        if len(rows) < 2 or impurity == 0:
            return leaf
        order = rng.permutation(X.shape[1])
        candidates = [f for f in order if X[rows, f].min() != X[rows, f].max()][:k]
        if not candidates:
            return leaf
        # binary columns: any cut in [0, 1) sends the zeros left
        rng.uniform(np.zeros(len(candidates)), np.ones(len(candidates)))

        best, best_decrease = None, None
        for feature in candidates:
            left = rows[X[rows, feature] == 0]
            right = rows[X[rows, feature] == 1]
            n = len(rows)
            decrease = impurity - (
                Fraction(len(left), n) * exact_gini(y[left]) + Fraction(len(right), n) * exact_gini(y[right])
            )
            if best is None or decrease > best_decrease:
                best, best_decrease = (feature, left, right), decrease
        feature, left, right = best
        return (int(feature), len(rows), grow(left), grow(right))

    return grow(np.arange(len(y)))


def nested(tree, node=0):
    if tree.feature[node] == LEAF:
        return ("leaf", tree.n_samples[node], tree.value[node][1])
    return (
        tree.feature[node],
        tree.n_samples[node],
        nested(tree, tree.left[node]),
        nested(tree, tree.right[node]),
    )


def binary_data(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(64, 9))
    rule = (X[:, 0] & X[:, 1]) | X[:, 2]
    flips = rng.random(64) < 0.15
    return X.astype(float), np.where(flips, 1 - rule, rule).astype(np.int64)


@pytest.mark.parametrize("seed", range(20))
def test_binary_trees_match_brute_force_partitioner(seed):
    X, y = binary_data(seed)
    params = ForestParams(n_trees=1, max_depth=None, max_features=MaxFeatures.SQRT)
    k = ensemble.k_features(params.max_features, X.shape[1])

    grown = ensemble.fit_tree(X, y, params, seed=seed, tree_index=0)
    expected = brute_force_tree(X, y, k, ensemble.tree_rng(seed, 0))
    assert nested(grown) == expected


def test_separable_wide_data_is_fit_exactly():
    rng = np.random.default_rng(12)
    X = rng.uniform(-1.0, 1.0, size=(500, 10))
    y = (X[:, 0] + 0.5 * X[:, 3] - X[:, 7] > 0).astype(np.int64)
    data = numeric_dataset(X, y)

    forest = ensemble.fit(data, ForestParams(n_trees=30, max_depth=None), seed=3)
    assert ensemble.accuracy(forest, data) == 1.0


def mixed_task(seed, n=1000, noise=0.1):
    """
    Five numeric and three categorical features; the label follows a fixed
    rule and is flipped with probability `noise`, so the Bayes rate is 1 - noise
    """
    rng = np.random.default_rng(seed)
    frame = pd.DataFrame(
        {
            "n_position_pct": rng.uniform(0, 100, n),
            "t_position_pct": rng.uniform(0, 100, n),
            "t_length_tokens": rng.integers(1, 12, n).astype(float),
            "distance_tokens": rng.exponential(20.0, n),
            "doc_length_tokens": rng.uniform(100, 5000, n),
            "n_person": rng.choice(["1", "2", "3"], n),
            "genre": rng.choice(["news", "web", "bc.conv", "tc"], n),
            "t_entity": rng.choice(["organization", "person", "quantity"], n),
        }
    )
    score = (
        frame["n_position_pct"] / 50.0
        - frame["t_length_tokens"] / 6.0
        + (frame["n_person"] == "3") * 1.2
        + (frame["t_entity"] == "organization") * 0.8
    )
    rule = score > 1.0
    flips = rng.random(n) < noise
    frame["label"] = np.where(rule ^ flips, "notional", "strict")
    return frame


@pytest.mark.slow
def test_mean_accuracy_matches_sklearn_over_seeds():
    frame = mixed_task(seed=2024)
    train = ensemble.dataset_from_frame(frame.iloc[:700])
    test = ensemble.dataset_from_frame(frame.iloc[700:], train.encoding)
    k = ensemble.k_features(MaxFeatures.SQRT, train.encoding.width)
    params = ForestParams(n_trees=300, max_depth=None, max_features=MaxFeatures.SQRT)

    ours, reference = [], []
    for seed in range(50):
        forest = ensemble.fit(train, params, seed=seed, n_jobs=settings.N_JOBS)
        ours.append(ensemble.accuracy(forest, test))
        sklearn_forest = ExtraTreesClassifier(
            n_estimators=300, max_features=k, bootstrap=False, random_state=seed, n_jobs=settings.N_JOBS
        ).fit(train.X, train.y)
        reference.append(float(np.mean(sklearn_forest.predict(test.X) == test.y)))

    assert abs(np.mean(ours) - np.mean(reference)) <= 0.02
    # cannot beat the Bayes rate by more than sampling noise
    assert np.mean(ours) <= 0.95


def test_accuracy_close_to_sklearn(make_features):
    train = ensemble.dataset_from_frame(make_features(400, seed=4))
    test = ensemble.dataset_from_frame(make_features(200, seed=5), train.encoding)
    k = ensemble.k_features(MaxFeatures.SQRT, train.encoding.width)

    ours = ensemble.fit(train, ForestParams(n_trees=200), seed=8)
    reference = ExtraTreesClassifier(
        n_estimators=200, max_features=k, bootstrap=False, random_state=8
    ).fit(train.X, train.y)

    our_accuracy = ensemble.accuracy(ours, test)
    reference_accuracy = float(np.mean(reference.predict(test.X) == test.y))
    assert our_accuracy >= 0.85
    assert abs(our_accuracy - reference_accuracy) <= 0.06


def test_importance_ranking_close_to_sklearn(make_features):
    train = ensemble.dataset_from_frame(make_features(400, seed=6))
    k = ensemble.k_features(MaxFeatures.SQRT, train.encoding.width)
    ours = ensemble.importances(ensemble.fit(train, ForestParams(n_trees=200), seed=8))
    reference = ExtraTreesClassifier(
        n_estimators=200, max_features=k, bootstrap=False, random_state=8
    ).fit(train.X, train.y)

    owners = np.asarray(train.encoding.groups())
    reference_grouped = {
        name: float(reference.feature_importances_[owners == name].sum())
        for name in train.encoding.feature_names
    }
    our_grouped = {e.feature: e.mean for e in ours.grouped}
    assert min(our_grouped, key=our_grouped.get) == min(reference_grouped, key=reference_grouped.get) == "genre"
    for name in our_grouped:
        assert abs(our_grouped[name] - reference_grouped[name]) < 0.2
