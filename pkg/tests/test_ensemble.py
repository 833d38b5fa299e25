import json

import numpy as np
import pandas as pd
import pytest

from notional.core.exceptions import (
    ConfigurationError,
    EmptyDatasetError,
    EncodingMismatchError,
    SchemaError,
    StratificationError,
)
from notional.schemas.model import LEAF, Forest, ForestParams, MaxFeatures, Tree
from notional.schemas.pairs import AgreementLabel
from notional.services import ensemble

PARAMS = ForestParams(n_trees=25, max_depth=None, max_features=MaxFeatures.SQRT)

# genre x (notional, strict) counts of the full annotated corpus
CORPUS_STRATA = {
    "bible": (169, 487),
    "news": (344, 843),
    "translations": (55, 210),
    "web": (48, 71),
    "bc.conv": (237, 201),
    "bc.news": (296, 378),
    "phone": (60, 89),
}


def strata_frame() -> pd.DataFrame:
    genres, labels = [], []
    for genre, (notional, strict) in CORPUS_STRATA.items():
        genres += [genre] * (notional + strict)
        labels += ["notional"] * notional + ["strict"] * strict
    return pd.DataFrame({"doc_id": [f"d{i}" for i in range(len(genres))], "genre": genres, "label": labels})


def test_gini():
    assert ensemble.gini([261, 88]) == pytest.approx(0.3771, abs=1e-4)
    assert ensemble.gini([10, 0]) == 0.0
    assert ensemble.gini([0, 0]) == 0.0
    assert ensemble.gini([5, 5]) == pytest.approx(0.5)


def test_encoding_one_hot_and_numeric():
    frame = pd.DataFrame(
        {
            "doc_id": ["a", "b", "c"],
            "n_person": ["3", "1", "3"],
            "t_generic": ["True", "False", "False"],
            "distance_tokens": ["4", "12", "7"],
            "label": ["strict", "notional", "strict"],
        }
    )
    encoding = ensemble.build_encoding(frame)
    assert encoding.column_names() == ["n_person=1", "n_person=3", "t_generic", "distance_tokens"]
    X = ensemble.encode(frame, encoding)
    np.testing.assert_array_equal(X, [[0, 1, 1, 4], [1, 0, 0, 12], [0, 1, 0, 7]])
    np.testing.assert_array_equal(ensemble.labels_of(frame), [0, 1, 0])


def test_unknown_category_encodes_as_zeros():
    train = pd.DataFrame({"genre": ["news", "web"], "label": ["strict", "notional"]})
    encoding = ensemble.build_encoding(train)
    unseen = pd.DataFrame({"genre": ["bible"], "label": ["strict"]})
    np.testing.assert_array_equal(ensemble.encode(unseen, encoding), [[0, 0]])


def test_encoding_mismatch():
    encoding = ensemble.build_encoding(pd.DataFrame({"genre": ["news"], "label": ["strict"]}))
    other = pd.DataFrame({"n_person": ["3"], "label": ["strict"]})
    with pytest.raises(EncodingMismatchError):
        ensemble.encode(other, encoding)
    stale = encoding.model_copy(update={"version": 0})
    with pytest.raises(EncodingMismatchError):
        ensemble.encode(pd.DataFrame({"genre": ["news"], "label": ["strict"]}), stale)


def test_bad_values_are_schema_errors():
    with pytest.raises(SchemaError):
        ensemble.labels_of(pd.DataFrame({"label": ["plural"]}))
    frame = pd.DataFrame({"distance_tokens": ["far"], "label": ["strict"]})
    with pytest.raises(SchemaError):
        ensemble.encode(frame, ensemble.build_encoding(frame))


@pytest.mark.parametrize(
    "rule, width, expected",
    [(MaxFeatures.SQRT, 10, 4), (MaxFeatures.SQRT, 9, 3), (MaxFeatures.LOG2, 10, 4), (MaxFeatures.ALL, 10, 10), (MaxFeatures.SQRT, 1, 1)],
)
def test_k_features(rule, width, expected):
    assert ensemble.k_features(rule, width) == expected


def test_separable_training_data_is_fit_exactly(separable_frame):
    data = ensemble.dataset_from_frame(separable_frame)
    forest = ensemble.fit(data, PARAMS, seed=7)
    assert ensemble.accuracy(forest, data) == 1.0
    for tree in forest.trees:
        leaves = [v for v, f in zip(tree.value, tree.feature) if f == LEAF]
        assert all(min(v) == 0 for v in leaves)


def test_tree_layout_is_preorder(separable_frame):
    data = ensemble.dataset_from_frame(separable_frame)
    tree = ensemble.fit_tree(data.X, data.y, PARAMS, seed=7, tree_index=0)
    assert tree.n_samples[0] == len(data)
    for node, feature in enumerate(tree.feature):
        if feature == LEAF:
            assert tree.left[node] == tree.right[node] == LEAF
            continue
        left, right = tree.left[node], tree.right[node]
        assert left == node + 1
        assert right > left
        assert tree.n_samples[left] + tree.n_samples[right] == tree.n_samples[node]


def test_depth_bound(separable_frame):
    data = ensemble.dataset_from_frame(separable_frame)
    forest = ensemble.fit(data, ForestParams(n_trees=10, max_depth=1), seed=3)
    assert all(tree.node_count <= 3 for tree in forest.trees)


def test_same_seed_same_model_any_job_count(separable_frame):
    data = ensemble.dataset_from_frame(separable_frame)
    first = ensemble.fit(data, PARAMS, seed=11, n_jobs=1)
    second = ensemble.fit(data, PARAMS, seed=11, n_jobs=2)
    assert json.dumps(first.model_dump(mode="json")) == json.dumps(second.model_dump(mode="json"))
    other = ensemble.fit(data, PARAMS, seed=12)
    assert other.model_dump(mode="json") != first.model_dump(mode="json")


def test_importances_sum_to_one_and_ignore_noise(make_features):
    data = ensemble.dataset_from_frame(make_features(300, seed=1))
    report = ensemble.importances(ensemble.fit(data, ForestParams(n_trees=60), seed=5))
    grouped = {e.feature: e.mean for e in report.grouped}
    assert sum(grouped.values()) == pytest.approx(1.0)
    assert sum(e.mean for e in report.encoded) == pytest.approx(1.0)
    assert grouped["genre"] < min(grouped["n_person"], grouped["n_position_pct"])
    assert report.trees_with_splits == 60
    assert not report.flagged


def test_importances_of_split_free_forest_are_flagged():
    frame = pd.DataFrame({"n_person": ["3", "1"], "label": ["strict", "strict"]})
    forest = ensemble.fit(ensemble.dataset_from_frame(frame), ForestParams(n_trees=3), seed=0)
    report = ensemble.importances(forest)
    assert report.flagged
    assert report.trees_with_splits == 0
    assert all(e.mean == 0.0 for e in report.grouped)


def leaf_tree(strict: int, notional: int) -> Tree:
    return Tree(feature=[LEAF], threshold=[0.0], left=[LEAF], right=[LEAF],
                value=[[strict, notional]], impurity=[ensemble.gini([strict, notional])], n_samples=[strict + notional])


def test_half_probability_predicts_strict():
    encoding = ensemble.build_encoding(pd.DataFrame({"n_position_pct": ["1.0"], "label": ["strict"]}))
    forest = Forest(params=ForestParams(n_trees=2), seed=0, encoding=encoding, trees=[leaf_tree(1, 0), leaf_tree(0, 1)])
    assert ensemble.predict(forest, [50.0]) == (AgreementLabel.STRICT, 0.5)
    with pytest.raises(EncodingMismatchError):
        ensemble.predict(forest, [1.0, 2.0])


def test_predict_rows(separable_frame):
    data = ensemble.dataset_from_frame(separable_frame)
    forest = ensemble.fit(data, PARAMS, seed=7)
    rows = ensemble.predict_rows(forest, separable_frame)
    assert list(rows.columns) == ["doc_id", "predicted", "probability"]
    assert (rows["predicted"] == separable_frame["label"]).all()


def test_fit_on_nothing():
    frame = pd.DataFrame({"n_person": ["3"], "label": ["strict"]})
    data = ensemble.dataset_from_frame(frame)
    with pytest.raises(EmptyDatasetError):
        ensemble.fit(ensemble.subset(data, np.array([], dtype=np.int64)), PARAMS, seed=0)


def test_split_holds_out_ten_percent_by_stratum():
    frame = strata_frame()
    train, test = ensemble.stratified_split(frame, 0.10, seed=42)
    assert len(test) == 349
    assert len(train) == len(frame) - 349
    assert not set(train["doc_id"]) & set(test["doc_id"])
    sizes = frame.groupby(["genre", "label"]).size()
    held = test.groupby(["genre", "label"]).size()
    for key, size in sizes.items():
        assert abs(held.get(key, 0) - 0.10 * size) < 1


def test_small_strata_still_get_a_test_row():
    # 0.7 of a row each; largest remainder alone would leave one stratum empty
    genres = ["bible", "news", "phone", "translations", "web"]
    frame = pd.DataFrame({"genre": [g for g in genres for _ in range(7)], "label": ["strict"] * 35})
    frame["doc_id"] = [f"d{i}" for i in range(35)]
    test = ensemble.stratified_split(frame, 0.10, seed=42)[1]
    assert sorted(test["genre"]) == genres


def test_half_row_shares_follow_largest_remainder():
    frame = pd.DataFrame({"genre": ["news", "news", "web", "web"], "label": ["strict"] * 4})
    mask = ensemble.stratified_test_mask(frame, 0.25, seed=1)
    assert mask.sum() == 1
    assert mask[:2].sum() == 1


def test_split_is_reproducible():
    frame = strata_frame()
    first = ensemble.stratified_split(frame, 0.10, seed=9)[1]
    second = ensemble.stratified_split(frame, 0.10, seed=9)[1]
    other = ensemble.stratified_split(frame, 0.10, seed=10)[1]
    assert list(first["doc_id"]) == list(second["doc_id"])
    assert list(first["doc_id"]) != list(other["doc_id"])


@pytest.mark.parametrize("fraction", [0.0, 1.0, 1.5])
def test_split_rejects_bad_fraction(fraction):
    with pytest.raises(ConfigurationError):
        ensemble.stratified_split(strata_frame(), fraction)


def test_split_needs_strata_columns():
    with pytest.raises(SchemaError):
        ensemble.stratified_split(pd.DataFrame({"label": ["strict"]}))


def test_folds_balance_classes():
    y = np.array([1] * 20 + [0] * 30)
    assignment = ensemble.stratified_folds(y, 5, seed=1)
    for fold in range(5):
        members = y[assignment == fold]
        assert members.sum() == 4
        assert len(members) == 10


def test_folds_need_enough_members():
    with pytest.raises(StratificationError):
        ensemble.stratified_folds(np.array([1, 1, 0, 0, 0, 0, 0]), 5, seed=1)
    with pytest.raises(ConfigurationError):
        ensemble.stratified_folds(np.array([1, 0]), 1, seed=1)


def test_default_grid():
    grid = ensemble.load_grid()
    assert len(grid) == 36
    assert ForestParams(n_trees=300, max_depth=None, max_features=MaxFeatures.SQRT) in grid


def test_bad_grid(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text('{"n_trees": [10]}')
    with pytest.raises(ConfigurationError):
        ensemble.load_grid(path)
    path.write_text('{"n_trees": [], "max_depth": [null], "max_features": ["sqrt"]}')
    with pytest.raises(ConfigurationError):
        ensemble.load_grid(path)


def test_grid_search_ties_go_to_smaller_models():
    rng = np.random.default_rng(0)
    person = rng.choice(["1", "3"], size=60)
    frame = pd.DataFrame({"n_person": person, "label": np.where(person == "1", "notional", "strict")})
    grid = [
        ForestParams(n_trees=n, max_depth=d, max_features=MaxFeatures.ALL)
        for n in (5, 3)
        for d in (None, 2)
    ]
    result = ensemble.grid_search(ensemble.dataset_from_frame(frame), grid, folds=5, seed=4)
    assert all(row.mean_accuracy == 1.0 for row in result.table)
    assert result.best == ForestParams(n_trees=3, max_depth=2, max_features=MaxFeatures.ALL)
    assert len(result.forest.trees) == 3


def test_report_from_published_confusion():
    report = ensemble.report_from_confusion([[222, 39], [7, 81]], corpus_counts=(2279, 1209))
    assert report.accuracy == pytest.approx(0.8681, abs=1e-4)
    assert report.notional.recall == pytest.approx(0.9205, abs=5e-4)
    assert report.notional.precision == pytest.approx(0.675, abs=5e-4)
    assert report.majority_baseline == pytest.approx(0.7479, abs=5e-4)
    assert report.corpus_baseline == pytest.approx(0.6534, abs=1e-3)
    assert report.n == 349


def test_evaluate_counts_type_iii_errors(separable_frame):
    data = ensemble.dataset_from_frame(separable_frame)
    forest = ensemble.fit(data, PARAMS, seed=7)
    flagged = separable_frame.assign(type_iii=["True"] * 10 + [""] * (len(separable_frame) - 10))
    report = ensemble.evaluate(forest, ensemble.dataset_from_frame(flagged, forest.encoding))
    assert report.accuracy == 1.0
    assert report.type_iii_total == 10
    assert report.type_iii_errors == 0


def test_forest_file_round_trip(tmp_path, separable_frame):
    data = ensemble.dataset_from_frame(separable_frame)
    forest = ensemble.fit(data, PARAMS, seed=7)
    path = ensemble.save_forest(forest, tmp_path / "model.json", {"seed": 7})
    loaded = ensemble.load_forest(path)
    np.testing.assert_array_equal(ensemble.predict_proba(loaded, data.X), ensemble.predict_proba(forest, data.X))


def test_load_rejects_other_files(tmp_path):
    path = tmp_path / "model.json"
    path.write_text('{"success": true, "message": "x", "data": {"trees": 3}}')
    with pytest.raises(SchemaError):
        ensemble.load_forest(path)
