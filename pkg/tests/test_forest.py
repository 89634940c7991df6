import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from frugal import Dataset
from frugal.errors import ContractError
from frugal.forest import (
    ForestModel,
    ForestParams,
    Tree,
    best_split,
    entropy,
    fit_tree,
    forest_fit,
    forest_predict,
)


@pytest.mark.parametrize("counts, expected", [((5, 5), 1.0), ((10, 0), 0.0)])
def test_entropy_trivial(counts, expected):
    assert entropy(counts) == expected


def test_entropy_three_to_one():
    assert entropy((3, 1)) == pytest.approx(oracles.entropy([3, 1]), abs=1e-12)
    assert entropy((3, 1)) == pytest.approx(0.8113, abs=1e-4)
    with pytest.raises(ContractError):
        entropy((0, 0))


def test_split_width_rule():
    p = ForestParams()
    assert [p.split_width(m) for m in (1, 2, 3, 4, 10, 16)] == [1, 1, 1, 2, 3, 4]
    with pytest.raises(ContractError):
        ForestParams(n_trees=0)
    with pytest.raises(ContractError):
        ForestParams(min_split=1)


def _one_dim():
    rng = np.random.default_rng(0)
    x = np.concatenate([-rng.uniform(0.1, 3, 50), rng.uniform(0.1, 3, 50)])
    y = np.array([0] * 50 + [1] * 50)
    return x, y


def test_one_dimensional_split_at_separating_midpoint():
    x, y = _one_dim()
    gain, f, thr = oracles.best_gain(x.reshape(-1, 1).tolist(), y.tolist(), [0])
    expected = (x[y == 0].max() + x[y == 1].min()) / 2
    assert f == 0 and thr == pytest.approx(expected) and gain == pytest.approx(1.0)

    d = Dataset.from_arrays(x, y)
    model = forest_fit(d, ForestParams(n_trees=20, seed=1))
    for t in model.trees:
        assert t.n_nodes == 3 and t.feature[0] == 0
        assert x[y == 0].max() <= t.threshold[0] < x[y == 1].min()
    pred = forest_predict(model, d)
    assert (pred.labels == y).all()


def test_pure_data_constant_model():
    d = Dataset.from_arrays(np.random.default_rng(1).random((30, 3)), [1] * 30)
    model = forest_fit(d, ForestParams(n_trees=7))
    pred = forest_predict(model, np.random.default_rng(2).random((5, 3)))
    assert pred.labels.tolist() == [1] * 5 and pred.scores.tolist() == [1.0] * 5


def test_single_instance_leaf():
    d = Dataset.from_arrays([[0.3, 0.7]], [0])
    model = forest_fit(d, ForestParams(n_trees=3))
    assert all(t.n_nodes == 1 for t in model.trees)
    assert forest_predict(model, [[9.0, 9.0]]).labels.tolist() == [0]


def _leaf(n0, n1):
    return Tree(
        np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]), np.array([[n0, n1]])
    )


def test_vote_arithmetic_and_ties():
    model = ForestModel([_leaf(0, 3), _leaf(1, 2), _leaf(4, 0)], 1)
    pred = forest_predict(model, [[0.0]])
    assert pred.scores[0] == pytest.approx(2 / 3) and pred.labels[0] == 1
    # a tied leaf votes positive; a half-half forest predicts positive
    tied = ForestModel([_leaf(2, 2), _leaf(3, 0)], 1)
    pred = forest_predict(tied, [[0.0]])
    assert pred.scores[0] == 0.5 and pred.labels[0] == 1


def test_feature_count_mismatch():
    model = ForestModel([_leaf(0, 1)], 2)
    with pytest.raises(ContractError):
        forest_predict(model, np.zeros((1, 3)))
    with pytest.raises(ContractError):
        forest_fit(Dataset.from_arrays([[1.0]], [-1]))


def blobs(seed, n=200, sigma=1.0):
    """Two Gaussian blobs whose centres each sit 2 sigma from the line x0 + x1 = 0."""
    rng = np.random.default_rng(seed)
    direction = np.array([1.0, 1.0]) / np.sqrt(2)
    centre = 2 * sigma * direction
    X = np.vstack([rng.normal(-centre, sigma, (n, 2)), rng.normal(centre, sigma, (n, 2))])
    y = np.array([0] * n + [1] * n)
    return X, y


def test_blobs_accuracy():
    accs = []
    for seed in range(3):
        X, y = blobs(seed)
        Xt, yt = blobs(seed + 100)
        model = forest_fit(Dataset.from_arrays(X, y), ForestParams(n_trees=50, seed=seed))
        accs.append((forest_predict(model, Xt).labels == yt).mean())
    assert np.median(accs) >= 0.95


matrices = st.integers(2, 25).flatmap(
    lambda n: st.tuples(
        st.lists(st.lists(st.integers(0, 8), min_size=3, max_size=3), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_best_split_matches_exhaustive_scan(data):
    rows, y = data
    X = np.array(rows, dtype=float)
    f, thr, gain = best_split(X, y)
    o_gain, o_f, o_thr = oracles.best_gain(rows, y, [0, 1, 2])
    if o_f is None:
        assert f == -1
        return
    assert gain == pytest.approx(o_gain, abs=1e-12)
    # equal gains tie-break to the lowest feature, then the lowest threshold
    assert (f, thr) == (o_f, o_thr)


def test_unlimited_single_tree_fits_distinct_data():
    rng = np.random.default_rng(5)
    X = rng.random((120, 6))
    y = rng.integers(0, 2, 120)
    tree = fit_tree(X, y, ForestParams(), seed=3)
    leaf_counts = tree.counts[tree.leaves(X)]
    assert ((leaf_counts[:, 1] > leaf_counts[:, 0]).astype(int) == y).all()
    assert (tree.feature[tree.feature >= 0] < 6).all()


def test_determinism_and_vote_fraction():
    X, y = blobs(7, n=80)
    d = Dataset.from_arrays(X, y)
    p = ForestParams(n_trees=13, seed=42)
    a = forest_predict(forest_fit(d, p), X)
    b = forest_predict(forest_fit(d, p), X)
    assert np.array_equal(a.scores, b.scores) and np.array_equal(a.labels, b.labels)
    votes = a.scores * 13
    assert np.allclose(votes, np.round(votes)) and (votes >= 0).all() and (votes <= 13).all()
    c = forest_predict(forest_fit(d, ForestParams(n_trees=13, seed=43)), X)
    assert not np.array_equal(a.scores, c.scores)


def test_max_depth_and_min_split():
    X, y = blobs(3, n=60)
    d = Dataset.from_arrays(X, y)
    stump = forest_fit(d, ForestParams(n_trees=5, max_depth=1))
    assert all(t.n_nodes <= 3 for t in stump.trees)
    coarse = forest_fit(d, ForestParams(n_trees=5, min_split=200))
    assert all(t.n_nodes == 1 for t in coarse.trees)


def test_json_dump():
    x, y = _one_dim()
    model = forest_fit(Dataset.from_arrays(x, y), ForestParams(n_trees=2))
    doc = json.loads(json.dumps(model.to_dict()))
    root = doc["trees"][0]
    assert root["feature"] == 0 and "threshold" in root
    assert sum(root["left"]["counts"]) + sum(root["right"]["counts"]) == 100
