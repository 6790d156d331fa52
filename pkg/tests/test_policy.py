import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_forests.policy import PolicyTree, fit_policy_tree, objective, route

import oracles


def test_depth_zero_takes_best_column():
    R = np.array([[1.0, 2.0], [2.0, 3.0]])
    tree = fit_policy_tree(np.zeros((2, 1)), R, depth_limit=0, c_min=1)
    assert tree.n_nodes == 1 and route(tree, np.array([9.0])) == 1
    assert objective(tree, np.zeros((2, 1)), R) == 5.0


def test_four_point_split():
    X = np.array([[0.0], [0.2], [0.8], [1.0]])
    R = np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=float)
    tree = fit_policy_tree(X, R, depth_limit=1, c_min=1)
    assert tree.feature[0] == 0 and tree.threshold[0] == 0.5
    assert route(tree, np.array([0.0])) == 0 and route(tree, np.array([1.0])) == 1
    assert objective(tree, X, R) == oracles.best_depth1_objective(X, R, 1) == 4.0


def test_large_penalty_collapses():
    X = np.array([[0.0], [0.2], [0.8], [1.0]])
    R = np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=float)
    tree = fit_policy_tree(X, R, depth_limit=3, c_min=1, lam=-(2.0 + 1))
    assert tree.n_nodes == 1


def test_split_penalty_accounting():
    X = np.array([[0.0], [1.0]])
    R = np.ones((2, 1))
    leaf = fit_policy_tree(X, R, depth_limit=0, c_min=1)
    split = PolicyTree(np.array([0, -1, -1]), np.array([0.5, 0, 0]), np.array([1, -1, -1]),
                       np.array([2, -1, -1]), np.array([-1, 0, 0]), 1, 1, -0.1)
    assert objective(split, X, R) == pytest.approx(objective(leaf, X, R) - 0.1)


def test_bad_inputs():
    with pytest.raises(ValueError):
        fit_policy_tree(np.zeros((3, 1)), np.zeros((3, 1)), c_min=4)
    with pytest.raises(ValueError):
        fit_policy_tree(np.zeros((3, 1)), np.zeros((3, 0)))
    with pytest.raises(ValueError):
        fit_policy_tree(np.zeros((3, 1)), np.zeros((3, 1)), lam=0.5)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matches_depth1_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, T = int(rng.integers(1, 9)), int(rng.integers(1, 4))
    X = rng.integers(0, 4, (n, 2)).astype(float)
    R = rng.integers(0, 5, (n, T)).astype(float)
    c_min = int(rng.integers(1, max(2, n // 2 + 1)))
    lam = float(-rng.integers(0, 3))
    tree = fit_policy_tree(X, R, depth_limit=1, c_min=c_min, lam=lam)
    assert objective(tree, X, R) == pytest.approx(oracles.best_depth1_objective(X, R, c_min, lam))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_fit_invariants(seed):
    rng = np.random.default_rng(seed)
    n, T, d = int(rng.integers(10, 80)), int(rng.integers(1, 5)), int(rng.integers(1, 4))
    X = rng.normal(size=(n, 2)).round(1)
    R = rng.random((n, T))
    c_min = int(rng.integers(1, 8))
    tree = fit_policy_tree(X, R, depth_limit=d, c_min=c_min)
    assert tree.depth() <= d
    leaves, counts = np.unique(tree.apply(X), return_counts=True)
    assert (counts >= c_min).all()
    assert all(0 <= tree.treatment[l] < T for l in tree.leaves())
    # the history is monotone and ends at the fitted objective
    h = np.array(tree.history)
    assert (np.diff(h) > 0).all()
    assert h[-1] == pytest.approx(objective(tree, X, R))
    root = fit_policy_tree(X, R, depth_limit=0, c_min=c_min)
    assert objective(tree, X, R) >= objective(root, X, R) - 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([0.5, 2.0, 8.0]))
def test_reward_rescaling_leaves_tree_unchanged(seed, scale):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, (40, 2)).astype(float)
    R = rng.integers(0, 4, (40, 3)).astype(float)
    a = fit_policy_tree(X, R, depth_limit=2, c_min=3, lam=-1.0)
    b = fit_policy_tree(X, R * scale, depth_limit=2, c_min=3, lam=-1.0 * scale)
    da, db = a.to_dict(), b.to_dict()
    da.pop("lam"), db.pop("lam")
    assert da == db


def test_route_is_pure_and_vectorised():
    rng = np.random.default_rng(3)
    X, R = rng.normal(size=(50, 3)), rng.random((50, 4))
    tree = fit_policy_tree(X, R, depth_limit=3, c_min=4)
    t = route(tree, X)
    assert np.array_equal(t, route(tree, X.copy()))
    assert [route(tree, x) for x in X] == t.tolist()


def test_duplicate_columns_keep_lowest_index():
    R = np.array([[1.0, 0.0, 1.0], [1.0, 0.0, 1.0]])
    tree = fit_policy_tree(np.zeros((2, 1)), R, depth_limit=1, c_min=1)
    assert tree.treatment[tree.leaves()].tolist() == [0]


def test_dict_round_trip():
    rng = np.random.default_rng(4)
    X, R = rng.normal(size=(60, 2)), rng.random((60, 3))
    tree = fit_policy_tree(X, R, depth_limit=3, c_min=5)
    back = PolicyTree.from_dict(tree.to_dict())
    assert np.array_equal(route(back, X), route(tree, X))
