import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_forests.metrics import accuracy, auc_binary, ovr_auc, score_auc

import oracles


def test_perfect_and_reversed():
    assert auc_binary([0.9, 0.1], [1, 0]) == 1.0
    assert auc_binary([0.1, 0.9], [1, 0]) == 0.0
    assert auc_binary([0.5, 0.5], [1, 0]) == 0.5


def test_errors():
    with pytest.raises(ValueError):
        auc_binary([0.1, 0.2], [1, 1])
    with pytest.raises(ValueError):
        auc_binary([0.1, 0.2], [1, 2])
    with pytest.raises(ValueError):
        ovr_auc(np.eye(3)[:2], [0, 1])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_binary_matches_pairwise_and_complement(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 40))
    s = rng.integers(0, 6, n) / 5.0  # coarse grid for plenty of ties
    y = rng.integers(0, 2, n)
    y[:2] = [0, 1]
    a = auc_binary(s, y)
    assert abs(a - oracles.pairwise_auc(s, y)) <= 1e-12
    assert a + auc_binary(s, 1 - y) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_rank_invariance(seed):
    rng = np.random.default_rng(seed)
    s, y = rng.normal(size=30), rng.integers(0, 2, 30)
    y[:2] = [0, 1]
    a = auc_binary(s, y)
    assert auc_binary(np.exp(s), y) == a
    assert auc_binary(3 * s + 7, y) == a


def test_ovr_examples():
    y = np.array([0, 1, 2, 1])
    assert ovr_auc(np.eye(3)[y], y) == 1.0
    rng = np.random.default_rng(0)
    P = rng.dirichlet([1, 1], 10)
    y2 = np.array([0, 1] * 5)
    assert ovr_auc(P, y2) == pytest.approx(auc_binary(P[:, 1], y2), abs=1e-15)
    assert score_auc(P, y2) == auc_binary(P[:, 1], y2)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_ovr_matches_pairwise(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 5))
    y = np.concatenate([np.arange(K), rng.integers(0, K, 12)])
    P = rng.integers(0, 4, (len(y), K)).astype(float)
    expected = np.mean([oracles.pairwise_auc(P[:, k], (y == k).astype(int)) for k in range(K)])
    got = ovr_auc(P, y)
    assert abs(got - expected) <= 1e-12
    assert 0.0 <= got <= 1.0
    per_class = [auc_binary(P[:, k], (y == k).astype(int)) for k in range(K)]
    assert (got == 1.0) == all(a == 1.0 for a in per_class)


def test_accuracy_tie_goes_to_lowest_class():
    assert accuracy(np.array([[0.5, 0.5], [0.2, 0.8]]), [0, 1]) == 1.0
