import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_forests.weights import (WeightSet, dedup, init_default, init_uniform, init_warm_start,
                                      is_simplex, project_simplex, update_weight_set)


def as_set(vectors):
    return {tuple(np.round(v, 12)) for v in vectors}


def test_uniform_degenerate_simplex():
    assert [v.tolist() for v in init_uniform(1, 3, seed=0).W] == [[1.0]]


def test_uniform_sizes_and_invariant():
    ws = init_uniform(5, 100, seed=4)
    assert ws.T == 100
    assert all(is_simplex(w) for w in ws.W)
    assert len(dedup(ws.W)) == 100


def test_uniform_mean_is_centred():
    mean = init_uniform(3, 10_000, seed=0).matrix().mean(axis=0)
    assert np.abs(mean - 1 / 3).max() < 0.02


def test_uniform_is_seeded():
    assert np.array_equal(init_uniform(4, 10, 7).matrix(), init_uniform(4, 10, 7).matrix())
    assert not np.array_equal(init_uniform(4, 10, 7).matrix(), init_uniform(4, 10, 8).matrix())


def test_warm_start_examples():
    ws = init_warm_start(3, 1)
    assert as_set(ws.W) == as_set([[1 / 3] * 3, [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    ws = init_warm_start(3, 2)
    assert ws.T == 7
    assert as_set([[0.5, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0.5]]) <= as_set(ws.W)
    assert init_warm_start(2, 2).T == 3
    with pytest.raises(ValueError):
        init_warm_start(3, 4)


def test_default_initialisation_switches_on_size():
    assert init_default(5).T == 1 + 5 + 10
    ws = init_default(50, seed=1)
    assert ws.T == 64 and ws.m == 50


def test_project_simplex_cleans_noise():
    w = project_simplex([0.5, 1e-12, 0.5000001])
    assert is_simplex(w) and w[1] == 0.0
    with pytest.raises(ValueError):
        project_simplex([0.0, -1.0])


def test_update_examples():
    u, v, h = np.array([1.0, 0]), np.array([0.0, 1]), np.array([0.5, 0.5])
    ws = WeightSet([u, np.array([0.2, 0.8])], [h])
    out = update_weight_set(ws, [u], [v])
    assert as_set(out.W) == as_set([u, v, h])
    assert [w.tolist() for w in out.W] == [u.tolist(), v.tolist(), h.tolist()]
    assert as_set(out.hist) == as_set([h, u])
    assert update_weight_set(WeightSet([u], []), [], []).W == []
    assert len(update_weight_set(WeightSet([u], []), [u], [u.copy()]).W) == 1


def test_update_rejects_bad_inputs():
    ws = WeightSet([np.array([1.0, 0.0])], [])
    with pytest.raises(ValueError):
        update_weight_set(ws, [], [np.array([0.7, 0.7])])
    with pytest.raises(KeyError):
        update_weight_set(ws, [np.array([0.0, 1.0])], [])


@st.composite
def weight_sets(draw):
    m = draw(st.integers(2, 5))
    seed = draw(st.integers(0, 10_000))
    rng = np.random.default_rng(seed)
    pool = init_uniform(m, 8, seed).W
    hist = [pool[i] for i in rng.choice(8, draw(st.integers(0, 3)), replace=False)]
    W = [w for w in pool if not any(w is h for h in hist)][:5]
    used = [W[i] for i in sorted(rng.choice(len(W), draw(st.integers(0, len(W))), replace=False))]
    new = init_uniform(m, draw(st.integers(0, 3)) or 1, seed + 1).W
    return WeightSet(W, hist), used, new


@settings(max_examples=80, deadline=None)
@given(weight_sets())
def test_update_properties(case):
    ws, used, new = case
    out = update_weight_set(ws, used, new)
    assert all(is_simplex(w) for w in out.W)
    # pairwise distinct
    assert len(dedup(out.W)) == len(out.W)
    # history only grows, and stays inside W
    assert as_set(ws.hist) <= as_set(out.hist)
    assert as_set(out.hist) <= as_set(out.W)
    assert as_set(used) <= as_set(out.hist)
    # idempotent for fixed arguments
    again = update_weight_set(ws, used, new)
    assert [w.tolist() for w in again.W] == [w.tolist() for w in out.W]
