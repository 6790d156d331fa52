"""Aggregated ensemble predictions and per-instance reward matrices."""

from __future__ import annotations

import numpy as np

VARIANTS = ("hard", "soft", "threshold_soft", "euclidean", "kl", "nce")

DEFAULT_ALPHA = 0.5
DEFAULT_EPS = 1e-6


def aggregate(f_row: np.ndarray, w) -> np.ndarray:
    """Weighted mixture of per-tree distributions for one instance.

    ``f_row`` has shape (m, K); the result is a K-vector.
    """
    return np.asarray(w, dtype=float) @ np.asarray(f_row, dtype=float)


def aggregate_all(f: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Aggregated distributions for every (instance, weight) pair, shape (n, T, K)."""
    return np.einsum("tj,njk->ntk", np.atleast_2d(W), f)


def argmax_lowest(P: np.ndarray, axis: int = -1) -> np.ndarray:
    """Argmax with ties going to the lowest index (numpy's default)."""
    return np.argmax(P, axis=axis)


def compute_reward_matrix(f: np.ndarray, labels, W, variant: str,
                          alpha: float = DEFAULT_ALPHA, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Reward of every candidate weight vector on every instance.

    Parameters
    ----------
    f : ndarray, shape (n, m, K)
        Per-tree class distributions.
    labels : array of int, shape (n,)
    W : array, shape (T, m)
        Candidate weight vectors, one per column of the result.
    variant : {"hard", "soft", "threshold_soft", "euclidean", "kl", "nce"}
    alpha : float
        Threshold for ``threshold_soft``.
    eps : float
        Probability floor used by ``kl`` (on the smoothed target) and
        ``nce`` (on the true-class probability).

    Returns
    -------
    ndarray, shape (n, T)
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown reward variant {variant!r}; expected one of {VARIANTS}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if not 0.0 < eps <= 0.01:
        raise ValueError("eps must lie in (0, 0.01]")
    y = np.asarray(labels, dtype=np.int64)
    P = aggregate_all(f, np.asarray(W, dtype=float))
    n, T, K = P.shape
    # Mixtures can overshoot 1 by an ulp; keep the stated ranges exact.
    p_true = np.clip(np.take_along_axis(P, y[:, None, None], axis=2)[..., 0], 0.0, 1.0)

    if variant == "hard":
        return (argmax_lowest(P) == y[:, None]).astype(float)
    if variant == "soft":
        return p_true
    if variant == "threshold_soft":
        return np.where(p_true >= alpha, p_true, 0.0)
    if variant == "nce":
        return np.log(np.maximum(p_true, eps))

    onehot = np.zeros((n, 1, K))
    onehot[np.arange(n), 0, y] = 1.0
    if variant == "euclidean":
        return 1.0 / (np.linalg.norm(P - onehot, axis=2) + 1.0)

    # kl: D(P || smoothed one-hot); the smoothed target never hits zero.
    target = np.maximum(onehot, eps)
    target /= target.sum(axis=2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P / target), 0.0)
    return 1.0 / (np.maximum(terms.sum(axis=2), 0.0) + 1.0)
