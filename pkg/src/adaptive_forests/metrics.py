"""Rank-based AUC, one-vs-rest AUC and accuracy."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def auc_binary(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic.

    Tied scores share their midrank, so each tied positive/negative pair
    counts one half.

    Parameters
    ----------
    scores : array of float
        Higher means more likely positive.
    labels : array of {0, 1}

    Returns
    -------
    float
        Probability that a random positive outranks a random negative.
    """
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels must have the same length")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    # Midranks are half-integers, so both U statistics are exact.
    u_pos = rankdata(s)[pos].sum() - n_pos * (n_pos + 1) / 2
    u_neg = n_pos * n_neg - u_pos
    total = n_pos * n_neg
    # Dividing the smaller statistic keeps AUC(y) + AUC(1 - y) == 1 exactly.
    return u_pos / total if u_pos <= u_neg else 1.0 - u_neg / total


def ovr_auc(P, labels) -> float:
    """Mean over classes of the AUC of column k against the rest."""
    P = np.asarray(P, dtype=float)
    y = np.asarray(labels)
    if P.ndim != 2 or P.shape[0] != len(y):
        raise ValueError("score matrix must be (n, K) with one label per row")
    K = P.shape[1]
    missing = [k for k in range(K) if not (y == k).any()]
    if missing:
        raise ValueError(f"class {missing[0]} is absent from the labels")
    return float(np.mean([auc_binary(P[:, k], (y == k).astype(int)) for k in range(K)]))


def score_auc(P, labels) -> float:
    """AUC on the class-1 column for two classes, OvR AUC otherwise."""
    P = np.asarray(P, dtype=float)
    if P.shape[1] == 2:
        return auc_binary(P[:, 1], labels)
    return ovr_auc(P, labels)


def accuracy(P, labels) -> float:
    """Share of rows whose argmax (ties to the lowest class) is the label."""
    return float(np.mean(np.asarray(P).argmax(axis=1) == np.asarray(labels)))
