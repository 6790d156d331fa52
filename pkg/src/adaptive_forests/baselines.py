"""Static tree weightings: equal votes, OOB accuracy, OOB error forms, Cesàro.

Every scheme maps a bagged ensemble to one simplex vector that is applied
to all inputs alike.  Out-of-bag rows are global indices into ``X``/``y``.
"""

from __future__ import annotations

import logging
from fractions import Fraction

import numpy as np

from .cart import BaggedEnsemble, predict_proba, proba_tensor

logger = logging.getLogger(__name__)

TPE_FLOOR = 1e-6
WRF_FORMS = ("one_minus", "exp_inv", "pow")
DEFAULT_TREE_GRID = (100, 300, 1000)


def _oob_sets(ens: BaggedEnsemble):
    if ens.oob is None:
        raise ValueError("ensemble has no out-of-bag record")
    for j, rows in enumerate(ens.oob):
        if len(rows) == 0:
            raise ValueError(f"tree {j} has an empty out-of-bag set; lower the instance sampling ratio")
    return ens.oob


def _normalise(w_bar: np.ndarray, scheme: str) -> np.ndarray:
    total = w_bar.sum()
    if not total > 0:
        logger.warning("%s weights are all zero; falling back to equal weights", scheme)
        return np.full(len(w_bar), 1.0 / len(w_bar))
    return w_bar / total


def equal_weights(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def oob_accuracy(ens: BaggedEnsemble, X, y) -> np.ndarray:
    """Fraction of each tree's out-of-bag rows it classifies correctly."""
    X, y = np.asarray(X, dtype=float), np.asarray(y)
    return np.array([
        np.mean(predict_proba(tree, X[rows]).argmax(axis=1) == y[rows])
        for tree, rows in zip(ens.trees, _oob_sets(ens))
    ])


def oob_prediction_error(ens: BaggedEnsemble, X, y) -> np.ndarray:
    """Mean absolute gap between class-1 probability and label, per tree."""
    if ens.n_classes != 2:
        raise ValueError("the tree prediction error is defined for two classes only")
    X, y = np.asarray(X, dtype=float), np.asarray(y)
    return np.array([
        np.mean(np.abs(predict_proba(tree, X[rows])[:, 1] - y[rows]))
        for tree, rows in zip(ens.trees, _oob_sets(ens))
    ])


def twrf_weights(ens: BaggedEnsemble, X, y) -> np.ndarray:
    """Trees weighted by out-of-bag accuracy."""
    return _normalise(oob_accuracy(ens, X, y), "twrf")


def wrf_tpe_weights(ens: BaggedEnsemble, X, y, form: str = "one_minus", lam: int = 1) -> np.ndarray:
    """Trees weighted by a decreasing function of out-of-bag prediction error.

    Parameters
    ----------
    form : {"one_minus", "exp_inv", "pow"}
        ``1 - tPE``, ``exp(1 / tPE)`` or ``(1 / tPE) ** lam``.
    lam : int
        Exponent for ``form="pow"``, in 1..5.
    """
    if form not in WRF_FORMS:
        raise ValueError(f"form must be one of {WRF_FORMS}")
    tpe = np.maximum(oob_prediction_error(ens, X, y), TPE_FLOOR)
    if form == "one_minus":
        return _normalise(1.0 - tpe, "wrf")
    if form == "pow" and lam not in (1, 2, 3, 4, 5):
        raise ValueError("lam must be an integer in 1..5")
    # The other two forms overflow quickly; normalise in log space.
    log_w = 1.0 / tpe if form == "exp_inv" else -lam * np.log(tpe)
    e = np.exp(log_w - log_w.max())
    return e / e.sum()


def crf_weights(ens: BaggedEnsemble, X, y) -> np.ndarray:
    """Cesàro weights: the tree ranked r-th by OOB error gets sum_{q>=r} 1/q.

    Ranks run best to worst by out-of-bag misclassification rate, ties
    broken by tree index.  The raw weights sum to ``m``.
    """
    err = 1.0 - oob_accuracy(ens, X, y)
    m = len(err)
    rank = np.empty(m, dtype=np.int64)
    rank[np.lexsort((np.arange(m), err))] = np.arange(m)
    # tail[r] = sum_{q=r+1..m} 1/q, kept exact so each weight is correctly rounded
    tail, acc = [], Fraction(0)
    for q in range(m, 0, -1):
        acc += Fraction(1, q)
        tail.append(float(acc / m))
    return np.array(tail[::-1])[rank]


def static_predict(ens: BaggedEnsemble, w, X) -> np.ndarray:
    """Weighted mixture of tree distributions for a row or a matrix."""
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    P = np.einsum("j,njk->nk", w, proba_tensor(ens, np.atleast_2d(X)))
    return P[0] if X.ndim == 1 else P


def prefix_scores(ens: BaggedEnsemble, X, counts) -> dict[int, np.ndarray]:
    """Equal-weight forest distributions on ``X`` for each prefix size."""
    f = proba_tensor(ens, X)
    cum = np.cumsum(f, axis=1)
    return {int(c): cum[:, c - 1, :] / c for c in counts if 1 <= c <= ens.m}
