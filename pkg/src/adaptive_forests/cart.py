"""CART probability trees and bagged ensembles of them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True)
class CartTree:
    """Axis-aligned classification tree stored as parallel node arrays.

    ``feature[i] == -1`` marks a leaf.  A row goes to ``left[i]`` iff
    ``x[feature[i]] < threshold[i]``.  ``value`` holds one class
    distribution per node; only leaf rows are used for prediction.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_classes(self) -> int:
        return self.value.shape[1]

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id reached by every row of ``X``."""
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] < self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def to_dict(self) -> dict:
        return {
            "max_depth": int(self.max_depth),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CartTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=float).reshape(len(d["feature"]), -1),
            max_depth=int(d["max_depth"]),
        )


def predict_proba(tree: CartTree, X: np.ndarray) -> np.ndarray:
    """Leaf class distribution for a row (1-D input) or each row of a matrix."""
    X = np.asarray(X, dtype=float)
    out = tree.value[tree.apply(X)]
    return out[0] if X.ndim == 1 else out


def _best_split(Xn, yn, order, n_classes, min_leaf):
    """Best Gini split for one node given per-feature sorted row orders.

    ``order`` is (n_node, n_feat) with local row positions sorted by each
    feature.  Returns (feature column, split position) or None.
    """
    n, f = order.shape
    xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn[order]
    nl = np.arange(1, n, dtype=float)[:, None]
    # Weighted child Gini is 1 - score / n, so maximise the score.
    sq_left = np.zeros((n - 1, f))
    sq_right = np.zeros((n - 1, f))
    for k in np.unique(yn):
        left = np.cumsum(ys == k, axis=0, dtype=float)
        right = left[-1] - left[:-1]
        sq_left += left[:-1] ** 2
        sq_right += right ** 2
    score = sq_left / nl + sq_right / (n - nl)
    valid = xs[:-1] < xs[1:]
    valid[: min_leaf - 1] = False
    if min_leaf > 1:
        valid[n - min_leaf:] = False
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf).T  # feature-major for tie-breaks
    best = score.max()
    flat = np.flatnonzero(score.ravel() >= best - 1e-12 * max(1.0, abs(best)))[0]
    j, i = divmod(int(flat), n - 1)
    lo, hi = xs[i, j], xs[i + 1, j]
    thr = 0.5 * (lo + hi)
    if not lo < thr:
        thr = hi
    return j, i, thr


def fit_cart(X: np.ndarray, y: np.ndarray, n_classes: int, max_depth: int,
             min_leaf: int = 1, allowed_features=None) -> CartTree:
    """Grow a CART tree by greedy Gini minimisation.

    Candidate thresholds are midpoints between consecutive distinct values;
    ties go to the lowest feature index, then the lowest threshold.  Leaves
    hold raw class frequencies.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("cannot fit a tree on an empty index set")
    if min_leaf < 1:
        raise ValueError("min_leaf must be at least 1")
    feats = np.arange(X.shape[1]) if allowed_features is None else np.sort(np.asarray(allowed_features, dtype=np.int64))
    Xf = X[:, feats]

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(np.bincount(y[rows], minlength=n_classes) / len(rows))
        return len(feature) - 1

    root_rows = np.arange(X.shape[0])
    stack = [(new_node(root_rows), root_rows, np.argsort(Xf, axis=0, kind="stable"), 0)]
    while stack:
        node, rows, order, depth = stack.pop()
        n = len(rows)
        if depth >= max_depth or n < 2 * min_leaf or value[node].max() == 1.0 or len(feats) == 0:
            continue
        local = np.empty(X.shape[0], dtype=np.int64)
        local[rows] = np.arange(n)
        found = _best_split(Xf[rows], y[rows], local[order], n_classes, min_leaf)
        if found is None:
            continue
        j, _, thr = found
        goes_left = Xf[:, j] < thr
        mask = goes_left[order]
        nl = int(mask[:, 0].sum())
        lorder = order.T[mask.T].reshape(-1, nl).T
        rorder = order.T[~mask.T].reshape(-1, n - nl).T
        lrows, rrows = lorder[:, 0], rorder[:, 0]
        feature[node], threshold[node] = int(feats[j]), float(thr)
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], np.sort(rrows), rorder, depth + 1))
        stack.append((left[node], np.sort(lrows), lorder, depth + 1))

    return CartTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.vstack(value),
        max_depth=int(max_depth),
    )


@dataclass(frozen=True)
class BaggedEnsemble:
    """``m`` trees, each fit on a random subset of rows and columns.

    ``in_bag`` and ``oob`` hold global row indices into the dataset the
    ensemble was trained from; both may be ``None`` for a loaded model.
    """

    trees: list
    feature_subsets: list
    in_bag: list | None = None
    oob: list | None = None

    @property
    def m(self) -> int:
        return len(self.trees)

    @property
    def n_classes(self) -> int:
        return self.trees[0].n_classes

    def subset(self, count: int) -> "BaggedEnsemble":
        """The first ``count`` trees, as their own ensemble."""
        cut = lambda seq: None if seq is None else seq[:count]
        return BaggedEnsemble(self.trees[:count], self.feature_subsets[:count], cut(self.in_bag), cut(self.oob))


def fit_bagged(X: np.ndarray, y: np.ndarray, n_classes: int, indices, m: int,
               max_depth: int, min_leaf: int = 1, seed: int = 0,
               instance_ratio: float | None = None,
               feature_ratio: float | None = None) -> BaggedEnsemble:
    """Fit ``m`` trees on row/column subsamples of ``X[indices]``.

    Each tree draws its row and column ratios independently from
    U[0.5, 0.9] (or uses the fixed ratios, when given) and samples without
    replacement.  Rows not drawn form the tree's out-of-bag set.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    indices = np.sort(np.asarray(indices, dtype=np.int64))
    if len(indices) < 2:
        raise ValueError("need at least 2 training instances to bag")
    p = X.shape[1]
    trees, subsets, in_bag, oob = [], [], [], []
    for j in range(m):
        rng = np.random.default_rng([seed, j])
        r_inst = rng.uniform(0.5, 0.9) if instance_ratio is None else instance_ratio
        r_feat = rng.uniform(0.5, 0.9) if feature_ratio is None else feature_ratio
        n_in = min(len(indices), max(1, int(round(r_inst * len(indices)))))
        n_feat = min(p, max(1, int(round(r_feat * p))))
        bag = np.sort(rng.choice(indices, size=n_in, replace=False))
        cols = np.sort(rng.choice(p, size=n_feat, replace=False))
        trees.append(fit_cart(X[bag], y[bag], n_classes, max_depth, min_leaf, cols))
        subsets.append(cols)
        in_bag.append(bag)
        oob.append(np.setdiff1d(indices, bag, assume_unique=True))
    return BaggedEnsemble(trees, subsets, in_bag, oob)


def proba_tensor(ens: BaggedEnsemble, X: np.ndarray) -> np.ndarray:
    """Per-tree class distributions, shape (n rows, m trees, K classes)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.stack([predict_proba(t, X) for t in ens.trees], axis=1)
