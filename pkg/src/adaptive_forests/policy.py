"""Reward-maximising policy trees that route instances to weight vectors.

The tree maximises ``sum_i R[i, tau(x_i)] + lam * n_splits`` over
axis-aligned trees of bounded depth whose leaves each hold at least
``c_min`` training rows.  Fitting grows a greedy tree and then improves it
by coordinate descent: every internal node is revisited breadth-first and
its split replaced (or removed) when that strictly raises the objective,
with the subtree below regrown greedily.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numba
import numpy as np

LEAF = -1


@numba.njit(cache=True)
def _scan_splits(R, X, order, total, lo, hi, tol):
    """Best split value and threshold for every feature of one node.

    ``order[:, f]`` lists the node's rows sorted by feature ``f``.  A split
    after sorted position ``i`` keeps rows ``0..i`` on the left; only
    positions ``lo..hi`` between distinct values are candidates.
    """
    n, F = order.shape
    T = R.shape[1]
    value = np.full(F, -np.inf)
    thr = np.zeros(F)
    left = np.empty(T)
    scores = np.empty(n)
    for f in range(F):
        left[:] = 0.0
        best = -np.inf
        for i in range(hi + 1):
            r = order[i, f]
            for t in range(T):
                left[t] += R[r, t]
            scores[i] = -np.inf
            if i < lo or not X[r, f] < X[order[i + 1, f], f]:
                continue
            ml = -np.inf
            mr = -np.inf
            for t in range(T):
                if left[t] > ml:
                    ml = left[t]
                if total[t] - left[t] > mr:
                    mr = total[t] - left[t]
            scores[i] = ml + mr
            if scores[i] > best:
                best = scores[i]
        if best == -np.inf:
            continue
        for i in range(lo, hi + 1):
            if scores[i] >= best - tol:
                a = X[order[i, f], f]
                b = X[order[i + 1, f], f]
                mid = 0.5 * (a + b)
                value[f] = best
                thr[f] = mid if a < mid else b
                break
    return value, thr


@dataclass(frozen=True)
class PolicyTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    treatment: np.ndarray  # index into W at leaves, -1 at internal nodes
    depth_limit: int
    c_min: int
    lam: float
    history: tuple = field(default=(), compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_splits(self) -> int:
        return int((self.feature != LEAF).sum())

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature == LEAF)

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
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
            "depth_limit": int(self.depth_limit),
            "c_min": int(self.c_min),
            "lam": float(self.lam),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "treatment": self.treatment.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            treatment=np.asarray(d["treatment"], dtype=np.int64),
            depth_limit=int(d["depth_limit"]),
            c_min=int(d["c_min"]),
            lam=float(d["lam"]),
        )


def route(tree: PolicyTree, X: np.ndarray) -> np.ndarray:
    """Treatment index for a row (scalar result) or for each row of a matrix."""
    X = np.asarray(X, dtype=float)
    t = tree.treatment[tree.apply(X)]
    return int(t[0]) if X.ndim == 1 else t


def objective(tree: PolicyTree, X: np.ndarray, R: np.ndarray) -> float:
    R = np.asarray(R, dtype=float)
    t = route(tree, np.atleast_2d(X))
    return float(R[np.arange(R.shape[0]), t].sum() + tree.lam * tree.n_splits)


class _Node:
    __slots__ = ("rows", "depth", "feature", "threshold", "left", "right", "treatment", "value")

    def __init__(self, rows, depth):
        self.rows = rows
        self.depth = depth
        self.feature = LEAF
        self.threshold = 0.0
        self.left = self.right = None
        self.treatment = LEAF
        self.value = 0.0  # subtree objective


class _Fitter:
    def __init__(self, X, R, depth_limit, c_min, lam, search_width):
        self.X = X
        self.R = R
        self.depth_limit = depth_limit
        self.c_min = c_min
        self.lam = lam
        self.search_width = search_width
        scale = max(float(np.abs(R).max(initial=0.0)), abs(lam), 1e-300)
        self.tol = 1e-9 * scale
        self.root_order = np.argsort(X, axis=0, kind="stable")
        self._tables = {}

    def order_for(self, rows):
        if len(rows) * 8 < self.X.shape[0]:
            return rows[np.argsort(self.X[rows], axis=0, kind="stable")]
        mask = np.zeros(self.X.shape[0], dtype=bool)
        mask[rows] = True
        o = self.root_order
        return o.T[mask[o].T].reshape(o.shape[1], len(rows)).T

    def best_treatment(self, rows):
        sums = self.R[rows].sum(axis=0)
        best = sums.max()
        t = int(np.flatnonzero(sums >= best - self.tol)[0])
        return t, float(sums[t])

    def split_table(self, rows, order=None):
        """Per-feature best one-level split value and threshold.

        Returns (value, threshold) arrays over features, with ``-inf``
        value where a feature admits no valid split.  Results are cached
        per row set, since local search revisits the same nodes.
        """
        key = rows.tobytes()
        if key not in self._tables:
            if order is None:
                order = self.order_for(rows)
            self._tables[key] = self._split_table(rows, order)
        return self._tables[key]

    def _split_table(self, rows, order):
        n = order.shape[0]
        lo, hi = self.c_min - 1, n - self.c_min - 1  # left block holds positions 0..i
        if hi < lo:
            F = order.shape[1]
            return np.full(F, -np.inf), np.zeros(F)
        return _scan_splits(self.R, self.X, order, self.R[rows].sum(axis=0), lo, hi, self.tol)

    def make_leaf(self, node):
        node.feature, node.threshold = LEAF, 0.0
        node.left = node.right = None
        node.treatment, node.value = self.best_treatment(node.rows)

    def can_split(self, node):
        return node.depth < self.depth_limit and len(node.rows) >= 2 * self.c_min

    def apply_split(self, node, f, thr):
        goes_left = self.X[node.rows, f] < thr
        node.feature, node.threshold, node.treatment = int(f), float(thr), LEAF
        node.left = _Node(node.rows[goes_left], node.depth + 1)
        node.right = _Node(node.rows[~goes_left], node.depth + 1)

    def grow(self, node, order=None):
        """Greedy top-down growth below ``node``; sets subtree values."""
        self.make_leaf(node)
        if not self.can_split(node):
            return node
        value, thr = self.split_table(node.rows, order)
        best = value.max()
        if not np.isfinite(best) or best - node.value + self.lam <= self.tol:
            return node
        if order is None:
            order = self.order_for(node.rows)
        f = int(np.flatnonzero(value >= best - self.tol)[0])
        self.apply_split(node, f, thr[f])
        goes_left = self.X[order, f] < thr[f]
        nl = len(node.left.rows)
        self.grow(node.left, order.T[goes_left.T].reshape(-1, nl).T)
        self.grow(node.right, order.T[~goes_left.T].reshape(-1, len(node.rows) - nl).T)
        node.value = node.left.value + node.right.value + self.lam
        return node

    def candidate(self, node, f, thr):
        """Subtree value when ``node`` splits on (f, thr) with greedy children."""
        trial = _Node(node.rows, node.depth)
        self.apply_split(trial, f, thr)
        if len(trial.left.rows) < self.c_min or len(trial.right.rows) < self.c_min:
            return None
        self.grow(trial.left)
        self.grow(trial.right)
        trial.value = trial.left.value + trial.right.value + self.lam
        return trial

    def improve(self, node):
        """Try to replace the split at ``node``; True on strict improvement."""
        current = node.value
        leaf_t, leaf_v = self.best_treatment(node.rows)
        best_val, best = leaf_v, None
        value, thr = self.split_table(node.rows)
        ranked = [f for f in np.argsort(-value, kind="stable")[: self.search_width] if np.isfinite(value[f])]
        options = [(node.feature, node.threshold)] + [(int(f), float(thr[f])) for f in ranked]
        for f, t in options:
            trial = self.candidate(node, f, t)
            if trial is not None and trial.value > best_val + self.tol:
                best_val, best = trial.value, trial
        if best_val <= current + self.tol:
            return False
        if best is None:
            self.make_leaf(node)
        else:
            node.feature, node.threshold, node.treatment = best.feature, best.threshold, LEAF
            node.left, node.right, node.value = best.left, best.right, best.value
        return True

    def refresh(self, node):
        if node.feature == LEAF:
            return node.value
        node.value = self.refresh(node.left) + self.refresh(node.right) + self.lam
        return node.value


def _internal_bfs(root):
    out, queue = [], deque([root])
    while queue:
        node = queue.popleft()
        if node.feature != LEAF:
            out.append(node)
            queue.extend((node.left, node.right))
    return out


def _flatten(root, depth_limit, c_min, lam, history):
    feature, threshold, left, right, treatment = [], [], [], [], []
    stack = [(root, None, None)]
    while stack:
        node, parent, side = stack.pop()
        idx = len(feature)
        feature.append(node.feature)
        threshold.append(node.threshold)
        left.append(LEAF)
        right.append(LEAF)
        treatment.append(node.treatment)
        if parent is not None:
            (left if side == "L" else right)[parent] = idx
        if node.feature != LEAF:
            stack.append((node.right, idx, "R"))
            stack.append((node.left, idx, "L"))
    return PolicyTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        treatment=np.asarray(treatment, dtype=np.int64),
        depth_limit=int(depth_limit),
        c_min=int(c_min),
        lam=float(lam),
        history=tuple(history),
    )


def fit_policy_tree(X: np.ndarray, R: np.ndarray, depth_limit: int = 5, c_min: int = 10,
                    lam: float = 0.0, seed: int | None = None, search_width: int = 3,
                    max_passes: int = 20) -> PolicyTree:
    """Fit a policy tree maximising total reward plus ``lam`` per split.

    Parameters
    ----------
    X : ndarray, shape (n, d)
        Policy features.
    R : ndarray, shape (n, T)
        Reward of each of the T treatments on each row.
    depth_limit, c_min : int
        Maximum depth and minimum rows per leaf.
    lam : float
        Per-split reward, must be <= 0.
    seed : int, optional
        Accepted for interface symmetry; fitting is deterministic.
    search_width : int
        Number of alternative features (best one-level split each) tried at
        a node during local search, besides its current split.
    max_passes : int
        Safety cap on local-search passes.

    The returned tree's ``history`` lists the objective after greedy growth
    and after every accepted local-search move.
    """
    X = np.asarray(X, dtype=float)
    R = np.asarray(R, dtype=float)
    if X.ndim != 2 or R.ndim != 2 or X.shape[0] != R.shape[0]:
        raise ValueError("X and R must be 2-D with aligned rows")
    if R.shape[1] < 1:
        raise ValueError("R needs at least one treatment column")
    if lam > 0:
        raise ValueError("lam must be <= 0")
    n = X.shape[0]
    if c_min > n:
        raise ValueError(f"c_min={c_min} exceeds the number of rows ({n})")
    c_min = max(1, int(c_min))
    # Identical reward columns are interchangeable; keep the first of each.
    _, first = np.unique(R, axis=1, return_index=True)
    keep = np.sort(first)
    fitter = _Fitter(X, R[:, keep], depth_limit, c_min, lam, search_width)
    root = fitter.grow(_Node(np.arange(n), 0), fitter.root_order)
    history = [root.value]
    for _ in range(max_passes):
        changed = False
        live = {id(v) for v in _internal_bfs(root)}
        for node in _internal_bfs(root):
            if id(node) not in live:
                continue  # replaced by an earlier move in this pass
            if fitter.improve(node):
                changed = True
                fitter.refresh(root)
                history.append(root.value)
                live = {id(v) for v in _internal_bfs(root)}
        if not changed:
            break
    tree = _flatten(root, depth_limit, c_min, lam, history)
    leaf = tree.treatment != LEAF
    tree.treatment[leaf] = keep[tree.treatment[leaf]]
    return tree
