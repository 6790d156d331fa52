"""Programs that search the simplex for weight vectors with few errors.

For a set of instances ``I`` and per-tree class distributions ``f``, the
binary program minimises the number of misclassified instances over
simplex weights ``w``; the multiclass program maximises the number of
instances whose true class score is at least every other class score.
Big-M indicator constraints tie the binaries to the weighted scores, with
a small margin ``eps`` separating the two sides of each comparison.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..rewards import aggregate_all
from ..weights import WeightSet, dedup, is_simplex, project_simplex
from .problem import MilpProblem
from .solver import solve

logger = logging.getLogger(__name__)

BIG_M = 2.0
EPSILON = 1e-4
EXPLOIT_RADIUS = 10.0  # the "far" radius when an exploit indicator is off
MAX_CUT_ROUNDS = 5
EXHAUSTIVE_LIMIT = 100_000
SIMPLEX_DIAMETER = math.sqrt(2.0)


@dataclass
class WeightProgram:
    """A weight-search MILP plus what is needed to read and repair solutions."""

    problem: MilpProblem
    w_index: np.ndarray
    scores: np.ndarray  # (n, m, K) slice of f used by the program
    labels: np.ndarray
    eps: float
    binary_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    all_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    near: list = field(default_factory=list)  # (indicator index or -1, anchor vector)
    near_radius: float = np.inf

    def weights(self, x) -> np.ndarray:
        return project_simplex(np.maximum(np.asarray(x)[self.w_index], 0.0))

    def complete(self, w) -> np.ndarray:
        """A full variable vector for fixed ``w`` (indicators set to agree)."""
        x = np.zeros(self.problem.n_vars)
        x[self.w_index] = w
        S = aggregate_all(self.scores, w[None, :])[:, 0, :]
        K = S.shape[1]
        if K == 2:
            x[self.binary_index] = S[:, 1] >= 0.5
        else:
            own = S[np.arange(len(S)), self.labels]
            b = own[:, None] >= S
            x[self.binary_index] = b.ravel()
            x[self.all_index] = b.all(axis=1)
        if self.near:
            dist = [np.linalg.norm(w - anchor) for _, anchor in self.near]
            closest = int(np.argmin(dist))
            for t, (s, _) in enumerate(self.near):
                if s >= 0:
                    x[s] = 0.0 if t == closest else 1.0
        return x

    def heuristic(self, x_lp):
        try:
            w = self.weights(x_lp)
        except ValueError:
            return None
        if self.near:
            # Pull w onto the ball around its closest anchor; the ball lies
            # inside every tangent cut, so the result stays feasible.
            anchors = np.array([a for _, a in self.near])
            d = np.linalg.norm(anchors - w, axis=1)
            t = int(np.argmin(d))
            if d[t] > self.near_radius:
                w = anchors[t] + (w - anchors[t]) * (self.near_radius / d[t])
        return self.complete(w)


def _check_inputs(f, labels):
    f = np.asarray(f, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if f.ndim != 3 or f.shape[0] != y.shape[0]:
        raise ValueError("f must be (n, m, K) with one label per row")
    if f.shape[0] == 0:
        raise ValueError("the instance set is empty")
    return f, y


def _simplex_block(p: MilpProblem, m: int) -> np.ndarray:
    w = p.add_variables(m, "continuous", 0.0, 1.0, prefix="w")
    p.add_constraint(w, 1.0, "==", 1.0)
    return w


def build_binary_weight_problem(f, labels, M: float = BIG_M, eps: float = EPSILON) -> WeightProgram:
    """Minimise errors over simplex weights for a two-class task.

    ``k_i = 1`` forces the weighted class-1 score to at least 0.5 and
    ``k_i = 0`` forces it to at most ``0.5 - eps``.  The squared error
    ``(k_i - y_i)^2`` equals ``k_i (1 - 2 y_i) + y_i`` for binaries, so the
    objective is linear with constant ``sum y_i``.
    """
    f, y = _check_inputs(f, labels)
    if f.shape[2] != 2:
        raise ValueError("the binary program needs exactly two classes")
    n, m, _ = f.shape
    p = MilpProblem("min", offset=float(y.sum()))
    w = _simplex_block(p, m)
    k = p.add_variables(n, "binary", obj=1.0 - 2.0 * y, prefix="k")
    for i in range(n):
        # Both indicator implications share the row  w.f_i1 - M k_i.
        p.add_range(np.append(w, k[i]), np.append(f[i, :, 1], -M), 0.5 - M, 0.5 - eps)
    return WeightProgram(p, w, f, y, eps, binary_index=k)


def build_multiclass_weight_problem(f, labels, M: float = BIG_M, eps: float = EPSILON) -> WeightProgram:
    """Maximise the number of instances whose true class scores highest.

    ``b(i, q) = 1`` forces the true-class score of instance ``i`` to be at
    least its class-``q`` score and ``b(i, q) = 0`` forces it at least
    ``eps`` below; ``B(i)`` is the conjunction over ``q``.  Ties between
    classes therefore count as correct here.
    """
    f, y = _check_inputs(f, labels)
    n, m, K = f.shape
    if K < 2 or y.max() >= K:
        raise ValueError("labels must lie in [0, K) with K >= 2")
    p = MilpProblem("max")
    w = _simplex_block(p, m)
    b = np.zeros((n, K), dtype=np.int64)
    for i in range(n):
        for q in range(K):
            b[i, q] = p.add_variable("binary", name=f"b{i}_{q}")
            if q == y[i]:
                continue
            diff = f[i, :, y[i]] - f[i, :, q]  # own score minus class-q score
            idx = np.append(w, b[i, q])
            p.add_constraint(idx, np.append(diff, -M), ">=", -M)
            p.add_constraint(idx, np.append(diff, -M), "<=", -eps)
        # Comparing a class with itself always holds.
        p.add_constraint([b[i, y[i]]], 1.0, "==", 1.0)
    B = p.add_variables(n, "binary", obj=1.0, prefix="B")
    for i in range(n):
        for q in range(K):
            p.add_constraint([B[i], b[i, q]], [1.0, -1.0], "<=", 0.0)
        p.add_constraint(np.append(B[i], b[i]), np.append(1.0, -np.ones(K)), ">=", -(K - 1))
    return WeightProgram(p, w, f, y, eps, binary_index=b.ravel(), all_index=B)


def build_weight_problem(f, labels, M: float = BIG_M, eps: float = EPSILON) -> WeightProgram:
    f = np.asarray(f)
    if f.shape[2] == 2:
        return build_binary_weight_problem(f, labels, M, eps)
    return build_multiclass_weight_problem(f, labels, M, eps)


def _tangent_cut(prog: WeightProgram, s: int, anchor, point, radius: float):
    """Linear cut from the tangent of ``|w - anchor|^2`` at ``point``.

    Encodes ``|w - anchor|^2 <= (R s + r)^2`` from outside; with ``s``
    binary the right side is ``r^2 + s ((R + r)^2 - r^2)``.
    """
    g = 2.0 * (point - anchor)
    const = float(np.dot(point - anchor, point - anchor) - np.dot(g, point))
    slope = (EXPLOIT_RADIUS + radius) ** 2 - radius ** 2
    prog.problem.add_constraint(np.append(prog.w_index, s), np.append(g, -slope), "<=", radius ** 2 - const)


def add_exploit_constraints(prog: WeightProgram, hist, radius: float) -> None:
    """Require ``w`` within ``radius`` of at least one historical vector."""
    hist = [np.asarray(h, dtype=float) for h in hist]
    if not hist:
        raise ValueError("exploitation needs a nonempty history")
    p = prog.problem
    m = len(prog.w_index)
    prog.near_radius = float(radius)
    s_idx = p.add_variables(len(hist), "binary", prefix="s")
    p.add_constraint(s_idx, 1.0, "<=", len(hist) - 1)
    for s, h in zip(s_idx, hist):
        prog.near.append((int(s), h))
        for j in range(m):
            for sign in (1.0, -1.0):
                point = h.copy()
                point[j] += sign * radius
                _tangent_cut(prog, int(s), h, point, radius)


@dataclass(frozen=True)
class CandidateParams:
    min_gap: float = 0.1
    max_gap: float = 0.3
    time_limit: float = 30.0
    M: float = BIG_M
    eps: float = EPSILON


def _solve_for_weights(prog: WeightProgram, time_limit: float):
    sol = solve(prog.problem, time_limit=time_limit, heuristic=prog.heuristic)
    if not sol.has_solution:
        logger.info("weight program returned %s; no candidate from this unit", sol.status)
        return None
    return prog.weights(sol.values)


def _exploit_one(f, y, anchor, params: CandidateParams, deadline: float):
    """Best weights within ``max_gap`` of one anchor, as ``(w, objective)``.

    The tangent cuts at ``anchor +- max_gap e_j`` reduce to the box
    ``|w_j - anchor_j| <= max_gap``, set here as variable bounds.  A
    solution outside the ball gets the supporting cut where the segment to
    the anchor crosses the sphere.  If the rounds run out, the last
    solution is pulled onto the ball and scored as is.
    """
    r = params.max_gap
    prog = build_weight_problem(f, y, params.M, params.eps)
    prog.near.append((-1, anchor))
    prog.near_radius = r
    for j, idx in enumerate(prog.w_index):
        prog.problem.set_bounds(int(idx), max(0.0, anchor[j] - r), min(1.0, anchor[j] + r))
    w = None
    for _ in range(MAX_CUT_ROUNDS):
        sol = solve(prog.problem, time_limit=deadline - time.monotonic(), heuristic=prog.heuristic)
        if not sol.has_solution:
            break
        w = prog.weights(sol.values)
        d = np.linalg.norm(w - anchor)
        if d <= r + 1e-9:
            return w, sol.objective_value
        u = (w - anchor) / d
        prog.problem.add_constraint(prog.w_index, u, "<=", float(u @ anchor) + r)
    if w is None:
        return None
    w = anchor + (w - anchor) * (r / np.linalg.norm(w - anchor))
    return w, prog.problem.evaluate(prog.complete(w))


def _exploit(f, y, hist, params: CandidateParams):
    """Best weights within ``max_gap`` of at least one historical vector.

    Equivalent to one program with a selector binary per anchor, solved
    as one smaller program per anchor that shares the time budget.
    """
    hist = [np.asarray(h, dtype=float) for h in hist]
    end = time.monotonic() + params.time_limit
    sign = 1.0 if f.shape[2] == 2 else -1.0  # the binary program minimises
    best = None
    for t, h in enumerate(hist):
        now = time.monotonic()
        found = _exploit_one(f, y, h, params, now + (end - now) / (len(hist) - t))
        if found is not None and (best is None or sign * found[1] < sign * best[1] - 1e-9):
            best = found
    if best is None:
        logger.info("no exploitation candidate near any historical vector")
        return None
    return best[0]


def _explore(f, y, existing, params: CandidateParams):
    prog = build_weight_problem(f, y, params.M, params.eps)
    existing = [np.asarray(v, dtype=float) for v in existing]
    for _ in range(MAX_CUT_ROUNDS):
        w = _solve_for_weights(prog, params.time_limit)
        if w is None:
            return None
        if not existing:
            return w
        dist = np.array([np.linalg.norm(w - v) for v in existing])
        if dist.min() >= params.min_gap:
            return w
        near = existing[int(np.argmin(dist))]
        u = w - near
        if np.linalg.norm(u) < 1e-12:
            u = np.full(len(w), 1.0 / len(w)) - near
            if np.linalg.norm(u) < 1e-12:
                u = np.eye(len(w))[0] - near
        u = u / np.linalg.norm(u)
        # Half-space of points at least min_gap from ``near`` along u.
        prog.problem.add_constraint(prog.w_index, u, ">=", float(u @ near) + params.min_gap)
    logger.info("exploration cuts did not reach the minimum gap; dropping this unit")
    return None


def scope_units(tree, X_policy, c_min: int, scope: str, n: int) -> list[np.ndarray]:
    if scope == "global":
        return [np.arange(n)]
    if scope != "per_leaf":
        raise ValueError("scope must be 'global' or 'per_leaf'")
    if tree is None or tree.n_nodes == 1:
        return [np.arange(n)]
    leaf_of = tree.apply(np.asarray(X_policy, dtype=float))
    units = []
    for leaf in tree.leaves():
        rows = np.flatnonzero(leaf_of == leaf)
        if len(rows) >= max(1, c_min):
            units.append(rows)
    return units


def generate_candidates(f, labels, tree, X_policy, ws: WeightSet, mode: str = "plain",
                        scope: str = "global", params: CandidateParams = CandidateParams()) -> list[np.ndarray]:
    """New weight vectors from one weight program per scope unit.

    Parameters
    ----------
    f : ndarray, shape (n, m, K)
        Per-tree distributions of the instances the policy tree was fit on.
    labels : array of int
    tree : PolicyTree or None
        Used to split the instances into leaves when ``scope="per_leaf"``.
    X_policy : ndarray
        Policy features of the same instances.
    ws : WeightSet
    mode : {"plain", "explore", "exploit"}
    scope : {"global", "per_leaf"}
    params : CandidateParams

    Returns
    -------
    list of ndarray
        Simplex vectors, none within the dedup tolerance of ``ws.W`` or of
        each other.
    """
    f, y = _check_inputs(f, labels)
    if mode not in ("plain", "explore", "exploit"):
        raise ValueError("mode must be 'plain', 'explore' or 'exploit'")
    if not ws.W:
        raise ValueError("the weight set is empty")
    if mode == "exploit" and not ws.hist:
        raise ValueError("exploitation needs a nonempty history")
    c_min = tree.c_min if tree is not None else 1
    found = []
    for rows in scope_units(tree, X_policy, c_min, scope, len(y)):
        if mode == "plain":
            w = _solve_for_weights(build_weight_problem(f[rows], y[rows], params.M, params.eps), params.time_limit)
        elif mode == "explore":
            w = _explore(f[rows], y[rows], ws.W, params)
        else:
            w = _exploit(f[rows], y[rows], ws.hist, params)
        if w is not None and is_simplex(w):
            found.append(w)
    return dedup(found, against=ws.W)


def correct_counts(candidates, f, labels, leaf_of) -> tuple[np.ndarray, np.ndarray]:
    """(leaf ids, count matrix) with ``count[l, c]`` = hits of candidate c on leaf l."""
    W = np.vstack(candidates)
    hits = aggregate_all(np.asarray(f, dtype=float), W).argmax(axis=2) == np.asarray(labels)[:, None]
    leaves = np.unique(leaf_of)
    counts = np.vstack([hits[leaf_of == leaf].sum(axis=0) for leaf in leaves])
    return leaves, counts.astype(float)


def top_k_from_counts(counts: np.ndarray, k: int, time_limit: float = 30.0) -> list[int]:
    """Indices (ascending) of at most ``k`` candidates maximising the
    summed per-leaf best count; exhaustive when the subset count is small."""
    if k < 1:
        raise ValueError("k must be at least 1")
    L, N = counts.shape
    size = min(k, N)
    if size == N:
        return list(range(N))
    if math.comb(N, size) <= EXHAUSTIVE_LIMIT:
        best, choice = -np.inf, None
        for subset in itertools.combinations(range(N), size):
            value = counts[:, subset].max(axis=1).sum()
            if value > best + 1e-9:
                best, choice = value, subset
        return list(choice)
    p = MilpProblem("max")
    s = p.add_variables(N, "binary", prefix="s")
    assign = np.array([[p.add_variable("binary", obj=counts[l, c], name=f"a{l}_{c}") for c in range(N)]
                       for l in range(L)])
    p.add_constraint(s, 1.0, "<=", size)
    for l in range(L):
        p.add_constraint(assign[l], 1.0, "==", 1.0)
        for c in range(N):
            p.add_constraint([assign[l, c], s[c]], [1.0, -1.0], "<=", 0.0)
    sol = solve(p, time_limit=time_limit)
    if not sol.has_solution:
        logger.info("top-k selection returned %s; keeping per-leaf winners", sol.status)
        return sorted(set(int(c) for c in counts.argmax(axis=1)))[:size]
    return [c for c in range(N) if sol.values[s[c]] > 0.5]


def select_top_k(new_W, f, labels, tree, X_policy, k: int, time_limit: float = 30.0) -> list[np.ndarray]:
    """At most ``k`` of ``new_W`` maximising per-leaf correct counts.

    Each leaf of ``tree`` is credited with the best selected candidate on
    its own instances.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not new_W:
        return []
    leaf_of = tree.apply(np.asarray(X_policy, dtype=float)) if tree is not None else np.zeros(len(labels), dtype=np.int64)
    _, counts = correct_counts(new_W, f, labels, leaf_of)
    return [np.asarray(new_W[c], dtype=float) for c in top_k_from_counts(counts, k, time_limit)]
