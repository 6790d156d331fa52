"""Weight vectors on the probability simplex and the candidate pool.

The pool ``W`` holds the weight vectors a policy tree may assign to its
leaves.  ``hist`` remembers every vector that some policy tree actually
used, so that it can be brought back after being pruned from ``W``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

DEDUP_TOL = 1e-9
SIMPLEX_TOL = 1e-9

# Warm start is used while 1 + C(m, 1) + C(m, 2) stays within this size.
WARM_START_LIMIT = 200
UNIFORM_DEFAULT_SIZE = 64


def is_simplex(w, tol: float = SIMPLEX_TOL) -> bool:
    w = np.asarray(w, dtype=float)
    return bool(w.ndim == 1 and w.size > 0 and (w >= -tol).all() and abs(w.sum() - 1.0) <= tol)


def project_simplex(w, clip: float = 1e-9) -> np.ndarray:
    """Zero out entries below ``clip`` and renormalise.

    Meant for cleaning solver output that is already nearly on the simplex,
    not as a Euclidean projection.
    """
    w = np.asarray(w, dtype=float).copy()
    w[w <= clip] = 0.0
    total = w.sum()
    if total <= 0:
        raise ValueError("weight vector has no positive mass")
    return w / total


def dedup(vectors, against=(), tol: float = DEDUP_TOL) -> list[np.ndarray]:
    """Drop vectors within ``tol`` of an earlier vector or of ``against``."""
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    against = [np.asarray(a, dtype=float) for a in against]
    if not vectors:
        return []
    seen = np.empty((len(against) + len(vectors), vectors[0].size))
    count = 0
    for a in against:
        seen[count] = a
        count += 1
    kept: list[np.ndarray] = []
    for v in vectors:
        if count and (np.sqrt(((seen[:count] - v) ** 2).sum(axis=1)) <= tol).any():
            continue
        kept.append(v)
        seen[count] = v
        count += 1
    return kept


@dataclass
class WeightSet:
    """Ordered candidate pool plus the history of used vectors."""

    W: list = field(default_factory=list)
    hist: list = field(default_factory=list)

    @property
    def T(self) -> int:
        return len(self.W)

    @property
    def m(self) -> int:
        if self.W:
            return len(self.W[0])
        return len(self.hist[0]) if self.hist else 0

    def matrix(self) -> np.ndarray:
        """Candidates as a (T, m) array."""
        return np.vstack(self.W) if self.W else np.zeros((0, self.m))

    def index_of(self, w) -> int:
        w = np.asarray(w, dtype=float)
        for t, v in enumerate(self.W):
            if np.linalg.norm(v - w) <= DEDUP_TOL:
                return t
        raise KeyError("vector not in the weight set")

    def copy(self) -> "WeightSet":
        return WeightSet([v.copy() for v in self.W], [v.copy() for v in self.hist])


def init_uniform(m: int, size: int, seed: int = 0, max_rounds: int = 100) -> WeightSet:
    """``size`` points drawn uniformly from the simplex.

    Uses normalised i.i.d. exponentials.  Near-duplicates are redrawn; on a
    degenerate simplex (m = 1) the pool simply collapses to one vector.
    """
    if size < 1 or m < 1:
        raise ValueError("size and m must be positive")
    rng = np.random.default_rng(seed)
    kept: list[np.ndarray] = []
    for _ in range(max_rounds):
        e = rng.exponential(size=(size - len(kept), m))
        kept = dedup(list(kept) + list(e / e.sum(axis=1, keepdims=True)))
        if len(kept) == size:
            break
    return WeightSet(kept, [])


def init_warm_start(m: int, q: int) -> WeightSet:
    """Uniform vector plus equal weights on every subset of up to ``q`` models."""
    if not 1 <= q <= m:
        raise ValueError(f"q must lie in [1, m]; got q={q}, m={m}")
    vectors = [np.full(m, 1.0 / m)]
    for r in range(1, q + 1):
        for subset in itertools.combinations(range(m), r):
            w = np.zeros(m)
            w[list(subset)] = 1.0 / r
            vectors.append(w)
    return WeightSet(dedup(vectors), [])


def init_default(m: int, seed: int = 0) -> WeightSet:
    if 1 + m + math.comb(m, 2) <= WARM_START_LIMIT:
        return init_warm_start(m, min(2, m))
    return init_uniform(m, UNIFORM_DEFAULT_SIZE, seed)


def update_weight_set(ws: WeightSet, used, new) -> WeightSet:
    """Keep the used vectors, add the new ones and bring back the history.

    The result lists the used vectors first (in their current order), then
    ``new`` in the given order, then history members not already present.
    ``hist`` grows by the used vectors.
    """
    used = [np.asarray(u, dtype=float) for u in used]
    for u in used:
        ws.index_of(u)
    used = sorted(used, key=ws.index_of)
    for v in new:
        if not is_simplex(v):
            raise ValueError("new weight vector is not on the simplex")
    W = dedup(list(used) + [np.asarray(v, dtype=float) for v in new] + list(ws.hist))
    hist = dedup(list(ws.hist) + used)
    return WeightSet(W, hist)
