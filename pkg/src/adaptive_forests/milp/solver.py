"""Best-first branch and bound over binary variables."""

from __future__ import annotations

import heapq
import itertools
import logging
import time

import numpy as np

from .problem import MilpProblem, MilpSolution
from .simplex import EqualityLp

logger = logging.getLogger(__name__)

INT_TOL = 1e-6
FEAS_CHECK = 1e-6
OPTIMAL_GAP = 1e-6


class _Standard:
    """The problem as ``min c x, A x = b, lb <= x <= ub`` with finite ``lb``.

    Variables unbounded below are negated (upper bound finite) or split
    into a difference of two nonnegative parts.  Inequality rows get one
    slack column each.  ``to_original`` maps back.
    """

    def __init__(self, problem: MilpProblem):
        c, A, row_lo, row_hi, lower, upper, binary = problem.dense()
        if problem.sense == "max":
            c = -c
        n = len(c)
        P_cols, lb, ub = [], [], []
        col_of = np.zeros(n, dtype=np.int64)
        for i in range(n):
            e = np.zeros(n)
            col_of[i] = len(P_cols)
            if np.isfinite(lower[i]):
                e[i] = 1.0
                P_cols.append(e)
                lb.append(lower[i])
                ub.append(upper[i])
            elif np.isfinite(upper[i]):
                e[i] = -1.0
                P_cols.append(e)
                lb.append(-upper[i])
                ub.append(np.inf)
            else:
                e[i] = 1.0
                P_cols.extend([e, -e])
                lb.extend([0.0, 0.0])
                ub.extend([np.inf, np.inf])
        P = np.array(P_cols).T.reshape(n, len(P_cols))
        A = A @ P
        # Each non-equality row gets a slack s >= 0: either s = hi - a.x
        # (bounded by hi - lo) or, with no upper side, s = a.x - lo.
        b = np.where(np.isfinite(row_hi), row_hi, row_lo)
        slack_rows = np.flatnonzero(row_lo < row_hi)
        S = np.zeros((len(b), len(slack_rows)))
        s_ub = np.full(len(slack_rows), np.inf)
        for k, r in enumerate(slack_rows):
            if np.isfinite(row_hi[r]):
                S[r, k] = 1.0
                s_ub[k] = row_hi[r] - row_lo[r]
            else:
                S[r, k] = -1.0
        self.P = P
        self.n_orig = n
        self.n_struct = P.shape[1]
        self.A = np.hstack([A, S])
        self.b = b
        self.c = np.concatenate([c @ P, np.zeros(len(slack_rows))])
        self.lb = np.concatenate([lb, np.zeros(len(slack_rows))])
        self.ub = np.concatenate([ub, s_ub])
        self.binary_cols = col_of[binary]
        self.binary_orig = np.flatnonzero(binary)

    def to_original(self, x):
        return self.P @ x[: self.n_struct]


def _most_fractional(values):
    score = 0.5 - np.abs(values - np.floor(values) - 0.5)
    k = int(np.argmax(score))
    return k if score[k] > INT_TOL else -1


def solve(problem: MilpProblem, time_limit: float = 30.0, heuristic=None,
          trace: bool = False) -> MilpSolution:
    """Solve a MILP by LP-based best-first branch and bound.

    Parameters
    ----------
    problem : MilpProblem
    time_limit : float
        Wall-clock budget in seconds.
    heuristic : callable, optional
        Called with every node's LP solution (in original variables); may
        return a candidate full solution, which is kept if feasible.
    trace : bool
        Record per-node LP bounds in ``MilpSolution.trace``.

    Returns
    -------
    MilpSolution
        ``optimal`` when the search finished, ``feasible`` (with the gap
        between incumbent and best bound) when time ran out after an
        incumbent was found, else ``timeout``, ``infeasible`` or
        ``unbounded``.
    """
    start = time.monotonic()
    deadline = start + max(0.0, time_limit)
    flip = -1.0 if problem.sense == "max" else 1.0
    std = _Standard(problem)
    lp = EqualityLp(std.A, std.b, std.c)
    log = [] if trace else None

    best_x, best_val = None, np.inf  # internal (minimisation) objective

    def report(value):
        return flip * value + problem.offset

    def consider(x_orig):
        nonlocal best_x, best_val
        x = np.array(x_orig, dtype=float)
        x[std.binary_orig] = np.round(x[std.binary_orig])
        if problem.violation(x) > FEAS_CHECK:
            return
        value = flip * (problem.evaluate(x) - problem.offset)
        if value < best_val - 1e-12:
            best_x, best_val = x, value

    root = lp.solve(std.lb, std.ub, deadline)
    if root.status in ("infeasible", "unbounded", "timeout"):
        return MilpSolution(root.status, None, np.nan, np.inf, 0, log or [])

    # Round the root relaxation and re-solve the continuous part.
    if len(std.binary_cols):
        lb, ub = std.lb.copy(), std.ub.copy()
        fixed = np.clip(np.round(root.x[std.binary_cols]), 0, 1)
        lb[std.binary_cols] = ub[std.binary_cols] = fixed
        rounded = lp.solve(lb, ub, deadline, root.warm)
        if rounded.status == "optimal":
            consider(std.to_original(rounded.x))

    counter = itertools.count()
    heap = [(root.objective, next(counter), -1, std.lb, std.ub, None, root)]
    nodes = 0
    timed_out = False
    bound = root.objective
    while heap:
        bound = heap[0][0]
        if bound >= best_val - 1e-9 * max(1.0, abs(best_val)):
            heap = []
            break
        if time.monotonic() > deadline:
            timed_out = True
            break
        key, node_id, parent, lb, ub, warm, res = heapq.heappop(heap)
        if res is None:
            res = lp.solve(lb, ub, deadline, warm)
        nodes += 1
        if res.status == "timeout":
            heapq.heappush(heap, (key, node_id, parent, lb, ub, warm, None))
            timed_out = True
            break
        if res.status != "optimal":
            if log is not None:
                log.append({"id": node_id, "parent": parent, "bound": None, "integral": False})
            continue
        x_orig = std.to_original(res.x)
        if heuristic is not None:
            candidate = heuristic(x_orig)
            if candidate is not None:
                consider(candidate)
        k = _most_fractional(res.x[std.binary_cols]) if len(std.binary_cols) else -1
        if log is not None:
            log.append({"id": node_id, "parent": parent, "bound": report(res.objective),
                        "integral": k < 0})
        if k < 0:
            consider(x_orig)
            continue
        if res.objective >= best_val - 1e-9 * max(1.0, abs(best_val)):
            continue
        col = std.binary_cols[k]
        for value in (0.0, 1.0):
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[col] = ub2[col] = value
            heapq.heappush(heap, (res.objective, next(counter), node_id, lb2, ub2, res.warm, None))

    elapsed = time.monotonic() - start
    if best_x is None:
        status = "timeout" if timed_out else "infeasible"
        logger.debug("milp %s after %d nodes in %.2fs", status, nodes, elapsed)
        return MilpSolution(status, None, np.nan, np.inf, nodes, log or [])
    if timed_out and heap:
        lower = min(bound, heap[0][0])
        gap = abs(best_val - lower) / max(1.0, abs(best_val))
    else:
        gap = 0.0
    status = "optimal" if gap <= OPTIMAL_GAP else "feasible"
    logger.debug("milp %s, gap %.3g, %d nodes in %.2fs", status, gap, nodes, elapsed)
    return MilpSolution(status, best_x, report(best_val), gap, nodes, log or [])
