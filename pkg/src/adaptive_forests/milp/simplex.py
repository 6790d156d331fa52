"""Dense-tableau simplex for bounded-variable LPs in equality form.

Solves ``min c @ x  s.t.  A @ x = b,  lb <= x <= ub`` with finite ``lb``.
A cold start runs a two-phase primal simplex from an artificial basis; a
warm start reuses a previous basis after bound changes and restores
feasibility with the dual simplex, which is what branch and bound needs.
Dantzig pricing is used until a run of degenerate pivots, after which the
solve falls back to Bland's rule so that it terminates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve
from scipy.linalg.blas import dger

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
STALL_LIMIT = 50
REFACTOR_EVERY = 100


class _Timeout(Exception):
    pass


@dataclass(frozen=True)
class WarmStart:
    art_rows: np.ndarray  # rows that carry an artificial column
    signs: np.ndarray  # sign of each artificial column
    basis: np.ndarray
    at_upper: np.ndarray


@dataclass
class LpResult:
    status: str  # optimal, infeasible, unbounded or timeout
    x: np.ndarray | None
    objective: float
    warm: WarmStart | None = None
    iterations: int = 0


class _Tableau:
    def __init__(self, A_ext, b, cost, lb, ub, basis, at_upper, deadline):
        self.A_ext = A_ext
        self.b = b
        self.cost = cost
        self.lb = lb
        self.ub = ub
        self.basis = basis.copy()
        self.at_upper = at_upper.copy()
        self.deadline = deadline
        self.movable = ub - lb > FEAS_TOL
        self.iterations = 0
        self.refactor()

    def refactor(self):
        lu = lu_factor(self.A_ext[:, self.basis])
        # Column-major so the rank-one pivot update runs in place.
        self.T = np.asfortranarray(lu_solve(lu, self.A_ext))
        x = np.where(self.at_upper, self.ub, self.lb)
        x[self.basis] = 0.0
        x[self.basis] = lu_solve(lu, self.b - self.A_ext @ x)
        self.x = x
        self.nonbasic = np.ones(len(x), dtype=bool)
        self.nonbasic[self.basis] = False
        self.at_upper[self.basis] = False
        self.set_cost(self.cost)
        self.since_refactor = 0

    def set_cost(self, cost):
        self.cost = cost
        self.d = cost - cost[self.basis] @ self.T

    def tick(self):
        """Count an iteration, enforce the deadline and refactor periodically."""
        self.iterations += 1
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Timeout
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        pivot_row = T[r].copy()
        self.T = T = dger(-1.0, col, pivot_row, a=T, overwrite_a=True)
        self.d -= self.d[j] * pivot_row
        self.d[j] = 0.0
        leave = self.basis[r]
        self.basis[r] = j
        self.nonbasic[j] = False
        self.nonbasic[leave] = True
        self.at_upper[j] = False

    def primal(self):
        """Primal simplex from a primal-feasible basis."""
        bland, stall = False, 0
        while True:
            self.tick()
            d, x = self.d, self.x
            inc = self.nonbasic & self.movable & ~self.at_upper & (d < -OPT_TOL)
            dec = self.nonbasic & self.movable & self.at_upper & (d > OPT_TOL)
            cand = inc | dec
            if not cand.any():
                return "optimal"
            if bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                j = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            sigma = 1.0 if inc[j] else -1.0
            sa = sigma * self.T[:, j]
            xb = x[self.basis]
            lbB, ubB = self.lb[self.basis], self.ub[self.basis]
            ratios = np.full(len(xb), np.inf)
            down = sa > PIVOT_TOL
            up = (sa < -PIVOT_TOL) & np.isfinite(ubB)
            ratios[down] = np.maximum(xb[down] - lbB[down], 0.0) / sa[down]
            ratios[up] = np.maximum(ubB[up] - xb[up], 0.0) / -sa[up]
            theta = self.ub[j] - self.lb[j]
            r = -1
            rmin = ratios.min() if len(ratios) else np.inf
            if rmin < theta:
                ties = np.flatnonzero(ratios <= rmin + 1e-12)
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(sa[ties]))])
                theta = ratios[r]
            if not np.isfinite(theta):
                return "unbounded"
            x[self.basis] -= theta * sa
            x[j] += sigma * theta
            if r < 0:
                self.at_upper[j] = not self.at_upper[j]
                x[j] = self.ub[j] if self.at_upper[j] else self.lb[j]
            else:
                leave = self.basis[r]
                to_upper = bool(sa[r] < 0)
                self.pivot(r, j)
                self.at_upper[leave] = to_upper
                x[leave] = self.ub[leave] if to_upper else self.lb[leave]
            stall = stall + 1 if theta <= 1e-12 else 0
            bland = bland or stall > STALL_LIMIT

    def dual_feasible(self) -> bool:
        """Flip boxed nonbasics to their dual-feasible bound; False if impossible."""
        d = self.d
        wrong_low = self.nonbasic & self.movable & ~self.at_upper & (d < -OPT_TOL)
        wrong_up = self.nonbasic & self.movable & self.at_upper & (d > OPT_TOL)
        if (wrong_low & ~np.isfinite(self.ub)).any():
            return False
        flip = wrong_low | wrong_up
        if flip.any():
            self.at_upper[flip] = ~self.at_upper[flip]
            self.refactor()
        return True

    def dual(self):
        """Dual simplex from a dual-feasible basis."""
        bland, stall = False, 0
        while True:
            self.tick()
            x = self.x
            xb = x[self.basis]
            lbB, ubB = self.lb[self.basis], self.ub[self.basis]
            below = lbB - xb
            above = xb - ubB
            infeas = np.maximum(below, above)
            if not len(infeas) or infeas.max() <= FEAS_TOL:
                return "optimal"
            if bland:
                rows = np.flatnonzero(infeas > FEAS_TOL)
                r = int(rows[np.argmin(self.basis[rows])])
            else:
                r = int(np.argmax(infeas))
            row = self.T[r]
            go_up = below[r] > above[r]
            target = lbB[r] if go_up else ubB[r]
            s = 1.0 if go_up else -1.0
            inc = self.nonbasic & self.movable & ~self.at_upper & (s * row < -PIVOT_TOL)
            dec = self.nonbasic & self.movable & self.at_upper & (s * row > PIVOT_TOL)
            cand = np.flatnonzero(inc | dec)
            if not len(cand):
                return "infeasible"
            ratios = np.abs(self.d[cand]) / np.abs(row[cand])
            rmin = ratios.min()
            ties = cand[ratios <= rmin + 1e-12]
            j = int(ties[0]) if bland else int(ties[np.argmax(np.abs(row[ties]))])
            delta = (xb[r] - target) / row[j]
            x[self.basis] -= delta * self.T[:, j]
            x[j] += delta
            leave = self.basis[r]
            self.pivot(r, j)
            self.at_upper[leave] = not go_up
            x[leave] = target
            stall = stall + 1 if abs(delta) <= 1e-12 else 0
            bland = bland or stall > STALL_LIMIT


class EqualityLp:
    """Reusable LP data ``A x = b`` with cost ``c``; bounds vary per solve."""

    def __init__(self, A, b, c):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.m, self.n = self.A.shape
        self._ext = {}
        nonzero = self.A != 0
        unit = np.flatnonzero(nonzero.sum(axis=0) == 1)
        self._unit_cols = unit
        self._unit_rows = nonzero[:, unit].argmax(axis=0)

    def _extended(self, art_rows, signs):
        key = (art_rows.tobytes(), signs.tobytes())
        if key not in self._ext:
            E = np.zeros((self.m, len(art_rows)))
            E[art_rows, np.arange(len(art_rows))] = signs
            self._ext = {key: np.hstack([self.A, E])}
        return self._ext[key]

    def _result(self, tab, status, art_rows, signs):
        if status != "optimal":
            return LpResult(status, None, np.nan, None, tab.iterations)
        tab.refactor()
        x = tab.x[: self.n].copy()
        warm = WarmStart(art_rows, signs, tab.basis.copy(), tab.at_upper.copy())
        return LpResult("optimal", x, float(self.c @ x), warm, tab.iterations)

    def solve(self, lb, ub, deadline: float | None = None,
              warm: WarmStart | None = None) -> LpResult:
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        if (lb > ub + FEAS_TOL).any():
            return LpResult("infeasible", None, np.nan)
        try:
            if warm is not None:
                res = self._solve_warm(lb, ub, deadline, warm)
                if res is not None:
                    return res
            return self._solve_cold(lb, ub, deadline)
        except _Timeout:
            return LpResult("timeout", None, np.nan)

    def _solve_warm(self, lb, ub, deadline, warm):
        n_art = len(warm.art_rows)
        lbx = np.concatenate([lb, np.zeros(n_art)])
        ubx = np.concatenate([ub, np.zeros(n_art)])
        cost = np.concatenate([self.c, np.zeros(n_art)])
        try:
            tab = _Tableau(self._extended(warm.art_rows, warm.signs), self.b, cost, lbx, ubx,
                           warm.basis, warm.at_upper, deadline)
        except (LinAlgError, ValueError):
            return None
        if not tab.dual_feasible():
            return None
        status = tab.dual()
        if status == "optimal":
            status = tab.primal()
        return self._result(tab, status, warm.art_rows, warm.signs)

    def _crash_basis(self, lb, ub, residual):
        """Unit columns that can start basic at a value within their bounds."""
        basis = np.full(self.m, -1, dtype=np.int64)
        for j, r in zip(self._unit_cols, self._unit_rows):
            if basis[r] >= 0:
                continue
            value = lb[j] + residual[r] / self.A[r, j]
            if lb[j] - FEAS_TOL <= value <= ub[j] + FEAS_TOL:
                basis[r] = j
        return basis

    def _solve_cold(self, lb, ub, deadline):
        m, n = self.m, self.n
        residual = self.b - self.A @ lb
        basis = self._crash_basis(lb, ub, residual)
        art_rows = np.flatnonzero(basis < 0)
        signs = np.where(residual[art_rows] < 0, -1.0, 1.0)
        n_art = len(art_rows)
        basis[art_rows] = n + np.arange(n_art)
        A_ext = self._extended(art_rows, signs)
        lbx = np.concatenate([lb, np.zeros(n_art)])
        ubx = np.concatenate([ub, np.full(n_art, np.inf)])
        at_upper = np.zeros(n + n_art, dtype=bool)
        phase1 = np.concatenate([np.zeros(n), np.ones(n_art)])
        tab = _Tableau(A_ext, self.b, phase1, lbx, ubx, basis, at_upper, deadline)
        if n_art:
            tab.primal()
            scale = max(1.0, float(np.abs(self.b).max(initial=0.0)))
            if tab.x[n:].sum() > 1e-7 * scale:
                return LpResult("infeasible", None, np.nan, None, tab.iterations)
            # Artificials are pinned to zero from here on.
            tab.ub = np.concatenate([ub, np.zeros(n_art)])
            tab.movable = tab.ub - tab.lb > FEAS_TOL
            tab.refactor()
        tab.set_cost(np.concatenate([self.c, np.zeros(n_art)]))
        status = tab.primal()
        if status == "optimal" and tab.dual_feasible():
            # Leftover artificial mass from phase one can leave tiny primal
            # infeasibilities; the dual simplex cleans them up.
            status = tab.dual()
        return self._result(tab, status, art_rows, signs)
