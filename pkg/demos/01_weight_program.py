"""Find ensemble weights that maximise correct votes on a handful of points.

Three trees vote on five points.  The equal-weight vote gets three right
and the best single tree gets four.  A small MILP, solved by the bundled
branch-and-bound solver, searches the weight simplex for a vector that
gets all five.

Run with ``python demos/01_weight_program.py``.
"""

import numpy as np

from adaptive_forests.milp import build_weight_problem, solve
from adaptive_forests.rewards import aggregate

# p1[i, t]: probability tree t gives class 1 on point i
p1 = np.array([[0.5, 0.9, 0.2],
               [0.9, 0.3, 0.4],
               [0.8, 0.4, 0.5],
               [0.1, 0.7, 0.5],
               [0.3, 0.8, 0.3]])
f = np.stack([1 - p1, p1], axis=-1)
y = np.array([0, 0, 1, 0, 0])


def n_correct(w):
    return sum(int(aggregate(f[i], w).argmax() == y[i]) for i in range(len(y)))


equal = np.full(3, 1 / 3)
print("equal weights   ", equal.round(3), "->", n_correct(equal), "of", len(y))
for t in range(3):
    print(f"tree {t} alone    ", np.eye(3)[t], "->", n_correct(np.eye(3)[t]), "of", len(y))

prog = build_weight_problem(f, y)
sol = solve(prog.problem, time_limit=5.0)
w = prog.weights(sol.values)
print("solver status   ", sol.status)
print("optimal weights ", w.round(3), "->", n_correct(w), "of", len(y))

# the program is plain data; its LP text is handy for eyeballing
print()
print(prog.problem.to_lp_text())
