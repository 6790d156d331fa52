"""Regenerate the frozen brute-force answers the test suite compares against.

Usage::

    python tools/freeze_oracles.py

Writes ``tests/fixtures/milp_oracle.json`` (random MILPs with their
enumerated optima) and ``tests/fixtures/weight_oracle.json`` (random
weight-search instances with their pattern-enumeration answers).  Only
the slow LP-per-pattern enumerations are frozen; the tests recompute the
cheap references live.
"""

import json
import sys
import time
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402

EPS = 1e-4


def milp_cases(count=200, seed=20240601):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        p = oracles.random_milp(rng)
        out.append({"problem": oracles.milp_to_dict(p), "optimum": oracles.enumerate_milp(p)})
    return out


def binary_cases(count=50, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n, m = int(rng.integers(1, 13)), int(rng.integers(1, 4))
        f = oracles.random_scores(rng, n, m, 2)
        y = rng.integers(0, 2, n)
        out.append({"f": f.tolist(), "y": y.tolist(), "errors": oracles.binary_errors_by_patterns(f, y, EPS)})
    return out


def multiclass_cases(count=30, seed=11):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n, m, K = int(rng.integers(1, 11)), int(rng.integers(1, 4)), int(rng.integers(2, 4))
        f = oracles.random_scores(rng, n, m, K)
        y = rng.integers(0, K, n)
        out.append({"f": f.tolist(), "y": y.tolist(),
                    "grid": oracles.multiclass_correct_on_grid(f, y),
                    "pattern": oracles.multiclass_correct_by_vertices(f, y, EPS)})
    return out


def main():
    out = ROOT / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    t = time.time()
    (out / "milp_oracle.json").write_text(json.dumps({"cases": milp_cases()}) + "\n")
    print(f"milp cases: {time.time() - t:.1f}s")
    t = time.time()
    weights = {"eps": EPS, "binary": binary_cases(), "multiclass": multiclass_cases()}
    (out / "weight_oracle.json").write_text(json.dumps(weights) + "\n")
    print(f"weight cases: {time.time() - t:.1f}s")


if __name__ == "__main__":
    main()
