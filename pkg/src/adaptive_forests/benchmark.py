"""Multi-dataset, multi-seed comparisons of AF against static forests.

For every (dataset, seed) one bagged ensemble is grown on the single
subset and shared by every algorithm: the static schemes pick their tree
count (a prefix of the ensemble) on the validation subset, and AF uses
the first ``m`` trees.  Scores are measured on the test subset.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (DEFAULT_TREE_GRID, WRF_FORMS, crf_weights, equal_weights, twrf_weights,
                        wrf_tpe_weights)
from .cart import fit_bagged, proba_tensor
from .dataio import Dataset, load_csv, partition
from .metrics import score_auc
from .pipeline import AfConfig, predict_af, train_af

logger = logging.getLogger(__name__)

ALGORITHMS = ("rf", "twrf", "wrf", "crf", "af")


@dataclass
class BenchmarkReport:
    """Per-cell scores plus per-dataset means, spreads and win counts.

    ``rows`` holds ``(dataset, algorithm, seed, metric, value)`` with
    ``value = nan`` for cells that failed.
    """

    rows: list = field(default_factory=list)
    datasets: list = field(default_factory=list)
    algorithms: list = field(default_factory=list)

    def scores(self, dataset: str, algorithm: str) -> np.ndarray:
        v = np.array([r[4] for r in self.rows if r[0] == dataset and r[1] == algorithm], dtype=float)
        return v[np.isfinite(v)]

    def aggregates(self) -> list[tuple]:
        """``(dataset, algorithm, mean, std, win)`` per pair, ties sharing wins."""
        out = []
        for d in self.datasets:
            stats = {}
            for a in self.algorithms:
                v = self.scores(d, a)
                stats[a] = (float(v.mean()), float(v.std())) if len(v) else (math.nan, math.nan)
            means = [m for m, _ in stats.values() if np.isfinite(m)]
            top = max(means) if means else math.nan
            for a in self.algorithms:
                mean, std = stats[a]
                out.append((d, a, mean, std, int(np.isfinite(mean) and mean == top)))
        return out

    def averages(self) -> dict[str, float]:
        """Across-dataset mean of each algorithm's per-dataset mean."""
        agg = self.aggregates()
        return {a: float(np.nanmean([r[2] for r in agg if r[1] == a]) if agg else math.nan)
                for a in self.algorithms}

    def wins(self) -> dict[str, int]:
        agg = self.aggregates()
        return {a: sum(r[4] for r in agg if r[1] == a) for a in self.algorithms}

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "algorithm", "seed", "metric", "value"])
        for d, a, s, metric, value in self.rows:
            w.writerow([d, a, s, metric, "" if not np.isfinite(value) else repr(float(value))])
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "algorithm", "mean", "std", "win"])
        fmt = lambda x: "" if not np.isfinite(x) else repr(float(x))
        for d, a, mean, std, win in self.aggregates():
            w.writerow([d, a, fmt(mean), fmt(std), win])
        return buf.getvalue()

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows, agg = out / "results.csv", out / "summary.csv"
        rows.write_text(self.rows_csv(), encoding="utf-8")
        agg.write_text(self.aggregate_csv(), encoding="utf-8")
        return rows, agg

    def table(self) -> str:
        """Plain-text table of means with an average and a win-count row."""
        width = max([len("average")] + [len(d) for d in self.datasets]) + 2
        lines = ["".ljust(width) + "".join(a.rjust(9) for a in self.algorithms)]
        means = {(d, a): m for d, a, m, _, _ in self.aggregates()}
        for d in self.datasets:
            lines.append(d.ljust(width) + "".join(f"{means[d, a]:9.4f}" for a in self.algorithms))
        avg, wins = self.averages(), self.wins()
        lines.append("average".ljust(width) + "".join(f"{avg[a]:9.4f}" for a in self.algorithms))
        lines.append("wins".ljust(width) + "".join(f"{wins[a]:9d}" for a in self.algorithms))
        return "\n".join(lines)


def _pick_on_val(candidates, f_val, y_val):
    """The (label, weights) pair with the best validation AUC, earliest on ties."""
    best = None
    for label, w in candidates:
        auc = score_auc(np.einsum("j,njk->nk", w, f_val[:, : len(w)]), y_val)
        if best is None or auc > best[0]:
            best = (auc, label, w)
    return best[1], best[2]


def _static_candidates(algorithm, ens, X, y, counts):
    for c in counts:
        sub = ens.subset(c)
        if algorithm == "rf":
            yield c, equal_weights(c)
        elif algorithm == "twrf":
            yield c, twrf_weights(sub, X, y)
        elif algorithm == "crf":
            yield c, crf_weights(sub, X, y)
        else:
            for form in WRF_FORMS:
                for lam in ((1, 2, 3, 4, 5) if form == "pow" else (1,)):
                    yield (c, form, lam), wrf_tpe_weights(sub, X, y, form, lam)


def run_cell_group(name: str, ds: Dataset, seed: int, algorithms, af_config: AfConfig,
                   tree_grid) -> list[tuple]:
    """Score every algorithm on one dataset and seed; failures give ``nan``."""
    metric = "auc" if ds.K == 2 else "ovr_auc"
    split = partition(ds, seed)
    X, y = ds.features, ds.labels
    cfg = AfConfig.from_dict({**af_config.to_dict(), "seed": seed})
    m_af = cfg.trees_for(ds.K)
    counts = sorted(set(int(c) for c in tree_grid))
    size = max(counts + ([m_af] if "af" in algorithms else []))
    ens = fit_bagged(X, y, ds.K, split.single, size, cfg.cart_depth, cfg.min_leaf, seed)
    f_val = proba_tensor(ens, X[split.val])
    f_test = proba_tensor(ens, X[split.test])
    y_val, y_test = y[split.val], y[split.test]
    rows = []
    for a in algorithms:
        try:
            if a == "af":
                model = train_af(ds, cfg, ensemble=ens.subset(m_af), split=split)
                _, P = predict_af(model, X[split.test])
            else:
                choice, w = _pick_on_val(_static_candidates(a, ens, X, y, counts), f_val, y_val)
                logger.debug("%s/%s seed %d: picked %s", name, a, seed, choice)
                P = np.einsum("j,njk->nk", w, f_test[:, : len(w)])
            value = score_auc(P, y_test)
        except Exception as exc:  # a failed cell is reported, not fatal
            warnings.warn(f"{name}/{a} seed {seed} failed: {exc}", RuntimeWarning, stacklevel=2)
            value = math.nan
        rows.append((name, a, seed, metric, float(value)))
        logger.info("%s %s seed %d: %s %.4f", name, a, seed, metric, value)
    return rows


def _run_job(job):
    return run_cell_group(*job)


def benchmark(datasets: dict, algorithms=ALGORITHMS, seeds=(0, 1, 2, 3, 4),
              af_config: AfConfig = AfConfig(), tree_grid=DEFAULT_TREE_GRID,
              workers: int = 1) -> BenchmarkReport:
    """Run every algorithm on every dataset for every seed.

    Parameters
    ----------
    datasets : dict of name -> Dataset
    algorithms : sequence of {"rf", "twrf", "wrf", "crf", "af"}
    seeds : sequence of int
        Each seed fixes both the partition and the bagging.
    af_config : AfConfig
        Settings for AF; its ``seed`` is replaced per cell.
    tree_grid : sequence of int
        Tree counts the static schemes choose from on validation data.
    workers : int
        Processes to spread (dataset, seed) groups over.

    Returns
    -------
    BenchmarkReport
        Rows in dataset, seed, algorithm order regardless of ``workers``.
    """
    algorithms = list(algorithms)
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise ValueError(f"unknown algorithm {unknown[0]!r}; choose from {', '.join(ALGORITHMS)}")
    if not datasets or not algorithms:
        raise ValueError("need at least one dataset and one algorithm")
    if not tree_grid or min(tree_grid) < 1:
        raise ValueError("tree_grid must hold positive counts")
    jobs = [(name, ds, int(s), algorithms, af_config, tuple(tree_grid))
            for name, ds in datasets.items() for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(_run_job, jobs))
    else:
        groups = [_run_job(j) for j in jobs]
    report = BenchmarkReport(datasets=list(datasets), algorithms=algorithms)
    for g in groups:
        report.rows.extend(g)
    failed = sum(not np.isfinite(r[4]) for r in report.rows)
    if failed:
        logger.warning("%d benchmark cells failed and are left out of the aggregates", failed)
    return report


def load_dataset_dir(path) -> dict:
    """Every ``<name>.csv`` with a ``<name>.json`` sidecar naming its target."""
    out = {}
    root = Path(path)
    for csv_path in sorted(root.glob("*.csv")):
        sidecar = csv_path.with_suffix(".json")
        if not sidecar.exists():
            logger.warning("skipping %s: no %s sidecar", csv_path.name, sidecar.name)
            continue
        target = json.loads(sidecar.read_text(encoding="utf-8"))["target"]
        out[csv_path.stem] = load_csv(csv_path, target)
    if not out:
        raise FileNotFoundError(f"no CSV files with target sidecars in {root}")
    return out
