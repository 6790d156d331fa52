"""Compare forest variants on the bundled UCI tables.

Every algorithm shares the same bagged trees for a given seed; only the
way the votes are combined differs.  Pass dataset names to restrict the
run, e.g. ``python demos/03_benchmark_uci.py haberman-survival wdbc``.
A single seed over all binary tables takes several minutes.
"""

import sys
from pathlib import Path

from adaptive_forests import AfConfig, benchmark
from adaptive_forests.benchmark import load_dataset_dir

root = Path(__file__).resolve().parents[1] / "data" / "uci" / "binary"
datasets = load_dataset_dir(root)
if len(sys.argv) > 1:
    datasets = {k: v for k, v in datasets.items() if k in sys.argv[1:]}

report = benchmark(datasets, ["rf", "twrf", "wrf", "crf", "af"], seeds=(0,),
                   af_config=AfConfig(time_limit=0.5), tree_grid=(50,))
print(report.table())
