"""Convert the KEEL copies of several UCI datasets into headed CSV files.

Usage::

    pip download --no-deps keel-ds==0.2.5 -d /tmp/keel
    python tools/make_uci_csvs.py /tmp/keel/keel_ds-0.2.5-py3-none-any.whl data/uci

Each dataset is written as ``<name>.csv`` plus a ``<name>.json`` sidecar
declaring the target column, under ``binary/`` or ``multiclass/``
depending on the number of distinct labels.  KEEL drops rows with missing values, so
breast-cancer and house-votes are smaller than their UCI originals.
"""

import json
import sys
import zipfile
from pathlib import Path

# name -> (member inside the wheel, feature column names)
DATASETS = {
    "breast-cancer": (
        "balanced/raw/breast.dat",
        ["age", "menopause", "tumor_size", "inv_nodes", "node_caps",
         "deg_malig", "breast", "breast_quad", "irradiat"],
    ),
    "haberman-survival": ("imbalanced/raw/haberman.dat", ["age", "op_year", "pos_nodes"]),
    "house-votes": ("balanced/raw/housevotes.dat", [f"vote{i}" for i in range(1, 17)]),
    "monks-problems-2": ("balanced/raw/monk-2.dat", [f"a{i}" for i in range(1, 7)]),
    "statlog-german-credit": ("balanced/raw/german.dat", [f"attr{i}" for i in range(1, 21)]),
    "wdbc": ("balanced/raw/wdbc.dat", [f"x{i}" for i in range(1, 31)]),
    "contraceptive-method-choice": ("balanced/raw/contraceptive.dat", [f"x{i}" for i in range(1, 10)]),
    "teaching-assistant": ("balanced/raw/tae.dat", [f"x{i}" for i in range(1, 6)]),
}


def main(wheel, out_dir):
    root = Path(out_dir)
    with zipfile.ZipFile(wheel) as zf:
        for name, (member, columns) in DATASETS.items():
            raw = zf.read("keel_ds/data/" + member).decode("latin1")
            rows = [[v.strip() for v in line.split(",")] for line in raw.splitlines() if line.strip()]
            header = columns + ["class"]
            assert all(len(r) == len(header) for r in rows), name
            out = root / ("binary" if len({r[-1] for r in rows}) == 2 else "multiclass")
            out.mkdir(parents=True, exist_ok=True)
            lines = [",".join(header)] + [",".join(r) for r in rows]
            (out / f"{name}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
            (out / f"{name}.json").write_text(json.dumps({"target": "class"}) + "\n", encoding="utf-8")
            print(f"{out.name}/{name}: {len(rows)} rows")


if __name__ == "__main__":
    main(*sys.argv[1:3])
