import math
import sys

import numpy as np
import pytest

from adaptive_forests.benchmark import BenchmarkReport, benchmark, load_dataset_dir, run_cell_group
from adaptive_forests.cli import main
from adaptive_forests.dataio import Dataset
from adaptive_forests.pipeline import AfConfig

FAST = AfConfig(m=5, cart_depth=4, select_config=False, time_limit=1.0, max_iterations=2, c_min=5)


def report(means):
    rows = [("d", a, 0, "auc", v) for a, v in means.items()]
    return BenchmarkReport(rows, ["d"], list(means))


def test_wins_and_ties():
    assert report({"rf": 0.8, "af": 0.7}).wins() == {"rf": 1, "af": 0}
    assert report({"rf": 0.8, "af": 0.8}).wins() == {"rf": 1, "af": 1}


def test_failed_cells_are_excluded():
    r = BenchmarkReport([("d", "rf", 0, "auc", 0.6), ("d", "rf", 1, "auc", math.nan), ("d", "af", 0, "auc", math.nan)],
                        ["d"], ["rf", "af"])
    agg = {a: (m, w) for _, a, m, _, w in r.aggregates()}
    assert agg["rf"] == (0.6, 1)
    assert math.isnan(agg["af"][0]) and agg["af"][1] == 0
    assert "d,rf,1,auc,\n" in r.rows_csv()


def test_csv_headers_and_table():
    r = report({"rf": 0.75, "af": 0.5})
    assert r.rows_csv().splitlines()[0] == "dataset,algorithm,seed,metric,value"
    assert r.aggregate_csv().splitlines()[0] == "dataset,algorithm,mean,std,win"
    lines = r.table().splitlines()
    assert lines[-1].split() == ["wins", "1", "0"]
    assert r.averages() == {"rf": 0.75, "af": 0.5}


@pytest.fixture(scope="module")
def small():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(90, 3))
    y = (X[:, 0] + 0.5 * rng.normal(size=90) > 0).astype(int)
    return Dataset(X, y, ["a", "b", "c"], 2)


def test_cell_group_scores_every_algorithm(small):
    rows = run_cell_group("s", small, 0, ["rf", "twrf", "wrf", "crf", "af"], FAST, (3, 5))
    assert [r[1] for r in rows] == ["rf", "twrf", "wrf", "crf", "af"]
    assert all(0.0 <= r[4] <= 1.0 and r[3] == "auc" for r in rows)


def test_failure_becomes_nan(small, monkeypatch):
    bm = sys.modules["adaptive_forests.benchmark"]  # the package re-exports a function of the same name

    def boom(*a, **k):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(bm, "train_af", boom)
    with pytest.warns(RuntimeWarning, match="exploded"):
        rows = run_cell_group("s", small, 0, ["rf", "af"], FAST, (3,))
    assert np.isfinite(rows[0][4]) and math.isnan(rows[1][4])


def test_cardinality_and_validation(small):
    r = benchmark({"s": small}, ["rf", "af"], seeds=(0, 1), af_config=FAST, tree_grid=(3,))
    assert len(r.rows) == 4
    with pytest.raises(ValueError):
        benchmark({"s": small}, ["xgboost"], seeds=(0,))
    with pytest.raises(ValueError):
        benchmark({}, ["rf"], seeds=(0,))


def test_parallel_matches_serial(small):
    a = benchmark({"s": small}, ["rf", "crf"], seeds=(0, 1), af_config=FAST, tree_grid=(3,))
    b = benchmark({"s": small}, ["rf", "crf"], seeds=(0, 1), af_config=FAST, tree_grid=(3,), workers=2)
    assert a.rows_csv() == b.rows_csv()


@pytest.fixture()
def data_folder(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 2)).round(3)
    y = (X[:, 0] > 0).astype(int)
    with open(tmp_path / "tiny.csv", "w", encoding="utf-8") as fh:
        fh.write("a,b,cls\n" + "".join(f"{p},{q},{c}\n" for (p, q), c in zip(X, y)))
    (tmp_path / "tiny.json").write_text('{"target": "cls"}', encoding="utf-8")
    (tmp_path / "orphan.csv").write_text("a,b\n1,2\n", encoding="utf-8")
    return tmp_path


def test_load_dataset_dir(data_folder, tmp_path_factory):
    assert list(load_dataset_dir(data_folder)) == ["tiny"]
    with pytest.raises(FileNotFoundError):
        load_dataset_dir(tmp_path_factory.mktemp("empty"))


def test_cli_benchmark(data_folder, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"m": 5, "select_config": false, "max_iterations": 2, "time_limit": 1.0, "c_min": 5}',
                   encoding="utf-8")
    args = ["benchmark", "--data-dir", str(data_folder), "--algorithms", "rf,af", "--seeds", "2",
            "--config", str(cfg), "--tree-grid", "3,5"]
    assert main(args + ["--out", str(tmp_path / "r1")]) == 0
    out = capsys.readouterr().out
    assert "wins" in out
    rows = (tmp_path / "r1" / "results.csv").read_text().splitlines()
    assert len(rows) == 1 + 4
    assert main(args + ["--out", str(tmp_path / "r2")]) == 0
    for name in ("results.csv", "summary.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
    assert main(["benchmark", "--data-dir", str(data_folder), "--algorithms", "xgboost"]) == 1
