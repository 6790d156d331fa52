"""Command-line interface: ``train``, ``predict`` and ``benchmark``.

Exit codes are 0 on success, 1 for bad input or configuration and 2 for
anything unexpected.  ``AF_LOG`` (error, info or debug) sets verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .baselines import DEFAULT_TREE_GRID
from .benchmark import ALGORITHMS, benchmark, load_dataset_dir
from .dataio import DataError, load_csv, partition, read_frame
from .metrics import accuracy, score_auc
from .persistence import ModelFormatError, load_model, save_model
from .pipeline import AfConfig, predict_af, train_af

logger = logging.getLogger("adaptive_forests")

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UserError(Exception):
    """Bad flags, files or configuration; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UserError(message)


def _configure_logging():
    level = os.environ.get("AF_LOG", "error").lower()
    if level not in LOG_LEVELS:
        raise UserError(f"AF_LOG must be one of {', '.join(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s")


def _load_config(path, overrides: dict) -> AfConfig:
    base = {}
    if path is not None:
        try:
            base = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise UserError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise UserError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(base, dict):
            raise UserError(f"config file {path} must hold a JSON object")
    base.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return AfConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UserError(f"invalid configuration: {exc}") from None


def cmd_train(args) -> int:
    cfg = _load_config(args.config, {"seed": args.seed, "cart_depth": args.depth, "m": args.trees})
    ds = load_csv(args.data, args.target)
    split = partition(ds, cfg.seed)
    model = train_af(ds, cfg, split=split)
    save_model(model, args.out)
    for name, rows in (("val", split.val), ("test", split.test)):
        _, P = predict_af(model, ds.features[rows])
        metric = "auc" if ds.K == 2 else "ovr_auc"
        print(f"{name}: {metric}={score_auc(P, ds.labels[rows]):.4f} "
              f"accuracy={accuracy(P, ds.labels[rows]):.4f}")
    print(f"model written to {args.out}")
    return 0


def cmd_predict(args) -> int:
    try:
        model = load_model(args.model)
    except FileNotFoundError:
        raise UserError(f"model file {args.model} not found") from None
    frame = read_frame(args.data)
    if model.schema is None:
        missing = [c for c in model.feature_names if c not in frame.columns]
        if missing:
            raise DataError(f"missing column {missing[0]!r}")
        X = frame[model.feature_names].to_numpy(dtype=float)
    else:
        X = model.schema.encode(frame)
    cls, P = predict_af(model, X)
    names = list(model.schema.classes) if model.schema is not None else None
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "predicted_class"] + [f"score_{k}" for k in range(model.n_classes)])
        for i in range(len(cls)):
            label = names[cls[i]] if names else int(cls[i])
            w.writerow([i, label] + [repr(float(p)) for p in P[i]])
    print(f"{len(cls)} predictions written to {args.out}")
    return 0


def cmd_benchmark(args) -> int:
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    unknown = [a for a in algorithms if a not in ALGORITHMS]
    if unknown:
        raise UserError(f"unknown algorithm {unknown[0]!r}; choose from {', '.join(ALGORITHMS)}")
    if args.seeds < 1:
        raise UserError("--seeds must be at least 1")
    try:
        grid = tuple(int(t) for t in args.tree_grid.split(","))
    except ValueError:
        raise UserError(f"--tree-grid must be comma-separated integers, got {args.tree_grid!r}") from None
    cfg = _load_config(args.config, {"cart_depth": args.depth, "m": args.trees})
    try:
        datasets = load_dataset_dir(args.data_dir)
    except FileNotFoundError as exc:
        raise UserError(str(exc)) from None
    report = benchmark(datasets, algorithms, range(args.seeds), cfg, grid, args.workers)
    rows, agg = report.write(args.out)
    print(report.table())
    print(f"results: {rows}\nsummary: {agg}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="adaptive-forests", description="Adaptive forests: input-dependent tree weighting.",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and write it to a JSON file", formatter_class=fmt)
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--target", required=True, help="name of the class column")
    p.add_argument("--seed", type=int, default=None, help="partition and bagging seed (config value if unset)")
    p.add_argument("--config", default=None, help="JSON file of configuration fields")
    p.add_argument("--out", default="model.json", help="model file to write")
    p.add_argument("--depth", type=int, choices=(10, 100), default=None, help="CART depth (config value if unset)")
    p.add_argument("--trees", type=int, default=None, help="number of trees (50 or 100 by class count if unset)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker cap")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a CSV with a trained model", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model file written by train")
    p.add_argument("--data", required=True, help="CSV holding at least the training feature columns")
    p.add_argument("--out", default="predictions.csv", help="predictions CSV to write")
    p.add_argument("--workers", type=int, default=1, help="parallel worker cap")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("benchmark", help="compare AF with static forests over datasets and seeds",
                       formatter_class=fmt)
    p.add_argument("--data-dir", required=True, help="directory of <name>.csv files with <name>.json target sidecars")
    p.add_argument("--algorithms", default=",".join(ALGORITHMS), help="comma-separated subset of the algorithms")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds, starting at 0")
    p.add_argument("--config", default=None, help="JSON file of AF configuration fields")
    p.add_argument("--depth", type=int, choices=(10, 100), default=None, help="CART depth (config value if unset)")
    p.add_argument("--trees", type=int, default=None, help="AF tree count (50 or 100 by class count if unset)")
    p.add_argument("--tree-grid", default=",".join(map(str, DEFAULT_TREE_GRID)),
                   help="tree counts the static schemes choose from on validation data")
    p.add_argument("--out", default="benchmark", help="directory for results.csv and summary.csv")
    p.add_argument("--workers", type=int, default=1, help="parallel worker cap")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    try:
        _configure_logging()
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UserError("--workers must be at least 1")
        return args.func(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc.filename or exc}: file not found", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # pragma: no cover - reported, not raised
        logging.getLogger(__name__).debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
