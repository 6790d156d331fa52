"""JSON model files.

Floats are written with Python's shortest round-trip repr, so a loaded
model reproduces the saved one's predictions bit for bit.  Bag indices
are not stored; prediction does not need them.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cart import BaggedEnsemble, CartTree
from .dataio import ColumnSpec, Schema
from .pipeline import AfConfig, AfModel
from .policy import PolicyTree

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file cannot be read."""


def _schema_to_dict(schema: Schema | None):
    if schema is None:
        return None
    return {
        "target": schema.target,
        "classes": list(schema.classes),
        "columns": [
            {"name": c.name, "kind": c.kind, "categories": list(c.categories), "fill": c.fill}
            for c in schema.columns
        ],
    }


def _schema_from_dict(d) -> Schema | None:
    if d is None:
        return None
    cols = tuple(ColumnSpec(c["name"], c["kind"], tuple(c["categories"]), c["fill"]) for c in d["columns"])
    return Schema(cols, d["target"], tuple(d["classes"]))


def model_to_dict(model: AfModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "n_classes": int(model.n_classes),
        "feature_names": list(model.feature_names),
        "schema": _schema_to_dict(model.schema),
        "ensemble": {
            "trees": [t.to_dict() for t in model.ensemble.trees],
            "feature_subsets": [np.asarray(s).tolist() for s in model.ensemble.feature_subsets],
        },
        "W": np.asarray(model.W, dtype=float).tolist(),
        "policy_tree": model.tree.to_dict(),
        "history": [{k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in h.items()}
                    for h in model.history],
    }


def model_from_dict(d: dict) -> AfModel:
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version!r}")
    try:
        ens = BaggedEnsemble(
            [CartTree.from_dict(t) for t in d["ensemble"]["trees"]],
            [np.asarray(s, dtype=np.int64) for s in d["ensemble"]["feature_subsets"]],
        )
        return AfModel(
            ensemble=ens,
            tree=PolicyTree.from_dict(d["policy_tree"]),
            W=np.asarray(d["W"], dtype=float),
            config=AfConfig.from_dict(d["config"]),
            n_classes=int(d["n_classes"]),
            feature_names=list(d["feature_names"]),
            schema=_schema_from_dict(d.get("schema")),
            history=list(d.get("history", [])),
        )
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def dumps(model: AfModel) -> str:
    return json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n"


def save_model(model: AfModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load_model(path) -> AfModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(d)
