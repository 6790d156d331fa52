"""CSV ingestion, feature encoding and the four-way train/val/test partition."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

MAX_CATEGORIES = 20

# Fractions of the full dataset held out for testing, and of the
# remaining 80% held out for validation.  What is left is split 60:40.
TEST_FRACTION = 0.2
VAL_FRACTION = 0.15
SINGLE_FRACTION = 0.6


class DataError(ValueError):
    """Raised for malformed or unsupported input data."""


@dataclass(frozen=True)
class ColumnSpec:
    """How one source CSV column maps onto encoded feature columns."""

    name: str
    kind: str  # "numeric" or "categorical"
    categories: tuple[str, ...] = ()
    fill: float | None = None  # mean used for imputation, if enabled

    @property
    def width(self) -> int:
        return len(self.categories) if self.kind == "categorical" else 1


@dataclass(frozen=True)
class Schema:
    """Encoding recipe shared by training and prediction time."""

    columns: tuple[ColumnSpec, ...]
    target: str
    classes: tuple[str, ...]

    @property
    def feature_names(self) -> list[str]:
        names = []
        for col in self.columns:
            if col.kind == "numeric":
                names.append(col.name)
            else:
                names.extend(f"{col.name}={c}" for c in col.categories)
        return names

    def encode(self, frame: pd.DataFrame) -> np.ndarray:
        """Encode the feature columns of ``frame`` into a dense float matrix.

        Categories unseen at training time encode as all-zero one-hot groups.
        """
        missing = [c.name for c in self.columns if c.name not in frame.columns]
        if missing:
            raise DataError(f"missing column {missing[0]!r}")
        blocks = []
        for col in self.columns:
            raw = frame[col.name]
            if col.kind == "numeric":
                values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
                bad = ~np.isfinite(values)
                if bad.any():
                    if col.fill is None or not raw[bad].isna().all():
                        row = int(np.flatnonzero(bad)[0])
                        raise DataError(f"column {col.name!r}: missing or non-finite value in row {row}")
                    values = np.where(bad, col.fill, values)
                blocks.append(values[:, None])
            else:
                if raw.isna().any():
                    row = int(np.flatnonzero(raw.isna().to_numpy())[0])
                    raise DataError(f"column {col.name!r}: missing value in row {row}")
                text = raw.astype(str).to_numpy()
                blocks.append(np.stack([text == c for c in col.categories], axis=1).astype(float))
        if not blocks:
            return np.zeros((len(frame), 0))
        return np.hstack(blocks)

    def encode_labels(self, raw: pd.Series) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.classes)}
        text = _label_strings(raw)
        unknown = sorted(set(text) - set(lookup))
        if unknown:
            raise DataError(f"unknown class label {unknown[0]!r}")
        return np.array([lookup[t] for t in text], dtype=np.int64)


@dataclass(frozen=True)
class Dataset:
    """Encoded features with integer class labels in ``[0, K)``."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    n_classes: int
    schema: Schema | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] < 1:
            raise DataError("features must be a 2-D matrix with at least one column")
        if y.shape != (X.shape[0],):
            raise DataError("labels must be a vector aligned with the feature rows")
        if not np.isfinite(X).all():
            raise DataError("features contain non-finite values")
        if X.shape[0] < self.n_classes:
            raise DataError("fewer rows than classes")
        if y.min(initial=0) < 0 or y.max(initial=0) >= self.n_classes:
            raise DataError("labels out of range")
        absent = np.flatnonzero(np.bincount(y, minlength=self.n_classes) == 0)
        if absent.size:
            raise DataError(f"class {int(absent[0])} has no instances")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def K(self) -> int:
        return self.n_classes

    def class_name(self, k: int) -> str:
        return self.schema.classes[k] if self.schema is not None else str(k)


@dataclass(frozen=True)
class DataSplit:
    single: np.ndarray
    opt: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def sizes(self) -> tuple[int, int, int, int]:
        return len(self.single), len(self.opt), len(self.val), len(self.test)

    @property
    def train(self) -> np.ndarray:
        """Union of the CART and policy-tree subsets, sorted."""
        return np.sort(np.concatenate([self.single, self.opt]))


def _label_strings(raw: pd.Series) -> list[str]:
    values = raw.tolist()
    out = []
    for v in values:
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        out.append(str(v))
    return out


def _sorted_classes(raw: pd.Series) -> tuple[str, ...]:
    distinct = sorted(set(_label_strings(raw)))
    try:
        return tuple(sorted(distinct, key=float))
    except ValueError:
        return tuple(distinct)


def _is_numeric(series: pd.Series) -> bool:
    present = series.dropna()
    if present.empty:
        return True
    return bool(pd.to_numeric(present, errors="coerce").notna().all())


def build_schema(frame: pd.DataFrame, target: str, impute_mean: bool = False,
                 max_categories: int = MAX_CATEGORIES) -> Schema:
    if target not in frame.columns:
        raise DataError(f"target column {target!r} not found")
    columns = []
    for name in frame.columns:
        if name == target:
            continue
        series = frame[name]
        if _is_numeric(series):
            values = pd.to_numeric(series, errors="coerce")
            fill = None
            if values.isna().any():
                if not impute_mean:
                    row = int(np.flatnonzero(values.isna().to_numpy())[0])
                    raise DataError(f"column {name!r}: missing value in row {row} (enable mean imputation)")
                fill = float(values.mean())
            if not np.isfinite(values.dropna().to_numpy(dtype=float)).all():
                raise DataError(f"column {name!r}: non-finite value")
            columns.append(ColumnSpec(name, "numeric", fill=fill))
        else:
            if series.isna().any():
                row = int(np.flatnonzero(series.isna().to_numpy())[0])
                raise DataError(f"column {name!r}: missing value in row {row}")
            categories = tuple(pd.unique(series.astype(str)))
            if len(categories) > max_categories:
                raise DataError(f"column {name!r}: {len(categories)} categories exceeds the cap of {max_categories}")
            columns.append(ColumnSpec(name, "categorical", categories))
    if frame[target].isna().any():
        raise DataError(f"target column {target!r} has missing values")
    return Schema(tuple(columns), target, _sorted_classes(frame[target]))


def read_frame(path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    # Strings stay strings; pandas' own NA detection marks blank cells.
    return pd.read_csv(path, encoding="utf-8", skipinitialspace=True)


def load_csv(path, target: str, impute_mean: bool = False,
             max_categories: int = MAX_CATEGORIES) -> Dataset:
    """Load a headed CSV file into a :class:`Dataset`.

    Numeric columns pass through, string columns with at most
    ``max_categories`` levels are one-hot encoded in order of first
    appearance, and the target's distinct values are sorted to assign
    class ids.
    """
    frame = read_frame(path)
    schema = build_schema(frame, target, impute_mean, max_categories)
    X = schema.encode(frame)
    y = schema.encode_labels(frame[target])
    logger.info("loaded %s: n=%d p=%d K=%d", path, X.shape[0], X.shape[1], len(schema.classes))
    return Dataset(X, y, schema.feature_names, len(schema.classes), schema)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_sizes(n: int) -> tuple[int, int, int, int]:
    """Target (single, opt, val, test) sizes for ``n`` rows."""
    test = _round_half_up(TEST_FRACTION * n)
    val = _round_half_up((1 - TEST_FRACTION) * n * VAL_FRACTION)
    rest = n - test - val
    single = _round_half_up(SINGLE_FRACTION * rest)
    return single, rest - single, val, test


def _allocate(counts: np.ndarray, total: int, reserve: int) -> np.ndarray:
    """Split ``total`` draws across classes proportionally to ``counts``.

    Largest-remainder rounding with ties to the lowest class id.  A class
    gets at least one draw, and leaves at least ``reserve`` rows behind for
    the subsets still to be drawn, whenever its count allows it.
    """
    quota = counts * total / max(counts.sum(), 1)
    lo = (counts > reserve).astype(np.int64)
    hi = np.maximum(counts - reserve, 0)
    if hi.sum() < total:
        hi = counts.copy()
    if lo.sum() > total:
        lo = np.zeros_like(counts)
    alloc = np.clip(np.floor(quota).astype(np.int64), lo, hi)
    while alloc.sum() < total:
        room = alloc < hi
        alloc[int(np.argmax(np.where(room, quota - alloc, -np.inf)))] += 1
    while alloc.sum() > total:
        slack = alloc > lo
        alloc[int(np.argmax(np.where(slack, alloc - quota, -np.inf)))] -= 1
    return alloc


def partition(ds: Dataset, seed: int) -> DataSplit:
    """Stratified four-way split into (single, opt, val, test) index sets."""
    y = ds.labels
    counts = np.bincount(y, minlength=ds.K)
    small = np.flatnonzero(counts < 4)
    if small.size:
        k = int(small[0])
        raise DataError(f"class {ds.class_name(k)!r} has {counts[k]} instances; at least 4 are required")
    rng = np.random.default_rng(seed)
    pools = [rng.permutation(np.flatnonzero(y == k)) for k in range(ds.K)]
    single, opt, val, test = split_sizes(ds.n)
    taken = np.zeros(ds.K, dtype=np.int64)
    out = []
    for reserve, size in ((3, test), (2, val), (1, single)):
        left = counts - taken
        alloc = _allocate(left, size, reserve)
        out.append(np.sort(np.concatenate([pools[k][taken[k]:taken[k] + alloc[k]] for k in range(ds.K)])))
        taken += alloc
    out.append(np.sort(np.concatenate([pools[k][taken[k]:] for k in range(ds.K)])))
    test_idx, val_idx, single_idx, opt_idx = out
    return DataSplit(single_idx, opt_idx, val_idx, test_idx)
