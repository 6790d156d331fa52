"""Training and prediction for adaptive forests.

A bagged CART ensemble is fit on one data subset; a policy tree, fit on
another, routes each input to a weight vector for combining the trees.
Training alternates between growing the candidate weight pool with the
weight-search programs and refitting the policy tree on the new rewards,
keeping whichever iteration scores best on the validation subset.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .cart import BaggedEnsemble, fit_bagged, proba_tensor
from .dataio import Dataset, DataSplit, Schema, partition
from .metrics import score_auc
from .milp import CandidateParams, generate_candidates, select_top_k
from .policy import LEAF, PolicyTree, fit_policy_tree, route
from .rewards import VARIANTS, compute_reward_matrix
from .weights import WeightSet, dedup, init_default, init_uniform, init_warm_start, update_weight_set

logger = logging.getLogger(__name__)

FEATURE_MODES = ("x_only", "x_plus_preds")
DATA_FILTERS = ("all", "nondeterministic_only", "drop_det_correct", "drop_det_incorrect")
WEIGHT_INITS = ("default", "warm_start", "uniform")
BINARY_TREES = 50
MULTICLASS_TREES = 100


@dataclass(frozen=True)
class AfConfig:
    """Everything that shapes one training run.

    ``m=None`` picks 50 trees for two classes and 100 otherwise.  With
    ``select_config`` on, the reward variant, feature mode and data filter
    given here are only the fallback; the validation-best combination from
    :func:`default_grid` is used instead.
    """

    reward_variant: str = "soft"
    alpha: float = 0.5
    reward_eps: float = 1e-6
    feature_mode: str = "x_only"
    data_filter: str = "all"
    select_config: bool = True
    m: int | None = None
    cart_depth: int = 10
    min_leaf: int = 1
    weight_init: str = "default"
    warm_start_q: int = 2
    uniform_size: int = 64
    depth_limit: int = 5
    c_min: int = 10
    lam: float = 0.0
    min_gap: float = 0.1
    max_gap: float = 0.3
    k: int = 5
    eps: float = 1e-4
    big_m: float = 2.0
    time_limit: float = 30.0
    max_iterations: int = 10
    generate: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.reward_variant not in VARIANTS:
            raise ValueError(f"reward_variant must be one of {VARIANTS}")
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")
        if self.data_filter not in DATA_FILTERS:
            raise ValueError(f"data_filter must be one of {DATA_FILTERS}")
        if self.weight_init not in WEIGHT_INITS:
            raise ValueError(f"weight_init must be one of {WEIGHT_INITS}")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be positive")
        if self.max_iterations < 1 or self.k < 1 or self.c_min < 1:
            raise ValueError("max_iterations, k and c_min must be positive")
        if self.lam > 0:
            raise ValueError("lam must be <= 0")

    def trees_for(self, n_classes: int) -> int:
        if self.m is not None:
            return self.m
        return BINARY_TREES if n_classes == 2 else MULTICLASS_TREES

    def candidate_params(self) -> CandidateParams:
        return CandidateParams(self.min_gap, self.max_gap, self.time_limit, self.big_m, self.eps)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AfConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValueError(f"unknown config field {unknown[0]!r}")
        return cls(**d)


@dataclass(frozen=True)
class AfModel:
    ensemble: BaggedEnsemble
    tree: PolicyTree
    W: np.ndarray  # (T, m) candidate vectors the tree indexes into
    config: AfConfig
    n_classes: int
    feature_names: list
    schema: Schema | None = None
    history: list = field(default_factory=list, compare=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def default_grid(n_classes: int) -> list[dict]:
    """Reward variant x feature mode x data filter, in that nesting order."""
    filters = DATA_FILTERS if n_classes == 2 else ("all",)
    return [
        {"reward_variant": r, "feature_mode": fm, "data_filter": df}
        for r in VARIANTS for fm in FEATURE_MODES for df in filters
    ]


def policy_features(X, f, mode: str) -> np.ndarray:
    """Policy-tree inputs: raw features, optionally with every tree's output."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if mode == "x_only":
        return X
    if mode == "x_plus_preds":
        return np.hstack([X, np.asarray(f).reshape(len(X), -1)])
    raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")


def filter_deterministic(f, labels, option: str) -> np.ndarray:
    """Indices of the rows to keep under a deterministic-instance filter.

    A two-class row is deterministic when every tree puts its class-1
    probability above 0.5 (every mixture predicts class 1) or every tree
    puts it at or below 0.5 (every mixture predicts class 0, ties going
    to the lower class).
    """
    f = np.asarray(f, dtype=float)
    y = np.asarray(labels)
    if option not in DATA_FILTERS:
        raise ValueError(f"filter must be one of {DATA_FILTERS}")
    rows = np.arange(len(y))
    if option == "all":
        return rows
    if f.shape[2] != 2:
        raise ValueError("deterministic filters need a two-class task")
    p1 = f[:, :, 1]
    says_one = (p1 > 0.5).all(axis=1)
    says_zero = (p1 <= 0.5).all(axis=1)
    det = says_one | says_zero
    correct = (says_one & (y == 1)) | (says_zero & (y == 0))
    if option == "nondeterministic_only":
        keep = ~det
    elif option == "drop_det_correct":
        keep = ~(det & correct)
    else:
        keep = ~(det & ~correct)
    return rows[keep]


def aggregate_routed(f, treatments, W) -> np.ndarray:
    """Per-row mixture using the weight vector each row was routed to."""
    return np.einsum("nj,njk->nk", np.asarray(W)[treatments], f)


def _initial_weights(cfg: AfConfig, m: int) -> WeightSet:
    if cfg.weight_init == "warm_start":
        return init_warm_start(m, min(cfg.warm_start_q, m))
    if cfg.weight_init == "uniform":
        return init_uniform(m, cfg.uniform_size, cfg.seed)
    return init_default(m, cfg.seed)


@dataclass
class _Stage:
    """Arrays shared by every policy-tree fit of one training run."""

    f_opt: np.ndarray
    y_opt: np.ndarray
    X_opt: np.ndarray
    f_val: np.ndarray
    y_val: np.ndarray
    X_val: np.ndarray

    def rows(self, cfg: AfConfig):
        keep = filter_deterministic(self.f_opt, self.y_opt, cfg.data_filter)
        if len(keep) == 0:
            keep = np.arange(len(self.y_opt))
        f = self.f_opt[keep]
        return f, self.y_opt[keep], policy_features(self.X_opt[keep], f, cfg.feature_mode)

    def fit(self, cfg: AfConfig, ws: WeightSet):
        f, y, Xp = self.rows(cfg)
        R = compute_reward_matrix(f, y, ws.matrix(), cfg.reward_variant, cfg.alpha, cfg.reward_eps)
        c_min = min(cfg.c_min, len(y))
        return fit_policy_tree(Xp, R, cfg.depth_limit, c_min, cfg.lam, cfg.seed)

    def val_auc(self, cfg: AfConfig, tree: PolicyTree, W: np.ndarray) -> float:
        Xp = policy_features(self.X_val, self.f_val, cfg.feature_mode)
        P = aggregate_routed(self.f_val, route(tree, Xp), W)
        return score_auc(P, self.y_val)


def select_configuration(stage: _Stage, ws: WeightSet, base: AfConfig, grid: list[dict]):
    """Best grid point by validation AUC (ties to the earliest).

    Returns the chosen config and the policy tree fit for it.
    """
    if not grid:
        raise ValueError("the configuration grid is empty")
    W = ws.matrix()
    best = None
    for point in grid:
        cfg = dataclasses.replace(base, **point)
        tree = stage.fit(cfg, ws)
        auc = stage.val_auc(cfg, tree, W)
        logger.debug("config %s: val AUC %.4f", point, auc)
        if best is None or auc > best[0]:
            best = (auc, cfg, tree)
    return best[1], best[2]


def _signature(tree: PolicyTree, W: np.ndarray) -> bytes:
    """Tree structure with each leaf's actual weight vector, as bytes."""
    d = tree.to_dict()
    d["treatment"] = [W[t].tolist() if t != LEAF else None for t in tree.treatment]
    d.pop("history", None)
    return json.dumps(d).encode()


def _used_vectors(tree: PolicyTree, ws: WeightSet) -> list[np.ndarray]:
    used = sorted({int(t) for t in tree.treatment if t != LEAF})
    return [ws.W[t] for t in used]


def _new_candidates(stage: _Stage, cfg: AfConfig, tree: PolicyTree, ws: WeightSet, iteration: int):
    f, y, Xp = stage.rows(cfg)
    modes = ["plain"]
    if iteration % 2 == 0:
        modes.append("explore")
    elif ws.hist:
        modes.append("exploit")
    params = cfg.candidate_params()
    found: list[np.ndarray] = []
    for mode in modes:
        for scope in ("global", "per_leaf"):
            found.extend(generate_candidates(f, y, tree, Xp, ws, mode, scope, params))
    found = dedup(found, against=ws.W)
    if not found:
        return []
    return select_top_k(found, f, y, tree, Xp, cfg.k, cfg.time_limit)


def train_af(ds: Dataset, cfg: AfConfig = AfConfig(), ensemble: BaggedEnsemble | None = None,
             weights: WeightSet | None = None, split: DataSplit | None = None) -> AfModel:
    """Train an adaptive forest.

    Parameters
    ----------
    ds : Dataset
    cfg : AfConfig
    ensemble : BaggedEnsemble, optional
        Pre-trained trees to use instead of bagging on the single subset.
    weights : WeightSet, optional
        Initial candidate pool instead of the configured initialisation.
    split : DataSplit, optional
        Partition to use instead of the seeded stratified one.

    Returns
    -------
    AfModel
        The iteration with the best validation AUC (earliest on ties).
    """
    split = split if split is not None else partition(ds, cfg.seed)
    X, y = ds.features, ds.labels
    if ensemble is None:
        ensemble = fit_bagged(X, y, ds.K, split.single, cfg.trees_for(ds.K), cfg.cart_depth,
                              cfg.min_leaf, cfg.seed)
    stage = _Stage(proba_tensor(ensemble, X[split.opt]), y[split.opt], X[split.opt],
                   proba_tensor(ensemble, X[split.val]), y[split.val], X[split.val])
    ws = weights.copy() if weights is not None else _initial_weights(cfg, ensemble.m)
    if cfg.select_config:
        grid = default_grid(ds.K)
        cfg, tree = select_configuration(stage, ws, cfg, grid)
    else:
        tree = stage.fit(cfg, ws)
    logger.info("configuration: reward=%s features=%s filter=%s",
                cfg.reward_variant, cfg.feature_mode, cfg.data_filter)

    W = ws.matrix()
    auc = stage.val_auc(cfg, tree, W)
    history = [{"iteration": 1, "val_auc": auc, "n_weights": len(W), "n_leaves": len(tree.leaves())}]
    best = (auc, tree, W)
    previous = _signature(tree, W)
    for iteration in range(2, cfg.max_iterations + 1):
        new = _new_candidates(stage, cfg, tree, ws, iteration) if cfg.generate else []
        ws = update_weight_set(ws, _used_vectors(tree, ws), new)
        W = ws.matrix()
        tree = stage.fit(cfg, ws)
        auc = stage.val_auc(cfg, tree, W)
        history.append({"iteration": iteration, "val_auc": auc, "n_weights": len(W),
                        "n_leaves": len(tree.leaves())})
        logger.info("iteration %d: val AUC %.4f, |W|=%d, %d new", iteration, auc, len(W), len(new))
        if auc > best[0]:
            best = (auc, tree, W)
        signature = _signature(tree, W)
        if signature == previous:
            break
        previous = signature
    _, tree, W = best
    return AfModel(ensemble, tree, W, cfg, ds.K, list(ds.feature_names), ds.schema, history)


def predict_af(model: AfModel, X):
    """Predicted class ids and aggregated distributions.

    A single row gives ``(int, K-vector)``; a matrix gives arrays.
    """
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X2.shape[1]}")
    f = proba_tensor(model.ensemble, X2)
    t = route(model.tree, policy_features(X2, f, model.config.feature_mode))
    P = aggregate_routed(f, t, model.W)
    cls = P.argmax(axis=1)
    if single:
        return int(cls[0]), P[0]
    return cls, P
