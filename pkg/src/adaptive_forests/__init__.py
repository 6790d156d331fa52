"""Adaptive forests: bagged CARTs combined with input-dependent weights.

A policy tree routes each input to one of a pool of simplex weight
vectors; the pool grows through small mixed-integer programs solved by
the bundled branch-and-bound solver.
"""

from .baselines import crf_weights, equal_weights, static_predict, twrf_weights, wrf_tpe_weights
from .benchmark import BenchmarkReport, benchmark
from .cart import BaggedEnsemble, CartTree, fit_bagged, fit_cart, proba_tensor
from .dataio import DataError, Dataset, DataSplit, load_csv, partition
from .metrics import accuracy, auc_binary, ovr_auc, score_auc
from .persistence import load_model, save_model
from .pipeline import AfConfig, AfModel, predict_af, train_af
from .policy import PolicyTree, fit_policy_tree
from .rewards import compute_reward_matrix
from .weights import WeightSet, init_uniform, init_warm_start

__version__ = "0.1.0"

__all__ = [
    "AfConfig", "AfModel", "BaggedEnsemble", "BenchmarkReport", "CartTree", "DataError", "DataSplit",
    "Dataset", "PolicyTree", "WeightSet", "accuracy", "auc_binary", "benchmark", "compute_reward_matrix",
    "crf_weights", "equal_weights", "fit_bagged", "fit_cart", "fit_policy_tree", "init_uniform",
    "init_warm_start", "load_csv", "load_model", "ovr_auc", "partition", "predict_af", "proba_tensor",
    "save_model", "score_auc", "static_predict", "train_af", "twrf_weights", "wrf_tpe_weights",
]
