"""A small exact MILP solver and the weight-search programs built on it."""

from .problem import MilpProblem, MilpSolution
from .solver import solve
from .weighting import (
    BIG_M,
    EPSILON,
    CandidateParams,
    WeightProgram,
    add_exploit_constraints,
    build_binary_weight_problem,
    build_multiclass_weight_problem,
    build_weight_problem,
    generate_candidates,
    select_top_k,
    top_k_from_counts,
)

__all__ = [
    "BIG_M",
    "EPSILON",
    "CandidateParams",
    "MilpProblem",
    "MilpSolution",
    "WeightProgram",
    "add_exploit_constraints",
    "build_binary_weight_problem",
    "build_multiclass_weight_problem",
    "build_weight_problem",
    "generate_candidates",
    "select_top_k",
    "solve",
    "top_k_from_counts",
]
