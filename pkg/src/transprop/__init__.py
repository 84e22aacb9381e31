"""Clustering by transitive propagation."""

__version__ = "0.1.0"

from .types import (
    INFEASIBLE,
    HypothesisMatrix,
    Infeasible,
    Partition,
    ScoreMatrix,
    TripleVerdict,
    check_transitivity,
    hypothesis_to_partition,
    objective,
    partition_objective,
    partition_to_hypothesis,
)
from .solver import MessageTensor, SolverConfig, SolverResult, no_prior_solution, solve

__all__ = [
    "INFEASIBLE",
    "HypothesisMatrix",
    "Infeasible",
    "MessageTensor",
    "Partition",
    "ScoreMatrix",
    "SolverConfig",
    "SolverResult",
    "TripleVerdict",
    "check_transitivity",
    "hypothesis_to_partition",
    "no_prior_solution",
    "objective",
    "partition_objective",
    "partition_to_hypothesis",
    "solve",
]
