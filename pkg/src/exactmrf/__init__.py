"""Exact partition sums and marginals for random fields with one shared
pairwise weight table, on complete and complete bipartite graphs.

The labelling space is partitioned by per-label vertex counts; unary
contributions per class follow a vertex-insertion recursion and pairwise
contributions are closed-form per class, giving polynomial-time exact
inference.  A brute-force oracle and approximate-inference baselines turn
the engine into an error-measurement harness.
"""
from . import kernels
from .approx import ApproxResult, evaluate, gibbs, mean_field
from .exact_bipartite import (BipartiteHTables, h_forward_bipartite,
                              partition_bipartite, unary_marginals_bipartite)
from .exact_complete import (HTable, ZeroPartitionError, h_forward, h_insert,
                             leave_one_out, pairwise_marginals, partition,
                             unary_marginals)
from .model import (CanonicalBinaryModel, ModelSpec, SchemaError,
                    ValidationReport, canonicalize_binary, random_model,
                    validate)
from .numerics import (LogValue, NegativeResultError, NonSquareRatioError,
                       Rat, log_add, log_sub, pow_int)
from .oracle import TooLargeError, brute_marginals, brute_partition
from .reports import MarginalReport, PartitionResult

__version__ = "0.1.0"

__all__ = [
    "ApproxResult", "BipartiteHTables", "CanonicalBinaryModel", "HTable",
    "LogValue", "MarginalReport", "ModelSpec", "NegativeResultError",
    "NonSquareRatioError", "PartitionResult", "Rat", "SchemaError",
    "TooLargeError", "ValidationReport", "ZeroPartitionError",
    "brute_marginals", "brute_partition", "canonicalize_binary", "evaluate",
    "gibbs", "h_forward", "h_forward_bipartite", "h_insert", "kernels",
    "leave_one_out", "log_add", "log_sub", "mean_field", "pairwise_marginals",
    "partition", "partition_bipartite", "pow_int", "random_model",
    "unary_marginals", "unary_marginals_bipartite", "validate",
]
