"""Brute-force ground truth by enumerating all K^n labellings.

Deliberately independent of the dynamic-programming engines: every labelling
weight is recomputed from the raw model weights, with no shared table code.
Log mode decodes labelling indices in chunks for speed; rational mode walks
an odometer (itertools.product) and is exact.
"""
from __future__ import annotations

from itertools import product

import numpy as np

from .model import BIPARTITE, LOG, RATIONAL, ModelSpec, validate
from .numerics import LOG_ZERO, logsumexp, rat, rat_log
from .reports import MarginalReport, PartitionResult

DEFAULT_CAP = 20_000_000
_CHUNK = 1 << 16


class TooLargeError(ValueError):
    """The labelling space exceeds the enumeration cap."""


def _edges(spec: ModelSpec):
    n = spec.n_vertices
    if spec.family == BIPARTITE:
        return [(i, j) for i in range(spec.n1) for j in range(spec.n1, n)]
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _check_cap(spec: ModelSpec, cap: int) -> int:
    total = spec.K ** spec.n_vertices
    if total > cap:
        raise TooLargeError(
            f"{spec.K}^{spec.n_vertices} = {total} labellings exceed the cap {cap}")
    return total


def brute_partition(spec: ModelSpec, cap: int = DEFAULT_CAP) -> PartitionResult:
    """Partition sum straight from its definition."""
    validate(spec).raise_if_invalid()
    total = _check_cap(spec, cap)
    if spec.mode == RATIONAL:
        z = _accumulate_rat(spec, total, want_marginals=False)[0]
        return PartitionResult(RATIONAL, rat_log(z), Z_rational=z)
    log_z = LOG_ZERO
    for logw, _x in _log_chunks(spec, total):
        log_z = np.logaddexp(log_z, logsumexp(logw))
    return PartitionResult(LOG, float(log_z))


def brute_marginals(spec: ModelSpec, pairs=None, cap: int = DEFAULT_CAP) -> MarginalReport:
    """Unary (and requested pairwise) marginals by weighted counting."""
    validate(spec).raise_if_invalid()
    total = _check_cap(spec, cap)
    n, k = spec.n_vertices, spec.K
    pairs = [(int(i), int(j)) for i, j in pairs] if pairs is not None else None

    if spec.mode == RATIONAL:
        z, unary_acc, pair_acc = _accumulate_rat(spec, total, True, pairs)
        if z == 0:
            raise ValueError("partition sum is zero; marginals are undefined")
        unary_exact = [[v / z for v in row] for row in unary_acc]
        unary = np.array([[float(v) for v in row] for row in unary_exact])
        pairwise = pairwise_exact = None
        if pairs is not None:
            pairwise_exact = {p: [[pair_acc[p][a][b] / z for b in range(k)]
                                  for a in range(k)] for p in pairs}
            pairwise = {p: np.array([[float(v) for v in row]
                                     for row in pairwise_exact[p]]) for p in pairs}
        return MarginalReport(RATIONAL, rat_log(z), unary, Z_rational=z,
                              unary_exact=unary_exact, pairwise=pairwise,
                              pairwise_exact=pairwise_exact)

    log_z = LOG_ZERO
    acc = np.full((n, k), LOG_ZERO)
    pair_acc = {p: np.full((k, k), LOG_ZERO) for p in pairs} if pairs else None
    for logw, x in _log_chunks(spec, total):
        log_z = np.logaddexp(log_z, logsumexp(logw))
        for i in range(n):
            for lab in range(k):
                sel = logw[x[:, i] == lab]
                if len(sel):
                    acc[i, lab] = np.logaddexp(acc[i, lab], logsumexp(sel))
        if pairs:
            for (i, j) in pairs:
                for a in range(k):
                    for b in range(k):
                        sel = logw[(x[:, i] == a) & (x[:, j] == b)]
                        if len(sel):
                            pair_acc[(i, j)][a, b] = np.logaddexp(
                                pair_acc[(i, j)][a, b], logsumexp(sel))
    if log_z == LOG_ZERO:
        raise ValueError("partition sum is zero; marginals are undefined")
    unary = np.exp(acc - log_z)
    pairwise = None
    if pairs:
        pairwise = {p: np.exp(tab - log_z) for p, tab in pair_acc.items()}
    return MarginalReport(LOG, float(log_z), unary, pairwise=pairwise)


def _log_chunks(spec: ModelSpec, total: int):
    """Yield (log-weight vector, labelling matrix) over chunks of labellings."""
    n, k = spec.n_vertices, spec.K
    lg = spec.log_g_arr
    lq = spec.log_q_arr
    edges = _edges(spec)
    radix = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        x = (idx[:, None] // radix[None, :]) % k
        logw = np.zeros(len(idx))
        for i in range(n):
            logw += lq[i, x[:, i]]
        for (i, j) in edges:
            logw += lg[x[:, i], x[:, j]]
        yield logw, x


def _accumulate_rat(spec: ModelSpec, total: int, want_marginals: bool, pairs=None):
    n, k = spec.n_vertices, spec.K
    g, q = spec.g_rat, spec.q_rat
    edges = _edges(spec)
    z = rat(0)
    unary = [[rat(0) for _ in range(k)] for _ in range(n)] if want_marginals else None
    pair_acc = ({p: [[rat(0) for _ in range(k)] for _ in range(k)] for p in pairs}
                if pairs else None)
    for x in product(range(k), repeat=n):
        w = rat(1)
        for i in range(n):
            w *= q[i][x[i]]
        if w == 0:
            continue
        for (i, j) in edges:
            w *= g[x[i]][x[j]]
            if w == 0:
                break
        if w == 0:
            continue
        z += w
        if want_marginals:
            for i in range(n):
                unary[i][x[i]] += w
            if pairs:
                for (i, j) in pairs:
                    pair_acc[(i, j)][x[i]][x[j]] += w
    return z, unary, pair_acc
