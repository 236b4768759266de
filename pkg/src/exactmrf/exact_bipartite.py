"""Exact inference on complete bipartite graphs.

The unary-contribution table of the joint (A, B) class factorizes into one
table per side, so each side is built by the same insertion recursion as the
complete-graph engine; the partition sum contracts the two side tables
against a cross-class pairwise weight matrix.  g may be asymmetric here
(rows index A-side labels).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import count_vectors, full_vectors, grid_shape
from .exact_complete import (HTable, ZeroPartitionError, _certified,
                             _solve_merged, _solve_pivot)
from .model import BIPARTITE, LOG, RATIONAL, ModelSpec, validate
from .numerics import LOG_ZERO, logsumexp, rat, rat_log
from .reports import MarginalReport, PartitionResult
from .tables import (cross_logweight, cross_weight_rat, forward_dense_log,
                     forward_rat, remove_rat)


@dataclass(frozen=True)
class BipartiteHTables:
    """Per-side unary-contribution tables; the joint table is their product."""

    h_A: HTable
    h_B: HTable


def _side_rows(spec: ModelSpec):
    if spec.mode == LOG:
        lq = spec.log_q_arr
        return lq[:spec.n1], lq[spec.n1:]
    return (list(spec.q_rat[:spec.n1]), list(spec.q_rat[spec.n1:]))


def h_forward_bipartite(spec: ModelSpec) -> BipartiteHTables:
    """Both side tables, each by vertex-insertion recursion."""
    validate(spec).raise_if_invalid()
    if spec.family != BIPARTITE:
        raise ValueError("h_forward_bipartite applies to bipartite models")
    rows_a, rows_b = _side_rows(spec)
    k = spec.K
    if spec.mode == LOG:
        return BipartiteHTables(
            HTable(k, spec.n1, LOG, dense=forward_dense_log(rows_a, k)),
            HTable(k, spec.n2, LOG, dense=forward_dense_log(rows_b, k)))
    return BipartiteHTables(
        HTable(k, spec.n1, RATIONAL, exact=forward_rat(rows_a, k)),
        HTable(k, spec.n2, RATIONAL, exact=forward_rat(rows_b, k)))


def partition_bipartite(spec: ModelSpec) -> PartitionResult:
    """Exact partition sum: sum over class pairs of h_A * h_B * cross weight."""
    validate(spec).raise_if_invalid()
    if spec.family != BIPARTITE:
        raise ValueError("partition_bipartite applies to bipartite models")
    k = spec.K
    if spec.mode == RATIONAL:
        rows_a, rows_b = _side_rows(spec)
        ha = forward_rat(rows_a, k)
        hb = forward_rat(rows_b, k)
        z = rat(0)
        for ma, va in ha.items():
            if va == 0:
                continue
            for mb, vb in hb.items():
                if vb == 0:
                    continue
                z += va * vb * cross_weight_rat(ma, mb, spec.g_rat)
        return PartitionResult(RATIONAL, rat_log(z), Z_rational=z)

    ha, hb, va, vb, fa, fb, cross = _log_pieces(spec)
    inner = logsumexp(cross + hb.reshape(-1)[fb][None, :], axis=1)
    log_z = logsumexp(ha.reshape(-1)[fa] + inner)
    return PartitionResult(LOG, float(log_z))


def _log_pieces(spec: ModelSpec):
    """Side tables, valid-class index arrays and the cross weight matrix."""
    k = spec.K
    rows_a, rows_b = _side_rows(spec)
    ha = forward_dense_log(rows_a, k)
    hb = forward_dense_log(rows_b, k)
    va, fa = full_vectors(k, spec.n1)
    vb, fb = full_vectors(k, spec.n2)
    cross = cross_logweight(va, vb, spec.log_g_arr)
    return ha, hb, va, vb, fa, fb, cross


def unary_marginals_bipartite(spec: ModelSpec) -> MarginalReport:
    """Exact unary marginals for all vertices on both sides.

    For a vertex on side A the numerator contracts the leave-one-out A table
    against a precomputed profile T(v) = sum_B h_B * cross(v, .); the same
    happens mirrored for side B.  Leave-one-out uses the inverse insertion
    with the usual certified-error fallback to forward recomputation.
    """
    validate(spec).raise_if_invalid()
    if spec.family != BIPARTITE:
        raise ValueError("unary_marginals_bipartite applies to bipartite models")
    if spec.mode == RATIONAL:
        return _marginals_rat(spec)
    return _marginals_log(spec)


def _marginals_log(spec: ModelSpec) -> MarginalReport:
    n1, n2, k = spec.n1, spec.n2, spec.K
    n = n1 + n2
    lq = spec.log_q_arr
    ha, hb, va, vb, fa, fb, cross = _log_pieces(spec)
    hb_flat = hb.reshape(-1)[fb]
    ha_flat = ha.reshape(-1)[fa]

    # per-class profiles of the opposite side, on this side's full-count grid
    t_a = np.zeros(grid_shape(k, n1))
    t_a.reshape(-1)[fa] = logsumexp(cross + hb_flat[None, :], axis=1)
    t_b = np.zeros(grid_shape(k, n2))
    t_b.reshape(-1)[fb] = logsumexp(cross.T + ha_flat[None, :], axis=1)

    log_z = logsumexp(ha_flat + t_a.reshape(-1)[fa])
    if log_z == LOG_ZERO:
        raise ZeroPartitionError("partition sum is zero; marginals are undefined")

    unary = np.zeros((n, k))
    fallback = np.zeros(n, dtype=bool)
    digits_arr = np.zeros(n)
    for side, (h_side, t_side, n_side, rows) in enumerate(
            [(ha, t_a, n1, lq[:n1]), (hb, t_b, n2, lq[n1:])]):
        for local in range(n_side):
            vid = local if side == 0 else n1 + local
            lq_row = rows[local]
            pivot = int(np.argmax(lq_row))
            out, err, digits, _s = _solve_pivot(h_side, lq_row, pivot, k, n_side)
            numer, errs = _numerators(out, err, lq_row, t_side, n_side, k)
            good = _certified(errs, numer, out.size)
            if not good:
                out, err, digits = _solve_merged(h_side, lq_row, k, n_side,
                                                 skip_pivot=pivot,
                                                 seed=(out, err, digits))
                numer, errs = _numerators(out, err, lq_row, t_side, n_side, k)
                good = _certified(errs, numer, out.size)
            digits_arr[vid] = digits
            if not good:
                fallback[vid] = True
                out = forward_dense_log(np.delete(rows, local, axis=0), k)
                err = np.full_like(out, LOG_ZERO)
                numer, _e = _numerators(out, err, lq_row, t_side, n_side, k)
            unary[vid] = np.exp(numer - logsumexp(numer))

    return MarginalReport(LOG, float(log_z), unary, fallback=fallback,
                          digits_lost=digits_arr)


def _numerators(table, err_table, lq_row, t_grid, n_side, k):
    nd = k - 1
    numer = np.empty(k)
    errs = np.empty(k)
    for lab in range(k):
        sl = tuple(slice(1, n_side + 1) if ax == lab else slice(0, n_side)
                   for ax in range(nd))
        tv = t_grid[sl]
        numer[lab] = lq_row[lab] + logsumexp(table + tv)
        errs[lab] = lq_row[lab] + logsumexp(err_table + tv)
    return numer, errs


def _marginals_rat(spec: ModelSpec) -> MarginalReport:
    n1, n2, k = spec.n1, spec.n2, spec.K
    n = n1 + n2
    rows_a, rows_b = _side_rows(spec)
    ha = forward_rat(rows_a, k)
    hb = forward_rat(rows_b, k)

    def profile(other_table, other_is_b, total_self):
        out = {}
        for v in count_vectors(k, total_self):
            s = rat(0)
            for mo, vo in other_table.items():
                if vo == 0:
                    continue
                s += vo * (cross_weight_rat(v, mo, spec.g_rat) if other_is_b
                           else cross_weight_rat(mo, v, spec.g_rat))
            out[v] = s
        return out

    t_a = profile(hb, True, n1)
    t_b = profile(ha, False, n2)
    z = rat(0)
    for ma, vd in ha.items():
        if vd != 0:
            z += vd * t_a[ma]
    if z == 0:
        raise ZeroPartitionError("partition sum is zero; marginals are undefined")

    basis = [tuple(1 if lab == a else 0 for lab in range(k)) for a in range(k)]
    unary_exact = []
    for side, (table, t_side, n_side, rows) in enumerate(
            [(ha, t_a, n1, rows_a), (hb, t_b, n2, rows_b)]):
        for local in range(n_side):
            q_row = rows[local]
            pivot = max(range(k), key=lambda lab: q_row[lab])
            sub = remove_rat(table, n_side, q_row, pivot)
            numers = []
            for lab in range(k):
                s = rat(0)
                for m, v in sub.items():
                    if v == 0:
                        continue
                    full = tuple(m[c] + basis[lab][c] for c in range(k))
                    s += v * t_side[full]
                numers.append(q_row[lab] * s)
            tot = sum(numers, rat(0))
            unary_exact.append([v / tot for v in numers])

    unary = np.array([[float(v) for v in row] for row in unary_exact])
    return MarginalReport(RATIONAL, rat_log(z), unary, Z_rational=z,
                          unary_exact=unary_exact,
                          fallback=np.zeros(n, dtype=bool),
                          digits_lost=np.zeros(n))
