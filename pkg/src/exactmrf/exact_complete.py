"""Exact inference on complete graphs via count-vector dynamic programming.

The unary-contribution table H is built by inserting vertices one at a time;
the partition sum contracts H against per-class pairwise weights; marginals
come from leave-one-out tables obtained by inverting single insertions (a
triangular solve).

Inverting an insertion is exact in rational arithmetic but conditionally
stable in floats: a directed solve amplifies error once the table's local
growth ratio crosses the pivot weight, so the log lane solves in every
usable direction (two scans for K=2, one per pivot label otherwise), merges
entries by a propagated error bound, certifies the final marginal sums
against that bound, and falls back to forward recomputation only when
certification fails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .counting import CountVector, count_vectors, full_vectors, grid_shape
from .model import (COMPLETE, LOG, RATIONAL, ModelSpec, validate)
from .numerics import LOG_ZERO, LogValue, logsumexp, rat, rat_log
from .reports import MarginalReport, PartitionResult
from .tables import (forward_dense_log, forward_rat, insert_dense_log,
                     insert_rat, pairwise_logweight_dense, pairwise_weight_rat,
                     removal_plan, remove_rat)

# a non-fallback marginal is certified to this relative error
_CERT_REL = 1e-10
_LOG_CERT = math.log(_CERT_REL)
_LOG_U = math.log(4 * 2.220446049250313e-16)

DEFAULT_LOSS_BUDGET = 10.0


class ZeroPartitionError(ValueError):
    """Marginals were requested for a model whose partition sum is zero."""


@dataclass(frozen=True)
class HTable:
    """Sums of unary-factor products per count-vector class.

    Log mode stores a dense (K-1)-dim grid of log values (implied last
    component); rational mode a dict keyed by full count vectors.
    """

    k: int
    owner_size: int
    mode: str
    dense: np.ndarray | None = None
    exact: dict | None = None

    def value(self, m: CountVector):
        """Backend value at a count vector (total must equal owner_size)."""
        if len(m) != self.k or sum(m) != self.owner_size or min(m) < 0:
            raise ValueError(f"count vector {m!r} is outside this table's domain")
        if self.mode == LOG:
            return LogValue(float(self.dense[tuple(m[:-1])]))
        return self.exact[tuple(m)]

    def items(self):
        for m in count_vectors(self.k, self.owner_size):
            yield m, self.value(m)

    def logs(self) -> np.ndarray:
        """Dense log-value grid (computed on demand in rational mode)."""
        if self.mode == LOG:
            return self.dense
        out = np.full(grid_shape(self.k, self.owner_size), LOG_ZERO)
        for m, v in self.exact.items():
            out[tuple(m[:-1])] = rat_log(v)
        return out

    def max_log_diff(self, other: "HTable") -> float:
        """Largest |log difference| over the shared domain (inf if a zero
        pattern mismatches); log differences bound relative errors."""
        if (self.k, self.owner_size) != (other.k, other.owner_size):
            raise ValueError("tables describe different domains")
        _vec, flat = full_vectors(self.k, self.owner_size)
        a = self.logs().reshape(-1)[flat]
        b = other.logs().reshape(-1)[flat]
        both_zero = (a == LOG_ZERO) & (b == LOG_ZERO)
        with np.errstate(invalid="ignore"):
            d = np.where(both_zero, 0.0, a - b)
        return float(np.max(np.abs(d))) if len(d) else 0.0


@dataclass(frozen=True)
class RemovalDiagnostics:
    fallback: bool
    digits_lost: float
    negative: bool = False


# ---------------------------------------------------------------------------
# forward recursion


def h_forward(spec: ModelSpec, vertices=None) -> HTable:
    """Unary-contribution table for the (sub)set of vertices, by insertion.

    ``vertices`` defaults to all of them; insertion runs in index order.  The
    result does not depend on the order (summing over labellings is order
    free), which the tests check exactly in rational mode.
    """
    validate(spec).raise_if_invalid()
    if spec.family != COMPLETE:
        raise ValueError("h_forward applies to complete-graph models")
    idx = list(range(spec.n_vertices)) if vertices is None else list(vertices)
    if spec.mode == LOG:
        rows = spec.log_q_arr[idx] if idx else np.zeros((0, spec.K))
        return HTable(spec.K, len(idx), LOG, dense=forward_dense_log(rows, spec.K))
    rows = [spec.q_rat[i] for i in idx]
    return HTable(spec.K, len(idx), RATIONAL, exact=forward_rat(rows, spec.K))


def h_insert(table: HTable, spec: ModelSpec, vertex: int) -> HTable:
    """Insert one more vertex into an existing table (one recursion step)."""
    if spec.mode == LOG:
        dense = insert_dense_log(table.dense, table.owner_size,
                                 spec.log_q_arr[vertex])
        return HTable(table.k, table.owner_size + 1, LOG, dense=dense)
    exact = insert_rat(table.exact, table.owner_size, spec.q_rat[vertex])
    return HTable(table.k, table.owner_size + 1, RATIONAL, exact=exact)


# ---------------------------------------------------------------------------
# leave-one-out


def leave_one_out(table: HTable, vertex: int, spec: ModelSpec, present=None,
                  loss_budget_digits: float = DEFAULT_LOSS_BUDGET):
    """Table with ``vertex`` removed, by inverting its insertion.

    The solve divides by the vertex's largest unary weight.  In log mode a
    per-subtraction cancellation indicator is tracked; if any subtraction
    loses more than ``loss_budget_digits`` decimal digits (or turns
    negative), the result is recomputed forward from scratch and the
    diagnostics carry a fallback flag.  Rational mode is exact and never
    falls back.

    Returns ``(HTable, RemovalDiagnostics)``.
    """
    present = list(range(spec.n_vertices)) if present is None else list(present)
    if vertex not in present:
        raise ValueError(f"vertex {vertex} is not described by this table")
    if len(present) != table.owner_size:
        raise ValueError("present does not match the table's owner size")
    rest = [i for i in present if i != vertex]

    if spec.mode == RATIONAL:
        q_row = spec.q_rat[vertex]
        pivot = max(range(spec.K), key=lambda lab: q_row[lab])
        exact = remove_rat(table.exact, table.owner_size, q_row, pivot)
        return (HTable(spec.K, table.owner_size - 1, RATIONAL, exact=exact),
                RemovalDiagnostics(False, 0.0))

    lq_row = spec.log_q_arr[vertex]
    pivot = int(np.argmax(lq_row))
    first = _solve_pivot(table.dense, lq_row, pivot, spec.K, table.owner_size)
    negative = first[3] == kernels.STATUS_NEGATIVE
    out, err, digits = _solve_merged(table.dense, lq_row, spec.K,
                                     table.owner_size, skip_pivot=pivot,
                                     seed=first[:3])
    # the budget is the spec'd trigger; the per-entry certificate catches a
    # negative or cancelled subtraction that survived the direction merge
    if digits > loss_budget_digits or not _entries_certified(out, err):
        fb = h_forward(spec, vertices=rest)
        return fb, RemovalDiagnostics(True, digits, negative=negative)
    return (HTable(spec.K, table.owner_size - 1, LOG, dense=out),
            RemovalDiagnostics(False, digits))


def _solve_pivot(dense: np.ndarray, lq_row: np.ndarray, pivot: int, k: int,
                 total: int, in_err: np.ndarray | None = None):
    """One directed triangular solve; returns (dense', err', digits, status)."""
    plan = removal_plan(k, total, pivot)
    others = np.array([lq_row[lab] for lab in range(k) if lab != pivot])
    out_size = int(np.prod(plan.out_shape))
    out, err, digits, status = kernels.plan_remove(
        np.ascontiguousarray(dense.reshape(-1)), plan.out_idx, plan.src_idx,
        plan.dep_idx, plan.levels, others, float(lq_row[pivot]), out_size,
        np.ascontiguousarray(in_err.reshape(-1)) if in_err is not None else None)
    return out.reshape(plan.out_shape), err.reshape(plan.out_shape), digits, status


def _solve_merged(dense: np.ndarray, lq_row: np.ndarray, k: int, total: int,
                  in_err: np.ndarray | None = None, skip_pivot: int = -1,
                  seed: tuple | None = None):
    """Solve with every usable pivot label and keep, per entry, the result
    with the smallest propagated error bound.  ``seed`` folds in an already
    computed (out, err) pair so the first solve is not repeated."""
    best = seed
    digits = math.inf if seed is None else seed[2]
    for pivot in range(k):
        if pivot == skip_pivot or lq_row[pivot] == LOG_ZERO:
            continue
        out, err, dig, _status = _solve_pivot(dense, lq_row, pivot, k, total,
                                              in_err)
        digits = min(digits, dig)
        if best is None:
            best = (out, err, dig)
            continue
        pick = err <= best[1]
        best = (np.where(pick, out, best[0]), np.where(pick, err, best[1]), digits)
    return best[0], best[1], digits


def _entries_certified(out: np.ndarray, err: np.ndarray,
                       log_rel: float = _LOG_CERT) -> bool:
    """True when every entry's propagated bound keeps its relative error
    below exp(log_rel); exact zeros (bound and value both zero) pass."""
    return not bool(np.any(err > out + log_rel))


# ---------------------------------------------------------------------------
# per-class pairwise weights, two-label lane


def _xmul(counts: np.ndarray, logw: float) -> np.ndarray:
    """counts * logw with the 0**0 = 1 convention for zero weights."""
    if logw == LOG_ZERO:
        return np.where(counts > 0, LOG_ZERO, 0.0)
    return counts * logw


def _binary_class_logweights(n: int, lg: np.ndarray) -> np.ndarray:
    """Log pairwise factor per class, indexed by the count of label-1."""
    m = np.arange(n + 1, dtype=np.float64)
    return (_xmul((n - m) * (n - m - 1) / 2, lg[0, 0])
            + _xmul(m * (n - m), lg[0, 1])
            + _xmul(m * (m - 1) / 2, lg[1, 1]))


# ---------------------------------------------------------------------------
# partition sums


def partition(spec: ModelSpec) -> PartitionResult:
    """Exact partition sum of the original model."""
    validate(spec).raise_if_invalid()
    if spec.family != COMPLETE:
        raise ValueError("partition applies to complete-graph models")
    if spec.mode == RATIONAL:
        table = forward_rat(list(spec.q_rat), spec.K)
        z = rat(0)
        for m, h in table.items():
            if h != 0:
                z += h * pairwise_weight_rat(m, spec.g_rat)
        return PartitionResult(RATIONAL, rat_log(z), Z_rational=z)

    if spec.K == 2:
        lq = spec.log_q_arr
        h = kernels.binary_forward(np.ascontiguousarray(lq[:, 0]),
                                   np.ascontiguousarray(lq[:, 1]))
        w = _binary_class_logweights(spec.n1, spec.log_g_arr)
        return PartitionResult(LOG, logsumexp(h + w))
    dense = forward_dense_log(spec.log_q_arr, spec.K)
    w = pairwise_logweight_dense(spec.K, spec.n1, spec.log_g_arr)
    return PartitionResult(LOG, logsumexp(dense + w))


# ---------------------------------------------------------------------------
# marginals


def unary_marginals(spec: ModelSpec,
                    loss_budget_digits: float = DEFAULT_LOSS_BUDGET) -> MarginalReport:
    """Exact unary marginals for every vertex."""
    return _marginals(spec, pairs=None, loss_budget_digits=loss_budget_digits)


def pairwise_marginals(spec: ModelSpec, pairs,
                       loss_budget_digits: float = DEFAULT_LOSS_BUDGET) -> MarginalReport:
    """Unary marginals plus joint tables for the requested vertex pairs."""
    pairs = [(int(i), int(j)) for i, j in pairs]
    for i, j in pairs:
        if i == j or not (0 <= i < spec.n_vertices and 0 <= j < spec.n_vertices):
            raise ValueError(f"invalid vertex pair ({i}, {j})")
    return _marginals(spec, pairs=pairs, loss_budget_digits=loss_budget_digits)


def _marginals(spec, pairs, loss_budget_digits) -> MarginalReport:
    validate(spec).raise_if_invalid()
    if spec.family != COMPLETE:
        raise ValueError("this engine handles complete-graph models")
    if spec.mode == RATIONAL:
        return _marginals_rat(spec, pairs)
    if spec.K == 2:
        return _marginals_binary(spec, pairs)
    return _marginals_general(spec, pairs)


def _normalize(numer: np.ndarray) -> np.ndarray:
    z = logsumexp(numer)
    with np.errstate(invalid="ignore"):
        return np.exp(numer - z)


def _cert_ratio(log_err: float, log_numer: float) -> float:
    if log_err == LOG_ZERO:
        return LOG_ZERO
    if log_numer == LOG_ZERO:
        return math.inf
    return log_err - log_numer


def _certified(log_errs, log_numers, n_terms: int) -> bool:
    # summation roundoff of the contraction itself, on top of the solve bound
    floor = _LOG_U + math.log(max(n_terms, 1))
    worst = max(_cert_ratio(e, v) for e, v in zip(log_errs, log_numers))
    return max(worst, floor) <= _LOG_CERT


# -- two-label lane (1-D tables indexed by the label-1 count) ----------------


def _binary_remove_merged(h: np.ndarray, lq0: float, lq1: float,
                          in_err: np.ndarray | None = None):
    """Both directed scans, merged per entry by error bound."""
    runs = []
    digits = math.inf
    if lq0 != LOG_ZERO:
        out, err, dig, _s = kernels.binary_remove(h, lq0, lq1, 0, in_err)
        runs.append((out, err))
        digits = min(digits, dig)
    if lq1 != LOG_ZERO:
        out, err, dig, _s = kernels.binary_remove(h, lq0, lq1, 1, in_err)
        runs.append((out, err))
        digits = min(digits, dig)
    if len(runs) == 1:
        return runs[0][0], runs[0][1], digits
    (o0, e0), (o1, e1) = runs
    pick = e0 <= e1
    return np.where(pick, o0, o1), np.where(pick, e0, e1), digits


def _marginals_binary(spec, pairs) -> MarginalReport:
    n = spec.n1
    lq = spec.log_q_arr
    lq0 = np.ascontiguousarray(lq[:, 0])
    lq1 = np.ascontiguousarray(lq[:, 1])
    h = kernels.binary_forward(lq0, lq1)
    w = _binary_class_logweights(n, spec.log_g_arr)
    log_z = logsumexp(h + w)
    if log_z == LOG_ZERO:
        raise ZeroPartitionError("partition sum is zero; marginals are undefined")

    def numerators(table, err_table, i):
        numer = np.array([lq0[i] + logsumexp(table + w[:n]),
                          lq1[i] + logsumexp(table + w[1:])])
        errs = np.array([lq0[i] + logsumexp(err_table + w[:n]),
                         lq1[i] + logsumexp(err_table + w[1:])])
        return numer, errs

    unary = np.zeros((n, 2))
    fallback = np.zeros(n, dtype=bool)
    digits_arr = np.zeros(n)
    want_kept = {i for i, _ in pairs} if pairs else set()
    kept: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    for i in range(n):
        out, err, digits = _binary_remove_merged(h, float(lq0[i]), float(lq1[i]))
        digits_arr[i] = digits
        numer, errs = numerators(out, err, i)
        if not _certified(errs, numer, n):
            fallback[i] = True
            rest = np.delete(np.arange(n), i)
            out = kernels.binary_forward(lq0[rest].copy(), lq1[rest].copy())
            err = np.full(n, LOG_ZERO)
            numer, _e = numerators(out, err, i)
        unary[i] = _normalize(numer)
        if i in want_kept:
            kept[i] = (out, err)

    pairwise = None
    pair_fallback = None
    if pairs is not None:
        pairwise = {}
        pair_fallback = {}
        for (i, j) in pairs:
            out_i, err_i = kept[i]
            out2, err2, _d = _binary_remove_merged(out_i, float(lq0[j]),
                                                   float(lq1[j]), in_err=err_i)
            numer, errs = _pair_numerators_binary(out2, err2, lq, w, n, i, j)
            good = _certified(errs.ravel(), numer.ravel(), n)
            if not good:
                rest = np.delete(np.arange(n), [i, j])
                out2 = kernels.binary_forward(lq0[rest].copy(), lq1[rest].copy())
                err2 = np.full(n - 1, LOG_ZERO)
                numer, _e = _pair_numerators_binary(out2, err2, lq, w, n, i, j)
            pair_fallback[(i, j)] = not good
            pairwise[(i, j)] = _normalize(numer.ravel()).reshape(2, 2)

    return MarginalReport(LOG, log_z, unary, pairwise=pairwise,
                          fallback=fallback, digits_lost=digits_arr,
                          pair_fallback=pair_fallback)


def _pair_numerators_binary(out2, err2, lq, w, n, i, j):
    numer = np.zeros((2, 2))
    errs = np.zeros((2, 2))
    for a in (0, 1):
        for b in (0, 1):
            shift = a + b  # label-1 vertices contributed by the pair
            pref = lq[i, a] + lq[j, b]
            numer[a, b] = pref + logsumexp(out2 + w[shift:shift + n - 1])
            errs[a, b] = pref + logsumexp(err2 + w[shift:shift + n - 1])
    return numer, errs


# -- general K-label lane -----------------------------------------------------


def _shifted_weight_rows(w: np.ndarray, k: int, total_out: int, shift_vecs):
    """Compact contraction inputs for tables over ``total_out`` vertices.

    Returns ``(valid_flat, w_rows)``: the flat positions of the valid grid
    points and, per requested count-vector shift, the pairwise weights
    gathered at (point + shift).
    """
    vec, valid_flat = full_vectors(k, total_out)
    rows = np.empty((len(shift_vecs), len(vec)))
    for r, shift in enumerate(shift_vecs):
        tgt = vec[:, :k - 1] + np.asarray(shift[:k - 1], dtype=np.int64)
        rows[r] = w[tuple(tgt.T)]
    return valid_flat, rows


def _basis(k: int):
    return [tuple(1 if lab == a else 0 for lab in range(k)) for a in range(k)]


def _marginals_general(spec, pairs) -> MarginalReport:
    n, k = spec.n_vertices, spec.K
    lq = spec.log_q_arr
    dense = forward_dense_log(lq, k)
    w = pairwise_logweight_dense(k, n, spec.log_g_arr)
    log_z = logsumexp(dense + w)
    if log_z == LOG_ZERO:
        raise ZeroPartitionError("partition sum is zero; marginals are undefined")

    basis = _basis(k)
    vflat1, wrows1 = _shifted_weight_rows(w, k, n - 1, basis)

    unary = np.zeros((n, k))
    fallback = np.zeros(n, dtype=bool)
    digits_arr = np.zeros(n)
    want_kept = {i for i, _ in pairs} if pairs else set()
    kept: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def numerators(table, err_table, vflat, wrows, prefs):
        tv = table.reshape(-1)[vflat]
        ev = err_table.reshape(-1)[vflat]
        numer = prefs + logsumexp(tv[None, :] + wrows, axis=1)
        errs = prefs + logsumexp(ev[None, :] + wrows, axis=1)
        return numer, errs

    def solve_certified(src, lq_row, total, in_err, numer_fn):
        """argmax pivot first, full pivot merge second, recompute last."""
        pivot = int(np.argmax(lq_row))
        out, err, digits, _s = _solve_pivot(src, lq_row, pivot, k, total, in_err)
        numer, errs = numer_fn(out, err)
        if _certified(errs.ravel(), numer.ravel(), out.size):
            return out, err, digits, numer, False
        out, err, digits = _solve_merged(src, lq_row, k, total, in_err,
                                         skip_pivot=pivot,
                                         seed=(out, err, digits))
        numer, errs = numer_fn(out, err)
        if _certified(errs.ravel(), numer.ravel(), out.size):
            return out, err, digits, numer, False
        return out, err, digits, None, True

    for i in range(n):
        fn = lambda o, e, i=i: numerators(o, e, vflat1, wrows1, lq[i])
        out, err, digits, numer, failed = solve_certified(dense, lq[i], n,
                                                          None, fn)
        digits_arr[i] = digits
        if failed:
            fallback[i] = True
            out = forward_dense_log(np.delete(lq, i, axis=0), k)
            err = np.full_like(out, LOG_ZERO)
            numer, _e = fn(out, err)
        unary[i] = _normalize(numer)
        if i in want_kept:
            kept[i] = (out, err)

    pairwise = None
    pair_fallback = None
    if pairs is not None:
        pair_shifts = [tuple(basis[a][c] + basis[b][c] for c in range(k))
                       for a in range(k) for b in range(k)]
        vflat2, wrows2 = _shifted_weight_rows(w, k, n - 2, pair_shifts)
        pairwise = {}
        pair_fallback = {}
        for (i, j) in pairs:
            prefs = np.array([lq[i, a] + lq[j, b]
                              for a in range(k) for b in range(k)])
            fn = lambda o, e, p=prefs: numerators(o, e, vflat2, wrows2, p)
            out_i, err_i = kept[i]
            out2, err2, _d, numer, failed = solve_certified(out_i, lq[j],
                                                            n - 1, err_i, fn)
            if failed:
                out2 = forward_dense_log(np.delete(lq, [i, j], axis=0), k)
                err2 = np.full_like(out2, LOG_ZERO)
                numer, _e = fn(out2, err2)
            pair_fallback[(i, j)] = failed
            pairwise[(i, j)] = _normalize(numer).reshape(k, k)

    return MarginalReport(LOG, log_z, unary, pairwise=pairwise,
                          fallback=fallback, digits_lost=digits_arr,
                          pair_fallback=pair_fallback)


# -- exact rational lane -------------------------------------------------------


def _marginals_rat(spec, pairs) -> MarginalReport:
    n, k = spec.n_vertices, spec.K
    table = forward_rat(list(spec.q_rat), k)
    weights = {m: pairwise_weight_rat(m, spec.g_rat)
               for m in count_vectors(k, n)}
    z = rat(0)
    for m, h in table.items():
        if h != 0:
            z += h * weights[m]
    if z == 0:
        raise ZeroPartitionError("partition sum is zero; marginals are undefined")

    def numer_for(sub_table, extra: CountVector, pref):
        total = rat(0)
        for m, h in sub_table.items():
            if h == 0:
                continue
            full = tuple(m[lab] + extra[lab] for lab in range(k))
            total += h * weights[full]
        return pref * total

    basis = [tuple(1 if lab == a else 0 for lab in range(k)) for a in range(k)]
    unary_exact = []
    kept = {}
    want_kept = {i for i, _ in pairs} if pairs else set()
    for i in range(n):
        q_row = spec.q_rat[i]
        pivot = max(range(k), key=lambda lab: q_row[lab])
        sub = remove_rat(table, n, q_row, pivot)
        if i in want_kept:
            kept[i] = sub
        numers = [numer_for(sub, basis[a], q_row[a]) for a in range(k)]
        tot = sum(numers, rat(0))
        unary_exact.append([v / tot for v in numers])

    pairwise_exact = None
    pairwise = None
    pair_fallback = None
    if pairs is not None:
        pairwise_exact = {}
        pairwise = {}
        pair_fallback = {}
        for (i, j) in pairs:
            q_row = spec.q_rat[j]
            pivot = max(range(k), key=lambda lab: q_row[lab])
            sub2 = remove_rat(kept[i], n - 1, q_row, pivot)
            numers = [[numer_for(sub2,
                                 tuple(basis[a][lab] + basis[b][lab]
                                       for lab in range(k)),
                                 spec.q_rat[i][a] * q_row[b])
                       for b in range(k)] for a in range(k)]
            tot = sum((v for row in numers for v in row), rat(0))
            exact_tab = [[v / tot for v in row] for row in numers]
            pairwise_exact[(i, j)] = exact_tab
            pairwise[(i, j)] = np.array([[float(v) for v in row]
                                         for row in exact_tab])
            pair_fallback[(i, j)] = False

    unary = np.array([[float(v) for v in row] for row in unary_exact])
    return MarginalReport(RATIONAL, rat_log(z), unary, Z_rational=z,
                          unary_exact=unary_exact, pairwise=pairwise,
                          pairwise_exact=pairwise_exact,
                          fallback=np.zeros(n, dtype=bool),
                          digits_lost=np.zeros(n),
                          pair_fallback=pair_fallback)
