"""Dense count-vector tables: forward insertion, removal plans, edge weights.

Internal machinery shared by the complete-graph and bipartite engines.  The
log lane works on dense (K-1)-dimensional float64 grids (see counting);
the rational lane works on dicts keyed by full count vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .counting import count_vectors, full_vectors, grid_shape
from .numerics import LOG_ZERO, Rat, rat


def _axis_slice(ndim: int, axis: int, sl: slice) -> tuple:
    out = [slice(None)] * ndim
    out[axis] = sl
    return tuple(out)


# ---------------------------------------------------------------------------
# forward insertion recursion (log lane)


def forward_dense_log(lq_rows: np.ndarray, k: int) -> np.ndarray:
    """Unary-contribution table built by inserting one vertex at a time.

    ``lq_rows`` is (t, K) of log unary weights; the result has shape
    ``grid_shape(k, t)`` with the implied-last-component convention and
    log-zero at grid points outside the domain.
    """
    t = lq_rows.shape[0]
    shape = grid_shape(k, t)
    prev = np.full(shape, LOG_ZERO)
    prev[(0,) * (k - 1)] = 0.0
    nd = k - 1
    for i in range(t):
        cur = prev + lq_rows[i, k - 1]
        for ax in range(nd):
            tgt = cur[_axis_slice(nd, ax, slice(1, None))]
            src = prev[_axis_slice(nd, ax, slice(None, -1))]
            np.logaddexp(tgt, src + lq_rows[i, ax], out=tgt)
        prev = cur
    return prev


def insert_dense_log(dense: np.ndarray, total: int, lq_row: np.ndarray) -> np.ndarray:
    """One insertion step: table over t vertices -> table over t+1."""
    k = len(lq_row)
    nd = k - 1
    grown = np.full(grid_shape(k, total + 1), LOG_ZERO)
    corner = tuple(slice(0, total + 1) for _ in range(nd))
    grown[corner] = dense
    cur = grown + lq_row[k - 1]
    for ax in range(nd):
        tgt = cur[_axis_slice(nd, ax, slice(1, None))]
        src = grown[_axis_slice(nd, ax, slice(None, -1))]
        np.logaddexp(tgt, src + lq_row[ax], out=tgt)
    return cur


# ---------------------------------------------------------------------------
# forward recursion (rational lane)


def forward_rat(q_rows, k: int) -> dict:
    """Exact unary-contribution table as {count vector: rational}."""
    prev = {(0,) * k: rat(1)}
    total = 0
    for row in q_rows:
        cur: dict = {}
        for m, v in prev.items():
            if v == 0:
                continue
            for lab in range(k):
                if row[lab] == 0:
                    continue
                key = m[:lab] + (m[lab] + 1,) + m[lab + 1:]
                cur[key] = cur.get(key, rat(0)) + row[lab] * v
        total += 1
        for m in count_vectors(k, total):
            cur.setdefault(m, rat(0))
        prev = cur
    return prev


def insert_rat(table: dict, total: int, q_row) -> dict:
    k = len(q_row)
    cur: dict = {}
    for m, v in table.items():
        if v == 0:
            continue
        for lab in range(k):
            if q_row[lab] == 0:
                continue
            key = m[:lab] + (m[lab] + 1,) + m[lab + 1:]
            cur[key] = cur.get(key, rat(0)) + q_row[lab] * v
    for m in count_vectors(k, total + 1):
        cur.setdefault(m, rat(0))
    return cur


def remove_rat(table: dict, total: int, q_row, pivot: int) -> dict:
    """Exact inverse of one insertion step (triangular solve).

    Entries are produced in ascending order of the non-pivot label count, so
    every dependency is already solved.  Requires q_row[pivot] != 0.
    """
    k = len(q_row)
    qp = q_row[pivot]
    if qp == 0:
        raise ZeroDivisionError("pivot unary weight is zero")
    out: dict = {}
    targets = sorted(count_vectors(k, total - 1), key=lambda m: -m[pivot])
    for m in targets:
        src = m[:pivot] + (m[pivot] + 1,) + m[pivot + 1:]
        acc = rat(0)
        for lab in range(k):
            if lab == pivot or m[lab] == 0 or q_row[lab] == 0:
                continue
            w = list(src)
            w[lab] -= 1
            acc += q_row[lab] * out[tuple(w)]
        out[m] = (table[src] - acc) / qp
    return out


# ---------------------------------------------------------------------------
# removal plans (log lane)
#
# Flattened gather/scatter schedule for the triangular solve that inverts one
# insertion.  Entries are ordered by ascending non-pivot label count; each
# entry reads H at (m + e_pivot) and previously solved outputs at
# (m + e_pivot - e_k), k != pivot.


@dataclass(frozen=True)
class RemovalPlan:
    k: int
    total: int          # table size before removal
    pivot: int
    in_shape: tuple[int, ...]
    out_shape: tuple[int, ...]
    out_idx: np.ndarray   # (M,) flat positions in the output grid, solve order
    src_idx: np.ndarray   # (M,) flat positions in the input grid
    dep_idx: np.ndarray   # (K-1, M) flat positions in the output grid, -1 if absent
    levels: np.ndarray    # (L+1,) boundaries of equal-level runs in solve order


@lru_cache(maxsize=128)
def removal_plan(k: int, total: int, pivot: int) -> RemovalPlan:
    t = total
    in_shape = grid_shape(k, t)
    out_shape = grid_shape(k, t - 1)
    vec, flat_out = full_vectors(k, t - 1)
    level = (t - 1) - vec[:, pivot]
    order = np.argsort(level, kind="stable")
    vec = vec[order]
    out_idx = flat_out[order]

    src = vec.copy()
    src[:, pivot] += 1
    src_idx = np.ravel_multi_index(tuple(src[:, :-1].T), in_shape)

    others = [lab for lab in range(k) if lab != pivot]
    dep = np.full((k - 1, len(vec)), -1, dtype=np.int64)
    for c, lab in enumerate(others):
        w = src.copy()
        w[:, lab] -= 1
        # rows with w[lab] < 0 are absent and masked out; clip keeps the
        # ravel in range for them (w[pivot] can exceed the grid only there)
        ok = w[:, lab] >= 0
        flat = np.ravel_multi_index(tuple(w[:, :-1].T), out_shape, mode="clip")
        dep[c, ok] = flat[ok]

    lv = np.asarray(level[order])
    bounds = np.searchsorted(lv, np.arange(int(lv.max()) + 2 if len(lv) else 1))
    return RemovalPlan(k, t, pivot, in_shape, out_shape,
                       np.ascontiguousarray(out_idx, dtype=np.int64),
                       np.ascontiguousarray(src_idx, dtype=np.int64),
                       np.ascontiguousarray(dep, dtype=np.int64),
                       np.ascontiguousarray(bounds, dtype=np.int64))


# ---------------------------------------------------------------------------
# pairwise edge-weight grids (log lane)


def _zero_pair_masks(vectors: np.ndarray, log_g: np.ndarray):
    """Rows whose labelling class touches a zero pairwise weight."""
    mask = np.zeros(len(vectors), dtype=bool)
    zk, zkp = np.where(np.isneginf(log_g))
    for k, kp in zip(zk, zkp):
        if k < kp:
            mask |= (vectors[:, k] > 0) & (vectors[:, kp] > 0)
        elif k == kp:
            mask |= vectors[:, k] >= 2
    return mask


def pairwise_logweight_dense(k: int, total: int, log_g: np.ndarray) -> np.ndarray:
    """Per-class pairwise factor: prod over label pairs of g ^ edge count.

    Dense grid over count vectors with the given total; grid points outside
    the domain hold 0.0 (they are masked by the log-zero H entries).  A zero
    g entry with a zero edge count contributes factor 1; with a positive
    count it zeroes the class.
    """
    vec, flat = full_vectors(k, total)
    v = vec.astype(np.float64)
    lg0 = np.where(np.isneginf(log_g), 0.0, log_g)
    quad = 0.5 * (np.einsum("mk,kl,ml->m", v, lg0, v) - v * v @ np.diag(lg0))
    diag = (0.5 * v * (v - 1.0)) @ np.diag(lg0)
    w = quad + diag
    w[_zero_pair_masks(vec, log_g)] = LOG_ZERO
    dense = np.zeros(grid_shape(k, total))
    dense.flat[flat] = w
    return dense


def cross_logweight(va: np.ndarray, vb: np.ndarray, log_g: np.ndarray) -> np.ndarray:
    """Bipartite per-class pairwise factor matrix.

    Entry (i, j) is sum over (k, k') of va[i,k]*vb[j,k']*log g[k,k'] with the
    zero-weight convention above; va rows are A-side count vectors, vb rows
    B-side ones.
    """
    lg0 = np.where(np.isneginf(log_g), 0.0, log_g)
    out = va.astype(np.float64) @ lg0 @ vb.astype(np.float64).T
    zk, zkp = np.where(np.isneginf(log_g))
    for k, kp in zip(zk, zkp):
        out[np.ix_(va[:, k] > 0, vb[:, kp] > 0)] = LOG_ZERO
    return out


# ---------------------------------------------------------------------------
# rational-lane edge weights


def pairwise_weight_rat(vec, g_rat) -> Rat:
    """Exact per-class pairwise factor for a full count vector."""
    k = len(vec)
    out = rat(1)
    for a in range(k):
        c = vec[a] * (vec[a] - 1) // 2
        if c:
            out *= g_rat[a][a] ** c
        for b in range(a + 1, k):
            c = vec[a] * vec[b]
            if c:
                out *= g_rat[a][b] ** c
    return out


def cross_weight_rat(va, vb, g_rat) -> Rat:
    out = rat(1)
    for a in range(len(va)):
        if va[a] == 0:
            continue
        for b in range(len(vb)):
            c = va[a] * vb[b]
            if c:
                out *= g_rat[a][b] ** c
    return out
