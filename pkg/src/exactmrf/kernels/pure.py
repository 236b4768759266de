"""numpy / plain-Python kernels; drop-in fallback for the compiled core.

Signatures and semantics mirror ``exactmrf.kernels._ckern`` exactly.  The
sequential scans keep the same arithmetic as the C versions so results agree
to roundoff; the Gibbs sweep uses scalar libm calls so sampling decisions are
bit-identical to the compiled path given the same uniforms.

Removal kernels never abort: a subtraction that cancels completely (or goes
negative by more than roundoff slack) writes an exact zero and widens the
entry's propagated error bound to the full operand magnitude, so downstream
certification decides whether the result is usable.
"""
from __future__ import annotations

import math

import numpy as np

LOG_ZERO = float("-inf")
_EPS = 2.220446049250313e-16
_LOG_U = math.log(4 * _EPS)  # per-step roundoff allowance

STATUS_OK = 0
STATUS_NEGATIVE = 1


def binary_forward(lq0: np.ndarray, lq1: np.ndarray) -> np.ndarray:
    """Two-label insertion recursion on raw log weights.

    Returns log H indexed by the count of label-1 vertices, length n+1.
    """
    n = len(lq0)
    h = np.full(n + 1, LOG_ZERO)
    h[0] = 0.0
    for t in range(1, n + 1):
        h[1:t + 1] = np.logaddexp(h[1:t + 1] + lq0[t - 1], h[0:t] + lq1[t - 1])
        h[0] = h[0] + lq0[t - 1]
    return h


def binary_remove(log_h: np.ndarray, lq0: float, lq1: float, direction: int,
                  in_err: np.ndarray | None = None):
    """Invert one two-label insertion by a directed scan.

    direction 0 scans ascending and divides by the label-0 weight; direction
    1 scans descending and divides by the label-1 weight.  Each direction is
    stable on the opposite side of the table, so callers run both and merge
    by the returned error bounds.

    Returns ``(out, err, max_digits, status)``: log table over n-1 vertices,
    propagated log-domain absolute-error bounds, worst per-subtraction
    cancellation in decimal digits, and STATUS_NEGATIVE if any subtraction
    fell below zero (informational; the entry is zeroed, never trusted).
    """
    n = len(log_h) - 1
    out = np.full(n, LOG_ZERO)
    err = np.full(n, LOG_ZERO)
    max_digits = 0.0
    negative = False
    lae = _lae
    if direction == 0:
        prev = LOG_ZERO
        prev_err = LOG_ZERO
        for m in range(n):
            a = log_h[m]
            num, bound, digits = _lsub_guarded(a, lq1 + prev)
            negative |= digits < 0.0
            digits = abs(digits)
            if digits > max_digits:
                max_digits = digits
            e = lae(bound, lq1 + prev_err)
            if in_err is not None:
                e = lae(e, in_err[m])
            prev = num - lq0
            prev_err = e - lq0
            out[m] = prev
            err[m] = prev_err
    else:
        prev = LOG_ZERO
        prev_err = LOG_ZERO
        for m in range(n, 0, -1):
            a = log_h[m]
            num, bound, digits = _lsub_guarded(a, lq0 + prev)
            negative |= digits < 0.0
            digits = abs(digits)
            if digits > max_digits:
                max_digits = digits
            e = lae(bound, lq0 + prev_err)
            if in_err is not None:
                e = lae(e, in_err[m])
            prev = num - lq1
            prev_err = e - lq1
            out[m - 1] = prev
            err[m - 1] = prev_err
    return out, err, max_digits, STATUS_NEGATIVE if negative else STATUS_OK


def plan_remove(h_flat: np.ndarray, out_idx: np.ndarray, src_idx: np.ndarray,
                dep_idx: np.ndarray, levels: np.ndarray, lq_other: np.ndarray,
                lq_pivot: float, out_size: int,
                in_err: np.ndarray | None = None):
    """Triangular solve over a removal plan (general-K inverse map).

    Processes equal-level runs vectorised; dependencies always sit in earlier
    levels.  Same return contract as binary_remove.
    """
    out = np.full(out_size, LOG_ZERO)
    err = np.full(out_size, LOG_ZERO)
    max_digits = 0.0
    negative = False
    n_dep = dep_idx.shape[0]
    for lv in range(len(levels) - 1):
        j0, j1 = int(levels[lv]), int(levels[lv + 1])
        if j0 == j1:
            continue
        a = h_flat[src_idx[j0:j1]]
        acc = np.full(j1 - j0, LOG_ZERO)
        acc_err = np.full(j1 - j0, LOG_ZERO)
        for c in range(n_dep):
            d = dep_idx[c, j0:j1]
            ok = d >= 0
            if not ok.any():
                continue
            gather = np.where(ok, d, 0)
            acc = np.logaddexp(acc, np.where(ok, lq_other[c] + out[gather], LOG_ZERO))
            acc_err = np.logaddexp(acc_err,
                                   np.where(ok, lq_other[c] + err[gather], LOG_ZERO))
        num, bound, digits = _lsub_guarded_vec(a, acc)
        negative |= bool(np.any(digits < 0.0))
        worst = float(np.max(np.abs(digits))) if len(digits) else 0.0
        if worst > max_digits:
            max_digits = worst
        e = np.logaddexp(bound, acc_err)
        if in_err is not None:
            e = np.logaddexp(e, in_err[src_idx[j0:j1]])
        out[out_idx[j0:j1]] = num - lq_pivot
        err[out_idx[j0:j1]] = e - lq_pivot
    return out, err, max_digits, STATUS_NEGATIVE if negative else STATUS_OK


# ---------------------------------------------------------------------------
# Gibbs sweeps (systematic scan, counts-based conditionals)


def gibbs_complete(state: np.ndarray, log_g: np.ndarray, log_q: np.ndarray,
                   uniforms: np.ndarray, counts_out: np.ndarray,
                   record_from: int) -> None:
    """Run ``uniforms.shape[0]`` sweeps in place; record label frequencies.

    Sweeps with row index >= record_from accumulate into counts_out (n, K).
    Conditionals depend only on the label tallies of the other vertices, so
    each site update costs O(K^2).
    """
    n, k = log_q.shape
    lg = log_g.tolist()
    lq = log_q.tolist()
    tally = [0] * k
    st = state.tolist()
    for lab in st:
        tally[lab] += 1
    for s in range(uniforms.shape[0]):
        u_row = uniforms[s]
        for i in range(n):
            tally[st[i]] -= 1
            st[i] = _draw_site(lq[i], lg, tally, float(u_row[i]), k)
            tally[st[i]] += 1
        if s >= record_from:
            for i in range(n):
                counts_out[i, st[i]] += 1
    state[:] = st


def gibbs_bipartite(state: np.ndarray, log_g: np.ndarray, log_q: np.ndarray,
                    uniforms: np.ndarray, counts_out: np.ndarray,
                    record_from: int, n1: int) -> None:
    """Bipartite variant: A-site conditionals see B tallies and vice versa."""
    n, k = log_q.shape
    lg = log_g.tolist()
    lgt = log_g.T.tolist()
    lq = log_q.tolist()
    st = state.tolist()
    tally_a = [0] * k
    tally_b = [0] * k
    for i in range(n1):
        tally_a[st[i]] += 1
    for i in range(n1, n):
        tally_b[st[i]] += 1
    for s in range(uniforms.shape[0]):
        u_row = uniforms[s]
        for i in range(n):
            if i < n1:
                st_i = _draw_site(lq[i], lg, tally_b, float(u_row[i]), k)
                tally_a[st[i]] -= 1
                tally_a[st_i] += 1
            else:
                st_i = _draw_site(lq[i], lgt, tally_a, float(u_row[i]), k)
                tally_b[st[i]] -= 1
                tally_b[st_i] += 1
            st[i] = st_i
        if s >= record_from:
            for i in range(n):
                counts_out[i, st[i]] += 1
    state[:] = st


def _draw_site(lq_i, lg, tally, u, k):
    # log conditional weights from neighbour tallies, then inverse-cdf draw
    logits = [0.0] * k
    hi = -math.inf
    for lab in range(k):
        z = lq_i[lab]
        row = lg[lab]
        for lab2 in range(k):
            c = tally[lab2]
            if c:
                z += c * row[lab2]
        logits[lab] = z
        if z > hi:
            hi = z
    total = 0.0
    for lab in range(k):
        logits[lab] = math.exp(logits[lab] - hi)
        total += logits[lab]
    target = u * total
    run = 0.0
    for lab in range(k):
        run += logits[lab]
        if target < run:
            return lab
    return k - 1


# ---------------------------------------------------------------------------
# scalar/vector helpers (same formulas as the C side)


_INV_LN10 = 1.0 / math.log(10.0)


def _lae(a: float, b: float) -> float:
    if a == LOG_ZERO:
        return b
    if b == LOG_ZERO:
        return a
    if a < b:
        a, b = b, a
    if b - a < -40.0:  # exp underflows below one ulp of the result
        return a
    return a + math.log1p(math.exp(b - a))


def _lsub_guarded(a: float, b: float):
    """log(exp(a)-exp(b)) with a guarded zero for lost subtractions.

    Returns ``(result, error_bound, digits)``.  For a clean subtraction the
    bound is the roundoff allowance on ``a`` and digits >= 0 reports the
    cancellation; when the subtraction cancels completely or turns negative
    the result is log-zero, the bound widens to max(a, b), and digits is
    +/-inf (negative for the negative case).
    """
    if b == LOG_ZERO:
        return a, _LOG_U + a if a != LOG_ZERO else LOG_ZERO, 0.0
    if a == LOG_ZERO:
        return LOG_ZERO, b, -math.inf
    d = b - a
    if d >= 0.0:
        if d <= 32.0 * _EPS * max(1.0, abs(a), abs(b)):
            return LOG_ZERO, a, math.inf
        return LOG_ZERO, b, -math.inf
    if d < -40.0:
        return a, _LOG_U + a, 0.0
    lrest = math.log(-math.expm1(d))
    return a + lrest, _LOG_U + a, -lrest * _INV_LN10 if lrest < 0.0 else 0.0


def _lsub_guarded_vec(a: np.ndarray, b: np.ndarray):
    """Vectorised _lsub_guarded."""
    res = np.full(len(a), LOG_ZERO)
    bound = np.full(len(a), LOG_ZERO)
    digits = np.zeros(len(a))

    trivial = b == LOG_ZERO
    if trivial.any():
        res[trivial] = a[trivial]
        with np.errstate(invalid="ignore"):
            bound[trivial] = np.where(a[trivial] == LOG_ZERO, LOG_ZERO,
                                      _LOG_U + a[trivial])
    live = ~trivial
    if not live.any():
        return res, bound, digits
    ar, br = a[live], b[live]
    with np.errstate(invalid="ignore", divide="ignore"):
        d = br - ar
        slack = 32.0 * _EPS * np.maximum(1.0, np.maximum(np.abs(ar), np.abs(br)))
        neg = (ar == LOG_ZERO) | (d > slack)
        zero = (~neg) & (d >= 0.0)
        clean = (~neg) & (~zero)
        lrest = np.log(-np.expm1(np.where(clean, d, -1.0)))
        val = ar + lrest
        dg = np.maximum(0.0, -lrest * _INV_LN10)

    r = np.full(len(ar), LOG_ZERO)
    bnd = np.empty(len(ar))
    dig = np.empty(len(ar))
    r[clean] = val[clean]
    bnd[clean] = _LOG_U + ar[clean]
    dig[clean] = dg[clean]
    bnd[zero] = ar[zero]
    dig[zero] = math.inf
    bnd[neg] = br[neg]
    dig[neg] = -math.inf

    res[live] = r
    bound[live] = bnd
    digits[live] = dig
    return res, bound, digits
