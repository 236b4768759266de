# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled kernels: insertion/removal scans and Gibbs sweeps.

Same contracts as exactmrf.kernels.pure; see that module for documentation.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, expm1, fabs, log, log1p, log10

cnp.import_array()

cdef double LOG_ZERO = -INFINITY
cdef double _EPS = 2.220446049250313e-16
cdef double _LOG_U = log(4.0 * 2.220446049250313e-16)

STATUS_OK = 0
STATUS_NEGATIVE = 1


cdef inline double _lae(double a, double b) nogil:
    if a == LOG_ZERO:
        return b
    if b == LOG_ZERO:
        return a
    if a < b:
        a, b = b, a
    if b - a < -40.0:  # exp underflows below one ulp of the result
        return a
    return a + log1p(exp(b - a))


cdef inline double _max3(double a, double b, double c) nogil:
    if b > a:
        a = b
    if c > a:
        a = c
    return a


cdef double _INV_LN10 = 1.0 / log(10.0)


cdef inline double _lsub_guarded(double a, double b, double* res,
                                 double* bound) nogil:
    # returns digits: >=0 clean cancellation report, +inf lost-to-zero,
    # -inf negative; res/bound as in the pure twin
    cdef double d, lrest
    if b == LOG_ZERO:
        res[0] = a
        bound[0] = LOG_ZERO if a == LOG_ZERO else _LOG_U + a
        return 0.0
    if a == LOG_ZERO:
        res[0] = LOG_ZERO
        bound[0] = b
        return -INFINITY
    d = b - a
    if d >= 0.0:
        if d <= 32.0 * _EPS * _max3(1.0, fabs(a), fabs(b)):
            res[0] = LOG_ZERO
            bound[0] = a
            return INFINITY
        res[0] = LOG_ZERO
        bound[0] = b
        return -INFINITY
    if d < -40.0:
        res[0] = a
        bound[0] = _LOG_U + a
        return 0.0
    lrest = log(-expm1(d))  # negative; -lrest/ln10 = digits cancelled
    res[0] = a + lrest
    bound[0] = _LOG_U + a
    return -lrest * _INV_LN10 if lrest < 0.0 else 0.0


def binary_forward(const double[::1] lq0, const double[::1] lq1):
    cdef Py_ssize_t n = lq0.shape[0]
    h_arr = np.full(n + 1, LOG_ZERO)
    cdef double[::1] h = h_arr
    cdef Py_ssize_t t, m
    cdef double a, b
    h[0] = 0.0
    with nogil:
        for t in range(1, n + 1):
            a = lq0[t - 1]
            b = lq1[t - 1]
            for m in range(t, 0, -1):
                h[m] = _lae(h[m] + a, h[m - 1] + b)
            h[0] = h[0] + a
    return h_arr


def binary_remove(const double[::1] log_h, double lq0, double lq1,
                  int direction, in_err=None):
    cdef Py_ssize_t n = log_h.shape[0] - 1
    out_arr = np.full(n, LOG_ZERO)
    err_arr = np.full(n, LOG_ZERO)
    cdef double[::1] out = out_arr
    cdef double[::1] err = err_arr
    cdef const double[::1] ie
    cdef bint have_ie = in_err is not None
    if have_ie:
        ie = in_err
    else:
        ie = log_h  # placeholder, unread
    cdef double prev = LOG_ZERO, prev_err = LOG_ZERO
    cdef double a, num, bound, digits, e, max_digits = 0.0
    cdef bint negative = 0
    cdef Py_ssize_t m
    with nogil:
        if direction == 0:
            for m in range(n):
                a = log_h[m]
                digits = _lsub_guarded(a, lq1 + prev, &num, &bound)
                if digits < 0.0:
                    negative = 1
                    digits = -digits
                if digits > max_digits:
                    max_digits = digits
                e = _lae(bound, lq1 + prev_err)
                if have_ie:
                    e = _lae(e, ie[m])
                prev = num - lq0
                prev_err = e - lq0
                out[m] = prev
                err[m] = prev_err
        else:
            for m in range(n, 0, -1):
                a = log_h[m]
                digits = _lsub_guarded(a, lq0 + prev, &num, &bound)
                if digits < 0.0:
                    negative = 1
                    digits = -digits
                if digits > max_digits:
                    max_digits = digits
                e = _lae(bound, lq0 + prev_err)
                if have_ie:
                    e = _lae(e, ie[m])
                prev = num - lq1
                prev_err = e - lq1
                out[m - 1] = prev
                err[m - 1] = prev_err
    return out_arr, err_arr, max_digits, STATUS_NEGATIVE if negative else STATUS_OK


def plan_remove(const double[::1] h_flat, const cnp.int64_t[::1] out_idx,
                const cnp.int64_t[::1] src_idx, const cnp.int64_t[:, ::1] dep_idx,
                const cnp.int64_t[::1] levels, const double[::1] lq_other,
                double lq_pivot, Py_ssize_t out_size, in_err=None):
    cdef Py_ssize_t m_total = out_idx.shape[0]
    cdef Py_ssize_t n_dep = dep_idx.shape[0]
    out_arr = np.full(out_size, LOG_ZERO)
    err_arr = np.full(out_size, LOG_ZERO)
    cdef double[::1] out = out_arr
    cdef double[::1] err = err_arr
    cdef const double[::1] ie
    cdef bint have_ie = in_err is not None
    if have_ie:
        ie = in_err
    else:
        ie = h_flat  # placeholder, unread
    cdef double a, acc, acc_err, num, bound, digits, e, max_digits = 0.0
    cdef bint negative = 0
    cdef Py_ssize_t j, c
    cdef cnp.int64_t d
    with nogil:
        for j in range(m_total):
            acc = LOG_ZERO
            acc_err = LOG_ZERO
            for c in range(n_dep):
                d = dep_idx[c, j]
                if d >= 0:
                    acc = _lae(acc, lq_other[c] + out[d])
                    acc_err = _lae(acc_err, lq_other[c] + err[d])
            a = h_flat[src_idx[j]]
            digits = _lsub_guarded(a, acc, &num, &bound)
            if digits < 0.0:
                negative = 1
                digits = -digits
            if digits > max_digits:
                max_digits = digits
            e = _lae(bound, acc_err)
            if have_ie:
                e = _lae(e, ie[src_idx[j]])
            out[out_idx[j]] = num - lq_pivot
            err[out_idx[j]] = e - lq_pivot
    return out_arr, err_arr, max_digits, STATUS_NEGATIVE if negative else STATUS_OK


# ---------------------------------------------------------------------------
# Gibbs sweeps


cdef inline int _draw_site(const double* lq_i, const double* lg, const long* tally,
                           double u, int k, int transpose) nogil:
    cdef double logits[64]
    cdef double hi = -INFINITY
    cdef double z, total, target, run
    cdef int lab, lab2
    cdef long c
    for lab in range(k):
        z = lq_i[lab]
        for lab2 in range(k):
            c = tally[lab2]
            if c != 0:
                if transpose:
                    z += c * lg[lab2 * k + lab]
                else:
                    z += c * lg[lab * k + lab2]
        logits[lab] = z
        if z > hi:
            hi = z
    total = 0.0
    for lab in range(k):
        logits[lab] = exp(logits[lab] - hi)
        total += logits[lab]
    target = u * total
    run = 0.0
    for lab in range(k):
        run += logits[lab]
        if target < run:
            return lab
    return k - 1


def gibbs_complete(cnp.int64_t[::1] state, const double[:, ::1] log_g,
                   const double[:, ::1] log_q, const double[:, ::1] uniforms,
                   cnp.int64_t[:, ::1] counts_out, Py_ssize_t record_from):
    cdef Py_ssize_t n = log_q.shape[0]
    cdef int k = <int> log_q.shape[1]
    if k > 64:
        raise ValueError("label count above the compiled kernel limit (64)")
    cdef long tally[64]
    cdef Py_ssize_t s, i
    cdef int lab
    for lab in range(k):
        tally[lab] = 0
    for i in range(n):
        tally[state[i]] += 1
    with nogil:
        for s in range(uniforms.shape[0]):
            for i in range(n):
                tally[state[i]] -= 1
                state[i] = _draw_site(&log_q[i, 0], &log_g[0, 0], tally,
                                      uniforms[s, i], k, 0)
                tally[state[i]] += 1
            if s >= record_from:
                for i in range(n):
                    counts_out[i, state[i]] += 1


def gibbs_bipartite(cnp.int64_t[::1] state, const double[:, ::1] log_g,
                    const double[:, ::1] log_q, const double[:, ::1] uniforms,
                    cnp.int64_t[:, ::1] counts_out, Py_ssize_t record_from,
                    Py_ssize_t n1):
    cdef Py_ssize_t n = log_q.shape[0]
    cdef int k = <int> log_q.shape[1]
    if k > 64:
        raise ValueError("label count above the compiled kernel limit (64)")
    cdef long tally_a[64]
    cdef long tally_b[64]
    cdef Py_ssize_t s, i
    cdef int lab, st_i
    for lab in range(k):
        tally_a[lab] = 0
        tally_b[lab] = 0
    for i in range(n1):
        tally_a[state[i]] += 1
    for i in range(n1, n):
        tally_b[state[i]] += 1
    with nogil:
        for s in range(uniforms.shape[0]):
            for i in range(n):
                if i < n1:
                    st_i = _draw_site(&log_q[i, 0], &log_g[0, 0], tally_b,
                                      uniforms[s, i], k, 0)
                    tally_a[state[i]] -= 1
                    tally_a[st_i] += 1
                else:
                    st_i = _draw_site(&log_q[i, 0], &log_g[0, 0], tally_a,
                                      uniforms[s, i], k, 1)
                    tally_b[state[i]] -= 1
                    tally_b[st_i] += 1
                state[i] = st_i
            if s >= record_from:
                for i in range(n):
                    counts_out[i, state[i]] += 1
