"""Approximate-inference baselines and the harness that scores them.

The exact engines make these models one of the few regimes where
approximation error can be measured against ground truth instead of against
another approximation; `evaluate` runs each baseline and reports per-vertex
L1/Linf marginal errors plus a log-partition error where the method provides
an estimate (mean field reports its evidence lower bound).
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exact_bipartite import unary_marginals_bipartite
from .exact_complete import unary_marginals
from .model import BIPARTITE, COMPLETE, LOG, ModelSpec, validate
from .numerics import logsumexp
from .reports import MarginalReport

_GIBBS_CHUNK = 1 << 14


@dataclass
class ApproxResult:
    method: str
    unary: np.ndarray
    iterations: int = 0
    samples: int = 0
    converged: bool = True
    seed: int | None = None
    log_z_estimate: float | None = None


def _positive_log_tables(spec: ModelSpec):
    lg = spec.log_g_arr
    lq = spec.log_q_arr
    if np.isneginf(lg).any() or np.isneginf(lq).any():
        raise ValueError("this baseline requires strictly positive weights")
    return lg, lq


def mean_field(spec: ModelSpec, max_iters: int = 500, tol: float = 1e-9,
               damping: float = 0.5) -> ApproxResult:
    """Naive mean field by damped coordinate ascent.

    Starts from uniform distributions and sweeps vertices in index order;
    fully deterministic.  ``converged`` reports whether the largest single
    update fell below ``tol`` within the iteration budget.
    """
    validate(spec).raise_if_invalid()
    lg, lq = _positive_log_tables(spec)
    n, k = spec.n_vertices, spec.K
    mu = np.full((n, k), 1.0 / k)
    bip = spec.family == BIPARTITE
    n1 = spec.n1 if bip else n
    s_a = mu[:n1].sum(axis=0)
    s_b = mu[n1:].sum(axis=0) if bip else None

    converged = False
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        worst = 0.0
        for i in range(n):
            if not bip:
                field = lg @ (s_a - mu[i])
            elif i < n1:
                field = lg @ s_b
            else:
                field = lg.T @ s_a
            logits = lq[i] + field
            new = np.exp(logits - logsumexp(logits))
            new = (1.0 - damping) * mu[i] + damping * new
            delta = float(np.max(np.abs(new - mu[i])))
            if delta > worst:
                worst = delta
            if bip and i >= n1:
                s_b += new - mu[i]
            else:
                s_a += new - mu[i]
            mu[i] = new
        if worst < tol:
            converged = True
            break

    return ApproxResult("mean_field", mu, iterations=sweeps, converged=converged,
                        log_z_estimate=_elbo(spec, lg, lq, mu))


def _elbo(spec, lg, lq, mu) -> float:
    n1 = spec.n1 if spec.family == BIPARTITE else spec.n_vertices
    unary = float(np.sum(mu * lq))
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -float(np.sum(np.where(mu > 0, mu * np.log(mu), 0.0)))
    if spec.family == BIPARTITE:
        sa = mu[:n1].sum(axis=0)
        sb = mu[n1:].sum(axis=0)
        pair = float(sa @ lg @ sb)
    else:
        s = mu.sum(axis=0)
        pair = 0.5 * float(s @ lg @ s - np.einsum("ik,kl,il->", mu, lg, mu))
    return unary + pair + ent


def gibbs(spec: ModelSpec, burn_in: int = 1000, samples: int = 10000,
          seed: int = 0) -> ApproxResult:
    """Single-site systematic-sweep Gibbs sampler.

    Estimates are label frequencies over ``samples`` recorded sweeps after
    ``burn_in`` discarded ones.  All randomness comes from a PCG64 stream
    seeded with ``seed``, so runs are reproducible (and identical between
    the compiled and pure kernels, which consume the same uniforms).
    """
    validate(spec).raise_if_invalid()
    lg, lq = _positive_log_tables(spec)
    n, k = spec.n_vertices, spec.K
    rng = np.random.default_rng(seed)
    # start from the unary-only distribution so chains with different seeds
    # explore from different corners
    probs = np.exp(lq - logsumexp(lq, axis=1)[:, None])
    state = np.array([rng.choice(k, p=p) for p in probs], dtype=np.int64)
    counts = np.zeros((n, k), dtype=np.int64)
    total = burn_in + samples
    done = 0
    while done < total:
        span = min(_GIBBS_CHUNK, total - done)
        uniforms = rng.random((span, n))
        record_from = max(0, burn_in - done)
        if spec.family == BIPARTITE:
            kernels.gibbs_bipartite(state, lg, lq, uniforms, counts,
                                    record_from, spec.n1)
        else:
            kernels.gibbs_complete(state, lg, lq, uniforms, counts, record_from)
        done += span
    return ApproxResult("gibbs", counts / float(samples), samples=samples,
                        seed=seed)


METHODS = {"mean_field": mean_field, "gibbs": gibbs}


@dataclass
class MethodEvaluation:
    method: str
    l1_mean: float | None = None
    linf_max: float | None = None
    log_z_err: float | None = None
    wall_ms: float | None = None
    result: ApproxResult | None = None
    failure: str | None = None


@dataclass
class EvaluationReport:
    exact: MarginalReport
    entries: list[MethodEvaluation]


def marginal_errors(estimate: np.ndarray, exact: np.ndarray):
    """(mean per-vertex L1 error, worst single-entry deviation)."""
    diff = np.abs(estimate - exact)
    return float(diff.sum(axis=1).mean()), float(diff.max())


def evaluate(spec: ModelSpec, methods, seed: int = 0,
             method_params: dict | None = None) -> EvaluationReport:
    """Run each named baseline against the exact marginals.

    Unknown names or raising methods become failure entries; an empty method
    list yields an empty report.  Deterministic given ``seed``.
    """
    validate(spec).raise_if_invalid()
    if spec.family == BIPARTITE:
        exact = unary_marginals_bipartite(spec)
    else:
        exact = unary_marginals(spec)
    params = method_params or {}
    entries = []
    for name in methods:
        fn = METHODS.get(name)
        if fn is None:
            entries.append(MethodEvaluation(name, failure=f"unknown method {name!r}"))
            continue
        kwargs = dict(params.get(name, {}))
        if name == "gibbs":
            kwargs.setdefault("seed", seed)
        t0 = time.perf_counter()
        try:
            res = fn(spec, **kwargs)
        except Exception as exc:
            entries.append(MethodEvaluation(name, failure=str(exc)))
            continue
        wall = (time.perf_counter() - t0) * 1e3
        l1, linf = marginal_errors(res.unary, exact.unary)
        lz = None
        if res.log_z_estimate is not None:
            lz = float(res.log_z_estimate - exact.log_Z)
        entries.append(MethodEvaluation(name, l1_mean=l1, linf_max=linf,
                                        log_z_err=lz, wall_ms=wall, result=res))
    return EvaluationReport(exact, entries)
