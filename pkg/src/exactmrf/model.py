"""Random-field instance schema: construction, validation, canonicalization,
random generation an JSON (de)serialization.

A model is a K-valued field on a complete graph (one shared symmetric K x K
pairwise table g) or a complete bipartite graph (g may be asymmetric; rows
index the A side).  Unary weights q are per vertex.  Weights are stored in
natural-log float64 form in "log" mode and as exact rationals in "rational"
mode.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .numerics import (LOG_ZERO, NonSquareRatioError, Rat, log_weight, rat,
                       rat_log, rat_sqrt, rat_to_str)

COMPLETE = "complete"
BIPARTITE = "bipartite"
LOG = "log"
RATIONAL = "rational"


class SchemaError(ValueError):
    """Model document violates the schema; carries field diagnostics."""

    def __init__(self, message: str, field_name: str | None = None, line: int | None = None):
        loc = ""
        if field_name:
            loc += f" (field: {field_name})"
        if line is not None:
            loc += f" (line {line})"
        super().__init__(message + loc)
        self.field_name = field_name
        self.line = line


class NonPositiveWeightError(ValueError):
    """A canonicalization divisor is zero."""


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of one random-field instance.

    ``log_g``/``log_q`` hold log-domain weights in log mode (``-inf`` is an
    exact zero weight); ``g_rat``/``q_rat`` hold exact rationals in rational
    mode.  Exactly one pair is populated.
    """

    family: str
    K: int
    n1: int
    n2: int | None
    mode: str
    log_g: tuple[tuple[float, ...], ...] | None = None
    log_q: tuple[tuple[float, ...], ...] | None = None
    g_rat: tuple | None = None
    q_rat: tuple | None = None

    # -- construction ------------------------------------------------------

    @classmethod
    def complete(cls, K: int, n: int, g, q, mode: str = LOG,
                 log_domain: bool = False) -> "ModelSpec":
        return cls._build(COMPLETE, K, n, None, g, q, mode, log_domain)

    @classmethod
    def bipartite(cls, K: int, n1: int, n2: int, g, q, mode: str = LOG,
                  log_domain: bool = False) -> "ModelSpec":
        return cls._build(BIPARTITE, K, n1, n2, g, q, mode, log_domain)

    @classmethod
    def _build(cls, family, K, n1, n2, g, q, mode, log_domain):
        if mode not in (LOG, RATIONAL):
            raise SchemaError(f"unknown mode {mode!r}", "mode")
        if mode == RATIONAL and log_domain:
            raise SchemaError("log_domain weights cannot be exact rationals", "log_domain")
        n = n1 + (n2 or 0)
        g_rows = _check_table(g, K, K, "g")
        q_rows = _check_table(q, n, K, "q")
        if mode == LOG:
            conv = _as_log if log_domain else _to_log
            log_g = tuple(tuple(conv(v, "g") for v in row) for row in g_rows)
            log_q = tuple(tuple(conv(v, "q") for v in row) for row in q_rows)
            return cls(family, K, n1, n2, mode, log_g=log_g, log_q=log_q)
        g_r = tuple(tuple(_to_rat(v, "g") for v in row) for row in g_rows)
        q_r = tuple(tuple(_to_rat(v, "q") for v in row) for row in q_rows)
        return cls(family, K, n1, n2, mode, g_rat=g_r, q_rat=q_r)

    # -- views -------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.n1 + (self.n2 or 0)

    @property
    def is_complete(self) -> bool:
        return self.family == COMPLETE

    @cached_property
    def log_g_arr(self) -> np.ndarray:
        """K x K log-domain pairwise table (derived from rationals if needed)."""
        if self.log_g is not None:
            return np.array(self.log_g, dtype=np.float64)
        return np.array([[rat_log(v) for v in row] for row in self.g_rat])

    @cached_property
    def log_q_arr(self) -> np.ndarray:
        """n x K log-domain unary table."""
        if self.log_q is not None:
            return np.array(self.log_q, dtype=np.float64)
        return np.array([[rat_log(v) for v in row] for row in self.q_rat])

    def side_rows(self, side: str) -> slice:
        """Row range of the A or B side in the vertex-major q table."""
        if self.family != BIPARTITE:
            raise ValueError("side_rows only applies to bipartite models")
        return slice(0, self.n1) if side == "A" else slice(self.n1, self.n_vertices)


def _check_table(rows, n_rows, n_cols, name) -> list[list]:
    try:
        rows = [list(r) for r in rows]
    except TypeError:
        raise SchemaError(f"{name} must be a {n_rows}x{n_cols} table", name) from None
    if len(rows) != n_rows or any(len(r) != n_cols for r in rows):
        raise SchemaError(f"{name} must be a {n_rows}x{n_cols} table", name)
    return rows


def _to_log(v, name) -> float:
    try:
        if isinstance(v, str):
            v = float(v)
        return log_weight(v)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), name) from None


def _as_log(v, name) -> float:
    try:
        return float(v)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), name) from None


def _to_rat(v, name):
    try:
        r = rat(v)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), name) from None
    if r < 0:
        raise SchemaError(f"weights must be non-negative, got {v!r}", name)
    return r


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()

    def raise_if_invalid(self) -> None:
        if not self.ok:
            raise SchemaError("invalid model: " + "; ".join(self.violations))


def validate(spec: ModelSpec) -> ValidationReport:
    """Check the structural invariants; returns a report, never raises."""
    bad: list[str] = []
    if spec.K < 2:
        bad.append(f"K must be >= 2, got {spec.K}")
    if spec.family not in (COMPLETE, BIPARTITE):
        bad.append(f"unknown family {spec.family!r}")
    if spec.family == COMPLETE:
        if spec.n1 < 1:
            bad.append("complete family needs n >= 1")
        if spec.n2 is not None:
            bad.append("complete family takes a single vertex count")
    else:
        if spec.n1 < 1 or (spec.n2 or 0) < 1:
            bad.append("bipartite family needs n1 >= 1 and n2 >= 1")

    lg = spec.log_g_arr
    lq = spec.log_q_arr
    if np.isnan(lg).any() or np.isposinf(lg).any():
        bad.append("pairwise weights must be finite and non-negative")
    if np.isnan(lq).any() or np.isposinf(lq).any():
        bad.append("unary weights must be finite and non-negative")
    if spec.family == COMPLETE:
        sym = (lg == lg.T) if spec.mode == LOG else _rat_symmetric(spec.g_rat)
        if not np.all(sym):
            bad.append("pairwise table g must be symmetric on complete graphs")
    if np.all(lq == LOG_ZERO, axis=1).any():
        idx = int(np.argmax(np.all(lq == LOG_ZERO, axis=1)))
        bad.append(f"vertex {idx} has no positive unary weight")
    return ValidationReport(not bad, tuple(bad))


def _rat_symmetric(g_rat) -> bool:
    k = len(g_rat)
    return all(g_rat[i][j] == g_rat[j][i] for i in range(k) for j in range(i + 1, k))


# ---------------------------------------------------------------------------
# canonical two-label form
#
# For a strictly positive binary model on a complete graph the distribution
# is unchanged by rescaling each edge factor into {1 on agreement, alpha on
# disagreement} and each unary factor into {beta_i on label 0, 1 on label 1}.
# The divided-out constants multiply into `scale`, so the original partition
# sum is Z_canonical * scale.


@dataclass(frozen=True)
class CanonicalBinaryModel:
    mode: str
    n: int
    log_alpha: float | None = None
    log_beta: tuple[float, ...] | None = None
    log_scale: float | None = None
    alpha: object | None = None
    beta: tuple | None = None
    scale: object | None = None

    def as_model_spec(self) -> ModelSpec:
        """The canonical model as a plain spec (handy for brute-force checks)."""
        if self.mode == LOG:
            g = [[0.0, self.log_alpha], [self.log_alpha, 0.0]]
            q = [[b, 0.0] for b in self.log_beta]
            return ModelSpec.complete(2, self.n, g, q, mode=LOG, log_domain=True)
        one = rat(1)
        g = [[one, self.alpha], [self.alpha, one]]
        q = [[b, one] for b in self.beta]
        return ModelSpec.complete(2, self.n, g, q, mode=RATIONAL)


def canonicalize_binary(spec: ModelSpec) -> CanonicalBinaryModel:
    """Re-parametrise a strictly positive K=2 complete-graph model.

    alpha = g01 / sqrt(g00*g11), beta_i = (q_i0/q_i1) * (g00/g11)^((n-1)/2);
    every labelling keeps its probability and Z_original = Z_canonical*scale.

    Raises:
        NonPositiveWeightError: a required divisor (g entry or q_i(1)) is 0.
        NonSquareRatioError: rational mode and a needed square root is
            irrational.
    """
    if spec.family != COMPLETE or spec.K != 2:
        raise ValueError("canonical form is defined for K=2 complete graphs")
    n = spec.n1
    if spec.mode == LOG:
        lg = spec.log_g_arr
        lq = spec.log_q_arr
        if np.isneginf(lg).any() or np.isneginf(lq[:, 1]).any():
            raise NonPositiveWeightError(
                "canonical form needs strictly positive g and q_i(1)")
        log_alpha = float(lg[0, 1] - 0.5 * (lg[0, 0] + lg[1, 1]))
        half = (n - 1) / 2.0
        log_beta = lq[:, 0] - lq[:, 1] + half * (lg[0, 0] - lg[1, 1])
        log_scale = float(np.sum(lq[:, 1]) + n * half * lg[1, 1])
        return CanonicalBinaryModel(LOG, n, log_alpha=log_alpha,
                                    log_beta=tuple(float(b) for b in log_beta),
                                    log_scale=log_scale)

    g = spec.g_rat
    q = spec.q_rat
    if any(v == 0 for row in g for v in row) or any(row[1] == 0 for row in q):
        raise NonPositiveWeightError("canonical form needs strictly positive g and q_i(1)")
    if (n - 1) % 2 == 0:
        ratio_pow = (g[0][0] / g[1][1]) ** ((n - 1) // 2)
        g11_pow = g[1][1] ** ((n - 1) // 2)
    else:
        ratio_pow = rat_sqrt(g[0][0] / g[1][1]) ** (n - 1)
        g11_pow = rat_sqrt(g[1][1]) ** (n - 1)
    alpha = g[0][1] / rat_sqrt(g[0][0] * g[1][1])
    beta = tuple((q[i][0] / q[i][1]) * ratio_pow for i in range(n))
    scale = rat(1)
    for i in range(n):
        scale *= q[i][1] * g11_pow
    return CanonicalBinaryModel(RATIONAL, n, alpha=alpha, beta=beta, scale=scale)


# ---------------------------------------------------------------------------
# random instances


def random_model(family: str, K: int, sizes, weight_range=(0.1, 10.0),
                 seed: int = 0, mode: str = LOG) -> ModelSpec:
    """Deterministic random instance with log-uniform weights.

    ``sizes`` is n for complete models or (n1, n2) for bipartite ones.  In
    rational mode the drawn weights are rounded to 6 significant decimal
    digits and stored exactly.
    """
    lo, hi = float(weight_range[0]), float(weight_range[1])
    if not (0 < lo <= hi):
        raise ValueError("weight_range must be a positive interval")
    rng = np.random.default_rng(seed)
    if family == COMPLETE:
        n1, n2 = int(sizes), None
    else:
        n1, n2 = int(sizes[0]), int(sizes[1])
    n = n1 + (n2 or 0)

    def draw(shape):
        return np.exp(rng.uniform(math.log(lo), math.log(hi), size=shape))

    g = draw((K, K))
    if family == COMPLETE:
        g = np.triu(g) + np.triu(g, 1).T  # symmetric
    q = draw((n, K))
    if mode == RATIONAL:
        g = [[f"{v:.6g}" for v in row] for row in g]
        q = [[f"{v:.6g}" for v in row] for row in q]
    if family == COMPLETE:
        return ModelSpec.complete(K, n1, g, q, mode=mode)
    return ModelSpec.bipartite(K, n1, n2, g, q, mode=mode)


# ---------------------------------------------------------------------------
# documents


def serialize(spec: ModelSpec) -> str:
    """Canonical JSON text; parse(serialize(spec)) reproduces spec exactly."""
    doc: dict = {"family": spec.family, "K": spec.K, "mode": spec.mode}
    if spec.family == COMPLETE:
        doc["n"] = spec.n1
    else:
        doc["n1"], doc["n2"] = spec.n1, spec.n2
    if spec.mode == LOG:
        doc["log_domain"] = True
        doc["g"] = [list(row) for row in spec.log_g]
        doc["q"] = [list(row) for row in spec.log_q]
    else:
        doc["g"] = [[rat_to_str(v) for v in row] for row in spec.g_rat]
        doc["q"] = [[rat_to_str(v) for v in row] for row in spec.q_rat]
    return json.dumps(doc, indent=1)


def parse(text: str) -> ModelSpec:
    """Parse a model document; raises SchemaError with diagnostics."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc.msg}", line=exc.lineno) from None
    return parse_doc(doc)


def parse_doc(doc) -> ModelSpec:
    """Build and validate a ModelSpec from an already-decoded document."""
    if not isinstance(doc, dict):
        raise SchemaError("model document must be a JSON object")

    family = _require(doc, "family", str)
    if family not in (COMPLETE, BIPARTITE):
        raise SchemaError(f"family must be 'complete' or 'bipartite', got {family!r}", "family")
    K = _require(doc, "K", int)
    mode = doc.get("mode", LOG)
    log_domain = bool(doc.get("log_domain", False))
    g = _require(doc, "g", list)
    q = _require(doc, "q", list)
    if family == COMPLETE:
        n = _require(doc, "n", int)
        spec = ModelSpec.complete(K, n, g, q, mode=mode, log_domain=log_domain)
    else:
        n1 = _require(doc, "n1", int)
        n2 = _require(doc, "n2", int)
        spec = ModelSpec.bipartite(K, n1, n2, g, q, mode=mode, log_domain=log_domain)
    validate(spec).raise_if_invalid()
    return spec


def _require(doc: dict, key: str, kind):
    if key not in doc:
        raise SchemaError(f"missing required field {key!r}", key)
    v = doc[key]
    if kind is int and isinstance(v, bool):
        raise SchemaError(f"field {key!r} must be an integer", key)
    if not isinstance(v, kind):
        raise SchemaError(f"field {key!r} has wrong type (expected {kind.__name__})", key)
    return v


def load(path) -> ModelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def dump(spec: ModelSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(spec))
        fh.write("\n")
