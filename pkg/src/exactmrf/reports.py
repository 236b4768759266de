"""Result containers shared by the exact engines and the brute-force oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import LOG_ZERO


@dataclass(frozen=True)
class PartitionResult:
    """Partition sum in the backend the model was posed in.

    ``log_Z`` is always populated (natural log, ``-inf`` for an exactly zero
    sum); ``Z_rational`` only in rational mode.  ``is_zero`` is a flag, not
    an error: models with zero weights can have Z = 0.
    """

    mode: str
    log_Z: float
    Z_rational: object | None = None

    @property
    def is_zero(self) -> bool:
        return self.log_Z == LOG_ZERO


@dataclass
class MarginalReport:
    """Unary (and optionally pairwise) marginal tables plus diagnostics.

    ``unary`` rows are float probabilities; rational mode additionally fills
    the ``*_exact`` fields with exact rationals.  ``fallback``/``digits_lost``
    report, per vertex, whether the inverse map was abandoned for a fresh
    forward recomputation and the worst per-subtraction cancellation seen.
    """

    mode: str
    log_Z: float
    unary: np.ndarray
    Z_rational: object | None = None
    unary_exact: list | None = None
    pairwise: dict | None = None
    pairwise_exact: dict | None = None
    fallback: np.ndarray | None = None
    digits_lost: np.ndarray | None = None
    pair_fallback: dict | None = None
