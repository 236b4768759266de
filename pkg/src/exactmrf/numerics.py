"""Numeric backends shared by every module.

Two interchangeable representations of non-negative quantities:

* log-domain floats (``LogValue`` for scalars, plain float64 arrays of log
  magnitudes inside the kernels), with IEEE ``-inf`` as the exact-zero
  sentinel, and
* exact arbitrary-precision rationals (``Rat``), backed by ``gmpy2.mpq``
  when available and ``fractions.Fraction`` otherwise.

All weight accumulation in the dynamic programs runs through one of these
two backends.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

LOG_ZERO = float("-inf")
_LN10 = math.log(10.0)
# unit roundoff of float64; basis of the propagated error bounds
EPS = sys.float_info.epsilon / 2

try:
    import gmpy2 as _gmpy2
    from gmpy2 import mpq as Rat

    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _gmpy2 = None
    Rat = Fraction
    HAVE_GMPY2 = False


class NegativeResultError(ArithmeticError):
    """log_sub was asked for a - b with b > a beyond roundoff tolerance."""

    def __init__(self, log_a: float, log_b: float):
        super().__init__(f"log-domain subtraction would be negative "
                         f"(log a = {log_a!r}, log b = {log_b!r})")
        self.log_a = log_a
        self.log_b = log_b


@dataclass(frozen=True)
class LogValue:
    """A non-negative quantity stored as its natural log.

    ``log == -inf`` is the exact-zero sentinel: it is distinct from every
    finite log, survives multiplication exactly, and is detectable before
    any division.
    """

    log: float

    @classmethod
    def from_linear(cls, x) -> "LogValue":
        if x < 0:
            raise ValueError(f"LogValue represents non-negative values, got {x!r}")
        return cls(LOG_ZERO) if x == 0 else cls(math.log(x))

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(LOG_ZERO)

    @classmethod
    def one(cls) -> "LogValue":
        return cls(0.0)

    def to_linear(self) -> float:
        return math.exp(self.log)

    @property
    def is_zero(self) -> bool:
        return self.log == LOG_ZERO

    def __mul__(self, other: "LogValue") -> "LogValue":
        return LogValue(self.log + other.log)

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if other.is_zero:
            raise ZeroDivisionError("division by log-domain zero")
        if self.is_zero:
            return LogValue(LOG_ZERO)
        return LogValue(self.log - other.log)

    def __add__(self, other: "LogValue") -> "LogValue":
        return log_add(self, other)

    def __lt__(self, other: "LogValue") -> bool:
        return self.log < other.log

    def __le__(self, other: "LogValue") -> bool:
        return self.log <= other.log


def _near_zero_slack(a: float, b: float) -> float:
    # tolerated log-domain overshoot before a-b is declared negative
    return 32 * sys.float_info.epsilon * max(1.0, abs(a), abs(b))


def log_add(a: LogValue, b: LogValue) -> LogValue:
    """Stable log-domain addition: log(exp(a) + exp(b))."""
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    hi, lo = (a.log, b.log) if a.log >= b.log else (b.log, a.log)
    return LogValue(hi + math.log1p(math.exp(lo - hi)))


def log_sub(a: LogValue, b: LogValue) -> tuple[LogValue, float]:
    """Log-domain subtraction log(exp(a) - exp(b)) with a cancellation report.

    Returns ``(result, digits_lost)`` where digits_lost estimates the decimal
    digits cancelled, from the magnitude ratio alone.  Exact cancellation
    returns the zero sentinel with an infinite indicator.

    Raises:
        NegativeResultError: if b exceeds a beyond roundoff tolerance.
    """
    if b.is_zero:
        return a, 0.0
    if a.is_zero:
        raise NegativeResultError(a.log, b.log)
    d = b.log - a.log
    if d > 0:
        if d <= _near_zero_slack(a.log, b.log):
            return LogValue(LOG_ZERO), math.inf
        raise NegativeResultError(a.log, b.log)
    if d == 0.0:
        return LogValue(LOG_ZERO), math.inf
    rest = -math.expm1(d)  # 1 - exp(d), accurate near 0
    return LogValue(a.log + math.log(rest)), max(0.0, -math.log10(rest))


def pow_int(base, exponent: int):
    """base**exponent for a non-negative integer exponent.

    Dispatches on the backend: LogValue scales the log magnitude (so huge
    exponents cannot under/overflow); rationals and ints are raised exactly.
    The empty product is 1 even for a zero base.
    """
    if exponent < 0:
        raise ValueError("exponent must be non-negative")
    if isinstance(base, LogValue):
        if exponent == 0:
            return LogValue.one()
        return LogValue(exponent * base.log)
    return base ** exponent


# ---------------------------------------------------------------------------
# array-side helpers (log-domain float64)

def logsumexp(a, axis=None):
    """Max-shifted log-sum-exp that quietly handles all-(-inf) inputs."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return LOG_ZERO if axis is None else np.full(np.delete(a.shape, axis), LOG_ZERO)
    hi = np.max(a, axis=axis, keepdims=True)
    hi = np.where(np.isfinite(hi), hi, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.log(np.sum(np.exp(a - hi), axis=axis)) + np.squeeze(hi, axis=axis if axis is not None else None)
    if axis is None:
        return float(out)
    return out


def log_weight(x) -> float:
    """Natural log of a non-negative linear weight; 0 maps to the zero sentinel."""
    x = float(x)
    if x < 0:
        raise ValueError(f"weights must be non-negative, got {x!r}")
    return LOG_ZERO if x == 0.0 else math.log(x)


def scaled_power(log_base: float, exponent: int) -> float:
    """exponent * log_base with the 0**0 = 1 convention (0 * -inf -> 0)."""
    if exponent == 0:
        return 0.0
    return exponent * log_base


# ---------------------------------------------------------------------------
# exact-rational helpers

class NonSquareRatioError(ArithmeticError):
    """An exact square root was required but does not exist in the rationals."""


def rat(value) -> Rat:
    """Coerce ints, Fractions, mpq and strings to the active rational type.

    Decimal strings use their exact decimal expansion ("0.1" -> 1/10);
    "p/q" strings are read as exact fractions.  Floats are rejected: their
    binary expansion is almost never the decimal the caller meant.
    """
    if isinstance(value, float):
        raise TypeError("refusing to guess an exact rational from a float; "
                        "pass a decimal string instead")
    if isinstance(value, str):
        value = value.strip()
        if "/" in value:
            num, den = value.split("/", 1)
            return Rat(int(num), int(den))
        return Rat(Fraction(value))
    return Rat(value)


def rat_num_den(x) -> tuple[int, int]:
    return int(x.numerator), int(x.denominator)


def rat_sqrt(x) -> Rat:
    """Exact square root of a non-negative rational.

    Raises:
        NonSquareRatioError: if the root is irrational.
    """
    num, den = rat_num_den(x)
    if num < 0:
        raise ValueError("square root of a negative rational")
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        raise NonSquareRatioError(f"{num}/{den} has no rational square root")
    return Rat(rn, rd)


def rat_log(x) -> float:
    """float log of a positive rational, safe for values outside float range."""
    num, den = rat_num_den(x)
    if num == 0:
        return LOG_ZERO
    return _log_big_int(num) - _log_big_int(den)


def _log_big_int(n: int) -> float:
    try:
        return math.log(n)
    except OverflowError:
        hi = n.bit_length() - 53
        return math.log(n >> hi) + hi * math.log(2.0)


def rat_to_str(x) -> str:
    """Lossless text form: exact terminating decimal when one exists, else p/q."""
    num, den = rat_num_den(x)
    twos = fives = 0
    d = den
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    digits = max(twos, fives)
    scaled = num * (2 ** (digits - twos)) * (5 ** (digits - fives))
    if digits == 0:
        return str(scaled)
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"
