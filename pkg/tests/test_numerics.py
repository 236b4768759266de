"""Log-domain scalar ops against an extended-precision oracle, and exact
rational arithmetic properties."""
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactmrf.numerics import (LOG_ZERO, LogValue, NegativeResultError,
                               NonSquareRatioError, Rat, log_add, log_sub,
                               logsumexp, pow_int, rat, rat_sqrt, rat_to_str)

mpmath.mp.dps = 50


def mp_log_add(a: float, b: float) -> float:
    return float(mpmath.log(mpmath.exp(mpmath.mpf(a)) + mpmath.exp(mpmath.mpf(b))))


class TestLogAdd:
    def test_one_plus_one(self):
        assert log_add(LogValue.one(), LogValue.one()).log == pytest.approx(math.log(2), abs=1e-15)

    def test_zero_identity(self):
        x = LogValue.from_linear(3.7)
        assert log_add(LogValue.zero(), x) == x
        assert log_add(x, LogValue.zero()) == x

    def test_huge_operands_do_not_overflow(self):
        # 1e300 + 1e300 = 2e300, far above float overflow in linear space
        x = LogValue.from_linear(1e300)
        out = log_add(x, x)
        expected = float(mpmath.log(2) + 300 * mpmath.log(10))
        assert out.log == pytest.approx(expected, rel=1e-15)

    def test_commutative(self):
        a, b = LogValue.from_linear(0.3), LogValue.from_linear(7.1)
        assert log_add(a, b).log == log_add(b, a).log

    @given(st.floats(1e-12, 1e12), st.floats(1e-12, 1e12))
    @settings(max_examples=200)
    def test_matches_linear_sum(self, x, y):
        out = log_add(LogValue.from_linear(x), LogValue.from_linear(y))
        assert out.log == pytest.approx(mp_log_add(math.log(x), math.log(y)), abs=1e-14)


class TestLogSub:
    def test_three_minus_one(self):
        out, digits = log_sub(LogValue.from_linear(3), LogValue.from_linear(1))
        assert out.to_linear() == pytest.approx(2.0, rel=1e-15)
        assert digits < 1.0

    def test_exact_cancellation_gives_zero_sentinel(self):
        x = LogValue.from_linear(0.625)
        out, digits = log_sub(x, x)
        assert out.is_zero
        assert digits == math.inf

    def test_near_cancellation_reports_digits(self):
        a = LogValue(math.log1p(1e-14))
        out, digits = log_sub(a, LogValue.one())
        expected = float(mpmath.log(mpmath.expm1(mpmath.log1p(mpmath.mpf(1e-14)))))
        assert digits >= 13
        assert out.log == pytest.approx(expected, abs=1e-2)

    def test_negative_raises(self):
        with pytest.raises(NegativeResultError):
            log_sub(LogValue.from_linear(1), LogValue.from_linear(2))
        with pytest.raises(NegativeResultError):
            log_sub(LogValue.zero(), LogValue.one())

    def test_subtract_zero(self):
        x = LogValue.from_linear(5.0)
        out, digits = log_sub(x, LogValue.zero())
        assert out == x and digits == 0.0

    @given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
    @settings(max_examples=200)
    def test_add_then_sub_recovers(self, x, y):
        a, b = LogValue.from_linear(x), LogValue.from_linear(y)
        total = log_add(a, b)
        back, digits = log_sub(total, b)
        if digits < 12:
            # error is bounded by the reported cancellation
            assert back.log == pytest.approx(a.log, abs=10 ** (digits - 14))


class TestPowInt:
    def test_zero_exponent_is_one(self):
        assert pow_int(LogValue.zero(), 0).log == 0.0
        assert pow_int(rat(7), 0) == 1

    def test_small_integer_power(self):
        assert pow_int(rat(2), 6) == 64
        assert pow_int(LogValue.from_linear(2.0), 6).log == pytest.approx(math.log(64))

    def test_huge_exponent_no_underflow(self):
        out = pow_int(LogValue.from_linear(0.5), 10 ** 6)
        assert out.log == pytest.approx(-(10 ** 6) * math.log(2), rel=1e-15)
        assert math.isfinite(out.log)

    def test_negative_exponent_rejected(self):
        with pytest.raises(ValueError):
            pow_int(rat(2), -1)


class TestLogValue:
    @given(st.floats(1e-300, 1e300))
    @settings(max_examples=200)
    def test_linear_round_trip(self, x):
        # one ulp of the stored log amplifies to |log x| * eps relative error
        back = LogValue.from_linear(x).to_linear()
        ulp_scale = max(1.0, abs(math.log(x))) * 2.3e-16
        assert back == pytest.approx(x, rel=ulp_scale)

    def test_zero_round_trip(self):
        assert LogValue.from_linear(0.0).is_zero
        assert LogValue.from_linear(0.0).to_linear() == 0.0

    def test_zero_propagates_through_products(self):
        z = LogValue.zero() * LogValue.from_linear(123.0)
        assert z.is_zero

    def test_division_by_zero_detected(self):
        with pytest.raises(ZeroDivisionError):
            LogValue.one() / LogValue.zero()

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            LogValue.from_linear(-1.0)


rationals = st.fractions(min_value=-10 ** 6, max_value=10 ** 6,
                         max_denominator=10 ** 6)


class TestExactRational:
    @given(rationals, rationals, rationals)
    @settings(max_examples=200)
    def test_field_axioms(self, x, y, z):
        a, b, c = rat(x), rat(y), rat(z)
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a and a * b == b * a

    @given(rationals)
    @settings(max_examples=200)
    def test_lowest_terms_positive_denominator(self, x):
        a = rat(x)
        assert math.gcd(int(a.numerator), int(a.denominator)) == 1
        assert a.denominator > 0

    def test_decimal_string_exact(self):
        assert rat("0.1") == Rat(1, 10)
        assert rat("2.500") == Rat(5, 2)

    def test_fraction_string(self):
        assert rat("22/7") == Rat(22, 7)

    def test_float_rejected(self):
        with pytest.raises(TypeError):
            rat(0.1)

    @given(rationals.filter(lambda f: f >= 0))
    @settings(max_examples=200)
    def test_to_str_round_trip(self, x):
        a = rat(x)
        assert rat(rat_to_str(a)) == a

    def test_sqrt(self):
        assert rat_sqrt(rat("2.25")) == Rat(3, 2)
        with pytest.raises(NonSquareRatioError):
            rat_sqrt(rat(2))


class TestLogSumExpArray:
    def test_all_zero(self):
        assert logsumexp(np.array([LOG_ZERO, LOG_ZERO])) == LOG_ZERO

    def test_matches_scalar_chain(self):
        vals = [0.3, -2.0, 1.7, LOG_ZERO, 0.0]
        acc = LogValue.zero()
        for v in vals:
            acc = log_add(acc, LogValue(v))
        assert logsumexp(np.array(vals)) == pytest.approx(acc.log, abs=1e-14)

    def test_axis(self):
        arr = np.array([[0.0, LOG_ZERO], [1.0, 1.0]])
        out = logsumexp(arr, axis=1)
        assert out[0] == pytest.approx(0.0)
        assert out[1] == pytest.approx(1.0 + math.log(2))
