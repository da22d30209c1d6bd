import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from rha.logmath import (
    DIRECT_SUM_LIMIT,
    LogNumber,
    Magnitude,
    falling_log_ratio,
    log_binomial,
    log_sum,
)


def test_small_examples():
    assert log_binomial(4, 2).nats == pytest.approx(math.log(6), rel=1e-15)
    assert log_binomial(10**9, 0).nats == 0.0
    assert log_binomial(Magnitude.of_log(50.0), 0).nats == 0.0
    assert log_binomial(4, 4).nats == 0.0
    with pytest.raises(ValueError):
        log_binomial(3, 5)


def test_huge_log_only_a():
    b = 2**12
    r = log_binomial(Magnitude.of_log(4096.0), b)
    assert r.method == "asymptotic"
    assert r.nats == pytest.approx(b * 4096.0 - math.lgamma(b + 1), rel=1e-15)
    # truncation part: b^2 / (a - b) with a = e^4096
    assert r.truncation.ln_value == pytest.approx(2 * math.log(b) - 4096.0, abs=1e-9)
    assert r.error <= 1e-6


def test_exact_path_matches_integer_arithmetic_big():
    a, b = 10**5 + 3, 777
    r = log_binomial(a, b)
    ref = math.log(math.comb(a, b))
    assert r.method == "exact"
    assert abs(r.nats - ref) <= max(r.error, 1e-9 * ref)


@settings(max_examples=80, deadline=None)
@given(st.integers(1000, 10**6), st.integers(1, 60))
def test_log_domain_agrees_with_exact_within_budget(a, b):
    exact = math.log(math.comb(a, b))
    approx = log_binomial(Magnitude.of_log(math.log(a)), b)
    assert approx.method == "asymptotic"
    assert abs(approx.nats - exact) <= approx.error + 1e-9 * exact
    # the dropped term is nonnegative
    assert approx.nats >= exact - 1e-9 * exact


@settings(max_examples=60, deadline=None)
@given(st.integers(2000, 10**6), st.integers(200, 5000))
def test_both_log_relative_bound(a, b):
    assume(b < a // 2)
    exact = math.log(math.comb(a, b))
    r = log_binomial(Magnitude.of_log(math.log(a)), Magnitude.of_log(math.log(b)))
    # value is ln ln C; error is a relative bound on ln C
    rel = float(r.error_budget) / float(r.value)
    assert abs(math.exp(r.value.ln_value) - exact) <= rel * exact + 1e-9


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 10**7), st.integers(1, 3000))
def test_falling_ratio_brackets_direct_sum(c, s):
    assume(s <= c)
    ref = math.fsum(math.log1p(-i / c) for i in range(s))
    lo, hi, est = falling_log_ratio(c, s)
    assert lo - 1e-9 * abs(ref) <= ref <= hi + 1e-9 * abs(ref)


def test_falling_ratio_integral_path_brackets():
    c = 10**14
    s = DIRECT_SUM_LIMIT * 4
    lo, hi, est = falling_log_ratio(c, s)
    # -s(s-1)/(2c) - s^3/(3 c^2) style second-order reference
    ref = -s * (s - 1) / (2 * c) - (s - 1) * s * (2 * s - 1) / (12 * c * c)
    assert lo <= ref <= hi
    assert hi - lo < 1e-6 * abs(ref)


def test_lognumber_arithmetic():
    a, b = LogNumber.of(3.0), LogNumber.of(5.0)
    assert float(a * b) == pytest.approx(15.0)
    assert float(b / a) == pytest.approx(5 / 3)
    assert float(a + b) == pytest.approx(8.0)
    assert float(b - a) == pytest.approx(2.0)
    assert a < b and LogNumber.zero() < a
    assert float(log_sum([a, b, LogNumber.zero()])) == pytest.approx(8.0)
    assert float(LogNumber(1000.0)) == math.inf
    with pytest.raises(ValueError):
        a - b
    with pytest.raises(ZeroDivisionError):
        a / LogNumber.zero()


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e50), st.floats(0, 1e50), st.floats(1e-3, 1e3))
def test_lognumber_monotone_consistent(x, y, z):
    X, Y, Z = LogNumber.of(x), LogNumber.of(y), LogNumber.of(z)
    if x <= y:
        assert X * Z <= Y * Z or math.isclose(float(X * Z), float(Y * Z), rel_tol=1e-12)
        assert X + Z <= Y + Z or math.isclose(float(X + Z), float(Y + Z), rel_tol=1e-12)
    assert float(X + Y) == pytest.approx(x + y, rel=1e-12)
