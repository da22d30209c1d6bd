"""Nonnegative reals carried by their natural log, and certified log-binomials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering

import mpmath
import numpy as np

_EPS = 2.0**-50
DIRECT_SUM_LIMIT = 2**20


@total_ordering
@dataclass(frozen=True)
class LogNumber:
    """A value x >= 0 stored as ln x (``-inf`` for zero)."""

    ln_value: float

    @classmethod
    def of(cls, x: float) -> "LogNumber":
        if x < 0:
            raise ValueError("LogNumber holds nonnegative values only")
        return cls(math.log(x) if x > 0 else -math.inf)

    @classmethod
    def zero(cls) -> "LogNumber":
        return cls(-math.inf)

    @property
    def sign(self) -> int:
        return 0 if self.ln_value == -math.inf else 1

    def __float__(self) -> float:
        if self.ln_value > 709.78:
            return math.inf
        return math.exp(self.ln_value)

    def __mul__(self, other):
        o = _lift(other)
        if self.sign == 0 or o.sign == 0:
            return LogNumber.zero()
        return LogNumber(self.ln_value + o.ln_value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _lift(other)
        if o.sign == 0:
            raise ZeroDivisionError("division by LogNumber zero")
        if self.sign == 0:
            return self
        return LogNumber(self.ln_value - o.ln_value)

    def __add__(self, other):
        o = _lift(other)
        return LogNumber(float(np.logaddexp(self.ln_value, o.ln_value)))

    __radd__ = __add__

    def __sub__(self, other):
        o = _lift(other)
        if o.ln_value > self.ln_value:
            if o.ln_value - self.ln_value < 1e-12 * max(1.0, abs(self.ln_value)):
                return LogNumber.zero()
            raise ValueError("LogNumber subtraction would go negative")
        if o.sign == 0:
            return self
        d = o.ln_value - self.ln_value
        if d == 0.0:
            return LogNumber.zero()
        return LogNumber(self.ln_value + math.log(-math.expm1(d)))

    def __eq__(self, other):
        if not isinstance(other, (LogNumber, int, float)):
            return NotImplemented
        return self.ln_value == _lift(other).ln_value

    def __lt__(self, other):
        return self.ln_value < _lift(other).ln_value

    def __hash__(self):
        return hash(self.ln_value)

    def __repr__(self):
        if self.ln_value < 700:
            return f"LogNumber({float(self):.6g})"
        return f"LogNumber(exp({self.ln_value:.6g}))"


def _lift(x) -> LogNumber:
    return x if isinstance(x, LogNumber) else LogNumber.of(x)


def log_sum(values) -> LogNumber:
    lns = [v.ln_value for v in values]
    if not lns:
        return LogNumber.zero()
    return LogNumber(float(np.logaddexp.reduce(np.asarray(lns))))


@dataclass(frozen=True)
class Magnitude:
    """A positive integer known exactly, or only by its log with an error bound."""

    exact: int | None
    ln: float
    ln_error: float = 0.0

    @classmethod
    def of_int(cls, v: int) -> "Magnitude":
        if v < 0:
            raise ValueError("magnitudes are nonnegative")
        return cls(int(v), math.log(v) if v > 0 else -math.inf)

    @classmethod
    def of_log(cls, ln: float, ln_error: float = 0.0) -> "Magnitude":
        return cls(None, float(ln), float(ln_error))

    def square(self) -> "Magnitude":
        if self.exact is not None:
            return Magnitude.of_int(self.exact * self.exact)
        return Magnitude(None, 2.0 * self.ln, 2.0 * self.ln_error)

    def __lt__(self, other: "Magnitude") -> bool:
        if self.exact is not None and other.exact is not None:
            return self.exact < other.exact
        return self.ln < other.ln


def _as_magnitude(x) -> Magnitude:
    if isinstance(x, Magnitude):
        return x
    if isinstance(x, LogNumber):
        return Magnitude.of_log(x.ln_value)
    if isinstance(x, (int, np.integer)):
        return Magnitude.of_int(int(x))
    raise TypeError(f"cannot read {x!r} as a magnitude")


def _g(u: float) -> float:
    """Integral of ln(1-v) over [0,u], for 0 <= u <= 1."""
    if u >= 1.0:
        return -1.0
    if u < 1e-3:
        # -sum_j u^j / (j (j-1)), j >= 2; 8 terms reach 1e-27 relative
        return -u * u * sum(u ** (j - 2) / (j * (j - 1)) for j in range(2, 10))
    return (u - 1.0) * math.log1p(-u) - u


def _ratio(ln_s: float, c: Magnitude) -> float:
    if c.exact is not None:
        return math.exp(ln_s) / c.exact if c.exact < 2**1000 else math.exp(ln_s - c.ln)
    return math.exp(ln_s - c.ln)


def falling_log_ratio(c, s: int) -> tuple[float, float, float]:
    """Bracket (lo, hi) and estimate of sum_{i<s} ln(1 - i/c) for s <= c.

    Direct summation up to ``DIRECT_SUM_LIMIT`` terms; beyond it the sum of
    the decreasing summand is trapped between two integrals.
    """
    c = _as_magnitude(c)
    if s <= 1:
        return 0.0, 0.0, 0.0
    if c.exact is not None and s > c.exact:
        raise ValueError("need s <= c")
    if s <= DIRECT_SUM_LIMIT:
        i = np.arange(s, dtype=float)
        if c.exact is not None and c.exact < 2**53:
            cf = float(c.exact)
            near = i > 0.5 * cf
            terms = np.log1p(-i / cf)
            terms[near] = np.log(cf - i[near]) - math.log(cf)
        else:
            terms = np.log1p(-np.exp(np.log(np.maximum(i, 1e-300)) - c.ln))
            terms[0] = 0.0
        v = float(terms.sum())
        slack = 4 * _EPS * float(np.abs(terms).sum()) + s * 1e-300
        # the log-only c carries ln_error into every term
        if c.exact is None and c.ln_error:
            slack += s * _ratio(math.log(s), c) * c.ln_error * 2
        return v - slack, v + slack, v
    c_val = float(c.exact) if c.exact is not None and c.exact < 2**1000 else None

    def integral(x: int) -> float:
        u = _ratio(math.log(x), c)
        if c_val is not None:
            return c_val * _g(u)
        # c * g(u) with c huge: only the series regime is reachable here
        return -x * u * sum(u ** (j - 2) / (j * (j - 1)) for j in range(2, 10))

    lo = integral(s)
    hi = integral(s - 1)
    pad = 4 * _EPS * abs(lo)
    if c.exact is None and c.ln_error:
        pad += s * _ratio(math.log(s), c) * c.ln_error * 2
    return lo - pad, hi + pad, 0.5 * (lo + hi)


@dataclass(frozen=True)
class LogBinomial:
    """ln C(a, b) as a LogNumber, with an absolute error bound in nats."""

    value: LogNumber
    error_budget: LogNumber
    method: str
    # the truncation part of error_budget alone (zero on the exact path)
    truncation: LogNumber = LogNumber(-math.inf)

    @property
    def nats(self) -> float:
        return float(self.value)

    @property
    def error(self) -> float:
        return float(self.error_budget)


def log_binomial(a, b) -> LogBinomial:
    """ln C(a, b) for a given exactly or by ln a, and b exactly or by ln b.

    Exact a: multiprecision log-gamma. Log-only a with exact b:
    b ln a - ln b! - D where 0 <= D <= b^2/(a-b); D is left in the error
    budget. Both log-only: Stirling around b (ln(a/b) + 1).
    """
    A, B = _as_magnitude(a), _as_magnitude(b)
    if B.exact == 0:
        return LogBinomial(LogNumber.zero(), LogNumber.zero(), "exact")
    if A.exact is not None and B.exact is not None:
        if B.exact > A.exact:
            raise ValueError(f"C({A.exact}, {B.exact}) needs b <= a")
        return _exact(A.exact, B.exact)
    if A.exact is None and B.exact is not None:
        return _log_a(A, B.exact)
    if A.exact is not None:
        A = Magnitude.of_log(A.ln)
    return _both_log(A, B)


def _exact(a: int, b: int) -> LogBinomial:
    b = min(b, a - b)
    if b == 0:
        return LogBinomial(LogNumber.zero(), LogNumber.zero(), "exact")
    if a <= 2000:
        v = math.log(math.comb(a, b))
        return LogBinomial(LogNumber.of(v), LogNumber.of(4 * _EPS * v), "exact")
    prec = max(80, a.bit_length() + 64)
    with mpmath.workprec(prec):
        v = mpmath.loggamma(a + 1) - mpmath.loggamma(b + 1) - mpmath.loggamma(a - b + 1)
        v = float(v)
    return LogBinomial(LogNumber.of(v), LogNumber.of(4 * _EPS * v), "exact")


def _log_a(A: Magnitude, b: int) -> LogBinomial:
    ln_b = math.log(b)
    if A.ln < ln_b:
        raise ValueError("C(a, b) needs b <= a")
    v = b * A.ln - math.lgamma(b + 1)
    if v <= 0:
        raise ValueError("log-only a is too close to b for the asymptotic form")
    # D <= b^2 / (a - b), plus rounding and the uncertainty in ln a
    ln_d = 2 * ln_b - A.ln - math.log1p(-math.exp(ln_b - A.ln)) if A.ln > ln_b else math.inf
    err = LogNumber(ln_d) + LogNumber.of(8 * _EPS * (b * A.ln) + b * A.ln_error)
    return LogBinomial(LogNumber.of(v), err, "asymptotic", LogNumber(ln_d))


def _both_log(A: Magnitude, B: Magnitude) -> LogBinomial:
    if A.ln < B.ln:
        raise ValueError("C(a, b) needs b <= a")
    L = A.ln - B.ln + 1.0
    ln_v = B.ln + math.log(L)
    # neglected: (1/2) ln(2 pi b) + b^2/(a-b) relative to b L, then input errors
    gap = B.ln - A.ln
    rel = (0.5 * (math.log(2 * math.pi) + B.ln)) * math.exp(-B.ln) / L
    if gap < -1e-9:
        rel += math.exp(gap - math.log1p(-math.exp(gap))) / L
    else:
        rel += 1.0
    rel += B.ln_error * (1 + 1 / L) + A.ln_error / L + 8 * _EPS
    return LogBinomial(LogNumber(ln_v), LogNumber(ln_v + math.log(rel)), "asymptotic")
