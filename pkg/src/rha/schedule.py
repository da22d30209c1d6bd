"""Perplexity schedules k_n, in exact-integer and natural-log form."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import mpmath

DEFAULT_EXACT_THRESHOLD = 2**62

# ln k beyond which exact integers are never materialized (about 2^17 nats)
_EXACT_LN_CAP = 131072.0


class ScheduleError(ValueError):
    pass


class Violation(NamedTuple):
    level: int
    side: str  # "lower": k_n < k_{n-1}; "upper": k_n > k_{n-1}^2


class EntropyRate(NamedTuple):
    value: float
    flag: str  # "attained_at_n_max" | "analytic_zero"


@lru_cache(maxsize=None)
def _floor_exp(x: float) -> int:
    """floor(exp(x)) for a float x, evaluated with enough bits to be exact."""
    bits = int(x * 1.4426950408889634) + 96
    with mpmath.workprec(bits):
        return int(mpmath.floor(mpmath.exp(mpmath.mpf(x))))


def _hilberg_exponent(beta: float, n: int) -> float:
    return 2.0 ** (beta * n)


@dataclass(frozen=True)
class PerplexitySchedule:
    """A perplexity sequence k_0..k_{n_max}.

    ``log_k[n]`` is always present. ``exact_k[n]`` holds the integer when it
    does not exceed ``exact_threshold``. Levels above ``n_max`` are defined by
    the kind's rule: hilberg and constant by formula, explicit lists by
    holding their last value.
    """

    kind: str
    n_max: int
    log_k: tuple[float, ...]
    exact_k: tuple[int | None, ...]
    exact_threshold: int = DEFAULT_EXACT_THRESHOLD
    beta: float | None = None
    values: tuple[int, ...] | None = None
    clamped: tuple[int, ...] = ()

    @property
    def k0(self) -> int:
        return self.k_int(0)

    @property
    def degenerate(self) -> bool:
        return self.k_int(0) == 1

    def ln_k(self, n: int) -> float:
        if n < 0:
            raise ValueError("level must be non-negative")
        if n <= self.n_max:
            return self.log_k[n]
        if self.kind == "hilberg":
            return _hilberg_log_k(self.beta, n, self.exact_threshold)[0]
        return self.log_k[-1]

    def exact(self, n: int) -> int | None:
        """k_n under the exactness budget, else None."""
        if n <= self.n_max:
            return self.exact_k[n]
        k = self.k_int(n)
        return k if k is not None and k <= self.exact_threshold else None

    def k_int(self, n: int) -> int | None:
        """k_n as an integer regardless of the exactness budget, if computable."""
        if self.kind == "constant":
            return self.values[0]
        if self.kind == "explicit":
            return self.values[min(n, len(self.values) - 1)]
        x = _hilberg_exponent(self.beta, n)
        if x > _EXACT_LN_CAP:
            return None
        k = _floor_exp(x)
        if n in self.clamped:
            k = min(k, self.k_int(n - 1) ** 2)
        return k

    def floor_error(self, n: int) -> float:
        """Bound on |ln k_n - log_k[n]| from dropping the floor in log-domain."""
        if self.kind != "hilberg" or self.exact(n) is not None:
            return 0.0
        return math.exp(-_hilberg_exponent(self.beta, n)) * 1.0000001

    def spec_string(self) -> str:
        if self.kind == "hilberg":
            return f"hilberg(beta={self.beta!r}, n_max={self.n_max})"
        if self.kind == "constant":
            return f"constant(k={self.values[0]}, n_max={self.n_max})"
        v = self.values
        if len(v) > 4 and all(v[i] == v[i - 1] ** 2 for i in range(1, len(v))):
            return f"squaring(k0={v[0]}, n_max={self.n_max})"
        return "explicit([" + ",".join(str(x) for x in v) + "])"

    def extended(self, n_max: int) -> "PerplexitySchedule":
        """The same schedule materialized through level ``n_max``."""
        if n_max <= self.n_max:
            return self
        if self.kind == "hilberg":
            return make_hilberg_schedule(self.beta, n_max, self.exact_threshold)
        if self.kind == "constant":
            return make_constant_schedule(self.values[0], n_max, self.exact_threshold)
        vals = list(self.values) + [self.values[-1]] * (n_max - self.n_max)
        return make_explicit_schedule(vals, self.exact_threshold)


def _hilberg_log_k(beta: float, n: int, threshold: int) -> tuple[float, int | None]:
    x = _hilberg_exponent(beta, n)
    if not math.isfinite(x):
        raise ScheduleError(f"2^(beta*n) overflows at n={n}")
    if x <= math.log(threshold) + 1.0:
        k = _floor_exp(x)
        if k <= threshold:
            return math.log(k), k
    return x, None


def make_hilberg_schedule(
    beta: float, n_max: int, exact_threshold: int = DEFAULT_EXACT_THRESHOLD
) -> PerplexitySchedule:
    """k_n = floor(exp(2^(beta n))), clamped to k_{n-1}^2 where the floor overshoots.

    The clamp only fires for beta above about 0.687 (first at n = 1, where
    floor(exp(2^beta)) exceeds 4); below that the formula is used verbatim.
    Once clamped, later levels stay clamped until the formula drops back under
    k_{n-1}^2, in the log domain as well.
    """
    if not 0.0 < beta < 1.0:
        raise ScheduleError(f"beta must lie in (0, 1), got {beta!r}")
    if n_max < 0:
        raise ScheduleError("n_max must be non-negative")
    if beta * n_max >= 1023:
        raise ScheduleError(f"2^(beta*n_max) overflows for n_max={n_max}")
    log_k: list[float] = []
    exact_k: list[int | None] = []
    clamped: list[int] = []
    for n in range(n_max + 1):
        lk, ek = _hilberg_log_k(beta, n, exact_threshold)
        if n > 0:
            prev = exact_k[-1]
            if ek is not None and prev is not None and ek > prev * prev:
                ek = prev * prev
                lk = math.log(ek)
                clamped.append(n)
            elif ek is None and lk > 2.0 * log_k[-1]:
                # only reachable once an earlier clamp has pulled the chain below the formula
                if prev is not None and prev * prev <= exact_threshold:
                    ek = prev * prev
                    lk = math.log(ek)
                else:
                    lk = 2.0 * log_k[-1]
                clamped.append(n)
        log_k.append(lk)
        exact_k.append(ek)
    s = PerplexitySchedule(
        kind="hilberg",
        n_max=n_max,
        log_k=tuple(log_k),
        exact_k=tuple(exact_k),
        exact_threshold=exact_threshold,
        beta=float(beta),
        clamped=tuple(clamped),
    )
    bad = validate_schedule(s)
    if bad:
        raise ScheduleError(f"hilberg schedule invalid at {bad}")
    return s


def make_explicit_schedule(
    values: Sequence[int], exact_threshold: int = DEFAULT_EXACT_THRESHOLD
) -> PerplexitySchedule:
    vals = tuple(int(v) for v in values)
    if not vals:
        raise ScheduleError("explicit schedule needs at least k_0")
    if any(v < 1 for v in vals):
        raise ScheduleError("perplexities must be positive integers")
    return PerplexitySchedule(
        kind="explicit",
        n_max=len(vals) - 1,
        log_k=tuple(math.log(v) for v in vals),
        exact_k=tuple(v if v <= exact_threshold else None for v in vals),
        exact_threshold=exact_threshold,
        values=vals,
    )


def make_constant_schedule(
    k: int, n_max: int, exact_threshold: int = DEFAULT_EXACT_THRESHOLD
) -> PerplexitySchedule:
    if k < 1:
        raise ScheduleError("perplexity must be a positive integer")
    if n_max < 0:
        raise ScheduleError("n_max must be non-negative")
    return PerplexitySchedule(
        kind="constant",
        n_max=n_max,
        log_k=(math.log(k),) * (n_max + 1),
        exact_k=(k if k <= exact_threshold else None,) * (n_max + 1),
        exact_threshold=exact_threshold,
        values=(k,),
    )


def make_squaring_schedule(
    k0: int, n_max: int, exact_threshold: int = DEFAULT_EXACT_THRESHOLD
) -> PerplexitySchedule:
    """k_n = k0^(2^n): every level keeps the full pool of pairs."""
    return make_explicit_schedule([k0 ** (2**n) for n in range(n_max + 1)], exact_threshold)


def validate_schedule(s: PerplexitySchedule, rel_tol: float = 1e-12) -> list[Violation]:
    out: list[Violation] = []
    for n in range(1, s.n_max + 1):
        a, b = s.exact_k[n - 1], s.exact_k[n]
        if a is not None and b is not None:
            if b < a:
                out.append(Violation(n, "lower"))
            elif b > a * a:
                out.append(Violation(n, "upper"))
            continue
        la, lb = s.log_k[n - 1], s.log_k[n]
        tol = rel_tol * max(1.0, lb)
        if lb < la - tol:
            out.append(Violation(n, "lower"))
        elif lb > 2.0 * la + tol:
            out.append(Violation(n, "upper"))
    return out


def combinatorial_entropy_rate(s: PerplexitySchedule) -> EntropyRate:
    """inf_n 2^-n ln k_n over the materialized levels.

    For valid schedules 2^-n ln k_n is nonincreasing, so the finite-range
    minimum sits at n_max. The hilberg kind has limit 0 exactly.
    """
    if s.kind == "hilberg":
        return EntropyRate(0.0, "analytic_zero")
    best = min(math.ldexp(lk, -n) for n, lk in enumerate(s.log_k))
    return EntropyRate(best, "attained_at_n_max")
