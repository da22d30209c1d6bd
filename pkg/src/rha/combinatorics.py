"""Closed-form entropies and no-repeat probabilities of RHA processes.

Every quantity comes back as a ``BoundReport``: a log-domain value, the method
used (``exact`` or ``asymptotic``) and an absolute error budget in the same
units as the value. Levels whose perplexity is log-only carry the floor
correction of the schedule into the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .logmath import DIRECT_SUM_LIMIT, LogNumber, Magnitude, falling_log_ratio, log_binomial, log_sum
from .schedule import PerplexitySchedule, combinatorial_entropy_rate

# explicit schedules stay exact up to this many bits even above the threshold
_EXPLICIT_EXACT_BITS = 4096


@dataclass(frozen=True)
class BoundReport:
    value: LogNumber
    method: str  # "exact" | "asymptotic"
    error_budget: LogNumber
    l: int | None = None
    lower: LogNumber | None = None
    upper: LogNumber | None = None
    details: dict = field(default_factory=dict, compare=False)

    @property
    def nats(self) -> float:
        return float(self.value)

    @property
    def error(self) -> float:
        return float(self.error_budget)

    def __float__(self) -> float:
        return float(self.value)


def _merge(*methods: str) -> str:
    return "exact" if all(m == "exact" for m in methods) else "asymptotic"


def magnitude(schedule: PerplexitySchedule, n: int) -> Magnitude:
    """k_n as an exact integer where allowed, else ln k_n with its floor error."""
    k = schedule.exact(n)
    if k is None and schedule.kind != "hilberg":
        v = schedule.k_int(n)
        if v is not None and v.bit_length() <= _EXPLICIT_EXACT_BITS:
            k = v
    if k is not None:
        return Magnitude.of_int(k)
    return Magnitude.of_log(schedule.ln_k(n), schedule.floor_error(n))


def _fits(k: Magnitude, s: int) -> bool:
    """k >= s."""
    if k.exact is not None:
        return k.exact >= s
    return k.ln >= math.log(s)


def _ln_gap(a: Magnitude, b: Magnitude) -> tuple[float, float]:
    """ln a - ln b and its uncertainty."""
    if a.exact is not None and b.exact is not None:
        return math.log(a.exact) - math.log(b.exact), 4e-16 * max(1.0, abs(math.log(a.exact)))
    return a.ln - b.ln, a.ln_error + b.ln_error + 4e-16 * max(1.0, abs(a.ln))


def _prob_report(lo: float, hi: float, est: float, method: str, **details) -> BoundReport:
    hi = min(hi, 0.0)
    est = min(max(est, lo), hi)
    p = math.exp(est)
    err = max(math.exp(hi) - p, p - math.exp(lo), 0.0)
    return BoundReport(
        LogNumber(est), method, LogNumber.of(err), lower=LogNumber(lo), upper=LogNumber(hi), details=details
    )


def proof_no_repeat_bound(schedule: PerplexitySchedule, n: int, l: int) -> float:
    """1 - 2^n (k(2^(n-l+1) - 3) + 2) / (k^2 - 2^(n-l-1) + 1) with k = k_l; may be negative."""
    if l >= n:
        return 1.0
    k = magnitude(schedule, l)
    t = 2 ** (n - l + 1) - 3
    if k.exact is not None:
        num = 2**n * (k.exact * t + 2)
        den = k.exact * k.exact - 2 ** (n - l - 1) + 1
        return 1.0 - num / den if den > 0 else -math.inf
    # k huge: the ratio is 2^n t / k to float accuracy
    return -math.expm1(math.log(2**n * t) - k.ln) if math.log(2**n * t) - k.ln < 700 else -math.inf


def prob_no_repeat(schedule: PerplexitySchedule, n: int, m: int) -> BoundReport:
    """P(A_nm): the first level-n block splits into 2^(n-m) distinct level-m blocks.

    Given the level-(p+1) blocks are distinct, the r = 2^(n-p-1) distinct
    pairs under them are an ordered draw without replacement from k_p^2
    pairs, and all 2r components differ with probability
    (k_p)_{2r} / (k_p^2)_r. Each factor is summed in the form
    S(k_p, 2r) - S(k_p^2, r), S(c, s) = sum_{i<s} ln(1 - i/c).
    """
    if m > n:
        raise ValueError("need m <= n")
    if m < 0:
        raise ValueError("need m >= 0")
    proof = proof_no_repeat_bound(schedule, n, m)
    if m == n:
        return _prob_report(0.0, 0.0, 0.0, "exact", proof_bound=proof)
    if not _fits(magnitude(schedule, m), 2 ** (n - m)):
        z = -math.inf
        return _prob_report(z, z, z, "exact", proof_bound=proof)
    lo = hi = est = 0.0
    method = "exact"
    for p in range(m, n):
        s = 2 ** (n - p)
        k = magnitude(schedule, p)
        a_lo, a_hi, a_est = falling_log_ratio(k, s)
        b_lo, b_hi, b_est = falling_log_ratio(k.square(), s // 2)
        lo += a_lo - b_hi
        hi += a_hi - b_lo
        est += a_est - b_est
        if s > DIRECT_SUM_LIMIT or k.exact is None:
            method = "asymptotic"
    return _prob_report(lo, hi, est, method, proof_bound=proof)


def _level_binomial(schedule: PerplexitySchedule, l: int):
    return log_binomial(magnitude(schedule, l - 1).square(), magnitude(schedule, l))


def grammar_entropy(schedule: PerplexitySchedule, n: int) -> BoundReport:
    """H(G_{<=n}) = sum over levels 1..n of ln C(k_{l-1}^2, k_l)."""
    return _grammar_prefix(schedule, n)[n]


def _grammar_prefix(schedule: PerplexitySchedule, n: int) -> list[BoundReport]:
    out = [BoundReport(LogNumber.zero(), "exact", LogNumber.zero(), l=0)]
    val, err, method = LogNumber.zero(), LogNumber.zero(), "exact"
    for l in range(1, n + 1):
        lb = _level_binomial(schedule, l)
        val = val + lb.value
        err = err + lb.error_budget
        method = _merge(method, lb.method)
        out.append(BoundReport(val, method, err, l=l))
    return out


def _upper_candidates(schedule: PerplexitySchedule, n: int) -> list[tuple[LogNumber, BoundReport]]:
    out = []
    for l, g in enumerate(_grammar_prefix(schedule, n)):
        ln_k = schedule.ln_k(l)
        tail = LogNumber(math.log(2.0) * (n - l) + math.log(ln_k)) if ln_k > 0 else LogNumber.zero()
        tail_err = LogNumber.of(2.0 ** (n - l) * schedule.floor_error(l))
        out.append((g.value + tail, BoundReport(g.value + tail, g.method, g.error_budget + tail_err, l=l)))
    return out


def block_entropy_upper(schedule: PerplexitySchedule, n: int) -> BoundReport:
    """min over l of H(G_{<=l}) + 2^(n-l) ln k_l, with the minimizing l."""
    cands = _upper_candidates(schedule, n)
    best = min(cands, key=lambda c: c[0].ln_value)[1]
    return BoundReport(
        best.value, best.method, best.error_budget, l=best.l, details={"candidates": [c[0] for c in cands]}
    )


def block_entropy_upper_at(schedule: PerplexitySchedule, n: int, l: int) -> BoundReport:
    if not 0 <= l <= n:
        raise ValueError("need 0 <= l <= n")
    return _upper_candidates(schedule, n)[l][1]


def _lower_term(schedule: PerplexitySchedule, n: int, l: int) -> tuple[float, float, float, str]:
    """(lo, hi, estimate, method) of [ln C(a,b) - ln C(a-s,b-s)] P(A_nl)."""
    if l == 0:
        return 0.0, 0.0, 0.0, "exact"
    s = 2 ** (n - l)
    b = magnitude(schedule, l)
    if not _fits(b, s):
        return 0.0, 0.0, 0.0, "exact"
    a = magnitude(schedule, l - 1).square()
    # ln C(a,b) - ln C(a-s, b-s) = sum_{i<s} ln((a-i)/(b-i))
    gap, gap_err = _ln_gap(a, b)
    sa = falling_log_ratio(a, s)
    sb = falling_log_ratio(b, s)
    d_est = s * gap + sa[2] - sb[2]
    d_lo = max(0.0, s * (gap - gap_err) + sa[0] - sb[1])
    d_hi = s * (gap + gap_err) + sa[1] - sb[0]
    p = prob_no_repeat(schedule, n, l)
    p_est, p_lo, p_hi = float(p.value), float(p.lower), float(p.upper)
    method = _merge(p.method, "exact" if s <= DIRECT_SUM_LIMIT and a.exact is not None and b.exact is not None else "asymptotic")
    return d_lo * p_lo, d_hi * p_hi, max(d_est, 0.0) * p_est, method


def block_entropy_lower_at(schedule: PerplexitySchedule, n: int, l: int) -> BoundReport:
    if not 0 <= l <= n:
        raise ValueError("need 0 <= l <= n")
    lo, hi, est, method = _lower_term(schedule, n, l)
    err = max(hi - est, est - lo, 0.0)
    return BoundReport(LogNumber.of(est), method, LogNumber.of(err), l=l, lower=LogNumber.of(lo), upper=LogNumber.of(hi))


def block_entropy_lower(schedule: PerplexitySchedule, n: int) -> BoundReport:
    """max over l of [ln C(k_{l-1}^2, k_l) - ln C(k_{l-1}^2 - 2^(n-l), k_l - 2^(n-l))] P(A_nl).

    The l = 0 term has no grammar level and counts as 0, as do levels with
    k_l < 2^(n-l), where the no-repeat probability vanishes.
    """
    best = None
    for l in range(n + 1):
        r = block_entropy_lower_at(schedule, n, l)
        if best is None or r.value > best.value:
            best = r
    return best


def conditional_block_entropy(schedule: PerplexitySchedule, n: int) -> float:
    """H(X^n_j | G_{<=n}) = ln k_n."""
    return schedule.ln_k(n)


def entropy_rate_sandwich(schedule: PerplexitySchedule) -> tuple[float, float]:
    h = combinatorial_entropy_rate(schedule).value
    return h / 2, 2 * h


def top_entropy_cap(schedule: PerplexitySchedule, m: int) -> float:
    """2 ln k_m, the log of the number of ordered pairs of level-m blocks.

    This counts windows aligned to the level-m tiling only. Measured prefixes
    exceed it at small m; ``window_count_cap`` is the bound that holds.
    """
    return 2.0 * schedule.ln_k(m)


def window_count_cap(schedule: PerplexitySchedule, m: int) -> float:
    """ln(2^m k_m^2 + 2^m - 1): every length-2^m window either starts at one of
    2^m offsets inside a pair of adjacent level-m blocks, or overlaps the
    preamble X_1..X_{2^m - 1}, which has 2^m - 1 starting points."""
    return float(np.logaddexp(m * math.log(2) + 2.0 * schedule.ln_k(m), math.log(2**m - 1) if m else -math.inf))


def lz_ratio_floor(measured_L: int, m: int) -> float:
    """(m/(L+1)) ln(m/(L+1)): the V ln V floor implied by phrases no longer than L+1."""
    if m < 1 or measured_L < 0:
        raise ValueError("need m >= 1 and L >= 0")
    x = m / (measured_L + 1)
    return x * math.log(x)


def stationary_block_entropy_bracket(schedule: PerplexitySchedule, n: int) -> tuple[BoundReport, BoundReport, float]:
    """Bracket on the stationary-mean entropy of 2^n symbols.

    Returns (lower bound at level n-1, upper bound at level n+1, shift n ln 2);
    the stationary entropy lies in [lower, upper + shift].
    """
    if n < 1:
        raise ValueError("need n >= 1")
    return block_entropy_lower(schedule, n - 1), block_entropy_upper(schedule, n + 1), n * math.log(2)


# closed-form level choices for the hilberg schedule


def proof_l_upper(beta: float, n: int) -> int:
    """floor(beta^-1 log2(n ln 2 / ln n)), n >= 2."""
    if n < 2:
        raise ValueError("need n >= 2")
    return max(0, math.floor(math.log2(n * math.log(2) / math.log(n)) / beta))


def proof_l_lower(beta: float, n: int) -> int:
    """ceil(beta^-1 log2(2n)), n >= 1."""
    if n < 1:
        raise ValueError("need n >= 1")
    return math.ceil(math.log2(2 * n) / beta)


def proof_upper_shape(beta: float, n: int) -> float:
    """Closed-form upper bound at l = proof_l_upper; its order is 2^n (ln n / n)^(1/beta - 1)."""
    q = n * math.log(2) / math.log(n)
    return (2 / beta * math.log2(q) * 2 ** (n / math.log(n)) + 2**n * q ** (-1 / beta)) * q


def hilberg_upper_order(beta: float, n: int) -> float:
    return 2**n * (math.log(n) / n) ** (1 / beta - 1)


def hilberg_lower_order(beta: float, n: int) -> float:
    return 2**n * (1 / n) ** (1 / beta - 1)


def total_error(*reports: BoundReport) -> LogNumber:
    return log_sum(r.error_budget for r in reports)
