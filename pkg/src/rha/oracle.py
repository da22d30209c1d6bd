"""Exact laws of tiny RHA instances by exhaustive enumeration.

Each level's pool is enumerated as the lexicographically sorted
combination it is defined to be, accessed by index. Laws are carried as
integer outcome counts over a common integer denominator, so every
probability is an exact rational.

Levels are processed from the top down. The tiling at level l-1 is a
function of the tiling at level l, the level-l pool and C_{l-1}; pools and
C's of distinct levels are independent, so summing level by level is the
same as enumerating the full product space.

A level whose pool has too many combinations is summed by counting instead:
the number of sorted combinations that place given pair values at given
index positions is a product of binomials over the gaps.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Hashable

from .sampler import tiling_widths
from .schedule import PerplexitySchedule

DEFAULT_BUDGET = 10**7


class EnumerationBudgetExceeded(RuntimeError):
    pass


@dataclass
class ExactLaw:
    counts: dict
    denominator: int

    def prob(self, key) -> Fraction:
        return Fraction(self.counts.get(key, 0), self.denominator)

    def probabilities(self) -> dict:
        d = self.denominator
        return {k: c / d for k, c in self.counts.items()}

    def map(self, fn: Callable[[tuple], Hashable]) -> "ExactLaw":
        out: dict = defaultdict(int)
        for k, c in self.counts.items():
            out[fn(k)] += c
        return ExactLaw(dict(out), self.denominator)

    def event(self, pred: Callable[[tuple], bool]) -> Fraction:
        return Fraction(sum(c for k, c in self.counts.items() if pred(k)), self.denominator)

    def entropy(self) -> float:
        d = self.denominator
        return -sum(c / d * math.log(c / d) for c in self.counts.values() if c)

    def check(self) -> None:
        assert sum(self.counts.values()) == self.denominator


def _k(schedule: PerplexitySchedule, n: int) -> int:
    k = schedule.k_int(n)
    if k is None or k > 10**6:
        raise EnumerationBudgetExceeded(f"k_{n} too large to enumerate")
    return k


class _Work:
    def __init__(self, budget: int):
        self.left = budget

    def spend(self, amount: int) -> None:
        self.left -= amount
        if self.left < 0:
            raise EnumerationBudgetExceeded("enumeration budget exceeded")


def _positional_weights(r_positions: tuple[int, ...], pool_size: int, k: int):
    """(values, multiplicity) for sorted combinations of ``k`` out of ``pool_size``
    carrying increasing values at the increasing 0-based ``r_positions``."""
    for vals in combinations(range(pool_size), len(r_positions)):
        w = math.comb(vals[0], r_positions[0])
        for i in range(1, len(vals)):
            w *= math.comb(vals[i] - vals[i - 1] - 1, r_positions[i] - r_positions[i - 1] - 1)
            if not w:
                break
        if w:
            w *= math.comb(pool_size - 1 - vals[-1], k - 1 - r_positions[-1])
        if w:
            yield vals, w


def _step(law: ExactLaw, k_lo: int, k_n: int, inject: bool, keep: int | None, work: _Work, method: str):
    """Push a law over level-n tuples down to level n-1."""
    size = k_lo * k_lo
    n_combos = math.comb(size, k_n)
    states = list(law.counts.items())
    pos_cost = sum(math.comb(size, len(set(t))) for t, _ in states)
    full_cost = len(states) * n_combos
    use_full = method == "full" or (method == "auto" and full_cost <= pos_cost)
    work.spend((full_cost if use_full else pos_cost) * (k_lo if inject else 1))

    out: dict = defaultdict(int)

    def emit(t, pairs_of, mult):
        kids = []
        for x in t:
            kids.extend(pairs_of[x])
        if inject:
            rest = tuple(kids[: keep - 1])
            for c in range(k_lo):
                out[(c,) + rest] += mult
        else:
            out[tuple(kids)] += mult

    if use_full:
        for combo in combinations(range(size), k_n):
            pairs_of = [divmod(v, k_lo) for v in combo]
            for t, cnt in states:
                emit(t, pairs_of, cnt)
    else:
        for t, cnt in states:
            idx = sorted(set(t))
            for vals, w in _positional_weights(tuple(idx), size, k_n):
                pairs_of = {i: divmod(v, k_lo) for i, v in zip(idx, vals)}
                emit(t, pairs_of, cnt * w)
    return ExactLaw(dict(out), law.denominator * n_combos * (k_lo if inject else 1))


def process_law(
    schedule: PerplexitySchedule,
    level: int,
    width: int,
    *,
    budget: int = DEFAULT_BUDGET,
    method: str = "auto",
) -> ExactLaw:
    """Exact law of (K_{level,1}, ..., K_{level,width}) for the process tiling."""
    if width < 1:
        raise ValueError("width must be at least 1")
    widths = tiling_widths(width)
    top = level + len(widths) - 1
    work = _Work(budget)
    k_top = _k(schedule, top)
    law = ExactLaw({(c,): 1 for c in range(k_top)}, k_top)
    for n in range(top, level, -1):
        keep = widths[n - 1 - level]
        law = _step(law, _k(schedule, n - 1), _k(schedule, n), True, keep, work, method)
    return law


def block_law(
    schedule: PerplexitySchedule,
    n: int,
    level: int,
    *,
    budget: int = DEFAULT_BUDGET,
    method: str = "auto",
) -> ExactLaw:
    """Exact law of the level-``level`` decomposition of Y^n_K with K uniform.

    By the K-pair uniformity of the process this is also the law of the
    decomposition of X^n_1 = Y^n_{C_n}.
    """
    if not 0 <= level <= n:
        raise ValueError("need 0 <= level <= n")
    work = _Work(budget)
    k_n = _k(schedule, n)
    law = ExactLaw({(c,): 1 for c in range(k_n)}, k_n)
    for lev in range(n, level, -1):
        law = _step(law, _k(schedule, lev - 1), _k(schedule, lev), False, None, work, method)
    return law


def enumerate_exact(
    schedule: PerplexitySchedule,
    n_levels: int | None,
    prefix_len: int,
    *,
    budget: int = DEFAULT_BUDGET,
) -> dict[tuple[int, ...], Fraction]:
    """Exact law of the first ``prefix_len`` symbols (1-based) of the process.

    ``n_levels`` caps the highest grammar level the prefix may reach.
    """
    top = len(tiling_widths(prefix_len)) - 1
    if n_levels is not None and top > n_levels:
        raise ValueError(f"prefix of {prefix_len} symbols needs level {top} > {n_levels}")
    law = process_law(schedule, 0, prefix_len, budget=budget)
    law.check()
    d = law.denominator
    return {tuple(x + 1 for x in k): Fraction(c, d) for k, c in law.counts.items()}


def conditional_block_entropy_oracle(schedule: PerplexitySchedule, n: int, j: int) -> float:
    """H(X^n_j | G_{<=n}) by enumerating every pool of levels 1..n.

    K_{n,j} is a function of the C's and of levels above n; its exact law comes
    from ``process_law`` and is paired with every lower grammar.
    """
    k_law = process_law(schedule, n, j).map(lambda t: t[j - 1])
    pools = []
    for lev in range(1, n + 1):
        k_lo, k_l = _k(schedule, lev - 1), _k(schedule, lev)
        pools.append([[divmod(v, k_lo) for v in c] for c in combinations(range(k_lo * k_lo), k_l)])
    total = 0.0
    n_grammars = 0
    for grammar in product(*pools):
        blocks = [(i,) for i in range(_k(schedule, 0))]
        for pool in grammar:
            blocks = [blocks[a] + blocks[b] for a, b in pool]
        law: dict = defaultdict(Fraction)
        for kk, c in k_law.counts.items():
            law[blocks[kk]] += Fraction(c, k_law.denominator)
        total += -sum(float(p) * math.log(p) for p in law.values() if p)
        n_grammars += 1
    return total / n_grammars


def window_laws(schedule: PerplexitySchedule, m: int, positions) -> dict[int, dict[tuple, Fraction]]:
    """Exact law of X_{i:i+m-1} for each 1-based position i."""
    positions = list(positions)
    law = enumerate_exact(schedule, None, max(positions) + m - 1)
    out: dict[int, dict] = {i: defaultdict(Fraction) for i in positions}
    for word, p in law.items():
        for i in positions:
            out[i][word[i - 1 : i - 1 + m]] += p
    return {i: dict(d) for i, d in out.items()}


def stationary_mean_exact(schedule: PerplexitySchedule, m: int, n: int) -> dict[tuple, Fraction]:
    """Average of the window laws over the 2^n offsets of the first level-n block."""
    if m > 1 << n:
        raise ValueError("need m <= 2^n")
    laws = window_laws(schedule, m, range(1 << n, 2 << n))
    out: dict = defaultdict(Fraction)
    for d in laws.values():
        for w, p in d.items():
            out[w] += p / (1 << n)
    return dict(out)
