"""Lazy sampling of RHA realizations.

The pool at level n is a uniform k_n-combination of pairs from
{0..k_{n-1}-1}^2, read at uniformly random indices. Relabeling the indices
of every level by independent uniform permutations leaves the law of the
output string unchanged, so the pool may be realized as a uniform random
injection j -> (L_j, R_j): each newly touched index draws a pair uniformly
among the pairs not yet used at that level. Only indices reachable from the
emitted symbols are touched.

Indices are 0-based labels throughout; emitted symbols are 1-based.
Every level owns one counter-based stream and new indices consume it in
order of first occurrence along the sequence, so a shorter prefix is
always a prefix of a longer one under the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .rng import UniformStream, derive_key
from .schedule import PerplexitySchedule

TAG_LN_LIMIT = 128 * math.log(2)  # levels with k above 2^128 use 128-bit tags
DEFAULT_COLLISION_THRESHOLD = 2**128
DEFAULT_COLLISION_BUDGET = 2.0**-40
DEFAULT_MAX_SYMBOLS = 2**26
_INT64_LN_LIMIT = 62 * math.log(2)
_SMALL = 48


class BudgetExceeded(RuntimeError):
    pass


class PoolExhausted(RuntimeError):
    pass


class BlockRef(NamedTuple):
    level: int
    index: int


@dataclass
class SymbolSequence:
    alphabet_size: int
    symbols: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __post_init__(self):
        s = self.symbols
        if s.size and (int(s.min()) < 1 or int(s.max()) > self.alphabet_size):
            raise ValueError("symbol out of range")


class _Level:
    __slots__ = ("pairs", "used", "stream", "exact_lower", "k_lower", "pool", "n_touched")

    def __init__(self, stream, k_lower, pool, dedup):
        self.pairs: dict[int, tuple[int, int]] = {}
        self.used: set[tuple[int, int]] | None = set() if dedup else None
        self.stream = stream
        self.k_lower = k_lower  # exact k_{n-1}, or None when level n-1 uses tags
        self.pool = pool  # exact k_n, or None for tags
        self.n_touched = 0


class LazyGrammar:
    """On-demand pair assignments (L_nj, R_nj) for one realization."""

    def __init__(
        self,
        schedule: PerplexitySchedule,
        seed: int,
        collision_mode_threshold: int = DEFAULT_COLLISION_THRESHOLD,
        collision_budget: float = DEFAULT_COLLISION_BUDGET,
    ):
        self.schedule = schedule
        self.seed = int(seed)
        self.collision_mode_threshold = collision_mode_threshold
        self.collision_budget_limit = collision_budget
        self._levels: dict[int, _Level] = {}
        self._exact: dict[int, int | None] = {}

    # index spaces

    def k_exact(self, n: int) -> int | None:
        """k_n when level n draws exact indices; None when it uses tags."""
        if n not in self._exact:
            if self.schedule.ln_k(n) > TAG_LN_LIMIT + 1.0:
                self._exact[n] = None
            else:
                k = self.schedule.k_int(n)
                self._exact[n] = k if k is not None and k <= 2**128 else None
        return self._exact[n]

    def index_dtype(self, n: int):
        k = self.k_exact(n)
        return np.int64 if k is not None and k <= 2**62 else object

    def draw_index(self, n: int, stream: UniformStream) -> int:
        k = self.k_exact(n)
        return stream.below(k) if k is not None else stream.tag()

    def _level(self, n: int) -> _Level:
        lev = self._levels.get(n)
        if lev is None:
            k_lo = self.k_exact(n - 1)
            dedup = k_lo is not None and k_lo * k_lo <= self.collision_mode_threshold
            stream = UniformStream(derive_key(self.seed, "pairs", n))
            lev = self._levels[n] = _Level(stream, k_lo, self.k_exact(n), dedup)
        return lev

    # pairs

    def pair(self, n: int, index: int) -> tuple[int, int]:
        lev = self._levels.get(n) or self._level(n)
        p = lev.pairs.get(index)
        if p is not None:
            return p
        if lev.pool is not None and not 0 <= index < lev.pool:
            raise IndexError(f"block index {index} outside level {n}")
        s = lev.stream
        k = lev.k_lower
        if lev.used is None:
            if k is None:
                p = (s.tag(), s.tag())
            else:
                p = (s.below(k), s.below(k))
        else:
            used = lev.used
            if len(used) >= k * k:
                raise PoolExhausted(f"level {n}: all {k * k} pairs already assigned")
            while True:
                p = (s.below(k), s.below(k))
                if p not in used:
                    break
            used.add(p)
        lev.pairs[index] = p
        lev.n_touched += 1
        return p

    def touched(self, n: int) -> int:
        lev = self._levels.get(n)
        return 0 if lev is None else lev.n_touched

    def collision_budget(self) -> float:
        """Upper bound on the total-variation cost of the undeduplicated levels."""
        total = 0.0
        for n, lev in self._levels.items():
            if lev.used is not None or lev.n_touched < 2:
                continue
            t = lev.n_touched
            ln_k_lo = self.schedule.ln_k(n - 1)
            # two touched indices receiving the same pair
            total += math.exp(2 * math.log(t) - 2 * ln_k_lo)
            if lev.k_lower is None:
                # tags hide coincidences of components the exact law allows
                total += math.exp(2 * math.log(2 * t) - ln_k_lo) + math.exp(2 * math.log(2 * t) - 128 * math.log(2))
        return total

    def check_budget(self) -> float:
        b = self.collision_budget()
        if b > self.collision_budget_limit:
            raise BudgetExceeded(f"collision budget {b:.3g} exceeds {self.collision_budget_limit:.3g}")
        return b

    def expand(self, n: int, ks) -> np.ndarray:
        """Level-(n-1) children of the level-n indices ``ks``, interleaved L, R."""
        dtype = self.index_dtype(n - 1)
        m = len(ks)
        if m < _SMALL:
            out = []
            pair = self.pair
            for x in ks:
                out.extend(pair(n, int(x)))
            return np.array(out, dtype=dtype)
        ks = np.asarray(ks)
        uniq, first, inv = np.unique(ks, return_index=True, return_inverse=True)
        left = np.empty(uniq.size, dtype=dtype)
        right = np.empty(uniq.size, dtype=dtype)
        pair = self.pair
        for pos in np.argsort(first, kind="stable").tolist():
            a, b = pair(n, int(uniq[pos]))
            left[pos] = a
            right[pos] = b
        inv = inv.reshape(-1)
        out = np.empty(2 * m, dtype=dtype)
        out[0::2] = left[inv]
        out[1::2] = right[inv]
        return out


def lazy_pair(grammar: LazyGrammar, n: int, block: BlockRef) -> tuple[BlockRef, BlockRef]:
    if block.level != n or n < 1:
        raise ValueError("block must sit at the requested level n >= 1")
    a, b = grammar.pair(n, block.index)
    return BlockRef(n - 1, a), BlockRef(n - 1, b)


@dataclass
class Realization:
    """Position tilings K_{l,1..w_l} for every level up to the top one used."""

    schedule: PerplexitySchedule
    seed: int
    length: int
    tilings: dict[int, np.ndarray]
    grammar: LazyGrammar
    collision_budget: float

    @property
    def top(self) -> int:
        return max(self.tilings)

    def sequence(self) -> SymbolSequence:
        syms = self.tilings[0] + 1
        k0 = self.schedule.k0
        syms = syms.astype(np.uint16 if k0 <= 0xFFFF else np.int64)
        return SymbolSequence(
            k0,
            syms,
            {"seed": self.seed, "schedule": self.schedule.spec_string(), "length": self.length},
        )


def tiling_widths(length: int) -> list[int]:
    """w_0 = length; w_l = ceil((w_{l-1} - 1) / 2) until the single top entry."""
    w = [length]
    while w[-1] > 1:
        w.append((w[-1]) // 2)  # ceil((w - 1) / 2) == w // 2
    return w


def _c_draw(grammar: LazyGrammar, n: int) -> int:
    return grammar.draw_index(n, UniformStream(derive_key(grammar.seed, "C", n)))


def realize(
    schedule: PerplexitySchedule,
    length: int,
    seed: int,
    *,
    max_symbols: int = DEFAULT_MAX_SYMBOLS,
    grammar: LazyGrammar | None = None,
) -> Realization:
    """Sample the first ``length`` symbols of X = Y^0_{C_0} Y^1_{C_1} ... lazily.

    The level-l tiling reads K_{l,1} = C_l followed by the children of the
    level-(l+1) tiling, so the prefix is built from the top level down.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    if length > max_symbols:
        raise BudgetExceeded(f"prefix of {length} symbols exceeds the budget of {max_symbols}")
    g = grammar or LazyGrammar(schedule, seed)
    widths = tiling_widths(length)
    top = len(widths) - 1
    tilings: dict[int, np.ndarray] = {top: np.array([_c_draw(g, top)], dtype=g.index_dtype(top))}
    for n in range(top, 0, -1):
        w = widths[n - 1]
        kids = g.expand(n, tilings[n])[: w - 1]
        head = np.array([_c_draw(g, n - 1)], dtype=kids.dtype)
        tilings[n - 1] = np.concatenate([head, kids])
    budget = g.check_budget()
    return Realization(schedule, int(seed), length, tilings, g, budget)


def sample_prefix(schedule: PerplexitySchedule, length: int, seed: int, **kw) -> SymbolSequence:
    return realize(schedule, length, seed, **kw).sequence()


def realize_block(schedule: PerplexitySchedule, n: int, seed: int) -> dict[int, np.ndarray]:
    """Tilings of one draw X^n_j = Y^n_K, K uniform, down to level 0."""
    if n > schedule.n_max:
        raise ValueError(f"level {n} above the schedule's n_max={schedule.n_max}")
    if (1 << n) > DEFAULT_MAX_SYMBOLS:
        raise BudgetExceeded(f"block of length 2^{n} exceeds the symbol budget")
    g = LazyGrammar(schedule, seed)
    root = g.draw_index(n, UniformStream(derive_key(seed, "block", n)))
    tilings = {n: np.array([root], dtype=g.index_dtype(n))}
    for lev in range(n, 0, -1):
        tilings[lev - 1] = g.expand(lev, tilings[lev])
    g.check_budget()
    return tilings


def sample_block(schedule: PerplexitySchedule, n: int, seed: int) -> SymbolSequence:
    syms = realize_block(schedule, n, seed)[0] + 1
    return SymbolSequence(
        schedule.k0,
        syms.astype(np.uint16 if schedule.k0 <= 0xFFFF else np.int64),
        {"seed": int(seed), "schedule": schedule.spec_string(), "length": 1 << n},
    )
