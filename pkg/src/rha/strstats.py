"""Maximal repetition, subword complexity and LZ78 statistics of symbol sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import pydivsufsort

from .sampler import SymbolSequence


def _as_array(seq) -> np.ndarray:
    if isinstance(seq, SymbolSequence):
        return seq.symbols
    a = np.asarray(seq)
    if a.dtype.kind not in "iu":
        # arbitrary hashable symbols, e.g. characters
        _, a = np.unique(np.asarray(list(seq)), return_inverse=True)
    return a.reshape(-1)


@dataclass(frozen=True)
class SuffixStructure:
    """Suffix array plus LCP; ``lcp[i]`` compares ranks i-1 and i, and ``lcp[0] = 0``."""

    sequence: np.ndarray
    suffix_array: np.ndarray
    lcp: np.ndarray

    @classmethod
    def build(cls, seq) -> "SuffixStructure":
        s = _as_array(seq)
        if s.dtype.kind == "u" and s.dtype.itemsize > 4 or s.dtype.kind == "i" and s.dtype.itemsize < 4:
            s = s.astype(np.int64)
        if s.size == 0:
            e = np.zeros(0, dtype=np.int64)
            return cls(s, e, e)
        sa = pydivsufsort.divsufsort(s)
        raw = pydivsufsort.kasai(s, sa)
        lcp = np.empty_like(raw)
        lcp[0] = 0
        lcp[1:] = raw[:-1]
        return cls(s, sa, lcp)

    def __len__(self) -> int:
        return int(self.sequence.size)


def _structure(seq) -> SuffixStructure:
    return seq if isinstance(seq, SuffixStructure) else SuffixStructure.build(seq)


def maximal_repetition(seq) -> int:
    """Largest m such that some length-m word occurs twice (overlaps allowed)."""
    st = _structure(seq)
    return int(st.lcp.max()) if len(st) > 1 else 0


@dataclass(frozen=True)
class SubwordProfile:
    """``counts[m]`` distinct length-m substrings for 0 <= m <= m_max (``counts[0] = 1``)."""

    length: int
    counts: np.ndarray

    @property
    def m_max(self) -> int:
        return int(self.counts.size) - 1

    def count(self, m: int) -> int:
        return int(self.counts[m])

    def h_top(self, m: int) -> float:
        return math.log(self.counts[m])

    def h_top_array(self) -> np.ndarray:
        return np.log(self.counts[1:].astype(float))


def subword_profile(seq, m_max: int | None = None) -> SubwordProfile:
    """Distinct-substring counts from one histogram pass over the LCP array."""
    st = _structure(seq)
    n = len(st)
    if n <= 1:
        return SubwordProfile(n, np.ones(n + 1, dtype=np.int64))
    if m_max is None:
        m_max = n
    if not 1 <= m_max <= n:
        raise ValueError("need 1 <= m_max <= length")
    hist = np.bincount(np.minimum(st.lcp, m_max), minlength=m_max + 1)
    at_least = np.cumsum(hist[::-1])[::-1]  # at_least[m] = #{i: lcp[i] >= m}
    m = np.arange(m_max + 1)
    counts = (n - m + 1) - at_least
    counts[0] = 1
    return SubwordProfile(n, counts.astype(np.int64))


class DualityCheck(NamedTuple):
    implied_repeat: bool
    consistent: bool


def check_duality(seq, m: int, *, profile: SubwordProfile | None = None, L: int | None = None) -> DualityCheck:
    """Test that fewer than N-m+1 distinct m-words forces a repeat of length m."""
    st = None
    if profile is None or L is None:
        st = _structure(seq)
    n = len(st) if st is not None else profile.length
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= length")
    if profile is None:
        profile = subword_profile(st, m)
    if L is None:
        L = maximal_repetition(st)
    # h_top(m) < ln(N-m+1) compared on the integer counts
    implied = profile.count(m) < n - m + 1
    return DualityCheck(implied, not (implied and L < m))


def duality_violations(seq, m_max: int | None = None) -> list[int]:
    """Every m <= m_max at which ``check_duality`` would report inconsistency."""
    st = _structure(seq)
    n = len(st)
    if n == 0:
        return []
    m_max = n if m_max is None else min(m_max, n)
    prof = subword_profile(st, m_max)
    L = maximal_repetition(st)
    m = np.arange(1, m_max + 1)
    bad = (prof.counts[1:] < n - m + 1) & (L < m)
    return m[bad].tolist()


class LZ78Parse(NamedTuple):
    phrase_count: int
    code_length_bound: float  # V ln V, nats
    encoded_length_bits: int
    max_phrase_length: int
    length: int


def _alphabet(seq, alphabet_size):
    if alphabet_size is not None:
        return alphabet_size
    if isinstance(seq, SymbolSequence):
        return seq.alphabet_size
    a = _as_array(seq)
    return int(a.max()) + 1 if a.size else 1


def lz78_checkpoints(seq, checkpoints: Iterable[int], alphabet_size: int | None = None) -> list[LZ78Parse]:
    """LZ78 statistics of several prefixes in one incremental pass.

    Phrase t costs ceil(log2 t) pointer bits plus ceil(log2 k) symbol bits;
    a trailing incomplete phrase is charged the same way.
    """
    k = _alphabet(seq, alphabet_size)
    sym_bits = (k - 1).bit_length()
    syms = _as_array(seq).tolist()
    base = max(syms, default=0) + 1
    marks = sorted(set(int(c) for c in checkpoints))
    if marks and (marks[0] < 0 or marks[-1] > len(syms)):
        raise ValueError("checkpoint outside the sequence")
    out: list[LZ78Parse] = []
    trie: dict[int, int] = {}
    node = 0
    nodes = 1
    V = 0
    bits = 0
    longest = 0
    cur = 0
    mi = 0
    get = trie.get

    def snapshot(pos):
        v, b, lng = V, bits, longest
        if cur:
            v += 1
            b += (v - 1).bit_length() + sym_bits
            lng = max(lng, cur)
        out.append(LZ78Parse(v, v * math.log(v) if v else 0.0, b, lng, pos))

    while mi < len(marks) and marks[mi] == 0:
        snapshot(0)
        mi += 1
    for pos, s in enumerate(syms, 1):
        key = node * base + s
        child = get(key)
        cur += 1
        if child is None:
            trie[key] = nodes
            nodes += 1
            V += 1
            bits += (V - 1).bit_length() + sym_bits
            if cur > longest:
                longest = cur
            node = 0
            cur = 0
        else:
            node = child
        if mi < len(marks) and pos == marks[mi]:
            snapshot(pos)
            mi += 1
    return out


def lz78_parse(seq, alphabet_size: int | None = None) -> LZ78Parse:
    n = len(_as_array(seq))
    return lz78_checkpoints(seq, [n], alphabet_size)[0]


def lz78_phrases(seq) -> list[tuple]:
    """The phrases themselves, in the input's own symbols; for small inputs and tests."""
    syms = seq.symbols.tolist() if isinstance(seq, SymbolSequence) else list(seq)
    seen = {()}
    out = []
    cur: tuple = ()
    for s in syms:
        cur = cur + (s,)
        if cur not in seen:
            seen.add(cur)
            out.append(cur)
            cur = ()
    if cur:
        out.append(cur)
    return out
