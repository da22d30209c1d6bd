"""Counter-based random streams keyed by labels derived from one master seed.

Word ``t`` of a stream with key ``k`` is ``splitmix64(k + t * GAMMA)``, so any
draw is a pure function of (key, counter). ``UniformStream`` turns words
into exact uniform integers by rejection; the numpy and pure-Python paths
produce identical sequences.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# numpy path is used for bounds up to this size (one word per attempt)
_NUMPY_MAX_BOUND = 1 << 62
_NUMPY_MIN_BATCH = 32


def derive_key(seed: int, *labels: object) -> int:
    """64-bit key for a labeled sub-stream of ``seed``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed) & MASK64).encode())
    for lab in labels:
        h.update(b"\x1f")
        h.update(repr(lab).encode())
    return int.from_bytes(h.digest(), "little")


def mix64(x: int) -> int:
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def word(key: int, counter: int) -> int:
    return mix64(key + counter * GAMMA)


def words(key: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` as a uint64 array."""
    with np.errstate(over="ignore"):
        ctr = np.arange(start, start + count, dtype=np.uint64)
        z = np.uint64(key) + ctr * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))


def _n_words(bound: int) -> int:
    return (bound - 1).bit_length() // 64 + 1


class UniformStream:
    """Sequential exact-uniform integers from a counter-based word stream."""

    __slots__ = ("key", "pos")

    def __init__(self, key: int, pos: int = 0):
        self.key = key
        self.pos = pos

    def below(self, bound: int) -> int:
        """One uniform integer in [0, bound)."""
        if bound < 1:
            raise ValueError("bound must be positive")
        w = _n_words(bound)
        span = 1 << (64 * w)
        limit = span - span % bound
        key, pos = self.key, self.pos
        while True:
            u = 0
            for _ in range(w):
                u = (u << 64) | mix64(key + pos * GAMMA)
                pos += 1
            if u < limit:
                self.pos = pos
                return u % bound

    def tag(self) -> int:
        """A 128-bit label, used where the index space is too large to draw from."""
        hi = word(self.key, self.pos)
        lo = word(self.key, self.pos + 1)
        self.pos += 2
        return (hi << 64) | lo

    def below_many(self, bound: int, count: int) -> np.ndarray:
        """``count`` sequential draws in [0, bound) as int64, same as repeated ``below``."""
        if count < _NUMPY_MIN_BATCH or bound > _NUMPY_MAX_BOUND:
            return np.array([self.below(bound) for _ in range(count)], dtype=np.int64)
        limit = (1 << 64) - (1 << 64) % bound
        out = np.empty(count, dtype=np.int64)
        filled = 0
        while filled < count:
            need = count - filled
            chunk = need + need // 8 + 16
            u = words(self.key, self.pos, chunk)
            if limit < (1 << 64):
                ok = np.flatnonzero(u < np.uint64(limit))
            else:
                ok = np.arange(chunk)
            take = ok[:need]
            out[filled : filled + take.size] = (u[take] % np.uint64(bound)).astype(np.int64)
            filled += take.size
            self.pos += int(take[-1]) + 1 if take.size == need else chunk
        return out
