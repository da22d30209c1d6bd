"""Monte-Carlo and exact estimators over RHA realizations, and exponent fits."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import oracle
from .rng import derive_key
from .sampler import realize, sample_block
from .schedule import PerplexitySchedule


@dataclass
class EmpiricalDistribution:
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    def add(self, outcome, times: int = 1) -> None:
        self.counts[outcome] += times
        self.total += times

    def update(self, outcomes: Iterable) -> None:
        for o in outcomes:
            self.add(o)

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        return EmpiricalDistribution(self.counts + other.counts, self.total + other.total)

    def prob(self, outcome) -> float:
        return self.counts.get(outcome, 0) / self.total if self.total else 0.0

    def probabilities(self) -> dict:
        t = self.total
        return {k: c / t for k, c in self.counts.items()}

    @property
    def support(self) -> int:
        return sum(1 for c in self.counts.values() if c)

    def entropy(self) -> float:
        if not self.total:
            return 0.0
        p = np.fromiter(self.counts.values(), dtype=float) / self.total
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())

    def tv(self, reference: dict) -> float:
        """Total variation distance to an exact law given as outcome -> probability."""
        keys = set(self.counts) | set(reference)
        return 0.5 * sum(abs(self.prob(k) - float(reference.get(k, 0))) for k in keys)

    def chi_square(self, reference: dict) -> tuple[float, int]:
        """Pearson statistic against ``reference`` and its degrees of freedom."""
        stat = 0.0
        for k, p in reference.items():
            e = self.total * float(p)
            if e > 0:
                stat += (self.counts.get(k, 0) - e) ** 2 / e
        extra = sum(c for k, c in self.counts.items() if float(reference.get(k, 0)) == 0)
        if extra:
            stat = math.inf
        return stat, max(1, sum(1 for p in reference.values() if float(p) > 0) - 1)


def chi_square_ok(stat: float, dof: int, sigmas: float = 3.0) -> bool:
    """Statistic within ``sigmas`` standard deviations of its mean dof."""
    return stat <= dof + sigmas * math.sqrt(2 * dof)


def _sub_seed(seed: int, label: str, *more) -> int:
    return derive_key(seed, label, *more)


def _run_chunks(fn: Callable, args: list, jobs: int) -> list:
    """Apply ``fn`` to each argument; results come back in argument order."""
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, args))


def _chunks(R: int, jobs: int) -> list[range]:
    n = max(1, min(jobs, R))
    edges = np.linspace(0, R, n + 1).astype(int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:])]


# block entropy


def _block_tally(arg) -> Counter:
    schedule, n, seed, idx = arg
    c: Counter = Counter()
    for i in idx:
        c[sample_block(schedule, n, _sub_seed(seed, "block", n, i)).symbols.tobytes()] += 1
    return c


def sample_block_distribution(schedule: PerplexitySchedule, n: int, R: int, seed: int, jobs: int = 1) -> EmpiricalDistribution:
    parts = _run_chunks(_block_tally, [(schedule, n, seed, r) for r in _chunks(R, jobs)], jobs)
    out = EmpiricalDistribution()
    for p in parts:
        out = out.merge(EmpiricalDistribution(p, sum(p.values())))
    return out


def plugin_block_entropy(
    schedule: PerplexitySchedule, n: int, R: int, seed: int, jobs: int = 1
) -> tuple[float, float]:
    """Plug-in entropy of R independent level-n blocks and the Miller-Madow term (S-1)/(2R)."""
    if R < 100:
        raise ValueError("need R >= 100")
    d = sample_block_distribution(schedule, n, R, seed, jobs)
    return d.entropy(), (d.support - 1) / (2 * R)


# K-pair uniformity


def _kpair_tally(arg) -> Counter:
    schedule, n, j, seed, idx = arg
    length = (j + 1) << n
    c: Counter = Counter()
    for i in idx:
        t = realize(schedule, length, _sub_seed(seed, "kpair", n, j, i)).tilings[n]
        c[(int(t[j - 1]) + 1, int(t[j]) + 1)] += 1
    return c


def kpair_distribution(schedule: PerplexitySchedule, n: int, j: int, R: int, seed: int, jobs: int = 1) -> EmpiricalDistribution:
    """Empirical law of (K_{n,j}, K_{n,j+1}) over R realizations (1-based labels)."""
    if j < 1:
        raise ValueError("j is 1-based")
    parts = _run_chunks(_kpair_tally, [(schedule, n, j, seed, r) for r in _chunks(R, jobs)], jobs)
    out = EmpiricalDistribution()
    for p in parts:
        out = out.merge(EmpiricalDistribution(p, sum(p.values())))
    return out


def _kpair_multi_tally(arg) -> dict:
    schedule, ns, js, seed, idx = arg
    length = (max(js) + 1) << max(ns)
    out = {(n, j): Counter() for n in ns for j in js}
    for i in idx:
        til = realize(schedule, length, _sub_seed(seed, "kpairs", i)).tilings
        for n in ns:
            t = til[n]
            for j in js:
                out[(n, j)][(int(t[j - 1]) + 1, int(t[j]) + 1)] += 1
    return out


def kpair_distributions(
    schedule: PerplexitySchedule, ns, js, R: int, seed: int, jobs: int = 1
) -> dict[tuple[int, int], EmpiricalDistribution]:
    """Laws of (K_{n,j}, K_{n,j+1}) for every (n, j), all read off the same R realizations."""
    ns, js = sorted(ns), sorted(js)
    if js[0] < 1:
        raise ValueError("j is 1-based")
    parts = _run_chunks(_kpair_multi_tally, [(schedule, ns, js, seed, r) for r in _chunks(R, jobs)], jobs)
    out = {}
    for key in parts[0]:
        c = sum((p[key] for p in parts), Counter())
        out[key] = EmpiricalDistribution(c, sum(c.values()))
    return out


def uniform_pairs(k: int) -> dict:
    return {(a, b): Fraction(1, k * k) for a in range(1, k + 1) for b in range(1, k + 1)}


def kpair_uniformity(
    schedule: PerplexitySchedule,
    n: int,
    j: int,
    mode: str = "oracle",
    R: int = 10**5,
    seed: int = 0,
    jobs: int = 1,
) -> float:
    """Total variation from (K_{n,j}, K_{n,j+1}) to the uniform law on {1..k_n}^2."""
    k = schedule.k_int(n)
    ref = uniform_pairs(k)
    if mode == "oracle":
        law = oracle.process_law(schedule, n, j + 1).map(lambda t: (t[j - 1] + 1, t[j] + 1))
        return float(sum(abs(law.prob(key) - p) for key, p in ref.items()) / 2)
    if mode == "mc":
        return kpair_distribution(schedule, n, j, R, seed, jobs).tv(ref)
    raise ValueError(f"unknown mode {mode!r}")


# no-repeat events


def _no_repeat_tally(arg) -> int:
    schedule, n, m, seed, idx = arg
    start, size = (1 << n) - 1, 1 << m
    hits = 0
    for i in idx:
        x = realize(schedule, (2 << n) - 1, _sub_seed(seed, "norepeat", n, i)).sequence().symbols
        blocks = x[start:].reshape(-1, size)
        hits += len({b.tobytes() for b in blocks}) == blocks.shape[0]
    return hits


def no_repeat_frequency(schedule: PerplexitySchedule, n: int, m: int, R: int, seed: int, jobs: int = 1) -> float:
    """Fraction of realizations whose first level-n block splits into distinct level-m blocks."""
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    return sum(_run_chunks(_no_repeat_tally, [(schedule, n, m, seed, r) for r in _chunks(R, jobs)], jobs)) / R


# stationary mean and periodicity


def _window_tally(arg) -> Counter:
    schedule, m, n, seed, idx = arg
    start = (1 << n) - 1
    length = start + (1 << n) - 1 + m
    c: Counter = Counter()
    for i in idx:
        x = realize(schedule, length, _sub_seed(seed, "window", m, n, i)).sequence().symbols
        for j in range(1 << n):
            c[tuple(x[start + j : start + j + m].tolist())] += 1
    return c


def stationary_mean_block(
    schedule: PerplexitySchedule, m: int, n: int, R: int, seed: int, jobs: int = 1
) -> EmpiricalDistribution:
    """Law of the length-m window at a uniform offset inside the first full level-n block.

    Each realization contributes all 2^n offsets, so ``total = R * 2^n``.
    """
    if m > 1 << n:
        raise ValueError("need m <= 2^n")
    if m < 1:
        raise ValueError("need m >= 1")
    parts = _run_chunks(_window_tally, [(schedule, m, n, seed, r) for r in _chunks(R, jobs)], jobs)
    out = EmpiricalDistribution()
    for p in parts:
        out = out.merge(EmpiricalDistribution(p, sum(p.values())))
    return out


def default_positions(n: int) -> range:
    """Two full periods of 1-based positions starting at the first level-n block."""
    return range(1 << n, 3 << n)


@dataclass(frozen=True)
class PeriodicityResult:
    discrepancy: float
    threshold: float  # 3-sigma Monte-Carlo band; 0 in oracle mode
    worst: tuple | None

    @property
    def ok(self) -> bool:
        return self.discrepancy <= self.threshold


def _position_tally(arg) -> dict:
    schedule, m, positions, seed, idx = arg
    length = max(positions) + m - 1
    out: dict = {i: Counter() for i in positions}
    for r in idx:
        x = realize(schedule, length, _sub_seed(seed, "period", m, r)).sequence().symbols
        for i in positions:
            out[i][tuple(x[i - 1 : i - 1 + m].tolist())] += 1
    return out


def periodicity_check(
    schedule: PerplexitySchedule,
    m: int,
    n: int,
    i_range: Sequence[int] | None = None,
    R: int = 10**4,
    seed: int = 0,
    mode: str = "mc",
    jobs: int = 1,
) -> PeriodicityResult:
    """max |P(X_{i:i+m-1} = x) - P(X_{i':i'+m-1} = x)| over i = i' mod 2^n.

    Positions are 1-based and must start at or after the first level-n block
    (position 2^n), where windows lie within two consecutive level-n blocks.
    """
    if m > 1 << n:
        raise ValueError("need m <= 2^n")
    positions = list(default_positions(n) if i_range is None else i_range)
    if min(positions) < 1 << n:
        raise ValueError("positions must be at least 2^n")
    period = 1 << n
    if mode == "oracle":
        probs = oracle.window_laws(schedule, m, positions)
        best, worst = Fraction(0), None
        for a in positions:
            for b in positions:
                if b <= a or (b - a) % period:
                    continue
                for w in set(probs[a]) | set(probs[b]):
                    d = abs(probs[a].get(w, 0) - probs[b].get(w, 0))
                    if d > best:
                        best, worst = d, (a, b, w)
        return PeriodicityResult(float(best), 0.0, worst)
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    parts = _run_chunks(_position_tally, [(schedule, m, positions, seed, r) for r in _chunks(R, jobs)], jobs)
    tallies = {i: Counter() for i in positions}
    for p in parts:
        for i in positions:
            tallies[i] += p[i]
    best_excess, out = -math.inf, None
    for a in positions:
        for b in positions:
            if b <= a or (b - a) % period:
                continue
            for w in set(tallies[a]) | set(tallies[b]):
                pa, pb = tallies[a][w] / R, tallies[b][w] / R
                d = abs(pa - pb)
                # sd of a difference of two correlated means is at most the sum of sds
                band = 3 * (math.sqrt(pa * (1 - pa)) + math.sqrt(pb * (1 - pb))) / math.sqrt(R)
                if d - band > best_excess:
                    best_excess, out = d - band, (d, band, (a, b, w))
    if out is None:
        return PeriodicityResult(0.0, 0.0, None)
    return PeriodicityResult(out[0], out[1], out[2])


# scaling-law fits


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ScalingFit:
    points: tuple
    model: str  # "power_law" | "hyperlog"
    exponent_hat: float
    intercept: float
    r2: float
    fit_range: tuple


def fit_exponent(points: Iterable[tuple[float, float]], model: str = "power_law") -> ScalingFit:
    """Least-squares slope of ln y on ln x (power_law) or on ln ln x (hyperlog)."""
    pts = tuple((float(x), float(y)) for x, y in points)
    if len(pts) < 4:
        raise FitError("need at least 4 points")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(x <= 0) or np.any(y <= 0):
        raise FitError("coordinates must be positive")
    if model == "power_law":
        u = np.log(x)
    elif model == "hyperlog":
        if np.any(x <= 1):
            raise FitError("hyperlog fits need x > 1")
        u = np.log(np.log(x))
    else:
        raise FitError(f"unknown model {model!r}")
    v = np.log(y)
    du = u - u.mean()
    sxx = float(du @ du)
    if sxx <= 1e-300 * max(1.0, float(u @ u)):
        raise FitError("x has zero variance")
    slope = float(du @ (v - v.mean())) / sxx
    icpt = float(v.mean() - slope * u.mean())
    resid = v - (icpt + slope * u)
    sst = float(((v - v.mean()) ** 2).sum())
    r2 = 1.0 if sst == 0 else min(1.0, max(0.0, 1.0 - float(resid @ resid) / sst))
    return ScalingFit(pts, model, slope, icpt, r2, (float(x.min()), float(x.max())))
