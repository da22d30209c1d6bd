from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from itertools import combinations, product

import pytest

# criterion -> list of (ok, detail), one entry per recorded part
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = defaultdict(list)


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion].append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p[0] for p in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}  {detail}")


def naive_prefix_law(values: list[int], prefix_len: int) -> dict[tuple, Fraction]:
    """Brute force over every sorted pool and every C_n, straight from the definition.

    Pools are lexicographic k_n-subsets of {1..k}^2 in lexicographic order;
    block j of level n is the concatenation of the blocks named by pair j.
    """
    k = lambda n: values[min(n, len(values) - 1)]
    top = 0
    while (2 ** (top + 1)) - 1 < prefix_len:
        top += 1
    pools = []
    for n in range(1, top + 1):
        pairs = [(a, b) for a in range(1, k(n - 1) + 1) for b in range(1, k(n - 1) + 1)]
        pools.append(list(combinations(pairs, k(n))))
    cs = [range(1, k(n) + 1) for n in range(top + 1)]
    law: dict = defaultdict(int)
    total = 0
    for grammar in product(*pools):
        blocks = [[(j,) for j in range(1, k(0) + 1)]]
        for pool in grammar:
            lower = blocks[-1]
            blocks.append([lower[a - 1] + lower[b - 1] for a, b in pool])
        for c in product(*cs):
            x: tuple = ()
            for n, cn in enumerate(c):
                x += blocks[n][cn - 1]
            law[x[:prefix_len]] += 1
            total += 1
    return {w: Fraction(v, total) for w, v in law.items()}


@pytest.fixture(scope="session")
def naive_law():
    return naive_prefix_law


def brute_L(s) -> int:
    s = list(s)
    n = len(s)
    best = 0
    for i in range(n):
        for j in range(i + 1, n):
            t = 0
            while j + t < n and s[i + t] == s[j + t]:
                t += 1
            best = max(best, t)
    return best


def brute_counts(s, m: int) -> int:
    s = tuple(s)
    return len({s[i : i + m] for i in range(len(s) - m + 1)})


def tv(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)
