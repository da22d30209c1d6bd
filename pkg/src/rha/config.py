"""Run configuration: key = value files, schedule specs and overrides."""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .schedule import (
    PerplexitySchedule,
    ScheduleError,
    make_constant_schedule,
    make_explicit_schedule,
    make_hilberg_schedule,
    make_squaring_schedule,
)


class ConfigError(ValueError):
    pass


_SCHEDULES = {
    "hilberg": (make_hilberg_schedule, ("beta", "n_max")),
    "explicit": (make_explicit_schedule, ("values",)),
    "constant": (make_constant_schedule, ("k", "n_max")),
    "squaring": (make_squaring_schedule, ("k0", "n_max")),
}


def parse_schedule(spec: str) -> PerplexitySchedule:
    """``hilberg(beta=0.5, n_max=24)``, ``explicit([2,4,7])``, ``constant(k=3, n_max=10)``, ``squaring(k0=2, n_max=8)``."""
    try:
        node = ast.parse(spec.strip(), mode="eval").body
    except SyntaxError as e:
        raise ConfigError(f"bad schedule spec {spec!r}") from e
    if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name) or node.func.id not in _SCHEDULES:
        raise ConfigError(f"schedule must be one of {sorted(_SCHEDULES)}(...), got {spec!r}")
    fn, names = _SCHEDULES[node.func.id]
    try:
        args = [ast.literal_eval(a) for a in node.args]
        kwargs = {k.arg: ast.literal_eval(k.value) for k in node.keywords}
    except ValueError as e:
        raise ConfigError(f"schedule arguments must be literals: {spec!r}") from e
    for name, v in zip(names, args):
        kwargs.setdefault(name, v)
    unknown = set(kwargs) - set(names) - {"exact_threshold"}
    if unknown:
        raise ConfigError(f"unknown schedule arguments {sorted(unknown)}")
    try:
        return fn(**kwargs)
    except (TypeError, ScheduleError) as e:
        raise ConfigError(str(e)) from e


def parse_grid(text: str) -> tuple[int, ...]:
    """``[64, 128, 256]`` or ``pow2(6, 14)`` for 2^6 .. 2^14."""
    text = text.strip()
    if not text:
        return ()
    if text.startswith("pow2"):
        try:
            lo, hi = ast.literal_eval(text[4:])
        except (ValueError, SyntaxError) as e:
            raise ConfigError(f"bad grid {text!r}") from e
        return tuple(2**e for e in range(int(lo), int(hi) + 1))
    try:
        v = ast.literal_eval(text)
    except (ValueError, SyntaxError) as e:
        raise ConfigError(f"bad grid {text!r}") from e
    if isinstance(v, int):
        v = [v]
    return tuple(int(x) for x in v)


@dataclass(frozen=True)
class RunConfig:
    schedule: str = "hilberg(beta=0.5, n_max=24)"
    seed: int = 0
    prefix_log2: int = 16
    m_grid: tuple[int, ...] = tuple(2**e for e in range(6, 9))
    repetitions: int = 1
    out: str | None = None
    options: dict = field(default_factory=dict)

    def build_schedule(self) -> PerplexitySchedule:
        return parse_schedule(self.schedule)

    def option(self, key: str, default=None):
        return self.options.get(key, default)

    def int_option(self, key: str, default: int) -> int:
        v = self.options.get(key, default)
        try:
            return int(v)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key} must be an integer, got {v!r}") from e

    def validate(self) -> "RunConfig":
        s = self.build_schedule()
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.prefix_log2 < 0:
            raise ConfigError("prefix_log2 must be non-negative")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be positive")
        if list(self.m_grid) != sorted(self.m_grid):
            raise ConfigError("m_grid must be sorted ascending")
        if any(m < 1 for m in self.m_grid):
            raise ConfigError("m_grid entries must be positive")
        if self.m_grid and self.m_grid[-1] > 2**self.prefix_log2:
            raise ConfigError("m_grid exceeds the prefix length")
        top = max((int(math.log2(m)) for m in self.m_grid), default=0)
        if top > s.n_max:
            raise ConfigError(f"m_grid reaches level {top} above the schedule's n_max={s.n_max}")
        return self

    def to_text(self) -> str:
        lines = [
            f"schedule = {self.schedule}",
            f"seed = {self.seed}",
            f"prefix_log2 = {self.prefix_log2}",
            "m_grid = [" + ", ".join(map(str, self.m_grid)) + "]",
            f"repetitions = {self.repetitions}",
        ]
        lines += [f"{k} = {v}" for k, v in sorted(self.options.items())]
        return "\n".join(lines) + "\n"


def _int(key: str, v: str) -> int:
    try:
        return int(v, 0)
    except ValueError as e:
        raise ConfigError(f"{key} must be an integer, got {v!r}") from e


def apply_pairs(cfg: RunConfig, pairs: dict[str, str]) -> RunConfig:
    kw: dict = {}
    opts = dict(cfg.options)
    for k, v in pairs.items():
        v = v.strip()
        if k == "schedule":
            kw[k] = v
        elif k in ("seed", "prefix_log2", "repetitions"):
            kw[k] = _int(k, v)
        elif k == "m_grid":
            kw[k] = parse_grid(v)
        elif k == "out":
            kw[k] = v
        else:
            opts[k] = v
    return replace(cfg, options=opts, **kw)


def parse_pairs(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {p}: {e}") from e
        cfg = apply_pairs(cfg, parse_pairs(text, str(p)))
    if overrides:
        pairs = {}
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            k, v = item.split("=", 1)
            pairs[k.strip()] = v
        cfg = apply_pairs(cfg, pairs)
    return cfg
