"""Experiment pipelines behind the CLI. Every output is a function of the config."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import subprocess
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import combinatorics as cb
from . import estimators as est
from . import oracle
from .config import ConfigError, RunConfig, parse_grid
from .rng import derive_key
from .sampler import realize
from .schedule import combinatorial_entropy_rate
from .strstats import SuffixStructure, lz78_checkpoints, maximal_repetition, subword_profile

SCHEMAS = {
    "repetition": 1,
    "lz": 1,
    "htop": 1,
    "bounds": 1,
    "fits": 1,
    "lz_ratio": 1,
    "lz_ratio_fit": 1,
    "stats": 1,
    "mc": 1,
    "oracle": 1,
}


def version_string() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=10,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from importlib.metadata import PackageNotFoundError, version

    try:
        return "artifact-" + version("artifact")
    except PackageNotFoundError:
        return "artifact-unknown"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    p = out_dir / name
    p.write_text(text)
    return p


def write_manifest(out_dir: Path, cfg: RunConfig, kind: str, files: dict[str, Path], extra: dict | None = None) -> Path:
    doc = {
        "kind": kind,
        "version": version_string(),
        "config": cfg.to_text(),
        "files": {k: {"name": p.name, "sha256": sha256_file(p)} for k, p in sorted(files.items())},
        "schemas": {k: SCHEMAS[k] for k in files if k in SCHEMAS},
    }
    if extra:
        doc.update(extra)
    _write(out_dir, "run.cfg", cfg.to_text())
    return _write(out_dir, "manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def config_from_manifest(path) -> RunConfig:
    from .config import apply_pairs, parse_pairs

    try:
        doc = json.loads(Path(path).read_text())
        return apply_pairs(RunConfig(), parse_pairs(doc["config"], str(path)))
    except (OSError, KeyError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot replay manifest {path}: {e}") from e


def _rep_seed(cfg: RunConfig, label: str, rep: int) -> int:
    return derive_key(cfg.seed, label, rep) if cfg.repetitions > 1 else cfg.seed


def _map(fn, args: list, jobs: int) -> list:
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, args))


# gen


def run_generate(cfg: RunConfig, out_dir, fmt: str = "sym16") -> tuple[Path, Path]:
    from .io import write_sequence

    cfg.validate()
    out_dir = Path(out_dir)
    s = cfg.build_schedule()
    real = realize(s, 2**cfg.prefix_log2, cfg.seed)
    seq = real.sequence()
    ext = "sym16" if fmt == "sym16" else "txt"
    out_dir.mkdir(parents=True, exist_ok=True)
    path = write_sequence(out_dir / f"sequence.{ext}", seq, fmt)
    man = write_manifest(
        out_dir,
        cfg,
        "generate",
        {"sequence": path},
        {
            "schedule": s.spec_string(),
            "seed": cfg.seed,
            "length": len(seq),
            "collision_budget": real.collision_budget,
            "top_level": real.top,
        },
    )
    return path, man


# stats


def stats_rows(seq, m_max: int | None = None) -> list[list]:
    st = SuffixStructure.build(seq)
    n = len(st)
    rows: list[list] = []
    if n:
        prof = subword_profile(st, m_max if m_max else n)
        rows = [[m, prof.count(m), prof.h_top(m)] for m in range(1, prof.m_max + 1)]
    lz = lz78_checkpoints(seq, [n], getattr(seq, "alphabet_size", None))[0]
    rows += [["L", maximal_repetition(st), None], ["V", lz.phrase_count, None], ["lz_bits", lz.encoded_length_bits, None]]
    return rows


STATS_HEADER = ["m", "count", "h_top_nats"]


# bounds


BOUNDS_HEADER = [
    "n",
    "lower_nats",
    "upper_nats",
    "minimizing_l",
    "maximizing_l",
    "proof_l",
    "p_no_repeat_proof_l",
    "p_no_repeat_proof_bound",
    "lower_error",
    "upper_error",
    "p_error",
    "conditional_nats",
    "grammar_nats_ln",
]


def bounds_rows(cfg: RunConfig) -> list[list]:
    s = cfg.build_schedule()
    n_lo = cfg.int_option("n_min", 0)
    n_hi = cfg.int_option("n_hi", s.n_max)
    if n_hi > s.n_max:
        raise ConfigError(f"n_hi={n_hi} above the schedule's n_max={s.n_max}")
    rows = []
    for n in range(n_lo, n_hi + 1):
        lo = cb.block_entropy_lower(s, n)
        up = cb.block_entropy_upper(s, n)
        if s.kind == "hilberg" and n >= 1 and cb.proof_l_lower(s.beta, n) <= n:
            pl = cb.proof_l_lower(s.beta, n)
        else:
            pl = lo.l
        p = cb.prob_no_repeat(s, n, pl)
        g = cb.grammar_entropy(s, n)
        rows.append(
            [
                n,
                lo.nats,
                up.nats,
                up.l,
                lo.l,
                pl,
                float(p.value),
                p.details["proof_bound"],
                lo.error,
                up.error,
                p.error,
                cb.conditional_block_entropy(s, n),
                g.value.ln_value,
            ]
        )
    return rows


# hilberg experiment


def _hilberg_one(arg):
    cfg, rep = arg
    s = cfg.build_schedule()
    N = cfg.prefix_log2
    seed = _rep_seed(cfg, "hilberg", rep)
    real = realize(s, 2**N, seed)
    seq = real.sequence()
    st = SuffixStructure.build(seq)
    mmax = max(cfg.m_grid)
    prof = subword_profile(st, mmax)
    htop = []
    for m in cfg.m_grid:
        lvl = int(math.log2(m))
        pow2 = (1 << lvl) == m
        cap = cb.top_entropy_cap(s, lvl) if pow2 else None
        wcap = cb.window_count_cap(s, lvl) if pow2 else None
        h = prof.h_top(m)
        htop.append([rep, m, prof.count(m), h, cap, None if cap is None else int(h <= cap), wcap])
    e_lo = cfg.int_option("prefix_min_log2", 4)
    grid = [2**e for e in range(e_lo, N + 1)]
    reps = []
    for length in grid:
        reps.append([rep, length, maximal_repetition(SuffixStructure.build(seq.symbols[:length]))])
    lz = [[rep, length, r.phrase_count, r.encoded_length_bits, r.code_length_bound, r.max_phrase_length]
          for length, r in zip(grid, lz78_checkpoints(seq, grid, s.k0))]
    fits = []
    fmin = cfg.int_option("fit_min", 2**6)
    fmax = cfg.int_option("fit_max", 2 ** (N // 2))
    pts = [(m, prof.h_top(m)) for m in cfg.m_grid if fmin <= m <= fmax and prof.h_top(m) > 0]
    fits.append(_fit_row(rep, "h_top", "power_law", pts))
    lmin = 2 ** cfg.int_option("l_fit_min_log2", e_lo)
    pts = [(length, L) for _, length, L in reps if length >= lmin and L > 0 and length > 2]
    fits.append(_fit_row(rep, "L", "hyperlog", pts))
    return htop, reps, lz, fits, real.collision_budget


def _fit_row(rep, quantity, model, pts):
    try:
        f = est.fit_exponent(pts, model)
        return [rep, quantity, model, f.exponent_hat, f.intercept, f.r2, f.fit_range[0], f.fit_range[1], len(pts)]
    except est.FitError:
        return [rep, quantity, model, None, None, None, None, None, len(pts)]


FITS_HEADER = ["rep", "quantity", "model", "exponent_hat", "intercept", "r2", "fit_min", "fit_max", "n_points"]


def run_hilberg_experiment(cfg: RunConfig, out_dir, jobs: int = 1) -> dict[str, Path]:
    """L, h_top, LZ78 and bound curves over a doubling grid, plus fitted exponents."""
    cfg.validate()
    if not cfg.m_grid:
        raise ConfigError("m_grid is empty")
    out_dir = Path(out_dir)
    results = _map(_hilberg_one, [(cfg, r) for r in range(cfg.repetitions)], jobs)
    htop, reps, lz, fits = [], [], [], []
    budgets = []
    for h, r, z, f, b in results:
        htop += h
        reps += r
        lz += z
        fits += f
        budgets.append(b)
    bcfg = cfg
    s = cfg.build_schedule()
    if "n_hi" not in cfg.options:
        bcfg = RunConfig(cfg.schedule, options={"n_hi": min(cfg.prefix_log2, s.n_max)})
    files = {
        "htop": _write(out_dir, "htop.csv", csv_text(["rep", "m", "count", "h_top_nats", "cap_nats", "within_cap", "window_cap_nats"], htop)),
        "repetition": _write(out_dir, "repetition.csv", csv_text(["rep", "prefix_len", "L"], reps)),
        "lz": _write(out_dir, "lz.csv", csv_text(["rep", "prefix_len", "V", "bits", "V_ln_V", "max_phrase"], lz)),
        "bounds": _write(out_dir, "bounds.csv", csv_text(BOUNDS_HEADER, bounds_rows(bcfg))),
        "fits": _write(out_dir, "fits.csv", csv_text(FITS_HEADER, fits)),
    }
    rate = combinatorial_entropy_rate(s)
    write_manifest(out_dir, cfg, "hilberg", files, {"collision_budgets": budgets, "entropy_rate": list(rate)})
    return files


# LZ ratio experiment


def _lz_one(arg):
    cfg, rep = arg
    s = cfg.build_schedule()
    N = cfg.prefix_log2
    seq = realize(s, 2**N, _rep_seed(cfg, "lz_ratio", rep)).sequence()
    grid = [2**e for e in range(cfg.int_option("lz_min_log2", 10), N + 1)]
    rows = []
    for m, r in zip(grid, lz78_checkpoints(seq, grid, s.k0)):
        lvl = int(math.log2(m))
        cap = cb.top_entropy_cap(s, lvl)
        nats = r.encoded_length_bits * math.log(2)
        shape = None
        if s.kind == "hilberg":
            b = s.beta
            shape = m ** (1 - b) / math.log(m) ** (1 / b - 1)
        rows.append([rep, m, r.phrase_count, r.encoded_length_bits, nats, cap, nats / cap if cap > 0 else None, shape])
    pts = [(row[1], row[6]) for row in rows if row[6]]
    fit = _fit_row(rep, "lz_ratio", "power_law", pts)
    growth = rows[-1][6] / rows[0][6] if len(rows) > 1 and rows[0][6] else None
    return rows, fit + [growth]


def run_lz_ratio_experiment(cfg: RunConfig, out_dir, jobs: int = 1) -> dict[str, Path]:
    """LZ78 code length over the 2 ln k cap, with its fitted growth exponent."""
    cfg.validate()
    out_dir = Path(out_dir)
    results = _map(_lz_one, [(cfg, r) for r in range(cfg.repetitions)], jobs)
    rows = [r for rr, _ in results for r in rr]
    fits = [f for _, f in results]
    header = ["rep", "m", "V", "bits", "lz_nats", "cap_nats", "ratio", "predicted_shape"]
    files = {
        "lz_ratio": _write(out_dir, "lz_ratio.csv", csv_text(header, rows)),
        "lz_ratio_fit": _write(out_dir, "lz_ratio_fit.csv", csv_text(FITS_HEADER + ["growth"], fits)),
    }
    write_manifest(out_dir, cfg, "lz_ratio", files)
    return files


# mc and oracle tables


MC_HEADER = ["quantity", "n_or_m", "estimate", "stderr", "oracle_value", "bound_value"]


def _levels(cfg: RunConfig, default: str) -> tuple[int, ...]:
    return parse_grid(str(cfg.option("levels", default)))


def _try(fn):
    try:
        return fn()
    except oracle.EnumerationBudgetExceeded:
        return None


def mc_rows(cfg: RunConfig, jobs: int = 1) -> list[list]:
    s = cfg.build_schedule()
    R = cfg.repetitions
    q = cfg.option("quantity", "kpair")
    rows = []
    if q == "kpair":
        for n in _levels(cfg, "[0, 1, 2]"):
            k = s.k_int(n)
            for j in parse_grid(str(cfg.option("js", "[1, 2, 3]"))):
                tv = est.kpair_uniformity(s, n, j, "mc", R, cfg.seed, jobs)
                ora = _try(lambda: est.kpair_uniformity(s, n, j, "oracle"))
                rows.append(["kpair_tv", f"n={n};j={j}", tv, math.sqrt(k * k / R) / 2, ora, 4 * math.sqrt(k * k / R)])
    elif q == "plugin_entropy":
        for n in _levels(cfg, "[0, 1]"):
            h, mm = est.plugin_block_entropy(s, n, R, cfg.seed, jobs)
            ora = _try(lambda: oracle.block_law(s, n, 0).entropy())
            rows.append(["plugin_entropy", n, h, mm, ora, cb.block_entropy_upper(s, n).nats])
    elif q == "no_repeat":
        for n in _levels(cfg, "[1, 2, 3]"):
            for m in range(n + 1):
                f = est.no_repeat_frequency(s, n, m, R, cfg.seed, jobs)
                p = cb.prob_no_repeat(s, n, m)
                rows.append(["no_repeat", f"n={n};m={m}", f, math.sqrt(f * (1 - f) / R), float(p.value), p.details["proof_bound"]])
    elif q == "stationary_mean":
        for n in _levels(cfg, "[1, 2]"):
            for m in cfg.m_grid:
                if m > 1 << n:
                    continue
                d = est.stationary_mean_block(s, m, n, R, cfg.seed, jobs)
                ex = _try(lambda: oracle.stationary_mean_exact(s, m, n))
                tv = d.tv(ex) if ex is not None else None
                rows.append(["stationary_mean_tv", f"n={n};m={m}", tv, math.sqrt(len(d.counts) / (R << n)), 0.0 if ex else None, None])
    elif q == "periodicity":
        for n in _levels(cfg, "[1, 2]"):
            for m in cfg.m_grid:
                if m > 1 << n:
                    continue
                r = est.periodicity_check(s, m, n, R=R, seed=cfg.seed, mode="mc", jobs=jobs)
                ora = _try(lambda: est.periodicity_check(s, m, n, mode="oracle").discrepancy)
                rows.append(["periodicity", f"n={n};m={m}", r.discrepancy, r.threshold / 3, ora, r.threshold])
    else:
        raise ConfigError(f"unknown mc quantity {q!r}")
    return rows


ORACLE_HEADER = ["quantity", "n", "index", "oracle_value", "formula_value"]


def oracle_rows(cfg: RunConfig) -> list[list]:
    s = cfg.build_schedule()
    rows = []
    for n in _levels(cfg, "[0, 1, 2]"):
        for j in parse_grid(str(cfg.option("js", "[1, 2, 3]"))):
            rows.append(["kpair_tv", n, j, est.kpair_uniformity(s, n, j, "oracle"), 0.0])
        for m in range(n + 1):
            law = oracle.block_law(s, n, m)
            p = law.event(lambda t: len(set(t)) == len(t))
            rows.append(["p_no_repeat", n, m, float(p), float(cb.prob_no_repeat(s, n, m).value)])
        h = oracle.block_law(s, n, 0).entropy()
        rows.append(["block_entropy", n, "lower", h, cb.block_entropy_lower(s, n).nats])
        rows.append(["block_entropy", n, "upper", h, cb.block_entropy_upper(s, n).nats])
    return rows
