"""Command line driver: ``rha {gen,stats,bounds,mc,experiment,oracle}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .config import ConfigError, load_config
from .io import read_sequence
from .oracle import EnumerationBudgetExceeded
from .sampler import BudgetExceeded, PoolExhausted
from .schedule import ScheduleError

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4


class InvariantViolation(RuntimeError):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--seed", type=int, help="master seed (u64)")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--format", choices=["csv"], default="csv")

    p = argparse.ArgumentParser(prog="rha", description="RHA process generator and analysis toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)
    g = sub.add_parser("gen", parents=[common], help="sample a prefix and write it with a manifest")
    g.add_argument("--seq-format", choices=["sym16", "text"], default="sym16")
    st = sub.add_parser("stats", parents=[common], help="repetition, subword and LZ78 statistics of a sequence file")
    st.add_argument("input", type=Path)
    st.add_argument("--m-max", type=int)
    sub.add_parser("bounds", parents=[common], help="entropy and no-repeat bounds per level")
    sub.add_parser("mc", parents=[common], help="Monte-Carlo estimates (set quantity=...)")
    e = sub.add_parser("experiment", parents=[common], help="hilberg scaling or LZ ratio pipeline")
    e.add_argument("name", choices=["hilberg", "lz_ratio"])
    e.add_argument("--manifest", type=Path, help="replay the config stored in a manifest")
    sub.add_parser("oracle", parents=[common], help="exact enumeration checks for tiny schedules")
    return p


def _emit(args, name: str, header, rows) -> None:
    text = ex.csv_text(header, rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / name).write_text(text)


def _config(args):
    if getattr(args, "manifest", None) is not None:
        cfg = ex.config_from_manifest(args.manifest)
        if args.set:
            from .config import apply_pairs

            cfg = apply_pairs(cfg, dict(s.split("=", 1) for s in args.set))
    else:
        cfg = load_config(args.config, args.set)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.cmd == "stats":
            try:
                seq = read_sequence(args.input)
            except (OSError, ValueError) as e:
                raise ConfigError(f"cannot read {args.input}: {e}") from e
            _emit(args, "stats.csv", ex.STATS_HEADER, ex.stats_rows(seq, args.m_max))
            return EXIT_OK
        cfg.validate()
        out = args.out or (Path(cfg.out) if cfg.out else None)
        if args.cmd == "gen":
            if out is None:
                raise ConfigError("gen needs --out")
            path, man = ex.run_generate(cfg, out, args.seq_format)
            print(path)
            print(man)
        elif args.cmd == "bounds":
            _emit(args, "bounds.csv", ex.BOUNDS_HEADER, ex.bounds_rows(cfg))
        elif args.cmd == "mc":
            _emit(args, "mc.csv", ex.MC_HEADER, ex.mc_rows(cfg, args.jobs))
        elif args.cmd == "oracle":
            rows = ex.oracle_rows(cfg)
            bad = [r for r in rows if r[0] == "kpair_tv" and r[3] > 1e-12]
            _emit(args, "oracle.csv", ex.ORACLE_HEADER, rows)
            if bad:
                raise InvariantViolation(f"K-pair law not uniform: {bad[0]}")
        elif args.cmd == "experiment":
            if out is None:
                raise ConfigError("experiment needs --out")
            fn = ex.run_hilberg_experiment if args.name == "hilberg" else ex.run_lz_ratio_experiment
            for p in fn(cfg, out, args.jobs).values():
                print(p)
        return EXIT_OK
    except (ConfigError, ScheduleError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetExceeded, EnumerationBudgetExceeded, PoolExhausted) as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvariantViolation, AssertionError) as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
