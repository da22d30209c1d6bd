#!/usr/bin/env python3
"""Fitted exponents across a beta grid: h_top power law, L hyperlog slope, LZ ratio growth."""

import argparse
import csv
import tempfile
from pathlib import Path

from rha.config import RunConfig
from rha.experiments import run_hilberg_experiment, run_lz_ratio_experiment


def _fits(path: Path) -> dict:
    with open(path, newline="") as f:
        return {r["quantity"]: r for r in csv.DictReader(f)}


def main() -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--betas", default="0.3,0.4,0.5,0.6")
    p.add_argument("--log2", type=int, default=18)
    p.add_argument("--seed", type=int, default=7)
    a = p.parse_args()
    n = a.log2
    print("beta,h_top_exponent,L_slope,lz_ratio_exponent,target_L,target_lz")
    with tempfile.TemporaryDirectory() as tmp:
        for b in (float(x) for x in a.betas.split(",")):
            sched = f"hilberg(beta={b}, n_max={n})"
            top = min(14, n // 2 + 2)
            cfg = RunConfig(sched, a.seed, n, tuple(2**e for e in range(6, top + 1)), options={"fit_max": str(2**top)})
            h = _fits(run_hilberg_experiment(cfg, Path(tmp) / f"h{b}")["fits"])
            lcfg = RunConfig(sched, a.seed, n, options={"lz_min_log2": "10"})
            lz = _fits(run_lz_ratio_experiment(lcfg, Path(tmp) / f"z{b}")["lz_ratio_fit"])
            cells = [h["h_top"]["exponent_hat"], h["L"]["exponent_hat"], lz["lz_ratio"]["exponent_hat"]]
            print(",".join([str(b)] + [f"{float(c):.4f}" if c else "" for c in cells] + [f"{1 / b:.4f}", f"{1 - b:.4f}"]))


if __name__ == "__main__":
    main()
