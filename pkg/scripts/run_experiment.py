#!/usr/bin/env python3
"""Run one experiment config and print its fit table.

    python scripts/run_experiment.py scripts/configs/hilberg_b05.cfg out/hilberg
    python scripts/run_experiment.py scripts/configs/lz_ratio_b05.cfg out/lz --kind lz_ratio
"""

import argparse
import sys
from pathlib import Path

from rha import cli


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("config", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--kind", choices=["hilberg", "lz_ratio"], default="hilberg")
    p.add_argument("--jobs", default="1")
    a = p.parse_args()
    code = cli.run(["experiment", a.kind, "--config", str(a.config), "--out", str(a.out), "--jobs", a.jobs])
    if code:
        return code
    fit = a.out / ("fits.csv" if a.kind == "hilberg" else "lz_ratio_fit.csv")
    sys.stdout.write(fit.read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
