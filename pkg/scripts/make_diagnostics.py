#!/usr/bin/env python3
"""Generate a sun sky, build its table and write the diagnostic images, all through the CLI."""

import argparse
import sys
from pathlib import Path

from envsampling.cli import main as cli


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("outdir", type=Path)
    p.add_argument("--n-bins", type=int, default=64)
    p.add_argument("--supersample", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    a.outdir.mkdir(parents=True, exist_ok=True)
    sky, table = a.outdir / "sun.pfm", a.outdir / "sun.eimt"
    steps = [
        ["gen", "sun", "--out", sky],
        ["build", "--in", sky, "--n-bins", a.n_bins, "--supersample", a.supersample, "--out", table],
        ["diag", "--table", table, "--in", sky, "--seed", a.seed, "--out", a.outdir / "sun"],
        ["validate", "--table", table, "--in", sky, "--seed", a.seed],
        ["bench", "--in", sky, "--table", table, "--seed", a.seed, "--out", a.outdir / "bench"],
    ]
    for argv in steps:
        code = cli([str(x) for x in argv])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
