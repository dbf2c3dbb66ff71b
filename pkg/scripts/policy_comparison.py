"""Coupled Monte Carlo comparison of AC, TS and the first-order policy.

Writes summary.csv, quantiles.csv and bps_histogram.csv; defaults to
10,000 paths at phi = 10 b.
"""

import argparse
from pathlib import Path

from fmrexec.cli import cmd_compare

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=ROOT / "configs" / "msft_like.json")
    ap.add_argument("--out", type=Path, default=ROOT / "results" / "compare")
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--phi-multiples", default="10")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cmd_compare(args.config, args.out, "AC,TS,FirstOrder", args.paths, args.seed, args.workers, args.phi_multiples)


if __name__ == "__main__":
    main()
