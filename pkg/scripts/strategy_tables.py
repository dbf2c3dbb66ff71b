"""Strategy tables (chi/kappa, Phi0, Phi1, Phi2, C1) across phi = m b, with a short summary."""

import argparse
from pathlib import Path

import numpy as np

from fmrexec.cli import cmd_solve
from fmrexec.config import load_config
from fmrexec.model import TimeGrid
from fmrexec.signals import build_tables

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=ROOT / "configs" / "msft_like.json")
    ap.add_argument("--out", type=Path, default=ROOT / "results" / "tables")
    ap.add_argument("--phi-multiples", default="1,5,10")
    args = ap.parse_args()
    cmd_solve(args.config, args.out, args.phi_multiples)
    cfg = load_config(args.config)
    grid = TimeGrid(cfg.numerics.table_steps, cfg.problem.T)
    print(f"{'phi/b':>6} {'chi/kappa(0)':>14} {'Phi1(0)':>10} {'C1 min':>12} {'C1 max':>12} {'argmin t':>9}")
    for m in (float(x) for x in args.phi_multiples.split(",")):
        tb = build_tables(cfg.problem_for(m), cfg.impact, cfg.signal, grid)
        c1 = tb.C1[:, 0]
        print(f"{m:6g} {tb.riccati.chi_over_kappa[0]:14.6g} {tb.Phi1[0, 0, 0]:10.4g} {c1.min():12.5g} "
              f"{c1.max():12.5g} {grid.t[np.argmin(c1)]:9.4f}")
    print(f"tables written to {args.out}")


if __name__ == "__main__":
    main()
