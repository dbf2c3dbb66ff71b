"""Write a synthetic per-second impact series (one trading day) to CSV.

kappa_i = kappa(t_i) / max(1 + Y_i, 0.05), Y an exact OU path.
"""

import argparse
from pathlib import Path

from fmrexec.calibrate import synthetic_series
from fmrexec.cli import write_csv
from fmrexec.presets import BETA_HAT, EPS_HAT, MSFT_LIKE_KAPPA


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "msft_like_day.csv")
    ap.add_argument("--n", type=int, default=23400)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--eps", type=float, default=EPS_HAT)
    ap.add_argument("--beta", type=float, default=BETA_HAT)
    args = ap.parse_args()
    series, _ = synthetic_series(MSFT_LIKE_KAPPA, args.eps, args.beta, args.n, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["t", "kappa"], zip(series.t, series.values))
    print(f"wrote {series.n} rows to {args.out}")


if __name__ == "__main__":
    main()
