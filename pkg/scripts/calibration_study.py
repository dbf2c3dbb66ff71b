"""Sampling behaviour of the (eps, beta) estimator over repeated synthetic days.

Prints band-coverage rates and the empirical spread of both estimates,
plus the correlation between their errors.
"""

import argparse

import numpy as np

from fmrexec.calibrate import estimate_ou, simulate_ou_path
from fmrexec.presets import BETA_HAT, EPS_HAT


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--n", type=int, default=23400)
    ap.add_argument("--eps", type=float, default=EPS_HAT)
    ap.add_argument("--beta", type=float, default=BETA_HAT)
    args = ap.parse_args()
    e, b, cover = [], [], 0
    for s in range(args.reps):
        est = estimate_ou(simulate_ou_path(args.eps, args.beta, args.n, s), 1.0 / args.n)
        e.append(est.eps_hat / args.eps - 1)
        b.append(est.beta_hat / args.beta - 1)
        cover += est.beta_ci[0] <= args.beta <= est.beta_ci[1]
    e, b = np.array(e), np.array(b)
    print(f"eps  rel error: mean {e.mean():+.4f} sd {e.std():.4f}  within 30%: {np.mean(np.abs(e) < 0.30):.3f}")
    print(f"beta rel error: mean {b.mean():+.4f} sd {b.std():.4f}  within  5%: {np.mean(np.abs(b) < 0.05):.3f}")
    print(f"corr(eps error, beta error) = {np.corrcoef(e, b)[0, 1]:.3f}; beta CI coverage {cover / args.reps:.3f}")


if __name__ == "__main__":
    main()
