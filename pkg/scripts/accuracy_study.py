"""eps-scaling study of the fast-factor Riccati PDE (tanh factor, constant kappa)."""

import argparse
from pathlib import Path

from fmrexec.cli import cmd_verify_accuracy

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=ROOT / "configs" / "msft_like.json")
    ap.add_argument("--out", type=Path, default=ROOT / "results" / "accuracy")
    ap.add_argument("--eps", default="0.2,0.1,0.05,0.025,0.0125")
    ap.add_argument("--dump-field", action="store_true")
    args = ap.parse_args()
    cmd_verify_accuracy(args.config, args.out, args.eps, args.dump_field)


if __name__ == "__main__":
    main()
