"""Rank-frequency curves and fluctuations of the Dirichlet model, plus how far the closed form drifts.

    python scripts/fig1_data.py --n 44 --beta 0.8 --out results/fig1
"""

import argparse
from pathlib import Path

import numpy as np

from phonostat.cli import RunConfig, cmd_model
from phonostat.model import DirichletModel, approx_spectrum, expected_spectrum, relative_fluctuations


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=44)
    parser.add_argument("--beta", type=float, default=0.8)
    parser.add_argument("--out", type=Path, default=Path("results/fig1"))
    args = parser.parse_args()

    cmd_model(RunConfig(out_dir=args.out), args.n, args.beta)
    model = DirichletModel(args.n, args.beta)
    exact = expected_spectrum(model).freqs
    rel = approx_spectrum(model)[:-1] / exact[:-1] - 1
    eps = relative_fluctuations(model)
    print(f"n={args.n} beta={args.beta}")
    print(f"  eps_r: r=1 {eps[0]:.4f}, min {eps.min():.4f} at r={eps.argmin() + 1}, r=n-1 {eps[-2]:.4f}")
    print(f"  ranks with eps_r <= 0.02: {np.flatnonzero(eps <= 0.02) + 1}")
    print(f"  closed form vs exact: r=1 {rel[0]:+.3f}, best {rel[np.abs(rel).argmin()]:+.3f} "
          f"at r={np.abs(rel).argmin() + 1}, r=n-1 {rel[-1]:+.3f}")
    print(f"  wrote {args.out}/model_n{args.n}_beta{args.beta:g}.csv")


if __name__ == "__main__":
    main()
