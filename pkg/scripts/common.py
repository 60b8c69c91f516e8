"""Shared setup for the experiment scripts (desk scale: 16x16 patches, N = 256)."""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cspath.cli import plot_sweep
from cspath.dataset import build_dataset, gaussian_bumps_field
from cspath.dictionary import learn_dictionary
from cspath.montecarlo import MCConfig


def parser(description, out):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--field-seed", type=int, default=1)
    p.add_argument("--bump-width", type=float, nargs=2, default=(0.03, 0.08),
                   help="bump width range as fractions of the field side")
    p.add_argument("--atoms", type=int, default=64)
    p.add_argument("--n-iter", type=int, default=50)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=out)
    return p


def desk_setup(args):
    field = gaussian_bumps_field(128, 128, n_bumps=5, seed=args.field_seed,
                                 width_range=tuple(args.bump_width))
    ds = build_dataset(field, 32, 8, 2, seed=0)
    psi = learn_dictionary(ds.train, args.atoms, lam=0.01, epochs=15, seed=0)
    cfg = MCConfig(n_iter=args.n_iter, M=35, N=ds.N, grid_rows=16, grid_cols=16,
                   lasso_lambda=0.01, lambda_path=0.0, seed=0)
    return ds, psi, cfg


def save(sweep, out):
    sweep.save(out)
    return plot_sweep(sweep, out)
