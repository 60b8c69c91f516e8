"""Learned vs analytic dictionaries on planted 3-sparse patches."""

import argparse

import numpy as np

from cspath.dataset import split
from cspath.dictionary import dct_dictionary, learn_dictionary, polynomial_dictionary
from cspath.evaluation import compare_dictionaries
from cspath.montecarlo import MCConfig


def planted(n, side=8, K=32, sparsity=3, seed=0):
    N = side * side
    G = np.random.default_rng(seed).standard_normal((N, K))
    G /= np.linalg.norm(G, axis=0)
    rng = np.random.default_rng(seed + 1)
    C = np.zeros((K, n))
    for j in range(n):
        idx = rng.choice(K, sparsity, replace=False)
        C[idx, j] = rng.uniform(0.5, 1.5, sparsity) * rng.choice([-1, 1], sparsity)
    return (G @ C).T


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--patches", type=int, default=400)
    p.add_argument("--atoms", type=int, default=32)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    ds = split(planted(a.patches, K=a.atoms, seed=a.seed), seed=0)
    dicts = {"learned": learn_dictionary(ds.train, a.atoms, lam=0.05, epochs=30, seed=0),
             "dct": dct_dictionary(8), "polynomial": polynomial_dictionary(8, 3)}
    cfg = MCConfig(n_iter=20, M=35, N=64, p=0.1, theta=0, grid_rows=8, grid_cols=8,
                   lasso_lambda=0.01, lambda_path=0.0, seed=0)
    table = compare_dictionaries(cfg, dicts, ds, repeats=a.repeats)
    for name, (mean, sd) in table.aggregate("E_test").items():
        print(f"{name:>10}: test MSE {mean:.5f} (sd {sd:.5f})")
