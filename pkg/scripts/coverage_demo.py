"""Coverage at N = 1024: fraction of grid cells the selected design visits per p."""

import argparse

from cspath.dataset import build_dataset, gaussian_bumps_field
from cspath.dictionary import learn_dictionary
from cspath.evaluation import P_VALUES, sweep_p
from cspath.montecarlo import MCConfig

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-iter", type=int, default=30)
    p.add_argument("--threads", type=int, default=1)
    a = p.parse_args()
    ds = build_dataset(gaussian_bumps_field(256, 256, 5, seed=2), 64, 16, 2, seed=0)
    psi = learn_dictionary(ds.train, 64, lam=0.1, epochs=15, seed=0)
    cfg = MCConfig(n_iter=a.n_iter, M=35, N=1024, theta=3, grid_rows=32, grid_cols=32, seed=0)
    sw = sweep_p(cfg, psi, ds, P_VALUES, repeats=1, thetas=(3,), threads=a.threads)
    for r in sw.runs:
        print(f"p={r.value:.2f}  cells {r.cells:4d} ({100 * r.coverage:.1f}%)  L {r.L:7.1f}  "
              f"E_test {r.E_test:.4f}")
