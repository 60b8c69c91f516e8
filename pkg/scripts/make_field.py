"""Write a synthetic Gaussian-bump field as CSV, ready for `cspath ingest --field`."""

import argparse

import numpy as np

from cspath.dataset import gaussian_bumps_field

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--height", type=int, default=1390)
    p.add_argument("--width", type=int, default=994)
    p.add_argument("--bumps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="field.csv")
    a = p.parse_args()
    f = gaussian_bumps_field(a.height, a.width, a.bumps, seed=a.seed)
    np.savetxt(a.out, f.values, delimiter=",", fmt="%.6f")
    print(f"wrote {a.out} ({a.height}x{a.width})")
