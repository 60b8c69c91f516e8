"""Long-horizon proximal-gradient reference for the seeded 10x20 LASSO instance.

Run directly to regenerate the value frozen in tests/test_solver.py. It uses
its own step size (exact eigenvalue) and no stopping rule.
"""

import numpy as np


def instance():
    rng = np.random.Generator(np.random.Philox(key=2024))
    A = rng.standard_normal((10, 20))
    y = rng.standard_normal(10)
    return A, y, 0.1


def reference(n_iter=1_000_000):
    A, y, lam = instance()
    L = np.linalg.eigvalsh(A.T @ A)[-1]
    c = np.zeros(A.shape[1])
    for _ in range(n_iter):
        v = c - A.T @ (A @ c - y) / L
        c = np.sign(v) * np.maximum(np.abs(v) - lam / L, 0.0)
    r = A @ c - y
    return 0.5 * r @ r + lam * np.abs(c).sum(), c


if __name__ == "__main__":
    f, c = reference()
    print(repr(f))
    print(np.array2string(c, precision=17, separator=", "))
