"""
LASSO solver used for both sparse coding and compressed-sensing recovery.

Solves

    minimize_c  1/2 ||A c - y||_2^2 + lam ||c||_1

with the iterative soft-thresholding algorithm (proximal gradient, step 1/L
where L is the largest eigenvalue of A^T A). A batched entry point solves
many right-hand sides against the same operator, freezing each column as
soon as its own stopping rule fires so results match per-vector solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_ITER = 2000
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class SparseCode:
    coeffs: np.ndarray
    lam: float
    n_iter: int = 0
    objective: float = float("nan")

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")


def soft_threshold(x, lam):
    """Proximal operator of ``lam * |x|``, elementwise."""
    if np.any(np.asarray(lam) < 0):
        raise ValueError("threshold must be nonnegative")
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def spectral_norm_sq(A, tol=1e-13, max_iter=20000):
    """Largest eigenvalue of ``A^T A`` by power iteration.

    Iterates on the smaller of the two Gram matrices. The start vector is
    fixed, so the result is deterministic.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if A.size == 0 or not np.any(A):
        raise ValueError("spectral norm of an all-zero matrix is undefined here")
    G = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    v = np.random.Generator(np.random.Philox(key=0x5EED)).standard_normal(G.shape[0])
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(max_iter):
        w = G @ v
        lam = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            # start vector happened to lie in the null space
            v = np.ones(G.shape[0]) / np.sqrt(G.shape[0])
            continue
        v = w / nrm
        if abs(lam - lam_prev) <= tol * abs(lam):
            break
        lam_prev = lam
    # one more Rayleigh quotient with the converged vector
    return float(v @ (G @ v))


def lasso_objective(A, c, y, lam):
    r = A @ c - y
    return 0.5 * np.sum(r * r, axis=0) + lam * np.sum(np.abs(c), axis=0)


def _check_inputs(A, Y, lam):
    A = np.asarray(A, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be 2-D")
    if Y.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, y has {Y.shape[0]} rows")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(Y))):
        raise ValueError("non-finite input")
    return A, Y


def _fista(A, Y, lam, L, max_iter, tol, C, window=50):
    """FISTA with per-column gradient restart; returns best iterates seen.

    Works in Gram form (one K x K product per step). A column stops when its
    best objective improved by less than ``tol`` (relative) per step on
    average over the last ``window`` steps.
    """
    G = (A.T @ A) / L
    B = (A.T @ Y) / L
    thr = lam / L
    n = Y.shape[1]
    GC = G @ C
    # objective / L without the constant 1/2 ||y||^2 / L term
    best = 0.5 * np.sum(C * GC, axis=0) - np.sum(B * C, axis=0) + thr * np.sum(np.abs(C), axis=0)
    const = 0.5 * np.sum(Y * Y, axis=0) / L
    best_C = C.copy()
    Z, GZ = C.copy(), GC.copy()
    t = np.ones(n)
    iters = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)
    mark = best.copy()
    for it in range(1, max_iter + 1):
        V = Z - GZ + B
        Cn = np.sign(V) * np.maximum(np.abs(V) - thr, 0.0)
        GCn = G @ Cn
        F = 0.5 * np.sum(Cn * GCn, axis=0) - np.sum(B * Cn, axis=0) + thr * np.sum(np.abs(Cn), axis=0)
        imp = (F < best) & active
        best = np.where(imp, F, best)
        best_C[:, imp] = Cn[:, imp]
        D = Cn - C
        restart = np.sum((Z - Cn) * D, axis=0) > 0
        tn = np.where(restart, 1.0, 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t)))
        beta = np.where(restart, 0.0, (t - 1.0) / tn)
        Z = Cn + beta * D
        GZ = GCn + beta * (GCn - GC)
        C, GC, t = Cn, GCn, tn
        iters[active] = it
        if it % window == 0:
            scale = np.maximum(np.abs(best + const), np.finfo(float).tiny)
            active &= (mark - best) > tol * window * scale
            mark = best.copy()
            if not np.any(active):
                break
    return best_C, iters


def lasso_ista_batch(A, Y, lam, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL,
                     x0=None, L=None, momentum=False, check_monotone=False,
                     return_info=False):
    """Solve the LASSO for every column of ``Y`` (shape m x n).

    Plain ISTA: each column stops independently once its relative objective
    decrease drops below ``tol``, so the result matches solving the columns
    one by one. Returns the K x n code matrix (and, with ``return_info``,
    per-column iteration counts and final objectives).

    ``momentum=True`` switches to FISTA with adaptive restart. Its iterates
    are not monotone; the best iterate per column is returned.
    """
    A, Y = _check_inputs(A, Y, lam)
    m, K = A.shape
    n = Y.shape[1]
    C = np.zeros((K, n)) if x0 is None else np.array(x0, dtype=float).reshape(K, n)
    iters = np.zeros(n, dtype=int)

    if m == 0 or not np.any(A):
        # no information in the measurements: zero is a minimizer
        C = np.zeros((K, n))
        obj = 0.5 * np.sum(Y * Y, axis=0)
        return (C, iters, obj) if return_info else C

    if L is None:
        L = spectral_norm_sq(A)

    if momentum:
        C, iters = _fista(A, Y, lam, L, max_iter, tol, C)
        if return_info:
            return C, iters, lasso_objective(A, C, Y, lam)
        return C

    step = 1.0 / L
    thr = lam * step
    tiny = np.finfo(float).tiny
    R = A @ C - Y
    F = 0.5 * np.sum(R * R, axis=0) + lam * np.sum(np.abs(C), axis=0)
    # rounding slack for the debug check, scaled by the starting objective
    slack = 1e-12 * (np.abs(F) + 0.5 * np.sum(Y * Y, axis=0))
    active = np.arange(n)
    for it in range(1, max_iter + 1):
        if active.size == 0:
            break
        if active.size == n:
            Ya, Ca, Ra, Fa = Y, C, R, F
        else:
            Ya, Ca, Ra, Fa = Y[:, active], C[:, active], R[:, active], F[active]
        Cn = soft_threshold(Ca - step * (A.T @ Ra), thr)
        Rn = A @ Cn - Ya
        Fn = 0.5 * np.sum(Rn * Rn, axis=0) + lam * np.sum(np.abs(Cn), axis=0)
        if check_monotone:
            sl = slack if active.size == n else slack[active]
            assert not np.any(Fn > Fa + sl), "ISTA objective increased"
        done = (Fa - Fn <= tol * np.maximum(np.abs(Fa), tiny)) | (Fa == 0.0)
        if active.size == n:
            C, R, F = Cn, Rn, Fn
        else:
            C[:, active] = Cn
            R[:, active] = Rn
            F[active] = Fn
        iters[active] = it
        if np.any(done):
            active = active[~done]
    return (C, iters, F) if return_info else C


def lasso_ista(A, y, lam, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL, x0=None,
               momentum=False, check_monotone=False):
    """Solve a single LASSO problem; returns a :class:`SparseCode`."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be a vector")
    x0 = None if x0 is None else np.asarray(x0, dtype=float).reshape(-1, 1)
    C, iters, F = lasso_ista_batch(A, y[:, None], lam, max_iter=max_iter, tol=tol,
                                   x0=x0, momentum=momentum,
                                   check_monotone=check_monotone, return_info=True)
    return SparseCode(C[:, 0], float(lam), int(iters[0]), float(F[0]))


def ista_objective_trace(A, y, lam, n_iter, x0=None):
    """Objective value after every plain ISTA step (for diagnostics and tests)."""
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    L = spectral_norm_sq(A)
    c = np.zeros(A.shape[1]) if x0 is None else np.array(x0, dtype=float)
    out = [float(lasso_objective(A, c, y, lam))]
    for _ in range(n_iter):
        c = soft_threshold(c - (A.T @ (A @ c - y)) / L, lam / L)
        out.append(float(lasso_objective(A, c, y, lam)))
    return np.array(out)
