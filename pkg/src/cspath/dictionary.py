"""
Sparsifying dictionaries: learned (alternating minimization) and analytic
(2-D DCT-II, 2-D monomials).

Matrix conventions in this module: signals and codes are stored as columns,
``S`` is N x n and ``C`` is K x n. :func:`learn_dictionary` takes the
training patches as rows (n x N) like the rest of the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .solver import lasso_ista_batch

KINDS = ("learned", "dct", "polynomial")
UNIT_NORM_TOL = 1e-9
REVIVE_TOL = 1e-12


@dataclass(frozen=True)
class Dictionary:
    atoms: np.ndarray
    kind: str
    patch_side: int
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim != 2:
            raise ValueError("atoms must be an N x K matrix")
        if self.kind not in KINDS:
            raise ValueError(f"unknown dictionary kind {self.kind!r}")
        if atoms.shape[0] != self.patch_side ** 2:
            raise ValueError(f"N={atoms.shape[0]} is not patch_side^2 ({self.patch_side}^2)")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("non-finite dictionary entries")
        norms = np.linalg.norm(atoms, axis=0)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise ValueError("dictionary atoms must have unit l2 norm")
        object.__setattr__(self, "atoms", atoms)

    @property
    def N(self):
        return self.atoms.shape[0]

    @property
    def K(self):
        return self.atoms.shape[1]

    def to_json(self, path):
        # 17 significant digits round-trips every double exactly
        rows = ",\n  ".join("[" + ",".join(format(v, ".17g") for v in row) + "]"
                            for row in self.atoms)
        header = json.dumps({"kind": self.kind, "N": self.N, "K": self.K,
                             "patch_side": self.patch_side})
        with open(path, "w") as f:
            f.write('{"header": ' + header + ',\n "atoms": [\n  ' + rows + "\n ]}\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            obj = json.load(f)
        h = obj["header"]
        atoms = np.array(obj["atoms"], dtype=float).reshape(h["N"], h["K"])
        return cls(atoms, h["kind"], int(h["patch_side"]))


def _side_of(N):
    side = math.isqrt(N)
    if side * side != N:
        raise ValueError(f"signal length {N} is not a perfect square")
    return side


def _normalize_columns(D, rng):
    D = np.array(D, dtype=float)
    norms = np.linalg.norm(D, axis=0)
    dead = norms < REVIVE_TOL
    for k in np.flatnonzero(dead):
        v = rng.standard_normal(D.shape[0])
        D[:, k] = v / np.linalg.norm(v)
    live = ~dead
    D[:, live] /= norms[live]
    return D


def dl_objective(atoms, C, S, lam):
    """Sum over signals of 1/2 ||D c_i - s_i||^2 + lam ||c_i||_1."""
    R = atoms @ C - S
    return 0.5 * float(np.sum(R * R)) + lam * float(np.sum(np.abs(C)))


def sparse_coding_step(psi, S, lam, max_iter=2000, tol=1e-8, warm=None):
    """Codes for every column of ``S`` with the dictionary held fixed."""
    atoms = psi.atoms if isinstance(psi, Dictionary) else np.asarray(psi, dtype=float)
    S = np.asarray(S, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    return lasso_ista_batch(atoms, S, lam, max_iter=max_iter, tol=tol, x0=warm)


def _ridge_atoms(C, S, eps):
    C = np.asarray(C, dtype=float)
    S = np.asarray(S, dtype=float)
    if C.ndim != 2 or S.ndim != 2 or C.shape[1] != S.shape[1]:
        raise ValueError(f"dimension mismatch: codes {C.shape}, signals {S.shape}")
    G = C @ C.T + eps * np.eye(C.shape[0])
    return np.linalg.solve(G, C @ S.T).T  # S C^T (C C^T + eps I)^-1, G symmetric


def _rescaled(D, C, rng):
    """Unit-norm atoms plus codes rescaled so that D @ C is unchanged.

    Revived atoms get zero codes.
    """
    norms = np.linalg.norm(D, axis=0)
    scale = np.where(norms < REVIVE_TOL, 0.0, norms)
    return _normalize_columns(D, rng), C * scale[:, None]


def dictionary_update_step(C, S, rng=None, eps=1e-8):
    """Ridge least-squares dictionary for fixed codes, columns renormalized.

    Atoms whose pre-normalization norm falls below 1e-12 are replaced by a
    random unit vector from ``rng`` (a seed or ``numpy.random.Generator``).
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.Generator(np.random.Philox(key=0 if rng is None else rng))
    D = _normalize_columns(_ridge_atoms(C, S, eps), rng)
    return Dictionary(D, "learned", _side_of(D.shape[0]))


def _init_atoms(S, K, rng):
    N, n = S.shape
    order = rng.permutation(n)
    # distinct training patches first, so repeated data does not waste atoms
    _, first = np.unique(S.T, axis=0, return_index=True)
    distinct = set(first.tolist())
    picked = [i for i in order if i in distinct][:K]
    picked += [i for i in order if i not in distinct][:K - len(picked)]
    cols = [S[:, i] for i in picked]
    while len(cols) < K:
        cols.append(rng.standard_normal(N))
    return _normalize_columns(np.stack(cols, axis=1), rng)


def learn_dictionary(train, K, lam=0.1, epochs=30, seed=0, inner_max_iter=500,
                     inner_tol=1e-6, eps=1e-8, max_backtrack=12):
    """Learn an N x K dictionary from training patches (rows of ``train``).

    Each epoch codes every patch (warm-started from the previous epoch) and
    then refits the atoms by ridge least squares. After renormalizing the
    atoms the codes are rescaled to keep the product unchanged. The
    per-epoch objective is stored in ``Dictionary.history`` and is
    non-increasing: a refit that would raise it is damped towards the
    current atoms, and dropped if no damping helps.
    """
    S = np.asarray(train, dtype=float)
    if S.ndim != 2 or S.shape[0] == 0:
        raise ValueError("empty training set")
    if K < 1 or epochs < 1:
        raise ValueError("K and epochs must be >= 1")
    if not np.any(S):
        raise ValueError("training data is all zero")
    S = S.T
    N = S.shape[0]
    side = _side_of(N)
    rng = np.random.Generator(np.random.Philox(key=seed))

    D = _init_atoms(S, K, rng)
    C = None
    history = []
    for _ in range(epochs):
        C = sparse_coding_step(D, S, lam, max_iter=inner_max_iter, tol=inner_tol, warm=C)
        f_old = dl_objective(D, C, S, lam)
        raw = _ridge_atoms(C, S, eps)
        alpha = 1.0
        for _ in range(max_backtrack + 1):
            D_new, C_new = _rescaled((1 - alpha) * D + alpha * raw, C, rng)
            f_new = dl_objective(D_new, C_new, S, lam)
            if f_new <= f_old:
                break
            alpha *= 0.5
        if f_new <= f_old:
            D, C = D_new, C_new
            history.append(f_new)
        else:
            history.append(f_old)
    return Dictionary(D, "learned", side, history=tuple(history))


def dct_matrix(n):
    """Orthonormal 1-D DCT-II analysis matrix (rows are frequencies)."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    T = np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    T[0] *= np.sqrt(1.0 / n)
    T[1:] *= np.sqrt(2.0 / n)
    return T


def dct_dictionary(patch_side):
    """2-D DCT-II basis for row-major flattened patch_side x patch_side patches."""
    if patch_side < 1:
        raise ValueError("patch_side must be >= 1")
    B = dct_matrix(patch_side).T
    atoms = np.kron(B, B)
    # renormalize to absorb rounding in the Kronecker product
    atoms /= np.linalg.norm(atoms, axis=0)
    return Dictionary(atoms, "dct", patch_side)


def polynomial_dictionary(patch_side, max_degree):
    """Monomials x^a y^b with a + b <= max_degree on a [-1, 1]^2 grid.

    ``x`` runs along columns and ``y`` along rows. Atoms are ordered by
    total degree, then by decreasing power of x.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    K = (max_degree + 1) * (max_degree + 2) // 2
    N = patch_side * patch_side
    if K > N:
        raise ValueError(f"{K} monomials exceed patch dimension {N}")
    t = np.linspace(-1.0, 1.0, patch_side) if patch_side > 1 else np.zeros(1)
    y, x = np.meshgrid(t, t, indexing="ij")
    x, y = x.ravel(), y.ravel()
    cols = []
    for deg in range(max_degree + 1):
        for b in range(deg + 1):
            a = deg - b
            v = x ** a * y ** b
            nrm = np.linalg.norm(v)
            if nrm == 0:
                raise ValueError("degenerate monomial on this grid")
            cols.append(v / nrm)
    return Dictionary(np.stack(cols, axis=1), "polynomial", patch_side)
