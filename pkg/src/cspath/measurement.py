"""
Binary measurement matrices: sampling, column pruning, the visited-cell
indicator and mutual incoherence with a dictionary.

Random streams come from numpy's Philox counter-based generator keyed by
``seed ^ index``, which is reproducible across platforms and lets
candidates be drawn independently in any order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


def substream(seed, index=0):
    """Philox generator for substream ``seed XOR index``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=int(seed) ^ int(index)))


@dataclass(frozen=True)
class MeasurementMatrix:
    bits: np.ndarray
    p: float = float("nan")
    seed: int | None = None
    theta: int = 0

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError("measurement matrix must be 2-D")
        if not np.all((bits == 0) | (bits == 1)):
            raise ValueError("measurement matrix entries must be 0 or 1")
        if bits.shape[0] > bits.shape[1]:
            raise ValueError("M must not exceed N")
        object.__setattr__(self, "bits", bits.astype(np.uint8))

    @property
    def M(self):
        return self.bits.shape[0]

    @property
    def N(self):
        return self.bits.shape[1]

    def as_float(self):
        return self.bits.astype(float)

    def to_json(self, path):
        header = {"M": self.M, "N": self.N,
                  "p": None if np.isnan(self.p) else self.p,
                  "seed": self.seed, "theta": self.theta}
        rows = ["".join("1" if b else "0" for b in row) for row in self.bits]
        with open(path, "w") as f:
            json.dump({"header": header, "rows": rows}, f, indent=1)
            f.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            obj = json.load(f)
        h = obj["header"]
        bits = np.array([[c == "1" for c in row] for row in obj["rows"]],
                        dtype=np.uint8).reshape(h["M"], h["N"])
        p = float("nan") if h.get("p") is None else float(h["p"])
        return cls(bits, p, h.get("seed"), int(h.get("theta", 0)))


def sample_matrix(M, N, p, rng_seed, index=0):
    """M x N matrix with i.i.d. Bernoulli(p) entries from substream ``rng_seed ^ index``."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    rng = substream(rng_seed, index)
    bits = rng.random((M, N)) < p
    return MeasurementMatrix(bits, float(p), int(rng_seed) ^ int(index), 0)


def enhanced_sparsify(phi, theta):
    """Zero every column whose number of ones is below ``theta``."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    bits = phi.bits.copy()
    bits[:, bits.sum(axis=0) < theta] = 0
    return MeasurementMatrix(bits, phi.p, phi.seed, max(int(theta), phi.theta))


def indicator(phi):
    """1 for each grid cell (column) that at least one measurement touches."""
    return (phi.bits.sum(axis=0) > 0).astype(np.uint8)


def drop_zero_rows(phi):
    keep = phi.bits.sum(axis=1) > 0
    return MeasurementMatrix(phi.bits[keep], phi.p, phi.seed, phi.theta)


def mutual_incoherence(phi, psi):
    """Largest |<phi_q, psi_r>| over measurement rows and dictionary atoms.

    Both sides are l2-normalized first; zero rows or atoms contribute 0.
    """
    P = phi.as_float() if isinstance(phi, MeasurementMatrix) else np.asarray(phi, dtype=float)
    D = getattr(psi, "atoms", psi)
    D = np.asarray(D, dtype=float)
    if P.shape[1] != D.shape[0]:
        raise ValueError(f"dimension mismatch: Phi has {P.shape[1]} columns, Psi has {D.shape[0]} rows")
    if P.shape[0] == 0 or D.shape[1] == 0:
        return 0.0
    pn = np.linalg.norm(P, axis=1)
    dn = np.linalg.norm(D, axis=0)
    P = P[pn > 0] / pn[pn > 0, None]
    D = D[:, dn > 0] / dn[dn > 0]
    if P.size == 0 or D.size == 0:
        return 0.0
    return float(min(np.max(np.abs(P @ D)), 1.0))
