"""
Monte-Carlo search over random binary measurement matrices.

Every candidate is scored by

    C = lambda_valid * E + lambda_path * L + lambda_incoh * mu

where E is the mean squared validation reconstruction error, L the length
of the nearest-neighbour sampling path and mu the mutual incoherence with
the dictionary. The lowest-cost candidate wins; ties go to the lower index.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .measurement import (drop_zero_rows, enhanced_sparsify, indicator,
                          mutual_incoherence, sample_matrix)
from .pathplan import nn_path, unflatten
from .solver import lasso_ista_batch

# keeps substreams of different repeats disjoint under seed ^ index
MAX_ITER_BITS = 20


@dataclass(frozen=True)
class MCConfig:
    n_iter: int = 100
    M: int = 35
    N: int = 1024
    p: float = 0.05
    theta: int = 3
    lambda_valid: float = 1.0
    lambda_path: float = 0.001
    lambda_incoh: float = 0.0
    lasso_lambda: float = 0.1
    seed: int = 0
    grid_rows: int = 32
    grid_cols: int = 32
    lasso_max_iter: int = 2000
    lasso_tol: float = 1e-8
    lasso_momentum: bool = True
    metric: str = "euclidean"

    def __post_init__(self):
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.n_iter > 1 << MAX_ITER_BITS:
            raise ValueError(f"n_iter limited to 2^{MAX_ITER_BITS}")
        if self.grid_rows * self.grid_cols != self.N:
            raise ValueError(f"grid {self.grid_rows}x{self.grid_cols} does not hold N={self.N} cells")
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if self.M < 1 or self.M > self.N:
            raise ValueError("need 1 <= M <= N")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        for name in ("lambda_valid", "lambda_path", "lambda_incoh", "lasso_lambda"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return MCConfig(**d)


@dataclass(frozen=True)
class CandidateEvaluation:
    recon_error: float
    path_length: float
    incoherence: float
    total_cost: float
    candidate_index: int = 0
    n_cells: int = 0


@dataclass
class MCResult:
    phi: object
    path: object
    best: CandidateEvaluation
    trace: list


def reconstruct_batch(phi, psi, S, lam, max_iter=2000, tol=1e-8, momentum=False):
    """Reconstruct every row of ``S`` from its measurements ``Phi s``."""
    atoms = psi.atoms
    S = np.asarray(S, dtype=float)
    P = drop_zero_rows(phi).as_float()
    Y = P @ S.T
    A = P @ atoms
    C = lasso_ista_batch(A, Y, lam, max_iter=max_iter, tol=tol, momentum=momentum)
    return (atoms @ C).T


def validation_error(phi, psi, valid, lam, max_iter=2000, tol=1e-8, momentum=False):
    valid = np.asarray(valid, dtype=float)
    if valid.ndim != 2 or valid.shape[0] == 0:
        raise ValueError("empty validation set")
    if valid.shape[1] != phi.N or psi.N != phi.N:
        raise ValueError("validation patches, Phi and Psi disagree on N")
    R = valid - reconstruct_batch(phi, psi, valid, lam, max_iter, tol, momentum)
    return float(np.mean(np.sum(R * R, axis=1)))


def evaluate_candidate(phi, psi, valid, cfg, index=0):
    E = validation_error(phi, psi, valid, cfg.lasso_lambda, cfg.lasso_max_iter, cfg.lasso_tol,
                         cfg.lasso_momentum)
    cells = unflatten(indicator(phi), cfg.grid_rows, cfg.grid_cols)
    L = nn_path(cells, cfg.metric).total_length
    mu = mutual_incoherence(phi, psi)
    C = cfg.lambda_valid * E + cfg.lambda_path * L + cfg.lambda_incoh * mu
    return CandidateEvaluation(E, L, mu, C, index, len(cells))


def candidate(cfg, r):
    """The r-th candidate matrix for a config (sampled, then optionally pruned)."""
    phi = sample_matrix(cfg.M, cfg.N, cfg.p, cfg.seed, r)
    if cfg.theta > 0:
        phi = enhanced_sparsify(phi, cfg.theta)
    return phi


# config fields that do not change E, L or mu of a candidate
_WEIGHTS = ("lambda_valid", "lambda_path", "lambda_incoh", "n_iter")


def _reweighted(ev, cfg):
    C = cfg.lambda_valid * ev.recon_error + cfg.lambda_path * ev.path_length \
        + cfg.lambda_incoh * ev.incoherence
    return CandidateEvaluation(ev.recon_error, ev.path_length, ev.incoherence, C,
                               ev.candidate_index, ev.n_cells)


def optimize(cfg, psi, valid, threads=1, cache=None):
    """Run the search; returns an :class:`MCResult` with the full trace.

    Candidates are independent, so they may be evaluated on ``threads``
    worker threads; the result does not depend on the thread count.

    ``cache`` (a dict shared between calls on the same ``psi`` and
    ``valid``) lets sweeps over the cost weights reuse E, L and mu.
    """
    if psi.N != cfg.N:
        raise ValueError(f"dictionary has N={psi.N}, config has N={cfg.N}")
    key = tuple((k, v) for k, v in sorted(asdict(cfg).items()) if k not in _WEIGHTS)

    def run(r):
        if cache is not None and (key, r) in cache:
            return _reweighted(cache[key, r], cfg)
        ev = evaluate_candidate(candidate(cfg, r), psi, valid, cfg, r)
        if cache is not None:
            cache[key, r] = ev
        return ev

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            trace = list(ex.map(run, range(cfg.n_iter)))
    else:
        trace = [run(r) for r in range(cfg.n_iter)]

    best = None
    for ev in trace:
        if best is None or ev.total_cost < best.total_cost:
            best = ev
    phi = candidate(cfg, best.candidate_index)
    path = nn_path(unflatten(indicator(phi), cfg.grid_rows, cfg.grid_cols), cfg.metric)
    return MCResult(phi, path, best, trace)


TRACE_FIELDS = ("r", "E", "L", "mu", "C")


def write_trace(trace, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRACE_FIELDS + ("cells",))
        for ev in trace:
            w.writerow([ev.candidate_index, repr(ev.recon_error), repr(ev.path_length),
                        repr(ev.incoherence), repr(ev.total_cost), ev.n_cells])


def read_trace(path):
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(CandidateEvaluation(float(row["E"]), float(row["L"]), float(row["mu"]),
                                           float(row["C"]), int(row["r"]), int(row["cells"])))
    return out
