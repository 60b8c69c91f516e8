"""
Test-set reconstruction metrics and the hyper-parameter sweeps.

Sweeps run :func:`cspath.montecarlo.optimize` once per (knob value,
condition, repeat) and keep every candidate trace, so summaries and plots
can be rebuilt from disk without re-optimizing.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import NamedTuple

import numpy as np

from .measurement import MeasurementMatrix
from .montecarlo import MAX_ITER_BITS, optimize, read_trace, reconstruct_batch, write_trace
from .solver import lasso_ista_batch

P_VALUES = tuple(round(0.03 + 0.01 * i, 2) for i in range(10))


def reconstruct(phi, psi, s_m, lasso_lambda, max_iter=2000, tol=1e-8, momentum=False):
    """Patch estimate Psi c* from measurements ``s_m = Phi s``."""
    s_m = np.asarray(s_m, dtype=float).ravel()
    P = phi.as_float() if isinstance(phi, MeasurementMatrix) else np.asarray(phi, dtype=float)
    if P.shape[0] != s_m.size:
        raise ValueError(f"{P.shape[0]} measurement rows but {s_m.size} measurements")
    c = lasso_ista_batch(P @ psi.atoms, s_m[:, None], lasso_lambda, max_iter=max_iter, tol=tol,
                         momentum=momentum)
    return psi.atoms @ c[:, 0]


class TestError(NamedTuple):
    __test__ = False
    mse: float
    relative_l2: float
    skipped: int = 0


def error_metrics(S, S_hat):
    """Mean squared l2 error and mean relative l2 error over rows."""
    S = np.asarray(S, dtype=float)
    R = S - np.asarray(S_hat, dtype=float)
    sq = np.sum(R * R, axis=1)
    norms = np.linalg.norm(S, axis=1)
    ok = norms > 0
    rel = float(np.mean(np.sqrt(sq[ok]) / norms[ok])) if np.any(ok) else float("nan")
    return TestError(float(np.mean(sq)), rel, int(np.sum(~ok)))


def test_error(phi, psi, test, lasso_lambda, max_iter=2000, tol=1e-8, momentum=False):
    test = np.asarray(test, dtype=float)
    if test.ndim != 2 or test.shape[0] == 0:
        raise ValueError("empty test set")
    S_hat = reconstruct_batch(phi, psi, test, lasso_lambda, max_iter, tol, momentum)
    return error_metrics(test, S_hat)


# pytest would otherwise try to collect the function above
test_error.__test__ = False


def repeat_seed(base, k):
    return int(base) + (int(k) << MAX_ITER_BITS)


@dataclass(frozen=True)
class RunRecord:
    knob: str
    value: object
    condition: str
    repeat: int
    seed: int
    best_index: int
    E_valid: float
    L: float
    mu: float
    C: float
    cells: int
    coverage: float
    E_test: float
    rel_test: float


@dataclass
class SweepResult:
    knob_name: str
    knob_values: list
    repeats: int
    runs: list
    traces: dict = field(default_factory=dict)

    def conditions(self):
        return sorted({r.condition for r in self.runs})

    def aggregate(self, metric, condition=None):
        """{knob value: (mean, std)} of a run metric, std over repeats (ddof=0)."""
        out = {}
        for v in self.knob_values:
            xs = [getattr(r, metric) for r in self.runs
                  if r.value == v and (condition is None or r.condition == condition)]
            if xs:
                out[v] = (float(np.mean(xs)), float(np.std(xs)))
        return out

    def save(self, directory):
        os.makedirs(os.path.join(directory, "traces"), exist_ok=True)
        names = [f.name for f in fields(RunRecord)]
        with open(os.path.join(directory, "runs.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(names)
            for r in self.runs:
                w.writerow([repr(x) if isinstance(x, float) else x for x in astuple_run(r)])
        with open(os.path.join(directory, "summary.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            metrics = ("E_test", "rel_test", "L", "mu", "coverage")
            w.writerow(["value", "condition"] + [f"{m}_{s}" for m in metrics for s in ("mean", "std")])
            for cond in self.conditions():
                aggs = [self.aggregate(m, cond) for m in metrics]
                for v in self.knob_values:
                    if v in aggs[0]:
                        w.writerow([v, cond] + [repr(x) for a in aggs for x in a[v]])
        for key, trace in sorted(self.traces.items()):
            write_trace(trace, os.path.join(directory, "traces", key + ".csv"))
        with open(os.path.join(directory, "sweep.json"), "w") as f:
            json.dump({"knob_name": self.knob_name, "knob_values": self.knob_values,
                       "repeats": self.repeats}, f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, directory):
        with open(os.path.join(directory, "sweep.json")) as f:
            meta = json.load(f)
        values = meta["knob_values"]
        by_str = {str(v): v for v in values}
        runs = []
        with open(os.path.join(directory, "runs.csv"), newline="") as f:
            for row in csv.DictReader(f):
                runs.append(RunRecord(
                    row["knob"], by_str.get(row["value"], row["value"]), row["condition"],
                    int(row["repeat"]), int(row["seed"]), int(row["best_index"]),
                    float(row["E_valid"]), float(row["L"]), float(row["mu"]), float(row["C"]),
                    int(row["cells"]), float(row["coverage"]), float(row["E_test"]),
                    float(row["rel_test"])))
        traces = {}
        tdir = os.path.join(directory, "traces")
        for name in sorted(os.listdir(tdir)):
            traces[name[:-4]] = read_trace(os.path.join(tdir, name))
        return cls(meta["knob_name"], values, meta["repeats"], runs, traces)


def astuple_run(r):
    return tuple(getattr(r, f.name) for f in fields(RunRecord))


def trace_key(value, condition, repeat):
    return f"{value}__{condition}__{repeat}".replace("/", "_")


def _run_one(job):
    knob, value, condition, k, cfg, psi, dataset, cache = job
    res = optimize(cfg, psi, dataset.valid, cache=cache)
    err = test_error(res.phi, psi, dataset.test, cfg.lasso_lambda, cfg.lasso_max_iter, cfg.lasso_tol,
                     cfg.lasso_momentum)
    b = res.best
    rec = RunRecord(knob, value, condition, k, cfg.seed, b.candidate_index, b.recon_error,
                    b.path_length, b.incoherence, b.total_cost, b.n_cells,
                    b.n_cells / cfg.N, err.mse, err.relative_l2)
    return rec, res.trace


def run_sweep(knob, values, jobs_for, repeats, threads=1):
    """Generic sweep driver.

    ``jobs_for(value, k)`` yields ``(condition, cfg, psi, dataset)`` tuples
    for knob value ``value`` and repeat ``k``. Candidate evaluations are
    cached per (psi, dataset), so sweeps over cost weights evaluate every
    candidate once.
    """
    jobs = []
    caches = {}
    for v in values:
        for k in range(repeats):
            for condition, cfg, psi, dataset in jobs_for(v, k):
                # candidates are shared across weight values of one (psi, dataset)
                cache = caches.setdefault((id(psi), id(dataset)), {})
                jobs.append((knob, v, condition, k, cfg, psi, dataset, cache))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    runs = [r for r, _ in results]
    traces = {trace_key(r.value, r.condition, r.repeat): t for r, t in results}
    return SweepResult(knob, list(values), repeats, runs, traces)


def sweep_p(cfg_base, psi, dataset, p_values=P_VALUES, repeats=3, thetas=(3, 0), threads=1):
    """Sweep the Bernoulli probability, with and without column pruning."""
    def jobs(p, k):
        for th in thetas:
            cfg = cfg_base.replace(p=p, theta=th, seed=repeat_seed(cfg_base.seed, k))
            yield f"theta={th}", cfg, psi, dataset
    return run_sweep("p", list(p_values), jobs, repeats, threads)


def sweep_lambda_path(cfg_base, psi, dataset, values, repeats=3, threads=1):
    def jobs(v, k):
        yield "base", cfg_base.replace(lambda_path=v, seed=repeat_seed(cfg_base.seed, k)), psi, dataset
    return run_sweep("lambda_path", list(values), jobs, repeats, threads)


def sweep_lambda_incoh(cfg_base, psi, dataset, values, repeats=3, threads=1):
    def jobs(v, k):
        yield "base", cfg_base.replace(lambda_incoh=v, seed=repeat_seed(cfg_base.seed, k)), psi, dataset
    return run_sweep("lambda_incoh", list(values), jobs, repeats, threads)


def compare_dictionaries(cfg_base, dicts, dataset, repeats=1, threads=1):
    """Run the identical search protocol once per named dictionary."""
    names = list(dicts)

    def jobs(name, k):
        yield "base", cfg_base.replace(seed=repeat_seed(cfg_base.seed, k)), dicts[name], dataset
    return run_sweep("dict", names, jobs, repeats, threads)


def length_binned_comparison(L_a, E_a, L_b, E_b, n_bins=5):
    """Mean error of two conditions inside shared path-length bins.

    Bins split the combined length range evenly. Returns a list of
    ``(lo, hi, mean_a, mean_b)`` for bins populated by both conditions.
    """
    L_a, E_a, L_b, E_b = map(np.asarray, (L_a, E_a, L_b, E_b))
    allL = np.concatenate([L_a, L_b])
    edges = np.linspace(allL.min(), allL.max(), n_bins + 1)
    ia = np.clip(np.digitize(L_a, edges[1:-1]), 0, n_bins - 1)
    ib = np.clip(np.digitize(L_b, edges[1:-1]), 0, n_bins - 1)
    out = []
    for b in range(n_bins):
        ma, mb = ia == b, ib == b
        if ma.any() and mb.any():
            out.append((float(edges[b]), float(edges[b + 1]),
                        float(E_a[ma].mean()), float(E_b[mb].mean())))
    return out


def metrics_dict(best, err, cfg):
    d = asdict(best)
    d.update(test_mse=err.mse, test_relative_l2=err.relative_l2, test_skipped=err.skipped,
             coverage=best.n_cells / cfg.N)
    return d
