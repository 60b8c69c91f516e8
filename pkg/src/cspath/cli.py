"""
Command-line pipeline: ingest -> train-dict -> optimize -> eval, plus
sweeps and plotting. Every subcommand writes a plain directory bundle with
a ``manifest.json`` describing how to replay it.

Option precedence: command-line flags, then ``--config`` JSON (keys are
the flag names, with or without the leading dashes), then defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .dataset import DEFAULT_FRACTIONS, PatchDataset, build_dataset, load_field
from .dictionary import Dictionary, dct_dictionary, learn_dictionary, polynomial_dictionary
from .evaluation import (P_VALUES, SweepResult, compare_dictionaries, metrics_dict,
                         sweep_lambda_incoh, sweep_lambda_path, sweep_p, test_error)
from .measurement import MeasurementMatrix, indicator
from .montecarlo import MCConfig, optimize, read_trace, write_trace
from .pathplan import PathPlan, nn_path, unflatten
from . import svg


class CLIError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, code=2)


def _fail(kind, message, code=1):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")
    sys.exit(code)


DEFAULTS = {
    "window": 128, "stride": 32, "factor": 4, "split-seed": 0,
    "fractions": ",".join(str(f) for f in DEFAULT_FRACTIONS), "split-mode": "random",
    "kind": "learned", "atoms": None, "dict-lambda": 0.1, "epochs": 30, "max-degree": 3,
    "n-iter": 100, "measurements": 35, "prob": 0.05, "theta": 3,
    "lambda-valid": 1.0, "lambda-path": 0.001, "lambda-incoh": 0.0,
    "lasso-lambda": 0.1, "lasso-max-iter": 2000, "seed": 0, "threads": 1,
    "repeats": 3, "values": None, "sweep": "p",
}


# option names accepted by each subcommand (filled by build_parser)
COMMAND_OPTIONS = {}


def _add(p, *names):
    options = {
        "field": dict(help="input raster (CSV grid or PGM)"),
        "window": dict(type=int, help="patch window in pixels"),
        "stride": dict(type=int, help="sliding-window stride"),
        "factor": dict(type=int, help="block-mean downsampling factor"),
        "split-seed": dict(type=int, help="seed of the train/valid/test permutation"),
        "fractions": dict(help="train,valid,test fractions"),
        "split-mode": dict(choices=["random", "blocked"]),
        "dataset": dict(help="dataset bundle directory (from ingest)"),
        "dictionary": dict(help="dictionary.json file or bundle directory"),
        "phi": dict(help="phi.json file or optimize bundle directory"),
        "kind": dict(choices=["learned", "dct", "polynomial"], help="dictionary kind"),
        "atoms": dict(type=int, help="number of atoms K (default N/4)"),
        "dict-lambda": dict(type=float, help="sparsity weight for dictionary learning"),
        "epochs": dict(type=int),
        "max-degree": dict(type=int, help="polynomial dictionary degree"),
        "n-iter": dict(type=int, help="Monte-Carlo candidates"),
        "measurements": dict(type=int, help="rows M of the measurement matrix"),
        "prob": dict(type=float, help="probability p of a one"),
        "theta": dict(type=int, help="column-pruning threshold (0 disables)"),
        "lambda-valid": dict(type=float),
        "lambda-path": dict(type=float),
        "lambda-incoh": dict(type=float),
        "lasso-lambda": dict(type=float),
        "lasso-max-iter": dict(type=int),
        "seed": dict(type=int, help="master seed; all randomness derives from it"),
        "threads": dict(type=int, help="worker threads (results do not depend on it)"),
        "repeats": dict(type=int),
        "values": dict(help="comma-separated knob values"),
        "dictionaries": dict(help="name=path,... dictionaries for --sweep dict"),
        "sweep": dict(choices=["p", "lambda_path", "lambda_incoh", "dict"], help="knob to sweep"),
        "bundle": dict(help="bundle directory to plot"),
        "out": dict(help="output directory"),
        "config": dict(help="JSON config file keyed by flag names"),
    }
    for n in names:
        p.add_argument("--" + n, dest=n, **options[n])
    COMMAND_OPTIONS[p.prog.split()[-1]] = tuple(n for n in names if n != "config")


def build_parser():
    parser = _Parser(prog="cspath", description=__doc__.strip().splitlines()[0],
                     argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    mc = ("n-iter", "measurements", "prob", "theta", "lambda-valid", "lambda-path",
          "lambda-incoh", "lasso-lambda", "lasso-max-iter", "seed", "threads")

    p = sub.add_parser("ingest", help="extract, downsample and split patches",
                       argument_default=argparse.SUPPRESS)
    _add(p, "field", "window", "stride", "factor", "split-seed", "fractions", "split-mode",
         "out", "config")
    p = sub.add_parser("train-dict", help="learn or build a dictionary",
                       argument_default=argparse.SUPPRESS)
    _add(p, "dataset", "kind", "atoms", "dict-lambda", "epochs", "max-degree", "seed", "out",
         "config")
    p = sub.add_parser("optimize", help="Monte-Carlo measurement matrix search",
                       argument_default=argparse.SUPPRESS)
    _add(p, "dataset", "dictionary", *mc, "out", "config")
    p = sub.add_parser("eval", help="test-set reconstruction metrics",
                       argument_default=argparse.SUPPRESS)
    _add(p, "dataset", "dictionary", "phi", "lasso-lambda", "lasso-max-iter", "out", "config")
    p = sub.add_parser("sweep", help="hyper-parameter sweeps",
                       argument_default=argparse.SUPPRESS)
    _add(p, "sweep", "dataset", "dictionary", "dictionaries", "values", "repeats", *mc,
         "out", "config")
    p = sub.add_parser("plot", help="render SVG plots for a bundle",
                       argument_default=argparse.SUPPRESS)
    _add(p, "bundle", "out")
    return parser


def resolve(ns):
    """Merge defaults, config file and explicit flags (in increasing priority).

    Only options of the chosen subcommand are kept; unrelated config keys
    are ignored.
    """
    known = COMMAND_OPTIONS[ns.command]
    opts = {k: v for k, v in DEFAULTS.items() if k in known}
    given = {k: v for k, v in vars(ns).items() if k != "command"}
    if "config" in given:
        path = given.pop("config")
        try:
            with open(path) as f:
                cfg = json.load(f)
        except OSError as e:
            raise CLIError("missing-file", f"config {path}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise CLIError("bad-config", f"config {path}: {e}") from None
        if not isinstance(cfg, dict):
            raise CLIError("bad-config", f"config {path}: expected a JSON object")
        cfg = {k.lstrip("-").replace("_", "-"): v for k, v in cfg.items()}
        opts.update({k: v for k, v in cfg.items() if k in known})
    opts.update(given)
    return opts


def _require(opts, *names):
    for n in names:
        if opts.get(n) is None:
            raise CLIError("missing-argument", f"--{n} is required")


def _sha256(path):
    h = hashlib.sha256()
    if os.path.isdir(path):
        for name in sorted(os.listdir(path)):
            full = os.path.join(path, name)
            if os.path.isfile(full) and name != "manifest.json":
                h.update(name.encode())
                with open(full, "rb") as f:
                    h.update(f.read())
    else:
        with open(path, "rb") as f:
            h.update(f.read())
    return h.hexdigest()


def _timestamp():
    # SOURCE_DATE_EPOCH pins the timestamp for byte-reproducible bundles
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _snapshot(opts):
    # output location and thread count never change bundle contents
    return {k: opts[k] for k in sorted(opts) if k not in ("out", "threads")}


def write_manifest(out, command, opts, inputs):
    man = {"tool": "cspath", "version": __version__, "command": command,
           "config": _snapshot(opts),
           "inputs": {k: {"path": v, "sha256": _sha256(v)} for k, v in sorted(inputs.items())},
           "seed": opts.get("seed"), "created": _timestamp()}
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump(man, f, indent=1, sort_keys=True)
        f.write("\n")


def _json_dump(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True)
        f.write("\n")


def _exists(path, what):
    if path is None or not os.path.exists(path):
        raise CLIError("missing-file", f"{what} not found: {path}")


def load_dataset(path):
    _exists(path, "dataset")
    return PatchDataset.load(path)


def load_dictionary(path):
    _exists(path, "dictionary")
    if os.path.isdir(path):
        path = os.path.join(path, "dictionary.json")
        _exists(path, "dictionary")
    return Dictionary.from_json(path)


def load_phi(path):
    _exists(path, "measurement matrix")
    if os.path.isdir(path):
        path = os.path.join(path, "phi.json")
        _exists(path, "measurement matrix")
    return MeasurementMatrix.from_json(path)


def _check_dims(ds, psi):
    if ds.N != psi.N:
        raise CLIError("dimension-mismatch",
                       f"dataset patches have N={ds.N} but dictionary has N={psi.N}")


def _fractions(text):
    try:
        fr = tuple(float(x) for x in str(text).split(","))
    except ValueError:
        raise CLIError("invalid-fractions", f"cannot parse fractions {text!r}") from None
    if len(fr) != 3 or min(fr) < 0 or abs(sum(fr) - 1.0) > 1e-9:
        raise CLIError("invalid-fractions", f"fractions must be three nonnegative values summing to 1, got {text}")
    return fr


def mc_config(opts, ds):
    return MCConfig(n_iter=int(opts["n-iter"]), M=int(opts["measurements"]), N=ds.N,
                    p=float(opts["prob"]), theta=int(opts["theta"]),
                    lambda_valid=float(opts["lambda-valid"]),
                    lambda_path=float(opts["lambda-path"]),
                    lambda_incoh=float(opts["lambda-incoh"]),
                    lasso_lambda=float(opts["lasso-lambda"]),
                    lasso_max_iter=int(opts["lasso-max-iter"]),
                    seed=int(opts["seed"]), grid_rows=ds.patch_side, grid_cols=ds.patch_side)


def cmd_ingest(opts):
    _require(opts, "field", "out")
    fractions = _fractions(opts["fractions"])
    _exists(opts["field"], "field")
    field = load_field(opts["field"])
    ds = build_dataset(field, int(opts["window"]), int(opts["stride"]), int(opts["factor"]),
                       int(opts["split-seed"]), fractions, opts["split-mode"],
                       source=os.path.basename(opts["field"]))
    os.makedirs(opts["out"], exist_ok=True)
    ds.save(opts["out"])
    # the dataset manifest doubles as the run manifest; add provenance fields
    with open(os.path.join(opts["out"], "manifest.json")) as f:
        man = json.load(f)
    man.update(tool="cspath", version=__version__, command="ingest", config=_snapshot(opts),
               field_file_sha256=_sha256(opts["field"]), created=_timestamp())
    _json_dump(man, os.path.join(opts["out"], "manifest.json"))
    return ds.counts()


def cmd_train_dict(opts):
    _require(opts, "dataset", "out")
    ds = load_dataset(opts["dataset"])
    kind = opts["kind"]
    if kind == "learned":
        K = opts["atoms"] if opts["atoms"] is not None else max(1, ds.N // 4)
        psi = learn_dictionary(ds.train, int(K), float(opts["dict-lambda"]),
                               int(opts["epochs"]), int(opts["seed"]))
    elif kind == "dct":
        psi = dct_dictionary(ds.patch_side)
    else:
        psi = polynomial_dictionary(ds.patch_side, int(opts["max-degree"]))
    os.makedirs(opts["out"], exist_ok=True)
    psi.to_json(os.path.join(opts["out"], "dictionary.json"))
    if psi.history:
        with open(os.path.join(opts["out"], "history.csv"), "w") as f:
            f.write("epoch,objective\n")
            for i, v in enumerate(psi.history, 1):
                f.write(f"{i},{v!r}\n")
    write_manifest(opts["out"], "train-dict", opts, {"dataset": opts["dataset"]})
    return {"kind": psi.kind, "N": psi.N, "K": psi.K}


def _write_result(out, res, cfg, psi, ds):
    res.phi.to_json(os.path.join(out, "phi.json"))
    res.path.to_json(os.path.join(out, "path.json"))
    res.path.to_csv(os.path.join(out, "path.csv"))
    _json_dump(res.best.__dict__, os.path.join(out, "eval.json"))
    write_trace(res.trace, os.path.join(out, "trace.csv"))
    err = test_error(res.phi, psi, ds.test, cfg.lasso_lambda, cfg.lasso_max_iter,
                     cfg.lasso_tol, cfg.lasso_momentum)
    metrics = metrics_dict(res.best, err, cfg)
    _json_dump(metrics, os.path.join(out, "metrics.json"))
    return metrics


def cmd_optimize(opts):
    _require(opts, "dataset", "dictionary", "out")
    ds = load_dataset(opts["dataset"])
    psi = load_dictionary(opts["dictionary"])
    _check_dims(ds, psi)
    if len(ds.valid) == 0 or len(ds.test) == 0:
        raise CLIError("empty-split", "dataset needs non-empty validation and test splits")
    cfg = mc_config(opts, ds)
    res = optimize(cfg, psi, ds.valid, threads=int(opts["threads"]))
    os.makedirs(opts["out"], exist_ok=True)
    metrics = _write_result(opts["out"], res, cfg, psi, ds)
    with open(os.path.join(opts["out"], "path.svg"), "w") as f:
        f.write(svg.path_overlay(cfg.grid_rows, cfg.grid_cols, res.path.waypoints))
    write_manifest(opts["out"], "optimize", opts,
                   {"dataset": opts["dataset"], "dictionary": opts["dictionary"]})
    return metrics


def cmd_eval(opts):
    _require(opts, "dataset", "dictionary", "phi", "out")
    ds = load_dataset(opts["dataset"])
    psi = load_dictionary(opts["dictionary"])
    phi = load_phi(opts["phi"])
    _check_dims(ds, psi)
    if phi.N != ds.N:
        raise CLIError("dimension-mismatch", f"phi has N={phi.N} but dataset has N={ds.N}")
    if len(ds.test) == 0:
        raise CLIError("empty-split", "dataset has no test patches")
    err = test_error(phi, psi, ds.test, float(opts["lasso-lambda"]),
                     int(opts["lasso-max-iter"]), 1e-8, True)
    cells = int(indicator(phi).sum())
    side = ds.patch_side
    path = nn_path(unflatten(indicator(phi), side, side))
    metrics = {"test_mse": err.mse, "test_relative_l2": err.relative_l2,
               "test_skipped": err.skipped, "n_cells": cells, "coverage": cells / ds.N,
               "path_length": path.total_length, "M": phi.M, "N": phi.N}
    os.makedirs(opts["out"], exist_ok=True)
    _json_dump(metrics, os.path.join(opts["out"], "metrics.json"))
    write_manifest(opts["out"], "eval", opts, {"dataset": opts["dataset"],
                                               "dictionary": opts["dictionary"],
                                               "phi": opts["phi"]})
    return metrics


def _values(opts, default):
    if opts.get("values") is None:
        return list(default)
    v = opts["values"]
    if isinstance(v, list):
        return [float(x) for x in v]
    try:
        return [float(x) for x in str(v).split(",") if x.strip()]
    except ValueError:
        raise CLIError("bad-values", f"cannot parse --values {v!r}") from None


def cmd_sweep(opts):
    _require(opts, "dataset", "out")
    ds = load_dataset(opts["dataset"])
    kind = opts["sweep"]
    threads = int(opts["threads"])
    repeats = int(opts["repeats"])
    inputs = {"dataset": opts["dataset"]}
    if kind == "dict":
        _require(opts, "dictionaries")
        dicts = {}
        for item in str(opts["dictionaries"]).split(","):
            name, _, path = item.partition("=")
            dicts[name] = load_dictionary(path)
            _check_dims(ds, dicts[name])
            inputs["dictionary:" + name] = path
        cfg = mc_config(opts, ds)
        result = compare_dictionaries(cfg, dicts, ds, repeats, threads)
    else:
        _require(opts, "dictionary")
        psi = load_dictionary(opts["dictionary"])
        _check_dims(ds, psi)
        inputs["dictionary"] = opts["dictionary"]
        cfg = mc_config(opts, ds)
        if kind == "p":
            result = sweep_p(cfg, psi, ds, _values(opts, P_VALUES), repeats, threads=threads)
        elif kind == "lambda_path":
            result = sweep_lambda_path(cfg, psi, ds, _values(opts, (0, 0.001, 0.01, 0.1)),
                                       repeats, threads)
        else:
            result = sweep_lambda_incoh(cfg, psi, ds, _values(opts, (0, 0.01, 0.1, 1)),
                                        repeats, threads)
    os.makedirs(opts["out"], exist_ok=True)
    result.save(opts["out"])
    plot_sweep(result, opts["out"])
    write_manifest(opts["out"], "sweep", opts, inputs)
    return {"runs": len(result.runs)}


def plot_sweep(result, out):
    written = []

    def save(name, text):
        with open(os.path.join(out, name), "w") as f:
            f.write(text)
        written.append(name)

    if result.knob_name == "p":
        series = []
        for cond in result.conditions():
            L = result.aggregate("L", cond)
            E = result.aggregate("E_test", cond)
            xs = [L[v][0] for v in result.knob_values if v in L]
            series.append((cond, xs, [E[v][0] for v in result.knob_values if v in E],
                           [E[v][1] for v in result.knob_values if v in E]))
        save("error_vs_length.svg", svg.band_chart(series, "path length", "test MSE",
                                                   "Test error vs path length"))
    else:
        labels = [str(v) for v in result.knob_values]
        idx = list(range(len(labels)))
        for metric, name in (("L", "path length"), ("E_test", "test MSE"), ("mu", "incoherence")):
            series = []
            for cond in result.conditions():
                agg = result.aggregate(metric, cond)
                series.append((cond, idx, [agg[v][0] for v in result.knob_values],
                               [agg[v][1] for v in result.knob_values]))
            title = f"{name} vs {result.knob_name} ({', '.join(labels)})"
            save(f"{metric}_vs_{result.knob_name}.svg",
                 svg.band_chart(series, f"{result.knob_name} index", name, title))
    return written


def cmd_plot(opts):
    _require(opts, "bundle")
    b = opts["bundle"]
    out = opts.get("out") or b
    _exists(b, "bundle")
    os.makedirs(out, exist_ok=True)
    written = []
    if os.path.exists(os.path.join(b, "sweep.json")):
        written += plot_sweep(SweepResult.load(b), out)
    if os.path.exists(os.path.join(b, "phi.json")):
        phi = load_phi(b)
        side = int(round(np.sqrt(phi.N)))
        path = PathPlan.from_json(os.path.join(b, "path.json"))
        with open(os.path.join(out, "path.svg"), "w") as f:
            f.write(svg.path_overlay(side, side, path.waypoints))
        with open(os.path.join(out, "indicator.svg"), "w") as f:
            f.write(svg.heatmap(indicator(phi).reshape(side, side)))
        written += ["path.svg", "indicator.svg"]
        if os.path.exists(os.path.join(b, "trace.csv")):
            tr = read_trace(os.path.join(b, "trace.csv"))
            order = sorted(tr, key=lambda e: e.path_length)
            series = [("candidates", [e.path_length for e in order],
                       [e.recon_error for e in order], [0.0] * len(order))]
            with open(os.path.join(out, "trace.svg"), "w") as f:
                f.write(svg.band_chart(series, "path length", "validation MSE",
                                       "Monte-Carlo candidates"))
            written.append("trace.svg")
    if os.path.exists(os.path.join(b, "patches.csv")):
        ds = PatchDataset.load(b)
        side = ds.patch_side
        with open(os.path.join(out, "patch0.svg"), "w") as f:
            f.write(svg.heatmap(ds.patches[0].reshape(side, side)))
        written.append("patch0.svg")
    if not written:
        raise CLIError("empty-bundle", f"nothing to plot in {b}")
    return {"written": written}


COMMANDS = {"ingest": cmd_ingest, "train-dict": cmd_train_dict, "optimize": cmd_optimize,
            "eval": cmd_eval, "sweep": cmd_sweep, "plot": cmd_plot}


def main(argv=None):
    ns = build_parser().parse_args(argv)
    try:
        opts = resolve(ns)
        summary = COMMANDS[ns.command](opts)
    except CLIError as e:
        _fail(e.kind, e)
    except FileNotFoundError as e:
        _fail("missing-file", e)
    except (ValueError, KeyError) as e:
        _fail("invalid-input", e)
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
