import json
import os
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

from cspath.cli import build_parser, main, resolve
from cspath.dataset import PatchDataset
from cspath.dictionary import Dictionary
from cspath.measurement import MeasurementMatrix, indicator
from cspath.montecarlo import MCConfig, optimize, read_trace
from cspath.pathplan import PathPlan, nn_path, unflatten

DATA = os.path.join(os.path.dirname(__file__), "data")
SUBCOMMANDS = ["ingest", "train-dict", "optimize", "eval", "sweep", "plot"]


def pipeline():
    with open(os.path.join(DATA, "golden_pipeline.json")) as f:
        return json.load(f)


def run_pipeline(workdir, monkeypatch, capsys):
    pipe = pipeline()
    shutil.copy(os.path.join(DATA, pipe["field"]), workdir)
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    monkeypatch.chdir(workdir)
    for argv in pipe["steps"]:
        assert main(argv) == 0
    capsys.readouterr()
    os.remove(os.path.join(workdir, pipe["field"]))


def tree(root):
    out = {}
    for d, _, files in os.walk(root):
        for name in files:
            full = os.path.join(d, name)
            with open(full, "rb") as f:
                out[os.path.relpath(full, root)] = f.read()
    return out


def cli_error(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return exc.value.code, json.loads(err[0])


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_on_every_subcommand(cmd):
    proc = subprocess.run([sys.executable, "-m", "cspath.cli", cmd, "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "--" in proc.stdout


def test_documented_flags_exist():
    flags = ["--field", "--window", "--stride", "--factor", "--split-seed", "--atoms",
             "--dict-lambda", "--epochs", "--n-iter", "--measurements", "--prob", "--theta",
             "--lambda-valid", "--lambda-path", "--lambda-incoh", "--lasso-lambda", "--seed",
             "--threads", "--out"]
    parser = build_parser()
    texts = "".join(a.format_help() for a in parser._subparsers._group_actions[0].choices.values())
    for flag in flags:
        assert flag in texts


def test_precedence_cli_over_config_over_default(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"--prob": 0.07, "n_iter": 9, "theta": 2, "window": 5}))
    ns = build_parser().parse_args(["optimize", "--config", str(cfg), "--theta", "1"])
    opts = resolve(ns)
    assert opts["prob"] == 0.07 and opts["n-iter"] == 9
    assert opts["theta"] == 1
    assert opts["measurements"] == 35
    assert "window" not in opts


def test_error_lines(tmp_path, capsys):
    code, err = cli_error(capsys, ["optimize", "--dataset", str(tmp_path / "none"),
                                   "--dictionary", "x", "--out", str(tmp_path / "o")])
    assert code == 1 and err["error"] == "missing-file"
    code, err = cli_error(capsys, ["ingest", "--field", os.path.join(DATA, "field8.csv"),
                                   "--fractions", "0.5,0.6,0.1", "--out", str(tmp_path / "o")])
    assert code == 1 and err["error"] == "invalid-fractions"
    code, err = cli_error(capsys, ["ingest", "--bogus"])
    assert code == 2 and err["error"] == "usage"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, err = cli_error(capsys, ["ingest", "--config", str(bad)])
    assert err["error"] == "bad-config"


def test_dimension_mismatch_reported(tmp_path, monkeypatch, capsys):
    field = os.path.join(DATA, "field8.csv")
    main(["ingest", "--field", field, "--window", "4", "--stride", "1", "--factor", "1",
          "--out", str(tmp_path / "d4")])
    main(["ingest", "--field", field, "--window", "2", "--stride", "1", "--factor", "1",
          "--out", str(tmp_path / "d2")])
    main(["train-dict", "--dataset", str(tmp_path / "d2"), "--kind", "dct",
          "--out", str(tmp_path / "psi")])
    capsys.readouterr()
    code, err = cli_error(capsys, ["optimize", "--dataset", str(tmp_path / "d4"),
                                   "--dictionary", str(tmp_path / "psi"), "--out",
                                   str(tmp_path / "o")])
    assert code == 1 and err["error"] == "dimension-mismatch"


def test_golden_pipeline(tmp_path, monkeypatch, capsys):
    t = time.perf_counter()
    for name in ("a", "b"):
        (tmp_path / name).mkdir()
        run_pipeline(tmp_path / name, monkeypatch, capsys)
    assert time.perf_counter() - t < 30
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a == b
    golden = tree(os.path.join(DATA, "golden"))
    assert sorted(a) == sorted(golden)
    for name in golden:
        assert a[name] == golden[name], name


def test_golden_bundle_matches_module_oracles(tmp_path, monkeypatch, capsys):
    run_pipeline(tmp_path, monkeypatch, capsys)
    ds = PatchDataset.load(tmp_path / "data")
    assert ds.counts() == {"train": 17, "valid": 1, "test": 7}
    psi = Dictionary.from_json(tmp_path / "dict" / "dictionary.json")
    cfg = MCConfig(n_iter=10, M=4, N=16, p=0.2, theta=1, lasso_lambda=0.05, lambda_path=0.001,
                   grid_rows=4, grid_cols=4, seed=0)
    res = optimize(cfg, psi, ds.valid)
    phi = MeasurementMatrix.from_json(tmp_path / "opt" / "phi.json")
    assert np.array_equal(phi.bits, res.phi.bits)
    assert read_trace(tmp_path / "opt" / "trace.csv") == res.trace
    plan = PathPlan.from_json(tmp_path / "opt" / "path.json")
    assert plan == nn_path(unflatten(indicator(phi), 4, 4))
    metrics = json.loads((tmp_path / "opt" / "metrics.json").read_text())
    assert metrics["total_cost"] == min(e.total_cost for e in res.trace)


def test_rerun_differs_only_in_timestamp(tmp_path, monkeypatch, capsys):
    field = os.path.join(DATA, "field8.csv")
    argv = ["ingest", "--field", field, "--window", "4", "--stride", "2", "--factor", "2"]
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "100")
    main(argv + ["--out", str(tmp_path / "x")])
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "200")
    main(argv + ["--out", str(tmp_path / "y")])
    capsys.readouterr()
    x = json.loads((tmp_path / "x" / "manifest.json").read_text())
    y = json.loads((tmp_path / "y" / "manifest.json").read_text())
    assert x.pop("created") != y.pop("created")
    assert x == y
    assert (tmp_path / "x" / "patches.csv").read_bytes() == (tmp_path / "y" / "patches.csv").read_bytes()


def test_threads_do_not_change_bundle(tmp_path, monkeypatch, capsys):
    pipe = pipeline()
    shutil.copy(os.path.join(DATA, pipe["field"]), tmp_path)
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    monkeypatch.chdir(tmp_path)
    for argv in pipe["steps"][:2]:
        main(argv)
    opt = pipe["steps"][2][:-2]  # without "--out opt"
    main(opt + ["--threads", "1", "--out", "serial"])
    main(opt + ["--threads", "4", "--out", "parallel"])
    capsys.readouterr()
    assert tree(tmp_path / "serial") == tree(tmp_path / "parallel")


def test_config_file_mirrors_flags(tmp_path, monkeypatch, capsys):
    field = os.path.join(DATA, "field8.csv")
    cfg = tmp_path / "ingest.json"
    cfg.write_text(json.dumps({"field": field, "window": 4, "stride": 1, "factor": 1,
                               "split-seed": 3}))
    main(["ingest", "--config", str(cfg), "--out", str(tmp_path / "c")])
    main(["ingest", "--field", field, "--window", "4", "--stride", "1", "--factor", "1",
          "--split-seed", "3", "--out", str(tmp_path / "f")])
    capsys.readouterr()
    assert (tmp_path / "c" / "patches.csv").read_bytes() == (tmp_path / "f" / "patches.csv").read_bytes()


def test_train_dict_analytic_kinds(tmp_path, capsys):
    field = os.path.join(DATA, "field8.csv")
    main(["ingest", "--field", field, "--window", "4", "--stride", "2", "--factor", "1",
          "--out", str(tmp_path / "d")])
    for kind in ("dct", "polynomial"):
        main(["train-dict", "--dataset", str(tmp_path / "d"), "--kind", kind, "--max-degree", "2",
              "--out", str(tmp_path / kind)])
    summary = capsys.readouterr().out.strip().splitlines()
    assert json.loads(summary[1]) == {"K": 16, "N": 16, "kind": "dct"}
    assert json.loads(summary[2]) == {"K": 6, "N": 16, "kind": "polynomial"}


def test_plot_sweep_bundle(tmp_path, monkeypatch, capsys):
    run_pipeline(tmp_path, monkeypatch, capsys)
    main(["plot", "--bundle", "sweep", "--out", "figs"])
    out = json.loads(capsys.readouterr().out)
    assert out["written"] == ["error_vs_length.svg"]
    assert (tmp_path / "figs" / "error_vs_length.svg").read_text().startswith("<svg")
