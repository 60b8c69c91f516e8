import numpy as np
import pytest

from cspath.dataset import build_dataset, gaussian_bumps_field
from cspath.dictionary import dct_dictionary, polynomial_dictionary
from cspath.evaluation import (SweepResult, compare_dictionaries, error_metrics,
                               length_binned_comparison, reconstruct, repeat_seed, sweep_lambda_incoh,
                               sweep_lambda_path, sweep_p, test_error)
from cspath.measurement import MeasurementMatrix, sample_matrix
from cspath.montecarlo import MCConfig, optimize


@pytest.fixture(scope="module")
def tiny():
    ds = build_dataset(gaussian_bumps_field(12, 12, seed=4), 4, 2, 1, seed=0)
    cfg = MCConfig(n_iter=6, M=4, N=16, p=0.3, theta=0, grid_rows=4, grid_cols=4,
                   lasso_lambda=0.01, lasso_max_iter=300, seed=1)
    return ds, cfg, dct_dictionary(4)


def test_reconstruct_lossless_limit():
    psi = dct_dictionary(4)
    s = np.random.default_rng(0).uniform(size=16)
    phi = MeasurementMatrix(np.eye(16))
    s_hat = reconstruct(phi, psi, phi.as_float() @ s, 1e-9, max_iter=20000, tol=1e-15)
    assert np.max(np.abs(s_hat - s)) < 1e-5


def test_reconstruct_without_measurements_is_zero():
    phi = MeasurementMatrix(np.zeros((0, 16), dtype=np.uint8))
    assert not reconstruct(phi, dct_dictionary(4), np.zeros(0), 0.1).any()


def test_reconstruct_planted_two_sparse():
    psi = dct_dictionary(4)
    c = np.zeros(16)
    c[[1, 6]] = [1.0, -0.7]
    s = psi.atoms @ c
    for seed in range(20):
        phi = sample_matrix(10, 16, 0.5, seed)
        s_hat = reconstruct(phi, psi, phi.as_float() @ s, 1e-4, max_iter=100000, tol=1e-14,
                            momentum=True)
        assert np.linalg.norm(s_hat - s) / np.linalg.norm(s) < 1e-2


def test_error_metrics_examples():
    S = np.random.default_rng(1).standard_normal((4, 5))
    assert error_metrics(S, S) == (0.0, 0.0, 0)
    U = S / np.linalg.norm(S, axis=1, keepdims=True)
    mse, rel, _ = error_metrics(U, np.zeros_like(U))
    assert mse == pytest.approx(1.0) and rel == pytest.approx(1.0)
    S3 = np.array([[3.0, 4.0], [1.0, 0.0], [0.0, 0.0]])
    H3 = np.array([[3.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    mse, rel, skipped = error_metrics(S3, H3)
    assert mse == pytest.approx((16 + 1 + 1) / 3)
    assert rel == pytest.approx((4 / 5 + 1) / 2)
    assert skipped == 1


def test_test_error_singleton_is_per_patch():
    psi = dct_dictionary(4)
    phi = sample_matrix(6, 16, 0.4, 2)
    T = np.random.default_rng(2).uniform(size=(3, 16))
    full = test_error(phi, psi, T, 0.01)
    singles = [test_error(phi, psi, T[i:i + 1], 0.01) for i in range(3)]
    assert full.mse == pytest.approx(np.mean([e.mse for e in singles]))
    with pytest.raises(ValueError):
        test_error(phi, psi, np.zeros((0, 16)), 0.01)


def test_repeat_seeds_are_disjoint():
    assert repeat_seed(5, 0) == 5
    assert repeat_seed(5, 1) - repeat_seed(5, 0) == 1 << 20


def test_degenerate_sweep_equals_direct_call(tiny):
    ds, cfg, psi = tiny
    sw = sweep_p(cfg, psi, ds, [0.2], repeats=1, thetas=(0,))
    res = optimize(cfg.replace(p=0.2), psi, ds.valid)
    (run,) = sw.runs
    assert run.C == res.best.total_cost and run.best_index == res.best.candidate_index
    err = test_error(res.phi, psi, ds.test, cfg.lasso_lambda, cfg.lasso_max_iter, cfg.lasso_tol,
                     cfg.lasso_momentum)
    assert run.E_test == err.mse
    assert sw.aggregate("L") == {0.2: (res.best.path_length, 0.0)}


def test_sweep_p_conditions_and_repeats(tiny):
    ds, cfg, psi = tiny
    sw = sweep_p(cfg, psi, ds, [0.1, 0.3], repeats=2)
    assert sw.conditions() == ["theta=0", "theta=3"]
    assert len(sw.runs) == 8 and len(sw.traces) == 8
    for cond in sw.conditions():
        agg = sw.aggregate("L", cond)
        assert set(agg) == {0.1, 0.3}
        assert all(sd >= 0 for _, sd in agg.values())


def test_sweep_reaggregates_from_disk(tiny, tmp_path):
    ds, cfg, psi = tiny
    sw = sweep_lambda_path(cfg, psi, ds, [0.0, 1.0], repeats=2, threads=2)
    sw.save(tmp_path)
    back = SweepResult.load(tmp_path)
    assert back.runs == sw.runs
    assert back.aggregate("L") == sw.aggregate("L")
    # every run's selected L is the L of its trace minimum
    for r in back.runs:
        trace = back.traces[f"{r.value}__{r.condition}__{r.repeat}"]
        best = min(trace, key=lambda e: (e.total_cost, e.candidate_index))
        assert best.path_length == r.L
    serial = sweep_lambda_path(cfg, psi, ds, [0.0, 1.0], repeats=2, threads=1)
    assert serial.runs == sw.runs


def test_sweep_lambda_incoh_runs(tiny):
    ds, cfg, psi = tiny
    sw = sweep_lambda_incoh(cfg, psi, ds, [0.0, 10.0], repeats=2)
    mu = sw.aggregate("mu")
    assert mu[10.0][0] <= mu[0.0][0]


def test_full_sampling_error_is_representation_residual():
    ds = build_dataset(gaussian_bumps_field(12, 12, seed=5), 4, 2, 1, seed=0)
    for psi in (dct_dictionary(4), polynomial_dictionary(4, 2)):
        err = test_error(MeasurementMatrix(np.eye(16)), psi, ds.test, 1e-10, 50000, 1e-16, True)
        A = psi.atoms
        resid = ds.test - ds.test @ A @ np.linalg.pinv(A)
        assert err.mse == pytest.approx(np.mean(np.sum(resid ** 2, axis=1)), rel=1e-4, abs=1e-10)


def test_compare_dictionaries_shares_candidates(tiny):
    ds, cfg, _ = tiny
    dicts = {"dct": dct_dictionary(4), "polynomial": polynomial_dictionary(4, 2)}
    table = compare_dictionaries(cfg.replace(lambda_valid=0, lambda_incoh=0), dicts, ds)
    assert [r.value for r in table.runs] == ["dct", "polynomial"]
    # with path length as the only cost both dictionaries select the same candidate
    assert table.runs[0].best_index == table.runs[1].best_index


def test_polynomial_competitive_on_polynomial_field():
    r, c = np.mgrid[0:16, 0:16] / 15.0
    field = 0.3 + 0.4 * r - 0.2 * c + 0.3 * r * c
    ds = build_dataset(field, 4, 2, 1, seed=0)
    cfg = MCConfig(n_iter=5, M=6, N=16, p=0.4, theta=0, grid_rows=4, grid_cols=4,
                   lasso_lambda=1e-4, lasso_max_iter=3000, seed=2)
    dicts = {"dct": dct_dictionary(4), "polynomial": polynomial_dictionary(4, 2)}
    table = compare_dictionaries(cfg, dicts, ds, repeats=2)
    e = table.aggregate("E_test")
    assert e["polynomial"][0] <= e["dct"][0] * 1.5


def test_length_binned_comparison():
    bins = length_binned_comparison([1, 2, 9], [0.1, 0.3, 0.5], [1.5, 8], [0.2, 0.6], n_bins=2)
    assert bins == [(1.0, 5.0, 0.2, 0.2), (5.0, 9.0, 0.5, 0.6)]
    # a bin with only one condition is omitted
    bins = length_binned_comparison([1, 1.2], [0.1, 0.1], [1.1, 9], [0.2, 0.3], n_bins=2)
    assert len(bins) == 1
