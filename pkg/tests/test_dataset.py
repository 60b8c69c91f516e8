import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cspath.dataset import (Field, PatchDataset, build_dataset, downsample, extract_patches,
                            gaussian_bumps_field, load_field, patch_count, split, split_counts)


def write_pgm(path, pixels, maxval=255, binary=True):
    h, w = pixels.shape
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        body = np.asarray(pixels, dtype=dtype).tobytes()
        path.write_bytes(f"P5\n# test\n{w} {h}\n{maxval}\n".encode() + body)
    else:
        rows = "\n".join(" ".join(str(int(v)) for v in r) for r in pixels)
        path.write_text(f"P2\n{w} {h}\n{maxval}\n{rows}\n")


def test_pgm_maxval_pixel_is_one(tmp_path):
    px = np.array([[0, 128], [255, 17]])
    write_pgm(tmp_path / "a.pgm", px)
    f = load_field(tmp_path / "a.pgm")
    assert f.values[1, 0] == 1.0 and f.values[0, 0] == 0.0
    write_pgm(tmp_path / "b.pgm", px, binary=False)
    np.testing.assert_array_equal(load_field(tmp_path / "b.pgm").values, f.values)


def test_pgm_16_bit(tmp_path):
    write_pgm(tmp_path / "w.pgm", np.array([[0, 1000], [65535, 2]]), maxval=65535)
    assert load_field(tmp_path / "w.pgm").values[1, 0] == 1.0


def test_constant_csv_is_all_zero(tmp_path):
    (tmp_path / "c.csv").write_text("3,3,3\n3,3,3\n")
    f = load_field(tmp_path / "c.csv")
    assert f.values.shape == (2, 3) and not f.values.any()


def test_csv_normalized_to_unit_interval(tmp_path):
    (tmp_path / "g.csv").write_text("1,2\n3,5\n")
    np.testing.assert_allclose(load_field(tmp_path / "g.csv").values, [[0, 0.25], [0.5, 1.0]])


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_field(tmp_path / "missing.csv")
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(ValueError):
        load_field(tmp_path / "e.csv")
    (tmp_path / "n.csv").write_text("1,nan\n2,3\n")
    with pytest.raises(ValueError):
        load_field(tmp_path / "n.csv")


def test_full_size_field_shape_and_patch_count():
    field = load_field(np.random.default_rng(0).random((1390, 994)))
    assert (field.height, field.width) == (1390, 994)
    patches, offsets = extract_patches(field, 128, 32)
    assert patches.shape == (1120, 128, 128)
    assert len(offsets) == 40 * 28


def test_patch_count_examples():
    assert len(extract_patches(np.zeros((6, 6)), 6, 3)[0]) == 1
    assert len(extract_patches(np.zeros((10, 10)), 4, 2)[0]) == 16
    with pytest.raises(ValueError):
        extract_patches(np.zeros((5, 8)), 6, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 20), st.integers(1, 7))
def test_patch_count_formula(H, W, window, stride):
    window = min(window, H, W)
    naive = [(r, c) for r in range(H) for c in range(W)
             if r % stride == 0 and c % stride == 0 and r + window <= H and c + window <= W]
    patches, offsets = extract_patches(np.arange(H * W, dtype=float).reshape(H, W), window, stride)
    assert offsets == naive
    assert len(patches) == patch_count(H, W, window, stride)


def test_downsample_examples():
    p = np.arange(1, 17, dtype=float).reshape(4, 4)
    np.testing.assert_array_equal(downsample(p, 1), p)
    np.testing.assert_array_equal(downsample(np.full((4, 4), 0.3), 4), [[0.3]])
    np.testing.assert_array_equal(downsample(p, 2), [[3.5, 5.5], [11.5, 13.5]])
    with pytest.raises(ValueError):
        downsample(p, 3)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, 2, 4]), st.integers(0, 2**31))
def test_downsample_preserves_mean(factor, seed):
    p = np.random.default_rng(seed).random((8, 8))
    assert downsample(p, factor).mean() == pytest.approx(p.mean(), rel=1e-12, abs=1e-15)


def test_split_counts_examples():
    assert split_counts(1120) == (784, 56, 280)
    assert split_counts(1) == (0, 0, 1)


def test_split_deterministic_and_complete():
    P = np.random.default_rng(0).random((40, 4))
    a = split(P, seed=3)
    b = split(P, seed=3)
    assert a.split_assignment == b.split_assignment
    assert a.counts() == {"train": 28, "valid": 2, "test": 10}
    assert split(P, seed=4).split_assignment != a.split_assignment
    assert len(a.train) + len(a.valid) + len(a.test) == 40


def test_blocked_split_keeps_spatial_order():
    ds = split(np.zeros((20, 1)), mode="blocked")
    assert ds.split_assignment == ("train",) * 14 + ("valid",) + ("test",) * 5


def test_split_errors():
    with pytest.raises(ValueError):
        split(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        split(np.zeros((3, 4)), fractions=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        split(np.zeros((3, 4)), mode="spiral")


def test_full_size_ingest_under_one_second():
    field = gaussian_bumps_field(1390, 994, seed=0)
    t = time.perf_counter()
    ds = build_dataset(field, 128, 32, 4, seed=0)
    assert time.perf_counter() - t < 1.0
    assert ds.patch_side == 32 and ds.N == 1024
    assert ds.counts() == {"train": 784, "valid": 56, "test": 280}


def test_field_range_and_hash():
    f = gaussian_bumps_field(20, 30, seed=2)
    assert f.values.min() == 0.0 and f.values.max() == 1.0
    assert f.content_hash() == gaussian_bumps_field(20, 30, seed=2).content_hash()
    assert f.content_hash() != gaussian_bumps_field(20, 30, seed=3).content_hash()
    with pytest.raises(ValueError):
        Field(np.array([[np.inf]]))


def test_save_load_round_trip(tmp_path):
    ds = build_dataset(gaussian_bumps_field(16, 16, seed=1), 8, 4, 2, seed=5, source="x")
    ds.save(tmp_path)
    back = PatchDataset.load(tmp_path)
    assert np.array_equal(back.patches, ds.patches)
    assert back.split_assignment == ds.split_assignment
    assert back.manifest["field_sha256"] == ds.manifest["field_sha256"]
    assert back.manifest["counts"] == ds.counts()
