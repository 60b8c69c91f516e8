"""
Raster ingestion, sliding-window patch extraction, block-mean downsampling
and the train / validation / test split.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

SPLITS = ("train", "valid", "test")
DEFAULT_FRACTIONS = (0.70, 0.05, 0.25)


@dataclass(frozen=True)
class Field:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("field must be a non-empty 2-D grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains NaN or infinite cells")
        object.__setattr__(self, "values", v)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def content_hash(self):
        return hashlib.sha256(np.ascontiguousarray(self.values, dtype="<f8").tobytes()).hexdigest()


def normalize(values):
    """Map linearly to [0, 1]; a constant grid becomes all zeros."""
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def _read_pgm(path):
    with open(path, "rb") as f:
        data = f.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM file")
    # header tokens: magic, width, height, maxval, with '#' comments
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(int(data[start:pos]))
    width, height, maxval = tokens
    if magic == b"P5":
        pos += 1
        dtype = ">u2" if maxval > 255 else "u1"
        arr = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    else:
        body = b"\n".join(line.split(b"#")[0] for line in data[pos:].splitlines())
        arr = np.array(body.split(), dtype=float)
        if arr.size != width * height:
            raise ValueError(f"{path}: expected {width * height} pixels, got {arr.size}")
    return arr.reshape(height, width).astype(float) / maxval


def load_field(source):
    """Read a CSV grid or a P2/P5 PGM image into a normalized :class:`Field`."""
    if isinstance(source, Field):
        return source
    if isinstance(source, np.ndarray):
        raw = source.astype(float)
    else:
        if not os.path.isfile(source):
            raise FileNotFoundError(f"cannot read field {source!r}")
        if str(source).lower().endswith(".pgm"):
            raw = _read_pgm(source)
        else:
            with open(source, newline="") as f:
                rows = [r for r in csv.reader(f) if r]
            if not rows:
                raise ValueError(f"{source}: empty grid")
            try:
                raw = np.array([[float(x) for x in r] for r in rows])
            except ValueError as e:
                raise ValueError(f"{source}: {e}") from None
    if raw.ndim != 2 or raw.size == 0:
        raise ValueError("empty or ragged grid")
    if np.any(np.isnan(raw)):
        raise ValueError("field contains NaN cells")
    return Field(normalize(raw))


def gaussian_bumps_field(height, width, n_bumps=5, seed=0, width_range=(0.08, 0.25)):
    """Smooth synthetic field: a sum of random isotropic Gaussian bumps."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    rr, cc = np.mgrid[0:height, 0:width].astype(float)
    v = np.zeros((height, width))
    scale = min(height, width)
    for _ in range(n_bumps):
        r0, c0 = rng.uniform(0, height), rng.uniform(0, width)
        s = rng.uniform(*width_range) * scale
        a = rng.uniform(0.3, 1.0)
        v += a * np.exp(-((rr - r0) ** 2 + (cc - c0) ** 2) / (2 * s * s))
    return Field(normalize(v))


def patch_count(height, width, window, stride):
    return ((height - window) // stride + 1) * ((width - window) // stride + 1)


def extract_patches(field, window, stride):
    """All window x window patches at offsets (i*stride, j*stride), row-major.

    Returns ``(patches, offsets)`` with patches shaped (n, window, window).
    """
    v = field.values if isinstance(field, Field) else np.asarray(field, dtype=float)
    H, W = v.shape
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    if window > min(H, W):
        raise ValueError(f"window {window} larger than field {H}x{W}")
    rows = range(0, H - window + 1, stride)
    cols = range(0, W - window + 1, stride)
    offsets = [(r, c) for r in rows for c in cols]
    patches = np.stack([v[r:r + window, c:c + window] for r, c in offsets])
    return patches, offsets


def downsample(patch, factor):
    """Non-overlapping factor x factor block means."""
    patch = np.asarray(patch, dtype=float)
    h, w = patch.shape[-2:]
    if factor < 1 or h % factor or w % factor:
        raise ValueError(f"patch {h}x{w} not divisible by factor {factor}")
    if factor == 1:
        return patch.copy()
    shape = patch.shape[:-2] + (h // factor, factor, w // factor, factor)
    return patch.reshape(shape).mean(axis=(-3, -1))


@dataclass(frozen=True)
class PatchDataset:
    """Flattened patches (rows) with a train/valid/test label per patch."""

    patch_side: int
    patches: np.ndarray
    split_assignment: tuple
    seed: int = 0
    manifest: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        P = np.asarray(self.patches, dtype=float)
        if P.ndim != 2 or P.shape[1] != self.patch_side ** 2:
            raise ValueError("patches must be n x patch_side^2")
        if len(self.split_assignment) != P.shape[0]:
            raise ValueError("one split label per patch required")
        if any(s not in SPLITS for s in self.split_assignment):
            raise ValueError("unknown split label")
        object.__setattr__(self, "patches", P)
        object.__setattr__(self, "split_assignment", tuple(self.split_assignment))

    @property
    def N(self):
        return self.patch_side ** 2

    def subset(self, name):
        idx = [i for i, s in enumerate(self.split_assignment) if s == name]
        return self.patches[idx]

    @property
    def train(self):
        return self.subset("train")

    @property
    def valid(self):
        return self.subset("valid")

    @property
    def test(self):
        return self.subset("test")

    def counts(self):
        return {s: self.split_assignment.count(s) for s in SPLITS}

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, "patches.csv"), "w") as f:
            for label, row in zip(self.split_assignment, self.patches):
                f.write(label + "," + ",".join(format(v, ".17g") for v in row) + "\n")
        man = dict(self.manifest)
        man.update(patch_side=self.patch_side, seed=self.seed, counts=self.counts())
        with open(os.path.join(directory, "manifest.json"), "w") as f:
            json.dump(man, f, indent=1, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, directory):
        with open(os.path.join(directory, "manifest.json")) as f:
            man = json.load(f)
        labels, rows = [], []
        with open(os.path.join(directory, "patches.csv")) as f:
            for line in f:
                parts = line.rstrip("\n").split(",")
                labels.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        N = man["patch_side"] ** 2
        patches = np.array(rows, dtype=float).reshape(len(rows), N)
        return cls(man["patch_side"], patches, tuple(labels), man["seed"], man)


def split_counts(n, fractions=DEFAULT_FRACTIONS):
    # small epsilon so that e.g. 0.7 * 1120 = 783.999... still floors to 784
    train = math.floor(fractions[0] * n + 1e-9)
    valid = math.floor(fractions[1] * n + 1e-9)
    return train, valid, n - train - valid


def split(patches, fractions=DEFAULT_FRACTIONS, seed=0, mode="random"):
    """Assign patches to train/valid/test.

    ``mode="random"`` permutes with a seeded generator and assigns contiguous
    blocks of ``floor(f * n)`` (remainder to test). ``mode="blocked"`` keeps
    the extraction (row-major spatial) order instead, which limits leakage
    between overlapping patches of different splits.
    """
    P = np.asarray(patches, dtype=float)
    n = P.shape[0]
    if n == 0:
        raise ValueError("no patches to split")
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise ValueError(f"invalid split fractions {fractions}")
    P = P.reshape(n, -1)
    side = math.isqrt(P.shape[1])
    if mode == "random":
        order = np.random.Generator(np.random.Philox(key=seed)).permutation(n)
    elif mode == "blocked":
        order = np.arange(n)
    else:
        raise ValueError(f"unknown split mode {mode!r}")
    n_train, n_valid, _ = split_counts(n, fractions)
    labels = [""] * n
    for rank, i in enumerate(order):
        labels[i] = "train" if rank < n_train else "valid" if rank < n_train + n_valid else "test"
    return PatchDataset(side, P, tuple(labels), seed)


def build_dataset(field, window, stride, factor=1, seed=0, fractions=DEFAULT_FRACTIONS,
                  mode="random", source=None):
    field = load_field(field)
    raw, _ = extract_patches(field, window, stride)
    small = downsample(raw, factor)
    ds = split(small.reshape(small.shape[0], -1), fractions, seed, mode)
    manifest = {"source": source, "window": window, "stride": stride, "factor": factor,
                "fractions": list(fractions), "split_mode": mode,
                "field_shape": [field.height, field.width],
                "field_sha256": field.content_hash()}
    return PatchDataset(ds.patch_side, ds.patches, ds.split_assignment, seed, manifest)
