"""
Robot sampling paths over grid cells selected by a measurement indicator.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

METRICS = ("euclidean", "manhattan")
BRUTE_FORCE_MAX = 9


class GridCell(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class PathPlan:
    waypoints: tuple
    total_length: float

    def to_json(self, path):
        with open(path, "w") as f:
            json.dump({"waypoints": [[int(r), int(c)] for r, c in self.waypoints],
                       "total_length": self.total_length}, f)
            f.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            obj = json.load(f)
        return cls(tuple(GridCell(r, c) for r, c in obj["waypoints"]), float(obj["total_length"]))

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["row", "col"])
            w.writerows(self.waypoints)


def unflatten(ind, grid_rows, grid_cols):
    """Row-major (row, col) cells for every set bit of a flat indicator."""
    ind = np.asarray(ind).ravel()
    if ind.size != grid_rows * grid_cols:
        raise ValueError(f"indicator length {ind.size} != {grid_rows}x{grid_cols}")
    return [GridCell(int(i) // grid_cols, int(i) % grid_cols) for i in np.flatnonzero(ind)]


def _step_lengths(pts, metric):
    d = np.diff(pts, axis=0)
    if metric == "manhattan":
        return np.abs(d).sum(axis=1).astype(float)
    return np.sqrt((d * d).sum(axis=1).astype(float))


def path_length(cells, metric="euclidean"):
    if len(cells) < 2:
        return 0.0
    pts = np.asarray(cells, dtype=np.int64)
    return float(np.sum(_step_lengths(pts, metric)))


def _two_opt(pts, metric):
    order = list(range(len(pts)))

    def dist(a, b):
        d = pts[a] - pts[b]
        return float(np.abs(d).sum()) if metric == "manhattan" else float(np.sqrt(d @ d))

    improved = True
    while improved:
        improved = False
        for i in range(len(order) - 2):
            for j in range(i + 2, len(order)):
                a, b = order[i], order[i + 1]
                c = order[j]
                old = dist(a, b)
                new = dist(a, c)
                if j + 1 < len(order):
                    d = order[j + 1]
                    old += dist(c, d)
                    new += dist(b, d)
                if new < old - 1e-12:
                    order[i + 1:j + 1] = reversed(order[i + 1:j + 1])
                    improved = True
    return order


def nn_path(cells, metric="euclidean", two_opt=False):
    """Greedy nearest-neighbour open tour.

    Starts at the cell closest to (0, 0) and always moves to the closest
    unvisited cell. Ties go to the smaller row, then the smaller column.
    Distances are compared in exact integer arithmetic (squared Euclidean
    or Manhattan), so the tour does not depend on floating point.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    cells = sorted({GridCell(int(r), int(c)) for r, c in cells})
    if not cells:
        return PathPlan((), 0.0)
    pts = np.asarray(cells, dtype=np.int64)

    def dists(p):
        d = pts - p
        return np.abs(d).sum(axis=1) if metric == "manhattan" else (d * d).sum(axis=1)

    # np.argmin returns the first minimum; cells are sorted, so that is the tie-break
    visited = np.zeros(len(cells), dtype=bool)
    order = []
    cur = int(np.argmin(dists(np.zeros(2, dtype=np.int64))))
    big = np.iinfo(np.int64).max
    for _ in range(len(cells)):
        order.append(cur)
        visited[cur] = True
        if len(order) == len(cells):
            break
        d = dists(pts[cur])
        d[visited] = big
        cur = int(np.argmin(d))
    if two_opt:
        sub = pts[order]
        order = [order[i] for i in _two_opt(sub, metric)]
    waypoints = tuple(cells[i] for i in order)
    return PathPlan(waypoints, path_length(waypoints, metric))


@lru_cache(maxsize=None)
def _perms(n):
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def brute_force_path(cells, metric="euclidean"):
    """Exact shortest open tour by enumerating every visiting order."""
    cells = sorted({GridCell(int(r), int(c)) for r, c in cells})
    n = len(cells)
    if n > BRUTE_FORCE_MAX:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX} cells, got {n}")
    if n < 2:
        return PathPlan(tuple(cells), 0.0)
    pts = np.asarray(cells, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    if metric == "manhattan":
        D = np.abs(diff).sum(axis=2)
    else:
        D = np.sqrt((diff ** 2).sum(axis=2))
    P = _perms(n)
    lengths = D[P[:, :-1], P[:, 1:]].sum(axis=1)
    best = int(np.argmin(lengths))
    waypoints = tuple(cells[i] for i in P[best])
    return PathPlan(waypoints, path_length(waypoints, metric))
