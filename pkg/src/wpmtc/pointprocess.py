"""Repulsive Matern cluster processes.

A parent Poisson process of intensity ``delta`` is laid on each cluster disk
and then thinned Matern type-II style: every point carries an independent
uniform mark and is deleted when a neighbour closer than ``d_min`` has a
smaller mark. The retained intensity is

    lambda = (1 - exp(-delta * pi * d_min^2)) / (pi * d_min^2).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import InfeasibleDensityError
from .geometry import ClusterSpec

# Above this many parent points the thinning switches from a dense distance
# matrix to a k-d tree.
_DENSE_LIMIT = 256


@dataclass(frozen=True)
class ParentIntensity:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"parent intensity must be > 0, got {self.delta}")


@dataclass
class SampledNetwork:
    """One realization of every cluster.

    Attributes:
        positions: one ``(n_k, 2)`` array per cluster, in the order of ``specs``.
        seed: master seed the realization was drawn from.
        specs: the cluster specs used.
    """

    positions: list[np.ndarray]
    seed: int | None
    specs: list[ClusterSpec] = field(default_factory=list)

    def counts(self) -> list[int]:
        return [len(p) for p in self.positions]

    def to_csv(self, path) -> None:
        """Write rows ``cluster_id,x,y``."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["cluster_id", "x", "y"])
            for spec, pts in zip(self.specs, self.positions):
                for x, y in pts:
                    writer.writerow([spec.id, f"{x:.12g}", f"{y:.12g}"])


def matern_density(delta: float, d_min: float) -> float:
    """Retained intensity of a Matern type-II thinned Poisson process."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if d_min == 0:
        return float(delta)
    a = math.pi * d_min * d_min
    # -expm1 keeps full precision when delta * a is tiny
    return -math.expm1(-delta * a) / a


def invert_density(lam: float, d_min: float) -> ParentIntensity:
    """Parent intensity whose thinning yields ``lam``.

    Raises:
        InfeasibleDensityError: when ``lam * pi * d_min^2 >= 1``.
    """
    if d_min == 0:
        return ParentIntensity(float(lam))
    a = math.pi * d_min * d_min
    if lam * a >= 1.0:
        raise InfeasibleDensityError(
            f"density {lam} with d_min {d_min}: lambda*pi*d_min^2 = {lam * a:.6g} >= 1"
        )
    return ParentIntensity(-math.log1p(-lam * a) / a)


def cluster_rng(seed: int | None, cluster_id: int) -> np.random.Generator:
    """Independent stream keyed on ``(seed, cluster_id)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(cluster_id,)))


def uniform_disk(rng: np.random.Generator, n: int, center, radius: float) -> np.ndarray:
    """``n`` points uniform on a disk by polar inverse CDF, r = R sqrt(u)."""
    r = radius * np.sqrt(rng.random(n))
    t = rng.uniform(-np.pi, np.pi, n)
    pts = np.empty((n, 2))
    pts[:, 0] = center[0] + r * np.cos(t)
    pts[:, 1] = center[1] + r * np.sin(t)
    return pts


def sample_parent(spec: ClusterSpec, rng: np.random.Generator, delta: float | None = None):
    """Parent points and their marks.

    Returns:
        (points, marks): ``(n, 2)`` positions and ``(n,)`` uniform marks.
    """
    if delta is None:
        delta = invert_density(spec.density, spec.min_distance).delta
    n = rng.poisson(delta * spec.area)
    pts = uniform_disk(rng, n, spec.center, spec.radius)
    marks = rng.random(n)
    return pts, marks


def matern_thinning(points: np.ndarray, marks: np.ndarray, d_min: float) -> np.ndarray:
    """Boolean keep-mask: drop a point if a closer-than-``d_min`` neighbour has a smaller mark."""
    n = len(points)
    keep = np.ones(n, dtype=bool)
    if d_min <= 0 or n < 2:
        return keep
    if n <= _DENSE_LIMIT:
        diff = points[:, None, :] - points[None, :, :]
        close = np.einsum("ijk,ijk->ij", diff, diff) < d_min * d_min
        np.fill_diagonal(close, False)
        i, j = np.nonzero(close)
    else:
        pairs = cKDTree(points).query_pairs(d_min, output_type="ndarray")
        if len(pairs) == 0:
            return keep
        d2 = np.sum((points[pairs[:, 0]] - points[pairs[:, 1]]) ** 2, axis=1)
        pairs = pairs[d2 < d_min * d_min]
        i = np.concatenate([pairs[:, 0], pairs[:, 1]])
        j = np.concatenate([pairs[:, 1], pairs[:, 0]])
    keep[i[marks[j] < marks[i]]] = False
    return keep


def draw_cluster(spec: ClusterSpec, rng: np.random.Generator, delta: float | None = None) -> np.ndarray:
    """One thinned realization of ``spec`` drawn from an existing generator."""
    pts, marks = sample_parent(spec, rng, delta)
    return pts[matern_thinning(pts, marks, spec.min_distance)]


def sample_cluster(spec: ClusterSpec, seed: int | None) -> np.ndarray:
    """Retained sensor positions of one cluster, deterministic in ``(seed, spec.id)``."""
    return draw_cluster(spec, cluster_rng(seed, spec.id))


def sample_network(specs: Sequence[ClusterSpec], seed: int | None) -> SampledNetwork:
    """Independent realization of every cluster, one stream per cluster id."""
    specs = list(specs)
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        raise ValueError(f"cluster ids must be distinct (they key the random streams): {ids}")
    return SampledNetwork([sample_cluster(s, seed) for s in specs], seed, specs)
