"""Brute-force Monte Carlo counterparts of the analytic energy statistics.

Each estimator simulates sensor positions (through the thinned cluster
process), fading, and Bernoulli activity directly, and returns the sample
mean together with its standard error. They share no code with the
quadrature path beyond the cluster sampler and the steering model.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .energy import SteeringModel, SystemParams
from .geometry import ClusterSpec
from .pointprocess import draw_cluster, invert_density, uniform_disk

_CHUNK = 100_000


@dataclass(frozen=True)
class McConfig:
    n_realizations: int = 10_000
    seed: int | None = 0
    n_slots_per_frame: int | None = None
    histogram_bins: int = 50

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if self.n_slots_per_frame is not None and self.n_slots_per_frame < 1:
            raise ValueError("n_slots_per_frame must be >= 1")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass
class McEstimate:
    mean: float
    se: float
    n: int
    var: float = 0.0
    hist_edges: np.ndarray | None = None
    hist_counts: np.ndarray | None = None

    @classmethod
    def from_samples(cls, samples, bins: int | None = None, db_histogram: bool = False):
        x = np.asarray(samples, dtype=float)
        n = len(x)
        var = float(x.var(ddof=1)) if n > 1 else 0.0
        est = cls(float(x.mean()), math.sqrt(var / n), n, var)
        if bins:
            est.hist_edges, est.hist_counts = _histogram(x, bins, db_histogram)
        return est

    @property
    def mean_db(self) -> float:
        return 10.0 * math.log10(self.mean)

    @property
    def se_db(self) -> float:
        """First-order standard error of ``mean_db``."""
        return 10.0 / math.log(10.0) * self.se / self.mean

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= k * self.se


def _histogram(x, bins, db):
    if db:
        pos = x[x > 0]
        if len(pos) == 0:
            return None, None
        vals = 10.0 * np.log10(pos)
        edges = np.histogram_bin_edges(vals, bins)
        # non-positive samples have no dB value; they are counted in the lowest bin
        vals = np.concatenate([vals, np.full(len(x) - len(pos), edges[0])])
    else:
        vals = x
        edges = np.histogram_bin_edges(vals, bins)
    counts, _ = np.histogram(vals, edges)
    return edges, counts


def pool(estimates: Sequence[McEstimate]) -> McEstimate:
    """Merge estimates from disjoint sample partitions (count-weighted pooling)."""
    n = sum(e.n for e in estimates)
    mean = sum(e.n * e.mean for e in estimates) / n
    ss = sum((e.n - 1) * e.var + e.n * (e.mean - mean) ** 2 for e in estimates)
    var = ss / (n - 1) if n > 1 else 0.0
    return McEstimate(mean, math.sqrt(var / n), n, var)


def _pathloss_sum(points: np.ndarray, probe, alpha: float) -> float:
    if len(points) == 0:
        return 0.0
    d2 = np.sum((points - probe) ** 2, axis=1)
    return float(np.sum(d2 ** (-alpha / 2.0)))


def mc_eta_intra(spec: ClusterSpec, alpha: float, cfg: McConfig) -> McEstimate:
    """Sum of ``rho^-alpha`` from a random probe to the rest of its own cluster.

    Realizations with fewer than two sensors contribute zero.
    """
    rng = cfg.rng()
    delta = invert_density(spec.density, spec.min_distance).delta
    out = np.zeros(cfg.n_realizations)
    for r in range(cfg.n_realizations):
        pts = draw_cluster(spec, rng, delta)
        if len(pts) < 2:
            continue
        i = rng.integers(len(pts))
        out[r] = _pathloss_sum(np.delete(pts, i, axis=0), pts[i], alpha)
    return McEstimate.from_samples(out)


def _draw_probe(spec, rng, delta):
    """Target realization and the index of a uniformly chosen probe in it.

    An empty realization falls back to a uniform position on the disk, which
    has the same marginal law as a retained point; the index is then ``None``.
    """
    pts = draw_cluster(spec, rng, delta)
    if len(pts) == 0:
        return pts, uniform_disk(rng, 1, spec.center, spec.radius)[0], None
    i = int(rng.integers(len(pts)))
    return pts, pts[i], i


def mc_eta_inter(target: ClusterSpec, others: Sequence[ClusterSpec], alpha: float,
                 cfg: McConfig) -> McEstimate:
    """Sum of ``rho^-alpha`` from a random sensor of ``target`` to every sensor of ``others``.

    The returned estimate carries a dB histogram of the per-realization sums.
    """
    others = list(others)
    if not others:
        return McEstimate(0.0, 0.0, cfg.n_realizations)
    rng = cfg.rng()
    d_target = invert_density(target.density, target.min_distance).delta
    d_others = [invert_density(o.density, o.min_distance).delta for o in others]
    out = np.empty(cfg.n_realizations)
    for r in range(cfg.n_realizations):
        _, probe, _ = _draw_probe(target, rng, d_target)
        out[r] = sum(_pathloss_sum(draw_cluster(o, rng, d), probe, alpha)
                     for o, d in zip(others, d_others))
    return McEstimate.from_samples(out, bins=cfg.histogram_bins, db_histogram=True)


def sample_channels(cluster: ClusterSpec, params: SystemParams, steering: SteeringModel,
                    n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` BS-to-sensor channels ``d^(-alpha/2) g v(theta)``, shape ``(n, M)``.

    Sensors are uniform on the disk; fading is circularly-symmetric complex
    Gaussian with ``E|g|^2 = sigma_g^2``.
    """
    pts = uniform_disk(rng, n, cluster.center, cluster.radius)
    d = np.hypot(pts[:, 0], pts[:, 1])
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * math.sqrt(params.sigma_g2 / 2.0)
    return (d ** (-params.alpha / 2.0) * g)[:, None] * steering.response(theta, params.m_antennas)


def mc_wpt_energy(cluster: ClusterSpec, q: np.ndarray, params: SystemParams,
                  steering: SteeringModel, cfg: McConfig) -> McEstimate:
    """Sample mean of ``T_d h^H Q h`` over random sensor position and fading."""
    q = np.asarray(q)
    if not np.any(q):
        return McEstimate(0.0, 0.0, cfg.n_realizations)
    rng = cfg.rng()
    parts = []
    left = cfg.n_realizations
    while left > 0:
        n = min(left, _CHUNK)
        h = sample_channels(cluster, params, steering, n, rng)
        e = params.t_dl * np.einsum("ni,ij,nj->n", h.conj(), q, h).real
        parts.append(McEstimate.from_samples(e))
        left -= n
    return pool(parts)


def mc_correlation_matrix(cluster: ClusterSpec, params: SystemParams, steering: SteeringModel,
                          cfg: McConfig):
    """Entrywise sample mean of ``h h^H``.

    Returns:
        (mean, se): ``(M, M)`` complex mean and real per-entry standard error.
    """
    rng = cfg.rng()
    m = params.m_antennas
    s1 = np.zeros((m, m), complex)
    s2 = np.zeros((m, m))
    left = cfg.n_realizations
    while left > 0:
        n = min(left, _CHUNK)
        h = sample_channels(cluster, params, steering, n, rng)
        outer = h[:, :, None] * h.conj()[:, None, :]
        s1 += outer.sum(axis=0)
        s2 += (np.abs(outer) ** 2).sum(axis=0)
        left -= n
    n = cfg.n_realizations
    mean = s1 / n
    var = (s2 / n - np.abs(mean) ** 2) * n / max(n - 1, 1)
    return mean, np.sqrt(np.maximum(var, 0.0) / n)


def mc_eh_energy(specs: Sequence[ClusterSpec], target: int, params: SystemParams,
                 cfg: McConfig, cross_terms: bool = True) -> McEstimate:
    """Harvested energy of a random sensor of ``specs[target]`` over one uplink period.

    Every slot draws i.i.d. activity ``Ber(p_act)`` for all sensors, complex
    Gaussian fading and unit-modulus symbols of power ``P_tau``; the probe
    harvests only in slots where it is silent. ``cfg.n_slots_per_frame``
    changes the slot granularity while keeping ``T_u`` fixed.

    With ``cross_terms=False`` the squared magnitude of the received sum is
    replaced by the sum of squared magnitudes, which has the same mean.
    """
    specs = list(specs)
    rng = cfg.rng()
    deltas = [invert_density(s.density, s.min_distance).delta for s in specs]
    n_slots = cfg.n_slots_per_frame or params.n_slots
    t_slot = params.t_ul / n_slots
    p = params.p_act
    amp_tau = math.sqrt(params.p_tau)
    sg = math.sqrt(params.sigma_gamma2 / 2.0)
    out = np.zeros(cfg.n_realizations)
    for r in range(cfg.n_realizations):
        interferers = []
        probe = None
        for k, (s, d) in enumerate(zip(specs, deltas)):
            if k == target:
                pts, probe, i = _draw_probe(s, rng, d)
                if i is not None:
                    pts = np.delete(pts, i, axis=0)
            else:
                pts = draw_cluster(s, rng, d)
            interferers.append(pts)
        pts = np.concatenate(interferers) if interferers else np.empty((0, 2))
        if len(pts) == 0 or p in (0.0, 1.0):
            continue
        gain = np.sum((pts - probe) ** 2, axis=1) ** (-params.alpha / 4.0)
        n_int = len(gain)
        active = rng.random((n_slots, n_int)) < p
        gate = rng.random(n_slots) >= p
        fading = sg * (rng.standard_normal((n_slots, n_int))
                       + 1j * rng.standard_normal((n_slots, n_int)))
        if cross_terms:
            symbols = amp_tau * np.exp(1j * rng.uniform(-np.pi, np.pi, (n_slots, n_int)))
            y = np.sum(gain * fading * symbols * active, axis=1)
            power = np.abs(y) ** 2
        else:
            power = params.p_tau * np.sum(gain**2 * np.abs(fading) ** 2 * active, axis=1)
        out[r] = t_slot * np.sum(power * gate)
    return McEstimate.from_samples(out)


def write_histogram_csv(est: McEstimate, path, analytic_db: float, meta_path=None) -> None:
    """Write histogram rows ``bin_left,bin_right,count`` and a key/value sidecar."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count"])
        if est.hist_edges is not None:
            for lo, hi, c in zip(est.hist_edges[:-1], est.hist_edges[1:], est.hist_counts):
                w.writerow([f"{lo:.12g}", f"{hi:.12g}", int(c)])
    if meta_path is not None:
        with open(meta_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerow(["eta_inter_approx_db", f"{analytic_db:.12g}"])
            w.writerow(["eta_inter_mc_mean_db", f"{est.mean_db:.12g}"])
            w.writerow(["eta_inter_mc_se_db", f"{est.se_db:.12g}"])
            w.writerow(["n_realizations", est.n])
