"""Analytic energy statistics of a wireless-powered sensor network.

Two energy sources reach a sensor in cluster ``k`` during one frame:

* WPT from the base station, ``T_d * tr(Q C_k)`` where ``C_k`` is the
  channel correlation matrix averaged over a uniformly placed sensor;
* EH from the uplink of other active sensors,
  ``T_u * P_tau * sigma_gamma^2 * p_act * (1 - p_act) * eta_k`` where
  ``eta_k`` is the expected sum of path loss from every other sensor.

All one-dimensional integrals go through QUADPACK (adaptive Gauss-Kronrod).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError
from .geometry import (
    BS_POSITION,
    ClusterSpec,
    tangent_geometry,
    tangent_parametrization,
    radial_integral,
)

DEFAULT_RTOL = 1e-8
_QUAD_LIMIT = 400


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_w: float) -> float:
    return 10.0 * math.log10(p_w) + 30.0


def to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """Physical and protocol constants, SI units throughout.

    Noise powers ``sigma_n2`` and ``sigma_w2`` are carried for completeness
    only; received noise energy is neglected everywhere.
    """

    alpha: float = 2.0
    sigma_g2: float = 1.0
    sigma_gamma2: float = 1.0
    p_tx: float = 10.0
    p_tau: float = 0.1
    p_act: float = 0.1
    t_frame: float = 1.0
    t_dl: float = 0.5
    t_ul: float = 0.5
    n_slots: int = 500
    t_slot: float = 1e-3
    m_antennas: int = 100
    sigma_n2: float = 0.0
    sigma_w2: float = 0.0

    def __post_init__(self):
        if self.alpha < 2:
            raise DomainError(f"alpha must be >= 2, got {self.alpha}")
        for name in ("sigma_g2", "sigma_gamma2", "p_tx", "p_tau", "t_frame", "t_dl", "t_ul", "t_slot"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.p_act <= 1.0:
            raise DomainError(f"p_act must lie in [0, 1], got {self.p_act}")
        if self.m_antennas < 1 or self.n_slots < 1:
            raise DomainError("m_antennas and n_slots must be >= 1")
        if self.sigma_n2 < 0 or self.sigma_w2 < 0:
            raise DomainError("noise powers must be >= 0")
        if not math.isclose(self.t_frame, self.t_dl + self.t_ul, rel_tol=1e-9):
            raise DomainError("frame timing violates t_frame = t_dl + t_ul")
        if not math.isclose(self.t_ul, self.n_slots * self.t_slot, rel_tol=1e-9):
            raise DomainError("slot timing violates t_ul = n_slots * t_slot")

    @classmethod
    def from_frame(cls, t_frame=1.0, t_dl=0.5, n_slots=500, **kwargs) -> "SystemParams":
        """Build params deriving ``t_ul`` and ``t_slot`` from the frame split."""
        t_ul = t_frame - t_dl
        return cls(t_frame=t_frame, t_dl=t_dl, t_ul=t_ul, n_slots=n_slots,
                   t_slot=t_ul / n_slots, **kwargs)

    @property
    def eh_factor(self) -> float:
        """Joules of harvested energy per unit of eta."""
        return self.n_slots * self.t_slot * self.p_tau * self.sigma_gamma2 * self.p_act * (1.0 - self.p_act)


@dataclass(frozen=True)
class SteeringModel:
    """Uniform circular array response.

    Element ``m`` (0-based) answers ``exp(i 2 pi (a/lambda) cos(theta - 2 pi m / M))``.
    ``radius_wavelengths=None`` picks ``M / (4 pi)``, i.e. half-wavelength
    spacing along the circumference.
    """

    kind: str = "uca"
    radius_wavelengths: float | None = None

    def __post_init__(self):
        if self.kind != "uca":
            raise DomainError(f"unsupported array model {self.kind!r}")
        if self.radius_wavelengths is not None and not self.radius_wavelengths >= 0:
            raise DomainError("array radius must be >= 0")

    def radius_for(self, m_antennas: int) -> float:
        if self.radius_wavelengths is None:
            return m_antennas / (4.0 * math.pi)
        return self.radius_wavelengths

    def response(self, theta, m_antennas: int) -> np.ndarray:
        """Steering vectors, shape ``theta.shape + (M,)``."""
        theta = np.asarray(theta, dtype=float)
        elem = 2.0 * np.pi * np.arange(m_antennas) / m_antennas
        phase = 2.0 * np.pi * self.radius_for(m_antennas) * np.cos(theta[..., None] - elem)
        return np.exp(1j * phase)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-cluster energy received in one frame (joules).

    ``eta_intra``/``eta_inter`` are ``None`` when only the total eta was supplied.
    """

    e_wpt: float
    e_eh: float
    eta: float
    total: float
    eta_intra: float | None = None
    eta_inter: float | None = None


def check_hermitian(a: np.ndarray, atol: float = 1e-12) -> None:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise TypeError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.conj().T), initial=0.0) > atol * scale:
        raise TypeError("matrix is not Hermitian")


def is_psd(a: np.ndarray, rtol: float = 1e-9) -> bool:
    w = np.linalg.eigvalsh(a)
    return bool(w[0] >= -rtol * max(abs(np.trace(a).real), np.finfo(float).tiny))


def _quad(f, a, b, rtol, what):
    val, err, info = integrate.quad(f, a, b, epsabs=0.0, epsrel=rtol, limit=_QUAD_LIMIT,
                                    full_output=True)[:3]
    if err > max(rtol * abs(val), 1e-300) * 10:
        raise NumericError(f"{what}: quadrature did not converge (abs err {err:.3g})", achieved=err)
    return val


def sector_integral(cluster: ClusterSpec, alpha: float, viewpoint=BS_POSITION,
                    rtol: float = DEFAULT_RTOL) -> float:
    """Integral of ``|x - viewpoint|^-alpha`` over the cluster disk.

    Written in polar coordinates around the viewpoint this is the radial
    integral ``I(theta)`` integrated across the tangent sector.
    """
    geom = tangent_geometry(cluster, viewpoint)

    def f(u):
        _, l1, l2, jac = tangent_parametrization(geom, cluster, u)
        return radial_integral(l1, l2, alpha) * jac

    return _quad(f, -np.pi / 2, np.pi / 2, rtol, f"sector integral of cluster {cluster.id}")


def correlation_matrix(cluster: ClusterSpec, params: SystemParams, steering: SteeringModel,
                       rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Channel correlation ``E[h h^H]`` of a uniformly placed sensor in ``cluster``.

    Entry (i, j) is ``sigma_g^2/(pi R^2)`` times the sector integral of
    ``I(theta) v_i(theta) conj(v_j(theta))``.

    Raises:
        GeometryError: BS inside the disk.
        NumericError: vector quadrature missed ``rtol``.
    """
    geom = tangent_geometry(cluster, BS_POSITION)
    m = params.m_antennas

    def f(u):
        theta, l1, l2, jac = tangent_parametrization(geom, cluster, u)
        v = steering.response(theta, m)
        return (radial_integral(l1, l2, params.alpha) * jac) * np.outer(v, v.conj())

    res, err, info = integrate.quad_vec(f, -np.pi / 2, np.pi / 2, epsabs=0.0, epsrel=rtol,
                                        norm="max", limit=10_000, full_output=True)
    if info.status != 0:
        raise NumericError(
            f"cluster {cluster.id}: correlation quadrature did not converge "
            f"(abs err {err:.3g})", achieved=err)
    c = res * (params.sigma_g2 / cluster.area)
    return 0.5 * (c + c.conj().T)


def wpt_energy(q: np.ndarray, c_k: np.ndarray, t_dl: float) -> float:
    """``T_d * tr(Q C_k)`` in joules."""
    q = np.asarray(q)
    c_k = np.asarray(c_k)
    if q.shape != c_k.shape or q.ndim != 2:
        raise ValueError(f"dimension mismatch: Q {q.shape} vs C {c_k.shape}")
    return max(0.0, t_dl * float(np.einsum("ij,ji->", q, c_k).real))


def _pdf_raw(rho, radius):
    s = np.clip(np.asarray(rho, dtype=float) / (2.0 * radius), 0.0, 1.0)
    return 4.0 * rho / (math.pi * radius**2) * (np.arccos(s) - s * np.sqrt(1.0 - s * s))


@lru_cache(maxsize=256)
def _pdf_norm(radius: float, d_min: float) -> float:
    return _quad(lambda r: _pdf_raw(r, radius), d_min, 2.0 * radius, 1e-12,
                 "distance-pdf normalization")


def distance_pdf(rho, cluster: ClusterSpec):
    """Density of the distance between two uniform points of the disk,
    truncated to ``[d_min, 2R]`` and renormalized."""
    rho = np.asarray(rho, dtype=float)
    R, d = cluster.radius, cluster.min_distance
    inside = (rho >= d) & (rho <= 2.0 * R)
    out = np.where(inside, _pdf_raw(np.where(inside, rho, 0.0), R), 0.0) / _pdf_norm(R, d)
    if out.ndim == 0:
        return float(out)
    return out


def distance_pdf_norm(cluster: ClusterSpec) -> float:
    """The normalization constant ``A_k`` of :func:`distance_pdf`."""
    return _pdf_norm(cluster.radius, cluster.min_distance)


def mean_pair_pathloss(cluster: ClusterSpec, alpha: float, rtol: float = DEFAULT_RTOL) -> float:
    """``E[rho^-alpha]`` under :func:`distance_pdf`."""
    if cluster.min_distance <= 0:
        raise DomainError(
            f"cluster {cluster.id}: intra-cluster path loss diverges without a minimum distance")
    # integrate in log(rho): the integrand rho^(1-alpha) f(rho) is steep near d_min
    f = lambda s: math.exp(s * (1.0 - alpha)) * distance_pdf(math.exp(s), cluster)
    return _quad(f, math.log(cluster.min_distance), math.log(2.0 * cluster.radius), rtol,
                 f"intra-cluster integral of cluster {cluster.id}")


def eta_intra(cluster: ClusterSpec, alpha: float, rtol: float = DEFAULT_RTOL) -> float:
    """Expected intra-cluster path-loss sum seen by one sensor (Campbell)."""
    neighbours = cluster.mean_count - 1.0
    if neighbours < 0:
        warnings.warn(f"cluster {cluster.id}: fewer than one expected sensor, eta_intra = 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    if neighbours == 0:
        return 0.0
    return neighbours * mean_pair_pathloss(cluster, alpha, rtol)


def eta_inter(target: ClusterSpec, others: Sequence[ClusterSpec], alpha: float,
              rtol: float = DEFAULT_RTOL) -> float:
    """Inter-cluster path-loss sum approximated at the target cluster's center.

    Raises:
        GeometryError: target center inside another disk.
    """
    return sum(o.density * sector_integral(o, alpha, target.center, rtol) for o in others)


def eh_energy(eta_total: float, params: SystemParams) -> float:
    if eta_total < 0:
        raise DomainError("eta must be >= 0")
    return params.eh_factor * eta_total


def frame_energy(q: np.ndarray, c_k: np.ndarray, eta_k: float, params: SystemParams,
                 eta_split: tuple[float, float] | None = None) -> EnergyBreakdown:
    e_wpt = wpt_energy(q, c_k, params.t_dl)
    e_eh = eh_energy(eta_k, params)
    intra, inter = eta_split if eta_split is not None else (None, None)
    return EnergyBreakdown(e_wpt, e_eh, eta_k, e_wpt + e_eh, intra, inter)


@dataclass
class ClusterStatistics:
    """Analytic per-cluster inputs of the allocation loop.

    Attributes:
        c_ks: ``(K, M, M)`` correlation matrices.
        eta_intra, eta_inter: ``(K,)`` path-loss sums.
    """

    c_ks: np.ndarray
    eta_intra: np.ndarray
    eta_inter: np.ndarray

    @property
    def eta(self) -> np.ndarray:
        return self.eta_intra + self.eta_inter


def cluster_statistics(specs: Sequence[ClusterSpec], params: SystemParams,
                       steering: SteeringModel, rtol: float = DEFAULT_RTOL,
                       c_ks: np.ndarray | None = None) -> ClusterStatistics:
    """Compute every ``C_k`` and ``eta_k`` of a layout.

    ``c_ks`` may be passed to reuse matrices when only the densities change.
    """
    specs = list(specs)
    if c_ks is None:
        c_ks = np.stack([correlation_matrix(s, params, steering, rtol) for s in specs])
    intra = np.array([eta_intra(s, params.alpha, rtol) for s in specs])
    inter = np.array([
        eta_inter(s, [o for o in specs if o is not s], params.alpha, rtol) for s in specs
    ])
    return ClusterStatistics(c_ks, intra, inter)
