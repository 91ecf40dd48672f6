"""Planar geometry between a viewpoint and circular sensor clusters.

The base station sits at the origin. A cluster is a disk; seen from an
exterior viewpoint it subtends an angular sector bounded by the two tangent
lines, and every ray inside that sector crosses the disk along a chord
``[L1, L2]``. The WPT correlation integrals and the inter-cluster
approximation are both built from these pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GeometryError

BS_POSITION = (0.0, 0.0)

# |alpha - 2| below this selects the logarithmic branch of the radial integral.
ALPHA2_WINDOW = 1e-9


@dataclass(frozen=True)
class ClusterSpec:
    """One disk-shaped cluster of sensors.

    Attributes:
        center: (x, y) of the disk center in meters.
        radius: disk radius in meters.
        density: thinned sensor intensity in sensors/m^2.
        min_distance: hard-core distance between sensors of this cluster.
        id: cluster index.
    """

    center: tuple[float, float]
    radius: float
    density: float
    min_distance: float = 0.0
    id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise DomainError(f"cluster {self.id}: radius must be > 0, got {self.radius}")
        if not self.density > 0:
            raise DomainError(f"cluster {self.id}: density must be > 0, got {self.density}")
        if not self.min_distance >= 0:
            raise DomainError(
                f"cluster {self.id}: min_distance must be >= 0, got {self.min_distance}"
            )
        if self.min_distance > 0:
            packing = self.density * math.pi * self.min_distance**2
            if packing >= 1.0:
                raise DomainError(
                    f"cluster {self.id}: density*pi*min_distance^2 = {packing:.6g} >= 1, "
                    "no parent intensity reaches this thinned density"
                )

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def mean_count(self) -> float:
        """Expected number of sensors, density * pi * R^2."""
        return self.density * self.area

    def with_density(self, density: float) -> "ClusterSpec":
        return ClusterSpec(self.center, self.radius, density, self.min_distance, self.id)


@dataclass(frozen=True)
class TangentGeometry:
    """Sector subtended by a cluster disk from a viewpoint.

    ``theta_lo``/``theta_hi`` are not wrapped; they may leave (-pi, pi]
    when the cluster straddles the negative x-axis.
    """

    distance_to_bs: float
    center_angle: float
    half_span: float
    theta_lo: float
    theta_hi: float
    viewpoint: tuple[float, float] = BS_POSITION

    @property
    def span(self) -> float:
        return 2.0 * self.half_span


def wrap_angle(theta):
    """Map angles to the interval (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2 * np.pi)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def tangent_geometry(cluster: ClusterSpec, viewpoint=BS_POSITION) -> TangentGeometry:
    """Distance, bearing and tangent angles of ``cluster`` seen from ``viewpoint``.

    Raises:
        GeometryError: if the viewpoint lies inside or on the disk.
    """
    dx = cluster.center[0] - viewpoint[0]
    dy = cluster.center[1] - viewpoint[1]
    dist = math.hypot(dx, dy)
    if not dist > cluster.radius:
        raise GeometryError(
            f"cluster {cluster.id}: viewpoint {tuple(viewpoint)} is at distance "
            f"{dist:.6g} <= radius {cluster.radius:.6g}; tangent lines undefined"
        )
    phi = wrap_angle(math.atan2(dy, dx))
    half = math.asin(cluster.radius / dist)
    return TangentGeometry(
        distance_to_bs=dist,
        center_angle=phi,
        half_span=half,
        theta_lo=phi - half,
        theta_hi=phi + half,
        viewpoint=(float(viewpoint[0]), float(viewpoint[1])),
    )


def chord_roots(geom: TangentGeometry, cluster: ClusterSpec, theta):
    """Distances from the viewpoint to where the ray at ``theta`` enters and leaves the disk.

    These are the roots of ``r^2 - 2 D r cos(theta - phi) + D^2 - R^2``.
    ``theta`` may be a scalar or an array; every value must lie strictly
    between the tangent angles.

    Returns:
        (L1, L2) with 0 < L1 <= L2.
    """
    delta = wrap_angle(np.asarray(theta, dtype=float) - geom.center_angle)
    D, R = geom.distance_to_bs, cluster.radius
    disc = R * R - (D * np.sin(delta)) ** 2
    if np.any(np.abs(delta) >= geom.half_span) or np.any(disc <= 0):
        raise DomainError("theta must lie strictly inside the tangent sector")
    b = D * np.cos(delta)
    l2 = b + np.sqrt(disc)
    # product of the roots is D^2 - R^2; avoids cancellation near the tangent
    l1 = (D * D - R * R) / l2
    return l1, l2


def tangent_parametrization(geom: TangentGeometry, cluster: ClusterSpec, u):
    """Smooth reparametrization of the tangent sector for quadrature.

    With ``sin(theta - phi) = (R/D) sin(u)`` and ``u`` in [-pi/2, pi/2] the
    half-chord becomes ``R cos(u)``, which removes the square-root behaviour
    of the chord at both tangent angles.

    Returns:
        (theta, L1, L2, dtheta_du), all arrays shaped like ``u``.
    """
    u = np.asarray(u, dtype=float)
    D, R = geom.distance_to_bs, cluster.radius
    s = (R / D) * np.sin(u)
    delta = np.arcsin(s)
    cos_delta = np.sqrt(1.0 - s * s)
    half_chord = R * np.cos(u)
    b = D * cos_delta
    l2 = b + half_chord
    l1 = (D * D - R * R) / l2
    jac = (R / D) * np.cos(u) / cos_delta
    return geom.center_angle + delta, l1, l2, jac


def radial_integral(l1, l2, alpha: float):
    """Closed form of the integral of r * r^(-alpha) over [l1, l2].

    ``ln(l2/l1)`` for alpha = 2, ``(l2^(2-alpha) - l1^(2-alpha))/(2-alpha)``
    otherwise. Accepts arrays.
    """
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    if alpha < 2:
        raise DomainError(f"path-loss exponent must be >= 2, got {alpha}")
    if np.any(l1 <= 0) or np.any(l2 < l1):
        raise DomainError("radial_integral needs 0 < l1 <= l2")
    log_ratio = np.log(l2 / l1)
    if abs(alpha - 2.0) < ALPHA2_WINDOW:
        out = log_ratio
    else:
        s = 2.0 - alpha
        out = l1**s * np.expm1(s * log_ratio) / s
    if np.ndim(out) == 0:
        return float(out)
    return out
