"""Stochastic-geometry energy analysis of wireless-powered MTC networks."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    GeometryError,
    InfeasibleDensityError,
    InitializationError,
    NumericError,
)
from .geometry import ClusterSpec, TangentGeometry, chord_roots, radial_integral, tangent_geometry  # noqa: E402
from .energy import (  # noqa: E402
    EnergyBreakdown,
    SteeringModel,
    SystemParams,
    correlation_matrix,
    eh_energy,
    eta_inter,
    eta_intra,
    frame_energy,
    wpt_energy,
)
