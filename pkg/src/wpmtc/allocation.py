"""Proportional-fair design of the base-station transmit covariance.

Each frame the BS picks ``Q(t)`` maximizing ``sum_k w_k E_k(t)`` under
``tr(Q) <= P_tx``; the maximizer is a single beam along the dominant
eigenvector of ``T_d sum_k w_k C_k``. With ``w_k = 1 / T_k(t-1)`` (the
exponentially averaged energies) this is the first-order form of
maximizing ``sum_k log T_k(t)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .energy import EnergyBreakdown, SteeringModel, SystemParams, check_hermitian, frame_energy
from .errors import DomainError, InitializationError

PF = "proportional-fair"
SUM_ENERGY = "sum-energy"

# relative width of the top eigenvalue cluster treated as degenerate
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PfPolicy:
    mode: str = PF
    t_c: float = 50.0
    horizon: int = 1000

    def __post_init__(self):
        if self.mode not in (PF, SUM_ENERGY):
            raise DomainError(f"unknown policy mode {self.mode!r}")
        if self.t_c < 1 or self.horizon < 1:
            raise DomainError("t_c and horizon must be >= 1")


@dataclass(frozen=True)
class PfState:
    """Snapshot after frame ``t``.

    ``fi`` is ``None`` before the first frame; ``eig_max`` is the top
    eigenvalue of the weighted correlation used to pick ``q`` and ``beam``
    the unit vector with ``q = P_tx beam beam^H`` (``None`` for the
    isotropic warm start).
    """

    t: int
    t_avg: np.ndarray
    fi: float | None
    q: np.ndarray
    e_last: tuple[EnergyBreakdown, ...] = ()
    eig_max: float = float("nan")
    beam: np.ndarray | None = None

    @property
    def avg_energy(self) -> float:
        return average_energy(self.t_avg)


@dataclass
class Scenario:
    """Fixed analytic inputs of the loop: ``c_ks`` is ``(K, M, M)``, ``eta_ks`` is ``(K,)``."""

    c_ks: np.ndarray
    eta_ks: np.ndarray
    params: SystemParams
    steering: SteeringModel = field(default_factory=SteeringModel)

    def without_harvesting(self) -> "Scenario":
        return Scenario(self.c_ks, np.zeros_like(self.eta_ks), self.params, self.steering)


def weighted_correlation(weights, c_ks, t_dl: float) -> np.ndarray:
    """``T_d * sum_k w_k C_k``."""
    c_ks = np.asarray(c_ks)
    weights = np.asarray(weights, dtype=float)
    if c_ks.ndim != 3 or c_ks.shape[1] != c_ks.shape[2] or len(weights) != len(c_ks):
        raise ValueError(f"dimension mismatch: {len(weights)} weights, matrices {c_ks.shape}")
    if np.any(weights < 0):
        raise DomainError("weights must be nonnegative")
    c = t_dl * np.tensordot(weights, c_ks, axes=1)
    return 0.5 * (c + c.conj().T)


def dominant_eigvec(c: np.ndarray):
    """Largest eigenpair of a Hermitian matrix with a basis-independent tie-break.

    When the top eigenvalue is degenerate the returned vector is the
    projection onto that eigenspace of the first canonical basis vector
    with a nonzero projection. The first nonzero component is real positive.
    """
    w, u = np.linalg.eigh(c)
    lam = w[-1]
    top = u[:, w >= lam - _TIE_RTOL * max(abs(lam), 1.0)]
    if top.shape[1] == 1:
        v = top[:, 0]
    else:
        proj = top @ top.conj().T
        col = int(np.argmax(np.abs(np.diag(proj)) > 1e-8))
        v = proj[:, col]
    v = v / np.linalg.norm(v)
    lead = v[np.argmax(np.abs(v) > 1e-12)]
    return float(lam), v * (abs(lead) / lead)


def optimal_covariance(c_weighted: np.ndarray, p_tx: float) -> np.ndarray:
    """Rank-one maximizer ``P_tx v v^H`` of ``tr(Q C)`` over the PSD trace ball.

    Raises:
        TypeError: input not Hermitian.
    """
    check_hermitian(c_weighted, atol=1e-10)
    _, v = dominant_eigvec(c_weighted)
    return p_tx * np.outer(v, v.conj())


def jain_index(energies) -> float:
    e = np.asarray(energies, dtype=float)
    return float(e.sum() ** 2 / (len(e) * np.sum(e * e)))


def jain_update(fi_prev: float | None, energies, t_c: float) -> float:
    """Exponentially filtered Jain index.

    ``fi_prev=None`` seeds the filter with the instantaneous index. All-zero
    energies leave the index unchanged (with a warning).
    """
    e = np.asarray(energies, dtype=float)
    if not np.any(e):
        warnings.warn("all energies zero; Jain index undefined this frame", RuntimeWarning,
                      stacklevel=2)
        return fi_prev
    inst = jain_index(e)
    if fi_prev is None:
        return inst
    return (1.0 - 1.0 / t_c) * fi_prev + inst / t_c


def average_energy(t_avg) -> float:
    t_avg = np.asarray(t_avg, dtype=float)
    if t_avg.size == 0:
        raise ValueError("average of an empty energy list")
    return float(t_avg.mean())


def _energies(q, scenario: Scenario):
    return tuple(frame_energy(q, c, eta, scenario.params)
                 for c, eta in zip(scenario.c_ks, scenario.eta_ks))


def initial_state(scenario: Scenario) -> PfState:
    """Warm start: ``T_k(0)`` is the energy under isotropic ``Q = (P_tx/M) I``."""
    m = scenario.params.m_antennas
    q0 = (scenario.params.p_tx / m) * np.eye(m, dtype=complex)
    e = _energies(q0, scenario)
    return PfState(0, np.array([b.total for b in e]), None, q0, e)


def pf_step(state: PfState, scenario: Scenario, policy: PfPolicy) -> PfState:
    """Advance one frame: weights, beam, energies, filters."""
    k = len(scenario.c_ks)
    if policy.mode == PF:
        t_prev = np.asarray(state.t_avg, dtype=float)
        if np.any(~(t_prev > 0)) or not np.all(np.isfinite(t_prev)):
            raise InitializationError(
                "proportional-fair weights need positive averaged energies; got "
                f"{t_prev.tolist()}")
        w = 1.0 / t_prev
    else:
        w = np.ones(k)
    c = weighted_correlation(w, scenario.c_ks, scenario.params.t_dl)
    lam, v = dominant_eigvec(c)
    q = scenario.params.p_tx * np.outer(v, v.conj())
    e = _energies(q, scenario)
    totals = np.array([b.total for b in e])
    beta = 1.0 / policy.t_c
    t_avg = (1.0 - beta) * np.asarray(state.t_avg) + beta * totals
    fi = jain_update(state.fi, totals, policy.t_c)
    return PfState(state.t + 1, t_avg, fi, q, e, lam, v)


def run_horizon(scenario: Scenario, policy: PfPolicy, state: PfState | None = None) -> list[PfState]:
    """Run ``policy.horizon`` frames; returns the states after frames 1..T."""
    state = initial_state(scenario) if state is None else state
    out = []
    for _ in range(policy.horizon):
        state = pf_step(state, scenario, policy)
        out.append(state)
    return out


def beam_direction(beam: np.ndarray, steering: SteeringModel, n_grid: int = 3600) -> float:
    """Azimuth (degrees) of maximum array gain ``|v(theta)^H beam|^2``."""
    theta = np.linspace(-np.pi, np.pi, n_grid, endpoint=False)
    gain = np.abs(steering.response(theta, len(beam)).conj() @ beam) ** 2
    return float(np.degrees(theta[np.argmax(gain)]))


@dataclass
class TaylorReport:
    """Comparison between the log-objective maximizer and the weighted-sum beam.

    ``objective_gap`` is ``sum log T_k`` at the direct maximizer minus its
    value at the closed-form beam (nonnegative up to optimizer accuracy).
    """

    t_c: float
    objective_gap: float
    alignment: float
    v_direct: np.ndarray
    v_closed: np.ndarray


def _log_gain(u, a, c_ks, eh, t_prev, t_c):
    """``t_c * sum_k log(T_k(t)/T_k(t-1))`` and its gradient in real coordinates."""
    m = len(c_ks[0])
    z = u[:m] + 1j * u[m:]
    nrm = np.vdot(z, z).real
    cz = np.einsum("kij,j->ki", c_ks, z)
    r = np.einsum("i,ki->k", z.conj(), cz).real / nrm
    e = a * r + eh
    x = (e - t_prev) / (t_c * t_prev)
    val = t_c * np.sum(np.log1p(x))
    t_now = t_prev * (1.0 + x)
    gz = np.sum((a / t_now)[:, None] * (2.0 / nrm) * (cz - r[:, None] * z), axis=0)
    return val, np.concatenate([gz.real, gz.imag])


def maximize_log_objective(c_ks, eta_ks, params: SystemParams, t_prev, t_c: float,
                           n_starts: int = 16, seed: int = 0, start=None) -> np.ndarray:
    """Unit beam maximizing ``sum_k log T_k(t)`` over rank-one ``Q`` of trace ``P_tx``.

    Multi-start BFGS on the real coordinates of an unnormalized vector.
    """
    c_ks = np.asarray(c_ks)
    m = c_ks.shape[1]
    a = params.t_dl * params.p_tx
    eh = np.array([params.eh_factor * e for e in eta_ks])
    t_prev = np.asarray(t_prev, dtype=float)
    rng = np.random.default_rng(seed)
    starts = [rng.standard_normal(2 * m) for _ in range(n_starts)]
    if start is not None:
        starts.append(np.concatenate([np.real(start), np.imag(start)]))
    fun = lambda u: tuple(-t for t in _log_gain(u, a, c_ks, eh, t_prev, t_c))
    best = None
    for u0 in starts:
        res = optimize.minimize(fun, u0, jac=True, method="BFGS", options={"gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
    z = best.x[:m] + 1j * best.x[m:]
    z = z / np.linalg.norm(z)
    lead = z[np.argmax(np.abs(z) > 1e-12)]
    return z * (abs(lead) / lead)


def log_objective_delta(v, c_ks, eta_ks, params: SystemParams, t_prev, t_c: float) -> float:
    """``sum_k log T_k(t) - sum_k log T_k(t-1)`` for the beam ``v`` (unscaled)."""
    m = len(v)
    u = np.concatenate([np.real(v), np.imag(v)])
    eh = np.array([params.eh_factor * e for e in eta_ks])
    val, _ = _log_gain(u, params.t_dl * params.p_tx, np.asarray(c_ks), eh,
                       np.asarray(t_prev, dtype=float), t_c)
    return val / t_c


def verify_taylor_equivalence(state: PfState, c_ks, eta_ks, params: SystemParams,
                              t_c: float, n_starts: int = 16, seed: int = 0) -> TaylorReport:
    """Check how closely the weighted-sum beam maximizes the log objective at ``t_c``."""
    t_prev = np.asarray(state.t_avg, dtype=float)
    c = weighted_correlation(1.0 / t_prev, c_ks, params.t_dl)
    _, v_closed = dominant_eigvec(c)
    v_direct = maximize_log_objective(c_ks, eta_ks, params, t_prev, t_c, n_starts, seed,
                                      start=v_closed)
    eh = np.array([params.eh_factor * e for e in eta_ks])
    a = params.t_dl * params.p_tx
    c_ks = np.asarray(c_ks)
    f = lambda v: _log_gain(np.concatenate([v.real, v.imag]), a, c_ks, eh, t_prev, t_c)[0]
    gap = (f(v_direct) - f(v_closed)) / t_c
    return TaylorReport(t_c, float(gap), float(abs(np.vdot(v_direct, v_closed))),
                        v_direct, v_closed)
