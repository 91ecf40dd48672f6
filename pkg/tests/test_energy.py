import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from wpmtc.energy import (
    SteeringModel,
    SystemParams,
    check_hermitian,
    cluster_statistics,
    correlation_matrix,
    dbm_to_watt,
    distance_pdf,
    distance_pdf_norm,
    eh_energy,
    eta_inter,
    eta_intra,
    frame_energy,
    is_psd,
    mean_pair_pathloss,
    sector_integral,
    watt_to_dbm,
    wpt_energy,
)
from wpmtc.errors import DomainError, GeometryError
from wpmtc.geometry import ClusterSpec

REFERENCE_CLUSTER = ClusterSpec((50, 0), 10, 0.1, 0.1)
UCA = SteeringModel()


def disk_mean_inverse_square(d, r):
    """Closed form of the mean of |x|^-2 over a disk at distance d from the origin."""
    return math.log(d * d / (d * d - r * r)) / (r * r)


def test_power_conversions():
    assert dbm_to_watt(40) == pytest.approx(10.0)
    assert dbm_to_watt(20) == pytest.approx(0.1)
    assert watt_to_dbm(dbm_to_watt(13.7)) == pytest.approx(13.7)


def test_system_params_timing():
    p = SystemParams.from_frame(t_frame=2.0, t_dl=0.5, n_slots=300)
    assert p.t_ul == pytest.approx(1.5)
    assert p.t_slot == pytest.approx(5e-3)
    with pytest.raises(DomainError):
        SystemParams(t_dl=0.4)
    with pytest.raises(DomainError):
        SystemParams(n_slots=400)
    with pytest.raises(DomainError):
        SystemParams(p_act=1.5)
    with pytest.raises(DomainError):
        SystemParams(alpha=1.9)


def test_steering_is_unit_modulus():
    v = UCA.response(np.linspace(-4, 4, 50), 7)
    assert v.shape == (50, 7)
    assert np.allclose(np.abs(v), 1.0)


def test_pdf_zero_outside_and_at_2r():
    c = REFERENCE_CLUSTER
    assert distance_pdf(20.0, c) == 0.0
    assert distance_pdf(0.05, c) == 0.0
    assert distance_pdf(25.0, c) == 0.0
    assert distance_pdf(10.0, c) > 0


def test_pdf_norm_close_to_one():
    a = distance_pdf_norm(REFERENCE_CLUSTER)
    assert abs(a - 1.0) < 1e-3
    # truncated mass equals 1 - P(rho < d_min) computed in extended precision
    r, d = mpmath.mpf(10), mpmath.mpf("0.1")
    raw = lambda x: 4 * x / (mpmath.pi * r**2) * (mpmath.acos(x / (2 * r))
                                                  - x / (2 * r) * mpmath.sqrt(1 - x**2 / (4 * r**2)))
    ref = 1 - mpmath.quad(raw, [0, d])
    assert a == pytest.approx(float(ref), rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 50), st.floats(0.0, 0.3))
def test_pdf_integrates_to_one(radius, frac):
    c = ClusterSpec((500, 0), radius, 0.01 / radius**2, frac * radius)
    val, _ = integrate.quad(lambda r: distance_pdf(r, c), c.min_distance, 2 * radius,
                            epsabs=0, epsrel=1e-12, limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_eta_intra_limits():
    lone = ClusterSpec((50, 0), 10, 1 / (math.pi * 100), 0.1)
    assert eta_intra(lone, 2.0) == 0.0
    sparse = ClusterSpec((50, 0), 10, 0.5 / (math.pi * 100), 0.1)
    with pytest.warns(RuntimeWarning):
        assert eta_intra(sparse, 2.0) == 0.0
    with pytest.raises(DomainError):
        mean_pair_pathloss(ClusterSpec((50, 0), 10, 0.1), 2.0)


def test_eta_intra_steep_exponent_against_fixed_grid():
    c = REFERENCE_CLUSTER
    got = mean_pair_pathloss(c, 6.0, rtol=1e-10)
    # fine geometric grid in log(rho), composite Simpson
    s = np.linspace(math.log(0.1), math.log(20.0), 400001)
    rho = np.exp(s)
    ref = integrate.simpson(rho ** (1 - 6.0) * distance_pdf(rho, c), x=s)
    assert got == pytest.approx(ref, rel=1e-8)


def test_eta_intra_reference_cluster_value():
    mp = mean_pair_pathloss(REFERENCE_CLUSTER, 2.0)
    assert eta_intra(REFERENCE_CLUSTER, 2.0) == pytest.approx((10 * math.pi - 1) * mp)


def test_correlation_scalar_matches_closed_form():
    c = ClusterSpec((20, 0), 10, 0.1)
    p = SystemParams(m_antennas=1)
    got = correlation_matrix(c, p, UCA)
    assert got.shape == (1, 1)
    assert got[0, 0].real == pytest.approx(disk_mean_inverse_square(20, 10), rel=1e-9)


def test_sector_integral_closed_form_and_far_field():
    c = ClusterSpec((30, 40), 10, 0.2)
    assert sector_integral(c, 2.0) == pytest.approx(math.pi * 100 * disk_mean_inverse_square(50, 10),
                                                    rel=1e-9)
    far = ClusterSpec((1000, 0), 10, 0.2)
    target = ClusterSpec((0, 0), 5, 0.1)
    approx = eta_inter(target, [far], 2.0)
    assert approx == pytest.approx(0.2 * math.pi * 100 / 1000**2, rel=1e-2)
    assert eta_inter(target, [], 2.0) == 0.0
    with pytest.raises(GeometryError):
        eta_inter(target, [ClusterSpec((3, 0), 10, 0.1)], 2.0)


def test_trace_identity_m_times_scalar():
    c = ClusterSpec((50, 0), 10, 0.1)
    scalar = correlation_matrix(c, SystemParams(m_antennas=1), UCA)[0, 0].real
    for m in (2, 4, 16):
        cm = correlation_matrix(c, SystemParams(m_antennas=m), UCA)
        assert np.trace(cm).real == pytest.approx(m * scalar, rel=1e-8)


@st.composite
def bs_exterior_cluster(draw):
    r = draw(st.floats(1.0, 20.0))
    d = r * draw(st.floats(1.05, 10.0))
    phi = draw(st.floats(-math.pi, math.pi))
    return ClusterSpec((d * math.cos(phi), d * math.sin(phi)), r, 0.1)


@settings(max_examples=100, deadline=None)
@given(bs_exterior_cluster(), st.integers(1, 8), st.sampled_from([2.0, 3.0, 4.0]))
def test_correlation_hermitian_psd(cluster, m, alpha):
    p = SystemParams(m_antennas=m, alpha=alpha)
    c = correlation_matrix(cluster, p, UCA)
    assert np.max(np.abs(c - c.conj().T)) <= 1e-12 * np.linalg.norm(c)
    tr = np.trace(c).real
    assert np.linalg.eigvalsh(c)[0] >= -1e-9 * tr
    scalar = p.sigma_g2 / cluster.area * sector_integral(cluster, alpha)
    assert abs(tr - m * scalar) <= 1e-7 * tr


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0])
def test_trace_decreases_with_distance(alpha):
    p = SystemParams(m_antennas=4, alpha=alpha)
    traces = [np.trace(correlation_matrix(ClusterSpec((d, 0), 10, 0.1), p, UCA)).real
              for d in (15, 25, 50, 100, 200)]
    assert all(a > b for a, b in zip(traces, traces[1:]))


def test_wpt_energy_examples():
    c = correlation_matrix(REFERENCE_CLUSTER, SystemParams(m_antennas=4), UCA)
    assert wpt_energy(np.zeros((4, 4)), c, 0.5) == 0.0
    iso = wpt_energy(10 / 4 * np.eye(4), c, 0.5)
    assert iso == pytest.approx(0.5 * 10 / 4 * np.trace(c).real, rel=1e-12)
    with pytest.raises(ValueError):
        wpt_energy(np.eye(3), c, 0.5)


def test_wpt_energy_trace_oracle():
    rng = np.random.default_rng(5)
    for _ in range(100):
        m = int(rng.integers(1, 9))
        a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        b = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        q, c = a @ a.conj().T, b @ b.conj().T
        ref = sum(q[i, j] * c[j, i] for i in range(m) for j in range(m)).real
        got = wpt_energy(q, c, 1.0)
        assert got >= 0
        assert got == pytest.approx(ref, rel=1e-12)


def test_eh_energy_arithmetic():
    p = SystemParams()
    assert eh_energy(1e-4, p) == pytest.approx(4.5e-7, rel=1e-12)
    assert eh_energy(1e-4, SystemParams(p_act=0.0)) == 0.0
    assert eh_energy(1e-4, SystemParams(p_act=1.0)) == 0.0
    vals = [eh_energy(1.0, SystemParams(p_act=x)) for x in (0.2, 0.5, 0.8)]
    assert vals[1] > vals[0]
    assert vals[0] == pytest.approx(vals[2])
    with pytest.raises(DomainError):
        eh_energy(-1.0, p)


def test_eh_energy_linear_scaling():
    base = eh_energy(2e-3, SystemParams())
    assert eh_energy(4e-3, SystemParams()) == pytest.approx(2 * base)
    assert eh_energy(2e-3, SystemParams(p_tau=0.3)) == pytest.approx(3 * base)
    assert eh_energy(2e-3, SystemParams(sigma_gamma2=0.5)) == pytest.approx(0.5 * base)
    p = SystemParams.from_frame(t_frame=1.5, t_dl=0.5, n_slots=500)
    assert eh_energy(2e-3, p) == pytest.approx(2 * base)


def test_frame_energy_breakdown():
    p = SystemParams(m_antennas=2)
    c = correlation_matrix(REFERENCE_CLUSTER, p, UCA)
    zero = frame_energy(np.zeros((2, 2)), c, 0.0, p)
    assert (zero.e_wpt, zero.e_eh, zero.total) == (0.0, 0.0, 0.0)
    eh_only = frame_energy(np.zeros((2, 2)), c, 1e-4, p)
    assert eh_only.total == eh_only.e_eh == pytest.approx(4.5e-7)
    full = frame_energy(5 * np.eye(2), c, 1e-4, p, eta_split=(6e-5, 4e-5))
    assert full.total == pytest.approx(full.e_wpt + full.e_eh)
    assert full.eta_intra == 6e-5


def test_cluster_statistics_reuses_matrices():
    specs = [ClusterSpec((50, 0), 10, 0.1, 0.1, id=0), ClusterSpec((0, 60), 8, 0.2, 0.1, id=1)]
    p = SystemParams(m_antennas=3)
    stats = cluster_statistics(specs, p, UCA)
    again = cluster_statistics([s.with_density(0.3) for s in specs], p, UCA, c_ks=stats.c_ks)
    assert again.c_ks is stats.c_ks
    assert np.all(again.eta_intra > stats.eta_intra)
    assert np.allclose(stats.eta, stats.eta_intra + stats.eta_inter)


def test_hermitian_helpers():
    with pytest.raises(TypeError):
        check_hermitian(np.array([[1, 2], [0, 1]]))
    with pytest.raises(TypeError):
        check_hermitian(np.ones(3))
    assert is_psd(np.eye(3))
    assert not is_psd(np.diag([1.0, -1.0]))
