"""Scenario configuration: JSON loading, validation and serialization.

Powers may be given in dBm (``p_tx_dbm``) or watts (``p_tx_w``); the
normalized form written back by :func:`write_config` always uses watts, so
``load_config(write_config(c)) == c``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .allocation import PF, PfPolicy
from .energy import DEFAULT_RTOL, SteeringModel, SystemParams, dbm_to_watt
from .errors import ConfigError, WpmtcError
from .geometry import ClusterSpec, tangent_geometry
from .montecarlo import McConfig
from .pointprocess import matern_density

# Density cases of the evaluation: (profile, lo_factor, hi_factor) applied to the base density.
DENSITY_CASES = {
    "i": ("uniform", 1.0, 1.0),
    "ii": ("linspace", 0.5, 2.0),
    "iii": ("linspace", 0.1, 1.0),
}

_SYSTEM_KEYS = {"alpha", "sigma_g2", "sigma_gamma2", "p_tx_w", "p_tx_dbm", "p_tau_w",
                "p_tau_dbm", "p_act", "t_frame", "t_dl", "n_slots", "m_antennas",
                "sigma_n2", "sigma_w2"}
_TOP_KEYS = {"system", "steering", "density", "clusters", "policy", "montecarlo", "numerics",
             "output_dir", "seed"}


@dataclass
class ScenarioConfig:
    params: SystemParams
    clusters: list[ClusterSpec]
    steering: SteeringModel = field(default_factory=SteeringModel)
    base_density: float = 0.1
    density_profile: str = "uniform"
    density_lo: float = 1.0
    density_hi: float = 1.0
    policy: PfPolicy = field(default_factory=PfPolicy)
    mc: McConfig = field(default_factory=McConfig)
    target_cluster: int = 0
    quad_rtol: float = DEFAULT_RTOL
    output_dir: str = "results"
    seed: int = 0

    def densities(self, case: str | None = None) -> np.ndarray:
        """Per-cluster densities of a profile (``case=None`` uses the configured one)."""
        if case is None:
            prof, lo, hi = self.density_profile, self.density_lo, self.density_hi
        else:
            prof, lo, hi = DENSITY_CASES[case]
        k = len(self.clusters)
        if prof == "uniform":
            return np.full(k, self.base_density)
        return np.linspace(lo * self.base_density, hi * self.base_density, k)

    def clusters_for_case(self, case: str) -> list[ClusterSpec]:
        return [c.with_density(float(d)) for c, d in zip(self.clusters, self.densities(case))]

    def to_dict(self) -> dict:
        p = self.params
        return {
            "system": {
                "alpha": p.alpha, "sigma_g2": p.sigma_g2, "sigma_gamma2": p.sigma_gamma2,
                "p_tx_w": p.p_tx, "p_tau_w": p.p_tau, "p_act": p.p_act,
                "t_frame": p.t_frame, "t_dl": p.t_dl, "n_slots": p.n_slots,
                "m_antennas": p.m_antennas, "sigma_n2": p.sigma_n2, "sigma_w2": p.sigma_w2,
            },
            "steering": {"kind": self.steering.kind,
                         "radius_wavelengths": self.steering.radius_wavelengths},
            "density": {"base": self.base_density, "profile": self.density_profile,
                        "lo_factor": self.density_lo, "hi_factor": self.density_hi},
            "clusters": [
                {"center": list(c.center), "radius": c.radius, "min_distance": c.min_distance,
                 "density": c.density}
                for c in self.clusters
            ],
            "policy": {"mode": self.policy.mode, "t_c": self.policy.t_c,
                       "horizon": self.policy.horizon},
            "montecarlo": {"n_realizations": self.mc.n_realizations,
                           "n_slots_per_frame": self.mc.n_slots_per_frame,
                           "histogram_bins": self.mc.histogram_bins,
                           "target_cluster": self.target_cluster},
            "numerics": {"quad_rtol": self.quad_rtol},
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _check_keys(section: dict, allowed: set, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")


def _power(sec: dict, name: str, default_w: float) -> float:
    w, dbm = sec.get(f"{name}_w"), sec.get(f"{name}_dbm")
    if w is not None and dbm is not None:
        raise ConfigError(f"system: give only one of {name}_w and {name}_dbm")
    if dbm is not None:
        return dbm_to_watt(float(dbm))
    return default_w if w is None else float(w)


def from_dict(raw: dict) -> ScenarioConfig:
    """Validate a parsed configuration and normalize it to SI units."""
    raw = copy.deepcopy(raw)
    _check_keys(raw, _TOP_KEYS, "config")
    try:
        sysd = raw.get("system", {})
        _check_keys(sysd, _SYSTEM_KEYS, "system")
        params = SystemParams.from_frame(
            t_frame=float(sysd.get("t_frame", 1.0)),
            t_dl=float(sysd.get("t_dl", 0.5)),
            n_slots=int(sysd.get("n_slots", 500)),
            alpha=float(sysd.get("alpha", 2.0)),
            sigma_g2=float(sysd.get("sigma_g2", 1.0)),
            sigma_gamma2=float(sysd.get("sigma_gamma2", 1.0)),
            p_tx=_power(sysd, "p_tx", 10.0),
            p_tau=_power(sysd, "p_tau", 0.1),
            p_act=float(sysd.get("p_act", 0.1)),
            m_antennas=int(sysd.get("m_antennas", 100)),
            sigma_n2=float(sysd.get("sigma_n2", 0.0)),
            sigma_w2=float(sysd.get("sigma_w2", 0.0)),
        )

        std = raw.get("steering", {})
        _check_keys(std, {"kind", "radius_wavelengths"}, "steering")
        radius = std.get("radius_wavelengths")
        steering = SteeringModel(std.get("kind", "uca"), None if radius is None else float(radius))

        dens = raw.get("density", {})
        _check_keys(dens, {"base", "profile", "lo_factor", "hi_factor"}, "density")
        base = float(dens.get("base", 0.1))
        profile = dens.get("profile", "uniform")
        if profile not in ("uniform", "linspace"):
            raise ConfigError(f"density: profile must be 'uniform' or 'linspace', got {profile!r}")
        lo = float(dens.get("lo_factor", 1.0))
        hi = float(dens.get("hi_factor", 1.0))

        entries = raw.get("clusters", [])
        if not isinstance(entries, list) or not entries:
            raise ConfigError("clusters: expected a non-empty list")
        k = len(entries)
        prof_dens = (np.full(k, base) if profile == "uniform"
                     else np.linspace(lo * base, hi * base, k))
        clusters = []
        for i, e in enumerate(entries):
            _check_keys(e, {"center", "radius", "min_distance", "density", "parent_intensity"},
                        f"clusters[{i}]")
            d_min = float(e.get("min_distance", 0.0))
            if "density" in e and "parent_intensity" in e:
                raise ConfigError(f"clusters[{i}]: give density or parent_intensity, not both")
            if "density" in e:
                lam = float(e["density"])
            elif "parent_intensity" in e:
                lam = matern_density(float(e["parent_intensity"]), d_min)
            else:
                lam = float(prof_dens[i])
            center = e.get("center")
            if not (isinstance(center, list) and len(center) == 2):
                raise ConfigError(f"clusters[{i}]: center must be [x, y]")
            try:
                clusters.append(ClusterSpec(tuple(center), float(e.get("radius", 10.0)), lam,
                                            d_min, i))
            except WpmtcError as exc:
                raise ConfigError(f"clusters[{i}]: {exc}") from exc

        pol = raw.get("policy", {})
        _check_keys(pol, {"mode", "t_c", "horizon"}, "policy")
        policy = PfPolicy(pol.get("mode", PF), float(pol.get("t_c", 50.0)),
                          int(pol.get("horizon", 1000)))

        mcd = raw.get("montecarlo", {})
        _check_keys(mcd, {"n_realizations", "n_slots_per_frame", "histogram_bins",
                          "target_cluster"}, "montecarlo")
        seed = int(raw.get("seed", 0))
        nspf = mcd.get("n_slots_per_frame")
        mc = McConfig(int(mcd.get("n_realizations", 10_000)), seed,
                      None if nspf is None else int(nspf), int(mcd.get("histogram_bins", 50)))
        target = int(mcd.get("target_cluster", 0))
        if not 0 <= target < k:
            raise ConfigError(f"montecarlo: target_cluster {target} out of range")

        num = raw.get("numerics", {})
        _check_keys(num, {"quad_rtol"}, "numerics")
        rtol = float(num.get("quad_rtol", DEFAULT_RTOL))
    except ConfigError:
        raise
    except (WpmtcError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    _check_geometry(clusters)
    return ScenarioConfig(params, clusters, steering, base, profile, lo, hi, policy, mc, target,
                          rtol, str(raw.get("output_dir", "results")), seed)


def _check_geometry(clusters):
    for c in clusters:
        try:
            tangent_geometry(c)
        except WpmtcError as exc:
            raise ConfigError(f"base station inside the disk of cluster {c.id}; "
                              f"tangent geometry precondition violated ({exc})") from exc
        for o in clusters:
            if o is not c and math.dist(c.center, o.center) <= o.radius:
                raise ConfigError(f"center of cluster {c.id} lies inside cluster {o.id}; "
                                  "inter-cluster tangent geometry undefined")


def loads_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_dict(raw)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    return loads_config(path.read_text(), str(path))


def dumps_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2) + "\n"


def write_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg))


def annulus_layout(n: int = 10, r_in: float = 30.0, r_out: float = 100.0,
                   min_separation: float = 35.0, seed: int = 2020,
                   max_tries: int = 100_000) -> list[tuple[float, float]]:
    """Cluster centers uniform (by area) in an annulus around the BS.

    Draws are rejected when closer than ``min_separation`` to an accepted
    center.
    """
    rng = np.random.default_rng(seed)
    centers: list[tuple[float, float]] = []
    for _ in range(max_tries):
        if len(centers) == n:
            return centers
        r = math.sqrt(rng.uniform(r_in**2, r_out**2))
        t = rng.uniform(-math.pi, math.pi)
        p = (round(r * math.cos(t), 6), round(r * math.sin(t), 6))
        if all(math.dist(p, q) >= min_separation for q in centers):
            centers.append(p)
    raise RuntimeError("annulus layout: could not place all centers")


def relayout(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Same scenario with cluster centers redrawn by :func:`annulus_layout` under ``seed``.

    The separation scales with the largest radius (35 m at R = 10 m).
    """
    raw = cfg.to_dict()
    sep = 3.5 * max(c.radius for c in cfg.clusters)
    for entry, center in zip(raw["clusters"], annulus_layout(len(cfg.clusters), min_separation=sep,
                                                              seed=seed)):
        entry["center"] = list(center)
    return from_dict(raw)


def default_config_text() -> str:
    return resources.files("wpmtc").joinpath("data/default_scenario.json").read_text()


def default_config() -> ScenarioConfig:
    return loads_config(default_config_text(), "default_scenario.json")


def make_default_dict() -> dict:
    """Evaluation scenario: 10 clusters, R = 10 m, d_min = 0.1 m, 40 dBm BS, 20 dBm sensors."""
    return {
        "system": {"alpha": 2.0, "sigma_g2": 1.0, "sigma_gamma2": 1.0, "p_tx_dbm": 40.0,
                   "p_tau_dbm": 20.0, "p_act": 0.1, "t_frame": 1.0, "t_dl": 0.5,
                   "n_slots": 500, "m_antennas": 100, "sigma_n2": 0.0, "sigma_w2": 0.0},
        "steering": {"kind": "uca", "radius_wavelengths": None},
        "density": {"base": 0.1, "profile": "uniform", "lo_factor": 1.0, "hi_factor": 1.0},
        "clusters": [{"center": list(c), "radius": 10.0, "min_distance": 0.1}
                     for c in annulus_layout()],
        "policy": {"mode": PF, "t_c": 50, "horizon": 1000},
        "montecarlo": {"n_realizations": 10000, "n_slots_per_frame": None,
                       "histogram_bins": 50, "target_cluster": 0},
        "numerics": {"quad_rtol": 1e-8},
        "output_dir": "results",
        "seed": 2020,
    }

