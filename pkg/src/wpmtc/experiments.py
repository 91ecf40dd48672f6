"""Experiment runner writing reproducible CSV products.

* ``histogram``: Monte Carlo distribution of the inter-cluster path-loss sum
  at the target cluster, with the center-point approximation alongside.
* ``fairness``: Jain index trajectories, proportional-fair vs. sum-energy.
* ``energy``: average stored energy with and without harvesting for the
  three density cases.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .allocation import PF, SUM_ENERGY, PfPolicy, Scenario, beam_direction, run_horizon
from .config import DENSITY_CASES, ScenarioConfig, relayout
from .energy import cluster_statistics, eta_inter, to_db
from .montecarlo import McConfig, mc_eta_inter, write_histogram_csv

log = logging.getLogger(__name__)

EXPERIMENTS = ("histogram", "fairness", "energy")


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    seed: int
    experiment: str
    files: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    def write(self, path: Path) -> None:
        """Atomic write: temp file in the target directory, then rename."""
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-")
        with os.fdopen(fd, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)


def fmt(x) -> str:
    return f"{x:.12g}"


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, str)) else fmt(v) for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _trajectory_rows(states, steering):
    for s in states:
        yield [s.t, s.fi, s.avg_energy, *s.t_avg, s.eig_max, beam_direction(s.beam, steering)]


def run_histogram(cfg: ScenarioConfig, seed: int, out: Path) -> list[Path]:
    k = cfg.target_cluster
    target = cfg.clusters[k]
    others = [c for c in cfg.clusters if c is not target]
    approx = eta_inter(target, others, cfg.params.alpha, cfg.quad_rtol)
    mc = McConfig(cfg.mc.n_realizations, seed, cfg.mc.n_slots_per_frame, cfg.mc.histogram_bins)
    est = mc_eta_inter(target, others, cfg.params.alpha, mc)
    log.info("cluster %d: approx %.3f dB, mc %.3f +- %.3f dB", k, to_db(approx), est.mean_db,
             est.se_db)
    paths = [out / "histogram.csv", out / "histogram_meta.csv"]
    write_histogram_csv(est, paths[0], float(to_db(approx)), paths[1])
    return paths


def _scenario(cfg: ScenarioConfig, clusters, c_ks=None) -> Scenario:
    stats = cluster_statistics(clusters, cfg.params, cfg.steering, cfg.quad_rtol, c_ks)
    return Scenario(stats.c_ks, stats.eta, cfg.params, cfg.steering)


def _fairness_runs(cfg: ScenarioConfig) -> dict:
    sc = _scenario(cfg, cfg.clusters)
    return {tag: run_horizon(sc, PfPolicy(mode, cfg.policy.t_c, cfg.policy.horizon))
            for mode, tag in ((PF, "pf"), (SUM_ENERGY, "sum"))}


def _fairness_columns(runs) -> dict[str, list[float]]:
    return {f"fi_{tag}": [s.fi for s in states] for tag, states in runs.items()}


def run_fairness(cfg: ScenarioConfig, out: Path) -> list[Path]:
    runs = _fairness_runs(cfg)
    k = len(cfg.clusters)
    paths = [out / "fairness.csv"]
    _write_columns(paths[0], _fairness_columns(runs))
    header = ["t", "fi", "avg_energy", *[f"T_{i + 1}" for i in range(k)], "eig_max", "beam_deg"]
    for tag, states in runs.items():
        p = out / f"trajectory_{tag}.csv"
        _write_rows(p, header, _trajectory_rows(states, cfg.steering))
        paths.append(p)
    return paths


def _energy_columns(cfg: ScenarioConfig) -> dict[str, list[float]]:
    policy = PfPolicy(cfg.policy.mode, cfg.policy.t_c, cfg.policy.horizon)
    columns = {}
    c_ks = None
    for case in DENSITY_CASES:
        sc = _scenario(cfg, cfg.clusters_for_case(case), c_ks)
        c_ks = sc.c_ks  # geometry only; reused across density cases
        columns[f"avg_{case}_eh"] = [s.avg_energy for s in run_horizon(sc, policy)]
        columns[f"avg_{case}_noeh"] = [s.avg_energy
                                       for s in run_horizon(sc.without_harvesting(), policy)]
    return columns


def _write_columns(path: Path, columns: dict) -> None:
    names = list(columns)
    n = len(columns[names[0]])
    _write_rows(path, ["t", *names], ([t + 1, *(columns[c][t] for c in names)] for t in range(n)))


def run_energy(cfg: ScenarioConfig, out: Path) -> list[Path]:
    columns = _energy_columns(cfg)
    summary = []
    for case in DENSITY_CASES:
        on, off = columns[f"avg_{case}_eh"][-1], columns[f"avg_{case}_noeh"][-1]
        summary.append([case, on, off, on - off])
    paths = [out / "energy.csv", out / "energy_summary.csv"]
    _write_columns(paths[0], columns)
    _write_rows(paths[1], ["case", "avg_final_eh", "avg_final_noeh", "eh_increment"], summary)
    return paths


def run_ensemble(cfg: ScenarioConfig, name: str, layout_seeds, out: Path) -> list[Path]:
    """Mean and standard error of the fairness or energy curves over redrawn layouts."""
    curves = []
    for s in layout_seeds:
        c = relayout(cfg, s)
        curves.append(_fairness_columns(_fairness_runs(c)) if name == "fairness"
                      else _energy_columns(c))
    columns = {}
    for col in curves[0]:
        x = np.array([c[col] for c in curves])
        columns[f"{col}_mean"] = x.mean(axis=0)
        se = x.std(axis=0, ddof=1) / np.sqrt(len(x)) if len(x) > 1 else np.zeros(x.shape[1])
        columns[f"{col}_se"] = se
    path = out / f"{name}_ensemble.csv"
    _write_columns(path, columns)
    seeds = out / f"{name}_ensemble_layouts.csv"
    _write_rows(seeds, ["layout_seed"], ([int(s)] for s in layout_seeds))
    return [path, seeds]


def run_experiment(cfg: ScenarioConfig, experiment: str = "all", seed: int | None = None,
                   out_dir=None, layouts: int = 0) -> RunManifest:
    """Run one experiment family (or ``all``) and write its CSVs plus ``manifest.json``.

    ``layouts > 0`` additionally averages the fairness and energy curves over
    that many annulus layouts drawn with seeds ``seed, seed + 1, ...``.
    """
    if experiment != "all" and experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    seed = cfg.seed if seed is None else seed
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg.digest(), __version__, seed, experiment)
    todo = EXPERIMENTS if experiment == "all" else (experiment,)
    for name in todo:
        t0 = time.perf_counter()
        if name == "histogram":
            paths = run_histogram(cfg, seed, out)
        elif name == "fairness":
            paths = run_fairness(cfg, out)
        else:
            paths = run_energy(cfg, out)
        if layouts > 0 and name != "histogram":
            paths += run_ensemble(cfg, name, range(seed, seed + layouts), out)
        manifest.timings[name] = round(time.perf_counter() - t0, 3)
        for p in paths:
            manifest.files[p.name] = _sha256(p)
        log.info("%s done in %.1f s", name, manifest.timings[name])
    manifest.write(out / "manifest.json")
    return manifest
