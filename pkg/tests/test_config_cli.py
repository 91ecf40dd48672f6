import csv
import json
import math
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wpmtc import cli
from wpmtc.config import (
    DENSITY_CASES,
    annulus_layout,
    default_config,
    default_config_text,
    dumps_config,
    from_dict,
    load_config,
    loads_config,
    make_default_dict,
    write_config,
)
from wpmtc.errors import ConfigError
from wpmtc.experiments import run_experiment

NUMBER = re.compile(r"^-?\d+(\.\d+)?(e[+-]\d+)?$|^nan$")


def small_dict(**overrides):
    raw = make_default_dict()
    raw["clusters"] = raw["clusters"][:3]
    raw["system"]["m_antennas"] = 4
    raw["policy"]["horizon"] = 20
    raw["montecarlo"]["n_realizations"] = 200
    raw["montecarlo"]["histogram_bins"] = 10
    raw.update(overrides)
    return raw


def test_default_config_loads():
    cfg = default_config()
    assert cfg.params.p_tx == pytest.approx(10.0)
    assert cfg.params.p_tau == pytest.approx(0.1)
    assert len(cfg.clusters) == 10
    assert all(c.radius == 10 and c.min_distance == 0.1 and c.density == 0.1 for c in cfg.clusters)
    assert cfg.params.m_antennas == 100
    assert (cfg.policy.t_c, cfg.policy.horizon) == (50, 1000)
    assert json.loads(dumps_config(cfg))["system"]["p_tx_w"] == pytest.approx(10.0)


def test_shipped_layout_is_reproducible():
    centers = [tuple(c["center"]) for c in json.loads(default_config_text())["clusters"]]
    assert centers == annulus_layout()
    for c in centers:
        assert 30 <= math.hypot(*c) <= 100


def test_density_cases():
    cfg = default_config()
    assert np.allclose(cfg.densities("i"), 0.1)
    ii, iii = cfg.densities("ii"), cfg.densities("iii")
    assert (ii[0], ii[-1]) == pytest.approx((0.05, 0.2))
    assert (iii[0], iii[-1]) == pytest.approx((0.01, 0.1))
    assert set(DENSITY_CASES) == {"i", "ii", "iii"}


def test_density_bound_rejected():
    raw = small_dict()
    raw["clusters"][0]["density"] = 40.0
    with pytest.raises(ConfigError, match=r"min_distance\^2"):
        from_dict(raw)


def test_bs_inside_cluster_rejected():
    raw = small_dict()
    raw["clusters"][0]["center"] = [3.0, 0.0]
    with pytest.raises(ConfigError, match="tangent"):
        from_dict(raw)


def test_unknown_keys_rejected():
    raw = small_dict()
    raw["system"]["p_txx"] = 1
    with pytest.raises(ConfigError, match="p_txx"):
        from_dict(raw)
    raw = small_dict(extra=1)
    with pytest.raises(ConfigError, match="extra"):
        from_dict(raw)


def test_parse_error_has_position():
    with pytest.raises(ConfigError, match="line 2 column"):
        loads_config('{\n  "seed": ,\n}')


def test_power_units_and_parent_intensity():
    raw = small_dict()
    raw["system"].pop("p_tx_dbm")
    raw["system"]["p_tx_w"] = 2.5
    raw["clusters"][1] = {"center": raw["clusters"][1]["center"], "radius": 10.0,
                          "min_distance": 0.1, "parent_intensity": 0.2}
    cfg = from_dict(raw)
    assert cfg.params.p_tx == 2.5
    assert cfg.clusters[1].density == pytest.approx(
        (1 - math.exp(-0.2 * math.pi * 0.01)) / (math.pi * 0.01))
    raw["system"]["p_tx_dbm"] = 30
    with pytest.raises(ConfigError):
        from_dict(raw)


def test_round_trip(tmp_path):
    cfg = default_config()
    write_config(cfg, tmp_path / "c.json")
    again = load_config(tmp_path / "c.json")
    assert again.to_dict() == cfg.to_dict()
    assert again.digest() == cfg.digest()


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.integers(1, 10), st.floats(1.0, 200.0),
       st.sampled_from(["proportional-fair", "sum-energy"]), st.integers(0, 2**31))
def test_round_trip_random(base, m, t_c, mode, seed):
    raw = small_dict(seed=seed)
    raw["density"]["base"] = base
    raw["system"]["m_antennas"] = m
    raw["policy"].update(mode=mode, t_c=t_c)
    cfg = from_dict(raw)
    again = loads_config(dumps_config(cfg))
    assert again.to_dict() == cfg.to_dict()


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(small_dict()))
    assert cli.main(["validate", str(good)]) == 0
    bad = small_dict()
    bad["clusters"][0]["center"] = [0.0, 0.0]
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    assert cli.main(["validate", str(tmp_path / "bad.json")]) == 2
    (tmp_path / "broken.json").write_text("{")
    assert cli.main(["validate", str(tmp_path / "broken.json")]) == 2
    assert cli.main(["validate", str(tmp_path / "missing.json")]) == 1
    capsys.readouterr()
    assert cli.main(["default-config"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads(default_config_text())


def test_run_is_deterministic_and_well_formed(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(small_dict()))
    assert cli.main(["run", str(path), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", str(path), "--out", str(tmp_path / "b")]) == 0
    m_a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    m_b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert m_a["files"] == m_b["files"]
    assert set(m_a["files"]) == {"histogram.csv", "histogram_meta.csv", "fairness.csv",
                                 "trajectory_pf.csv", "trajectory_sum.csv", "energy.csv",
                                 "energy_summary.csv"}
    for name in m_a["files"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        with open(tmp_path / "a" / name) as fh:
            rows = list(csv.reader(fh))
        assert all(len(r) == len(rows[0]) for r in rows)
        for row in rows[1:]:
            for cell in row:
                assert NUMBER.match(cell) or cell.isalpha() or "_" in cell, (name, cell)
    fair = list(csv.reader(open(tmp_path / "a" / "fairness.csv")))
    assert fair[0] == ["t", "fi_pf", "fi_sum"] and len(fair) == 21
    energy = list(csv.reader(open(tmp_path / "a" / "energy.csv")))
    assert energy[0] == ["t", "avg_i_eh", "avg_i_noeh", "avg_ii_eh", "avg_ii_noeh",
                         "avg_iii_eh", "avg_iii_noeh"]


def test_seed_override_changes_histogram(tmp_path):
    cfg = from_dict(small_dict())
    a = run_experiment(cfg, "histogram", seed=1, out_dir=tmp_path / "a")
    b = run_experiment(cfg, "histogram", seed=2, out_dir=tmp_path / "b")
    assert a.seed == 1 and b.seed == 2
    assert a.files["histogram.csv"] != b.files["histogram.csv"]
    with pytest.raises(ValueError):
        run_experiment(cfg, "plots", out_dir=tmp_path)


def test_layout_ensemble(tmp_path):
    from wpmtc.config import relayout

    cfg = from_dict(small_dict())
    other = relayout(cfg, 7)
    assert [c.center for c in other.clusters] != [c.center for c in cfg.clusters]
    assert [c.radius for c in other.clusters] == [c.radius for c in cfg.clusters]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(small_dict()))
    assert cli.main(["run", str(path), "--experiment", "fairness", "--layouts", "3",
                     "--out", str(tmp_path / "o")]) == 0
    rows = list(csv.reader(open(tmp_path / "o" / "fairness_ensemble.csv")))
    assert rows[0] == ["t", "fi_pf_mean", "fi_pf_se", "fi_sum_mean", "fi_sum_se"]
    assert len(rows) == 21
    seeds = (tmp_path / "o" / "fairness_ensemble_layouts.csv").read_text().split()
    assert seeds == ["layout_seed", "2020", "2021", "2022"]
