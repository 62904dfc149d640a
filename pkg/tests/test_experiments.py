"""Experiment driver: configs, artifact bundles, sweeps, verification CLIs."""

import json
from pathlib import Path

import numpy as np
import pytest

from kslab import experiments
from kslab.initial_data import InitialDatumSpec
from kslab.solver import SolverConfig

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _small_config(**overrides):
    base = dict(
        n=5,
        datum=InitialDatumSpec(n=5, family="scaled_chandrasekhar", a=0.9, cap=30.0),
        S_max=1e4,
        N=256,
        t_end=30.0,
        n_outputs=16,
    )
    base.update(overrides)
    return experiments.ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# config parsing

def test_load_shipped_absorbing_config():
    cfg = experiments.load_config(f"{CONFIG_DIR}/theo25_n5.cfg")
    assert cfg.n == 5
    assert cfg.datum.family == "scaled_chandrasekhar"
    assert cfg.datum.a == 1.0
    assert cfg.S_max == 1e5
    assert cfg.N == 2048
    assert cfg.t_end == 200.0


def test_load_shipped_growup_config():
    cfg = experiments.load_config(f"{CONFIG_DIR}/theo7_n10.cfg")
    assert cfg.n == 10
    assert cfg.datum.theta == 5.0
    assert cfg.solver.dt_ramp == (1e-4, 5e-4)
    assert cfg.energy_mode == "auto"


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        experiments.load_config(tmp_path / "nope.cfg")


def test_config_validation():
    with pytest.raises(ValueError):
        _small_config(t_end=-1.0)
    with pytest.raises(ValueError):
        _small_config(n_outputs=1)
    with pytest.raises(ValueError):
        _small_config(energy_mode="explicit")  # needs gamma and p
    with pytest.raises(ValueError):
        _small_config(datum=InitialDatumSpec(n=7, family="scaled_chandrasekhar",
                                             a=0.5, cap=1.0))


# ---------------------------------------------------------------------------
# single runs

def test_empty_datum_run_all_invariants_pass(tmp_path):
    cfg = _small_config(
        datum=InitialDatumSpec(n=5, family="scaled_chandrasekhar", a=0.0, cap=1.0),
        S_max=100.0,
        N=64,
        t_end=1.0,
        n_outputs=5,
    )
    summary = experiments.run_experiment(cfg, tmp_path)
    assert summary["all_invariants_pass"]
    assert summary["sup_norm_final"] == 0.0
    assert summary["exploded_at"] is None


def test_run_writes_artifact_bundle(tmp_path):
    cfg = _small_config(N=128, t_end=5.0, n_outputs=6)
    summary = experiments.run_experiment(cfg, tmp_path)
    assert (tmp_path / "summary.json").exists()
    assert (tmp_path / "mesh.json").exists()
    assert (tmp_path / "diagnostics.csv").exists()
    snaps = sorted((tmp_path / "snapshots").glob("w_*.csv"))
    assert len(snaps) == 6
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk["verdict"] == summary["verdict"]
    assert list((tmp_path / "plots").glob("*.svg"))


def test_shipped_absorbing_config_is_bounded(tmp_path):
    cfg = experiments.load_config(f"{CONFIG_DIR}/theo25_n5.cfg")
    summary = experiments.run_experiment(cfg, tmp_path)
    assert summary["absorbing_entry"] is not None
    assert summary["verdict"] == "bounded"
    assert summary["all_invariants_pass"]


# ---------------------------------------------------------------------------
# sweeps

def test_sweep_requires_axes(tmp_path):
    with pytest.raises(ValueError):
        experiments.sweep(_small_config(), tmp_path)


def test_sweep_low_dimension_all_bounded(tmp_path):
    base = _small_config(sweep_axes={"a": [0.5, 0.9]})
    rows = experiments.sweep(base, tmp_path)
    assert [row["verdict"] for row in rows] == ["bounded", "bounded"]
    assert (tmp_path / "sweep.csv").exists()
    assert (tmp_path / "cell_0000" / "summary.json").exists()


# ---------------------------------------------------------------------------
# domain-doubling sensitivity

def test_doubling_check_requires_deterministic_steps():
    with pytest.raises(ValueError):
        experiments.s_max_doubling_check(_small_config())


def test_doubling_check_small_run():
    # domain large enough that the far boundary stays outside the causal
    # reach of the core over the short window
    cfg = _small_config(
        S_max=1e6,
        N=256,
        t_end=5.0,
        n_outputs=6,
        solver=SolverConfig(dt_ramp=(1e-3, 1e-3), dt_max=0.05),
    )
    report = experiments.s_max_doubling_check(cfg)
    assert report["S_max_doubled"] > cfg.S_max
    assert report["worst_change"] < 1e-4


# ---------------------------------------------------------------------------
# certificate bundles

def test_verify_barriers_high_dimension(tmp_path):
    report = experiments.verify_barriers(10, tmp_path)
    assert report["supersolution_ok"]
    assert report["all_ok"]
    assert "subsolution_ok" not in report  # oscillation needs n <= 9
    assert (tmp_path / "barrier_report.json").exists()


def test_check_energy_report_shape(tmp_path):
    # a coarse audit run: assert the report contract, not the fine-grid gate
    cfg = experiments.ExperimentConfig(
        n=10,
        datum=InitialDatumSpec(n=10, family="scaled_chandrasekhar", a=0.5, cap=1e4),
        S_max=1e16,
        N=1024,
        t_end=6.0,
        n_outputs=31,
        energy_mode="explicit",
        energy_gamma=2.0,
        energy_p=3.0,
        energy_eps=0.05,
    )
    report = experiments.check_energy(cfg, tmp_path)
    assert set(report["flags"]) == {
        "gamma_weight", "p_gt_1", "flag_42_1", "flag_44_01", "flag_44_1",
    }
    assert all(report["flags"].values())
    assert np.isfinite(report["worst_midrun_mismatch"])
    assert (tmp_path / "identity_terms.csv").exists()
    assert (tmp_path / "energy_report.json").exists()
