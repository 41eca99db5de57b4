import json

import numpy as np
import pytest

from cmdfs import (
    DegreeDistribution,
    ExperimentConfig,
    degree_snapshot_check,
    explore_and_build,
    run_experiment,
    sample_degree_sequence,
    tv_distance,
)
from cmdfs import closed_forms as cf
from cmdfs.errors import DomainError
from cmdfs.harness import replicate_seeds, snapshot_tv, with_overrides


@pytest.mark.parametrize(
    "bad",
    [{"N": 99}, {"reps": 0}, {"delta": 0.0}, {"delta": 0.5}, {"tolerances": {"nope": 1}}],
)
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig(**bad)


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig(dist="dirac:5", N=500, reps=2, seed=9, alphas=[0.3, 0.1], tolerances={"tv": 0.05})
    assert cfg.alphas == [0.1, 0.3]
    assert cfg.tol("tv") == 0.05 and cfg.tol("contour") == 0.03
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(path) == cfg
    assert ExperimentConfig(dist={"family": "dirac", "params": [5]}).dist == "dirac:5"


def test_replicate_seeds_independent():
    seeds = replicate_seeds(1, 5)
    assert len(set(seeds)) == 5
    assert seeds == replicate_seeds(1, 5)
    assert replicate_seeds(1, 3) == seeds[:3]


def test_report_byte_identical():
    cfg = ExperimentConfig(dist="poisson:3", N=2000, reps=3, seed=4)
    assert run_experiment(cfg).to_json() == run_experiment(cfg).to_json()


def test_workers_match_serial():
    cfg = ExperimentConfig(dist="geometric:0.4", N=2000, reps=3, seed=5)
    serial = run_experiment(cfg)
    pooled = run_experiment(with_overrides(cfg, workers=2))
    assert serial.replicates == pooled.replicates
    assert serial.criteria == pooled.criteria


def test_subcritical_degrades():
    report = run_experiment(ExperimentConfig(dist="poisson:0.8", N=1000, reps=2))
    assert report.analytic is None
    assert report.criteria == {}
    assert any(f.startswith("simulation_only") for f in report.flags)
    assert "giant_fraction" in report.medians


def test_near_critical_flag():
    report = run_experiment(ExperimentConfig(dist="poisson:1.05", N=10**4, reps=2, alphas=[]))
    assert any(f.startswith("near_critical") for f in report.flags)
    # far from the limit at this size, as expected
    assert report.medians["contour_distance"] > 0.005


def test_report_schema():
    report = run_experiment(ExperimentConfig(dist="dirac:5", N=3000, reps=2, alphas=[0.1, 0.89]))
    data = json.loads(report.to_json())
    assert set(data) == {"config", "analytic", "replicates", "medians", "criteria", "flags", "all_passed"}
    assert set(data["criteria"]) == {"contour", "giant", "path_ratio", "tv@0.1", "ladder_time", "ladder_density"}
    # alpha_c = 0.9 for 5-regular graphs, so 0.89 falls inside the margin
    assert any("skipped" in f for f in report.flags)
    for rep in data["replicates"]:
        assert rep["contour_distance"] >= 0 and rep["giant_gap"] >= 0
    for crit in data["criteria"].values():
        assert set(crit) == {"value", "threshold", "passed", "rule"}


def test_artifacts(tmp_path):
    out = tmp_path / "run"
    run_experiment(ExperimentConfig(dist="poisson:3", N=1000, reps=1, out=str(out)))
    names = {p.name for p in out.iterdir()}
    assert {"report.json", "profile.csv", "profile_h.csv", "profile_summary.json",
            "trajectory.csv", "contour_rep0.csv"} <= names


def test_snapshot_tv_counts_tail():
    assert snapshot_tv([1, 1], [0.5, 0.5]) == 0
    assert snapshot_tv([1, 1], [0.5, 0.4]) == pytest.approx(0.1)


def test_snapshot_at_zero():
    tvs = degree_snapshot_check(ExperimentConfig(dist="poisson:3", N=10**5, reps=3, seed=1), 0.0)
    assert np.all(tvs < 0.01)


def test_snapshot_margin():
    cfg = ExperimentConfig(dist="poisson:3", N=1000)
    with pytest.raises(DomainError):
        degree_snapshot_check(cfg, 0.66)
    with pytest.raises(DomainError):
        degree_snapshot_check(cfg, 0.7, margin=0.0)
    assert degree_snapshot_check(cfg, 0.66, margin=0.0).shape == (1,)


@pytest.mark.parametrize(
    "dist, alpha",
    [(DegreeDistribution.dirac(5), 0.3), (DegreeDistribution.geometric(0.4), 0.2)],
    ids=["dirac5-0.3", "geometric-0.2"],
)
def test_snapshot_against_named_laws(dist, alpha):
    n = 10**5
    want = cf.pi_alpha_masses(dist.family, dist.params, alpha, 80)
    for seq_seed, run_seed in replicate_seeds(7, 3):
        seq = sample_degree_sequence(dist, n, seq_seed)
        _, hists = explore_and_build(seq, run_seed, [alpha], track=0)
        assert tv_distance(hists[0].masses(), want) < 0.02


def test_second_component_small():
    seq = sample_degree_sequence(DegreeDistribution.poisson(3), 10**5, 8)
    trace, _ = explore_and_build(seq, 9)
    assert trace.second_fraction() < 0.01
    assert trace.giant_fraction() > 0.9


def test_contour_distance_shrinks():
    wins = 0
    for master in range(3):
        meds = [
            run_experiment(ExperimentConfig(dist="poisson:3", N=n, reps=3, seed=master, alphas=[])).medians[
                "contour_distance"
            ]
            for n in (10**3, 10**4, 10**5)
        ]
        wins += meds[0] > meds[1] > meds[2]
    assert wins >= 2
