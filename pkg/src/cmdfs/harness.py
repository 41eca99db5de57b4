"""Replicated simulations compared against the analytic predictions.

One :class:`ExperimentConfig` drives everything: the degree law, the graph
size, the number of replicates and the tolerances.  Analytic curves are built
once per configuration, replicates are then run (optionally in a process
pool) and reduced in seed order, so a configuration always produces the same
report, byte for byte.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .degrees import DegreeDistribution, sample_degree_sequence, tv_distance
from .errors import DomainError, SubcriticalError
from .exploration import explore_and_build, ladder_counts, ladder_times, longest_path_lower_bound
from .fluid import TruncationSpec, Trajectory, solve_system
from .genfun import GenFun, ProfileCurve, alpha_c, limit_profile, pi_alpha

DEFAULT_TOLERANCES = {
    "contour": 0.03,
    "giant": 0.01,
    "tv": 0.02,
    "path_ratio": 0.9,
    "ladder_time": 0.05,
    "ladder_density": 0.03,
}
# fraction of replicates that must pass for the per-replicate criteria
DEFAULT_QUORUM = 0.8
SNAPSHOT_MARGIN = 0.02
NEAR_CRITICAL_SLOPE = 1.2


@dataclass
class ExperimentConfig:
    dist: str = "poisson:3"
    N: int = 10_000
    reps: int = 1
    seed: int = 0
    delta: float = 0.08
    alphas: list = field(default_factory=lambda: [0.1, 0.3])
    grid: int = 256
    epsilon: float = 1e-4
    dt: float = 1e-3
    degrees_tracked: int = 6
    ladder_fraction: float = 0.8
    quorum: float = DEFAULT_QUORUM
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.dist, dict):
            self.dist = _dist_text(DegreeDistribution.from_dict(self.dist))
        if self.N < 100:
            raise ValueError("N must be at least 100")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5)")
        self.alphas = sorted(float(a) for a in self.alphas)
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")

    @property
    def distribution(self) -> DegreeDistribution:
        return DegreeDistribution.parse(self.dist)

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _dist_text(dist: DegreeDistribution) -> str:
    if dist.family == "explicit":
        return "explicit:" + ",".join(repr(float(m)) for m in dist.masses)
    return f"{dist.family}:" + ",".join(str(p) for p in dist.params)


@dataclass
class Analytic:
    """Predictions shared by every replicate of one configuration."""

    profile: ProfileCurve
    trajectory: Trajectory
    pi_alphas: dict
    hat_slope: float


@lru_cache(maxsize=16)
def _analytic(dist_text: str, grid: int, epsilon: float, dt: float, alphas: tuple) -> Analytic:
    dist = DegreeDistribution.parse(dist_text)
    gf = GenFun(dist)
    profile = limit_profile(gf, grid)
    traj = solve_system(dist, TruncationSpec.for_distribution(dist, epsilon), 2.0, dt)
    width = max(dist.support_max, 1)
    pis = {a: pi_alpha(gf, a, width) for a in alphas if a <= profile.alpha_c - SNAPSHOT_MARGIN}
    return Analytic(profile, traj, pis, gf.hat_slope)


def analytic_side(config: ExperimentConfig) -> Analytic | None:
    """Analytic predictions, or ``None`` when the law has no giant component."""
    try:
        return _analytic(config.dist, config.grid, config.epsilon, config.dt, tuple(config.alphas))
    except SubcriticalError:
        return None


def replicate_seeds(master: int, reps: int) -> list[tuple[int, int]]:
    """(sequence seed, exploration seed) per replicate, independent streams from one master seed."""
    children = np.random.SeedSequence(master).spawn(reps)
    return [tuple(int(x) for x in child.generate_state(2, np.uint64)) for child in children]


def contour_distance(contour, n: int, profile: ProfileCurve) -> float:
    """sup over t in [0, 2] of |X_ceil(tN) / N - h(t)|.

    On ((k-1)/N, k/N] the walk is frozen at X_k, and h is piecewise linear
    with nodes far coarser than 1/N, so checking both ends suffices.
    """
    x = np.asarray(contour, dtype=float) / n
    k = np.arange(x.size)
    right = np.abs(x - profile.h(k / n))
    left = np.abs(x[1:] - profile.h((k[1:] - 1) / n))
    return float(max(right.max(), left.max()))


def snapshot_tv(counts, pi_masses) -> float:
    """TV between an induced-degree histogram and a (possibly truncated) law."""
    counts = np.asarray(counts, dtype=float)
    emp = counts / counts.sum()
    pi_masses = np.asarray(pi_masses, dtype=float)
    tail = max(1.0 - pi_masses.sum(), 0.0)
    return tv_distance(emp, pi_masses) + 0.5 * tail


def ladder_distances(trace, traj: Trajectory, delta: float, fraction: float, degrees: int):
    """Sup distances of (T_k / N, N_i(k) / N) to (z(k/N), z_i(k/N)) for k up to fraction * K."""
    n = trace.n
    times = ladder_times(trace, delta)
    k_max = int(fraction * (times.size - 1))
    k = np.arange(k_max + 1)
    k = k[k / n <= traj.t_max]
    if k.size == 0:
        return math.nan, math.nan, int(times.size - 1)
    s = k / n
    t_gap = np.abs(times[k] / n - traj.companion_at(s)).max()
    counts = ladder_counts(trace, times[k])
    width = min(degrees + 1, counts.shape[1], traj.states.shape[1])
    pred = traj.at(s)[:, :width]
    n_gap = np.abs(counts[:, :width] / n - pred).max()
    return float(t_gap), float(n_gap), int(times.size - 1)


def run_replicate(config: ExperimentConfig, analytic: Analytic | None, seeds) -> dict:
    dist = config.distribution
    seq = sample_degree_sequence(dist, config.N, seeds[0])
    track = max(config.degrees_tracked, 1)
    trace, hists = explore_and_build(seq, seeds[1], config.alphas, track=track)
    n = trace.n
    out = {
        "seed": list(seeds),
        "giant_fraction": trace.giant_fraction(),
        "second_fraction": trace.second_fraction(),
        "path_bound": longest_path_lower_bound(trace),
        "components": int(trace.excursions().shape[0]),
    }
    out["path_fraction"] = out["path_bound"] / n
    if analytic is None:
        return out
    prof = analytic.profile
    out["contour_distance"] = contour_distance(trace.contour, n, prof)
    out["giant_gap"] = abs(out["giant_fraction"] - prof.xi_pi)
    out["path_ratio"] = out["path_fraction"] / prof.h_max
    out["tv"] = {
        repr(h.alpha): snapshot_tv(h.counts, analytic.pi_alphas[h.alpha])
        for h in hists
        if h.alpha in analytic.pi_alphas
    }
    t_gap, n_gap, k_last = ladder_distances(
        trace, analytic.trajectory, config.delta, config.ladder_fraction, config.degrees_tracked
    )
    out["ladder_time_distance"] = t_gap
    out["ladder_density_distance"] = n_gap
    out["ladder_count"] = k_last
    return out


def _criterion(value, threshold, passed, rule) -> dict:
    return {"value": value, "threshold": threshold, "passed": bool(passed), "rule": rule}


def _criteria(config: ExperimentConfig, reps: list[dict]) -> dict:
    q = config.quorum
    crit = {}
    med = float(np.median([r["contour_distance"] for r in reps]))
    crit["contour"] = _criterion(med, config.tol("contour"), med < config.tol("contour"), "median < threshold")
    med = float(np.median([r["giant_gap"] for r in reps]))
    crit["giant"] = _criterion(med, config.tol("giant"), med < config.tol("giant"), "median < threshold")
    share = float(np.mean([r["path_ratio"] >= config.tol("path_ratio") for r in reps]))
    crit["path_ratio"] = _criterion(share, config.tol("path_ratio"), share >= q, f"share of replicates >= threshold is >= {q}")
    for key in reps[0]["tv"]:
        share = float(np.mean([r["tv"][key] < config.tol("tv") for r in reps]))
        crit[f"tv@{key}"] = _criterion(share, config.tol("tv"), share >= q, f"share of replicates < threshold is >= {q}")
    for name in ("ladder_time", "ladder_density"):
        vals = [r[f"{name}_distance"] for r in reps]
        share = float(np.mean([v < config.tol(name) for v in vals]))
        crit[name] = _criterion(share, config.tol(name), share > 0.5, "majority of replicates < threshold")
    return crit


def _median(reps, key):
    vals = [r[key] for r in reps if key in r]
    return float(np.median(vals)) if vals else None


@dataclass
class ComparisonReport:
    config: dict
    analytic: dict | None
    replicates: list
    medians: dict
    criteria: dict
    flags: list

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.criteria.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["all_passed"] = self.all_passed
        return d

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _run_one(args):
    config, seeds = args
    return run_replicate(config, analytic_side(config), seeds)


def run_experiment(config: ExperimentConfig) -> ComparisonReport:
    """Simulate every replicate, compare with the predictions and write artifacts to ``config.out``."""
    analytic = analytic_side(config)
    seeds = replicate_seeds(config.seed, config.reps)
    jobs = [(config, s) for s in seeds]
    if config.workers > 1 and config.reps > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            reps = list(pool.map(_run_one, jobs))
    else:
        reps = [run_replicate(config, analytic, s) for s in seeds]

    flags = []
    if analytic is None:
        flags.append("simulation_only: degree law is not supercritical")
        criteria, summary = {}, None
    else:
        if analytic.hat_slope < NEAR_CRITICAL_SLOPE:
            flags.append("near_critical: convergence is slow, expect large distances at this N")
        skipped = [a for a in config.alphas if a not in analytic.pi_alphas]
        if skipped:
            flags.append(f"snapshot alphas beyond alpha_c - {SNAPSHOT_MARGIN} skipped: {skipped}")
        criteria = _criteria(config, reps)
        summary = analytic.profile.summary()
        summary["hat_slope"] = analytic.hat_slope
        summary["fluid_t_max"] = analytic.trajectory.t_max
    keys = ["giant_fraction", "second_fraction", "path_fraction", "contour_distance",
            "ladder_time_distance", "ladder_density_distance"]
    medians = {k: _median(reps, k) for k in keys if _median(reps, k) is not None}
    report = ComparisonReport(config.to_dict(), summary, reps, medians, criteria, flags)
    if config.out:
        write_artifacts(config, report, analytic)
    return report


def write_artifacts(config: ExperimentConfig, report: ComparisonReport, analytic: Analytic | None) -> None:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    if analytic is not None:
        analytic.profile.write_csv(out)
        analytic.trajectory.write_csv(out / "trajectory.csv")
    seq_seed, run_seed = replicate_seeds(config.seed, 1)[0]
    seq = sample_degree_sequence(config.distribution, config.N, seq_seed)
    trace, _ = explore_and_build(seq, run_seed)
    trace.write_contour_csv(out / "contour_rep0.csv")


def degree_snapshot_check(
    config: ExperimentConfig, alpha: float, margin: float = SNAPSHOT_MARGIN
) -> np.ndarray:
    """TV distance between the sleeping-graph degrees at tau(alpha) and pi_alpha, per replicate.

    Snapshots closer than ``margin`` to alpha_c are refused.
    """
    dist = config.distribution
    gf = GenFun(dist)
    ac = alpha_c(gf)
    if alpha < 0 or alpha > ac - margin:
        raise DomainError(f"alpha must lie in [0, alpha_c - {margin}] = [0, {ac - margin:.6g}]")
    pis = pi_alpha(gf, alpha, max(dist.support_max, 1))
    tvs = []
    for seq_seed, run_seed in replicate_seeds(config.seed, config.reps):
        seq = sample_degree_sequence(dist, config.N, seq_seed)
        _, hists = explore_and_build(seq, run_seed, [alpha], track=0)
        tvs.append(snapshot_tv(hists[0].counts, pis))
    return np.array(tvs)


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
