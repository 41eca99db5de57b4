import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from cmdfs import (
    DegreeDistribution,
    FluidState,
    GenFun,
    StepSizeError,
    SubcriticalStateError,
    TruncationSpec,
    alpha_c,
    closed_form_coeffs,
    drift_Ni,
    drift_T,
    limit_profile,
    solve_system,
    solve_system_prime,
    time_change,
    verify_truncated_identity,
)
from cmdfs.errors import DomainError
from cmdfs.fluid import _march, drift_Ni_hat, drift_vector, pgf_gap, truncated_solution

POISSON3 = DegreeDistribution.poisson(3)
DIRAC5 = DegreeDistribution.dirac(5)


@pytest.fixture(scope="module")
def traj_s():
    return solve_system(POISSON3, TruncationSpec.for_distribution(POISSON3, 1e-4), 2.0, 1e-3)


def poisson_rho(c):
    lo, hi = 1e-3, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if 1 - mid - math.exp(-c * mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from([POISSON3, DIRAC5, DegreeDistribution.geometric(0.4), DegreeDistribution.power_law(2.5, 1)]),
    st.floats(1e-6, 1e-1),
)
def test_truncation_tail_bound(dist, eps):
    spec = TruncationSpec.for_distribution(dist, eps)
    assert spec.delta_cap == math.floor(math.sqrt(dist.second_moment / eps))
    assert dist.masses[spec.delta_cap:].sum() <= eps


def test_drift_T_full_survival():
    # 3-regular: size-biased law is s^2, every branch survives
    state = FluidState.from_vector(DegreeDistribution.dirac(3).masses)
    assert state.rho == pytest.approx(1.0, abs=1e-14)
    assert drift_T(state) == pytest.approx(1.0, abs=1e-13)


def test_drift_T_poisson():
    z = TruncationSpec.for_distribution(POISSON3, 1e-6).initial(POISSON3)
    rho = poisson_rho(3)
    assert drift_T(FluidState.from_vector(z)) == pytest.approx((2 - rho) / rho, abs=1e-10)


def test_drift_guards():
    # size-biased mean below one
    with pytest.raises(SubcriticalStateError):
        FluidState.from_vector(DegreeDistribution.poisson(0.9).masses)
    with pytest.raises(SubcriticalStateError):
        drift_T(FluidState(0.0, np.array([0.0, 0.5, 0.5]), 1e-9))


def test_drift_Ni_zero_entries():
    z = np.array([0.1, 0.2, 0.0, 0.3, 0.0, 0.0, 0.4])
    state = FluidState.from_vector(z)
    assert drift_Ni(state, 4) == 0.0
    assert drift_Ni(state, 50) == 0.0


@pytest.mark.parametrize("dist", [POISSON3, DIRAC5, DegreeDistribution.geometric(0.4)], ids=repr)
def test_drifts_sum_to_minus_inverse_rho(dist):
    state = FluidState.from_vector(TruncationSpec.for_distribution(dist, 1e-4).initial(dist))
    assert drift_vector(state).sum() == pytest.approx(-1 / state.rho, abs=1e-8)


@pytest.mark.parametrize("dist", [POISSON3, DIRAC5, DegreeDistribution.geometric(0.4)], ids=repr)
def test_two_drift_forms_agree(dist):
    state = FluidState.from_vector(TruncationSpec.for_distribution(dist, 1e-4).initial(dist))
    for i in range(12):
        assert drift_Ni(state, i) == pytest.approx(drift_Ni_hat(state, i), abs=1e-12)


def test_initial_drift_matches_closed_form_slope():
    z = TruncationSpec.for_distribution(POISSON3, 1e-4).initial(POISSON3)
    state = FluidState.from_vector(z)
    width = 15
    h = 1e-3
    c = [closed_form_coeffs(POISSON3, k * h, width) for k in range(5)]
    slope = (-25 * c[0] + 48 * c[1] - 36 * c[2] + 16 * c[3] - 3 * c[4]) / (12 * h)
    # one ladder step explores 1 / rho of the vertices in the limit
    assert np.max(np.abs(drift_vector(state)[: width + 1] - slope / state.rho)) < 1e-5


def test_system_starts_at_pi(traj_s):
    spec = TruncationSpec.for_distribution(POISSON3, 1e-4)
    assert np.array_equal(traj_s.states[0], spec.initial(POISSON3))
    assert traj_s.companion[0] == 0.0


def test_system_matches_time_changed_closed_form(traj_s):
    eps = 1e-4
    change = time_change(traj_s)
    keep = traj_s.t <= 0.8 * traj_s.t_max
    width = traj_s.states.shape[1] - 1
    worst = 0.0
    for t, alpha, z in zip(traj_s.t[keep][::20], change.alpha[keep][::20], traj_s.states[keep][::20]):
        worst = max(worst, np.max(np.abs(z - closed_form_coeffs(POISSON3, alpha, width))))
    assert worst < 1e-4 + 2 * eps


def test_system_mass_decreases(traj_s):
    assert np.all(np.diff(traj_s.states.sum(axis=1)) < 0)
    assert np.all(np.diff(traj_s.companion) > 0)


def test_system_stops_at_critical(traj_s):
    assert traj_s.stop_reason == "critical"
    # the ladder index reaches the peak of the profile
    h_max = limit_profile(GenFun(POISSON3), 256).h_max
    assert traj_s.t_max == pytest.approx(h_max, abs=1e-3)


def test_dt_cap():
    with pytest.raises(ValueError):
        solve_system(POISSON3, TruncationSpec.for_distribution(POISSON3, 1e-3), 0.1, 2e-3)


@pytest.mark.parametrize("dist", [POISSON3, DIRAC5], ids=repr)
def test_primed_conservation(dist):
    spec = TruncationSpec.for_distribution(dist, 1e-4)
    traj = solve_system_prime(dist, spec, 0.8 * alpha_c(GenFun(dist)), 1e-3)
    mass0 = spec.initial(dist).sum()
    assert np.max(np.abs(traj.states.sum(axis=1) - (mass0 - traj.t))) < 1e-8


def test_primed_error_past_t_max():
    with pytest.raises(DomainError):
        solve_system_prime(POISSON3, TruncationSpec.for_distribution(POISSON3, 1e-3), 0.7, 1e-3)
    with pytest.raises(DomainError):
        closed_form_coeffs(POISSON3, 0.7, 10)


def test_closed_form_at_zero():
    width = POISSON3.support_max
    assert np.allclose(closed_form_coeffs(POISSON3, 0.0, width), POISSON3.masses, atol=1e-15)


@pytest.mark.parametrize("t", [0.1, 0.4, 0.66])
def test_closed_form_mass(t):
    assert closed_form_coeffs(POISSON3, t, 200).sum() == pytest.approx(1 - t, abs=1e-10)


def test_closed_form_dirac4():
    t = 0.2
    u = (1 - t) ** 0.25
    b = (1 - t) ** 0.75
    want = P.polypow([u - b, b], 4)
    assert np.allclose(closed_form_coeffs(DegreeDistribution.dirac(4), t, 4), want, atol=1e-14)


def test_E_prime_residual():
    spec = TruncationSpec.for_distribution(POISSON3, 1e-4)
    traj = solve_system_prime(POISSON3, spec, 0.6, 1e-3)
    i = np.arange(traj.states.shape[1])
    e = traj.states @ i
    f = traj.states @ (i * (i - 1))
    h = traj.t[1] - traj.t[0]
    de = (e[:-4] - 8 * e[1:-3] + 8 * e[3:-1] - e[4:]) / (12 * h)
    assert np.max(np.abs(de + 2 * f[2:-2] / e[2:-2])) < 1e-6


# laws whose tail beyond Delta is not negligible; 1e-5 absorbs RK4 error of the truncated solve
@pytest.mark.parametrize(
    "dist, t",
    [(DegreeDistribution.geometric(0.4), 0.1), (DegreeDistribution.geometric(0.4), 0.25),
     (DegreeDistribution.power_law(2.5, 2), 0.1)],
    ids=["geometric-0.1", "geometric-0.25", "power-0.1"],
)
def test_sandwich(dist, t):
    eps = 1e-2
    spec = TruncationSpec.for_distribution(dist, eps)
    assert dist.masses[spec.width(dist) + 1:].sum() > 1e-6
    zeta, _, _ = truncated_solution(dist, spec, t)
    full = closed_form_coeffs(dist, t, zeta.size - 1)
    assert np.all(zeta <= full + 1e-5)
    assert np.all(full <= zeta + 2 * eps)


def test_identity_at_zero():
    spec = TruncationSpec.for_distribution(POISSON3, 1e-3)
    assert verify_truncated_identity(POISSON3, spec, 0.0).residual < 1e-12


def test_identity_poisson():
    spec = TruncationSpec.for_distribution(POISSON3, 1e-3)
    rep = verify_truncated_identity(POISSON3, spec, 0.3)
    assert rep.residual < 1e-6
    assert set(rep.to_dict()) == {"t", "dt", "delta", "residual", "E", "Z"}


def test_identity_fourth_order():
    spec = TruncationSpec.for_distribution(POISSON3, 1e-3)
    res = [verify_truncated_identity(POISSON3, spec, 0.3, dt).residual for dt in (0.1, 0.05, 0.025)]
    for coarse, fine in zip(res, res[1:]):
        assert 12 < coarse / fine < 24


def test_time_change(traj_s):
    change = time_change(traj_s)
    assert change.alpha[0] == 0.0
    assert np.all(np.diff(change.alpha) > 0)
    alphas = np.linspace(0, 0.95 * change.alpha[-1], 40)
    mass = change.densities_at(alphas).sum(axis=1)
    spec_mass = traj_s.states[0].sum()
    assert np.max(np.abs(mass - (spec_mass - alphas))) < 1e-6
    assert pgf_gap(POISSON3, change, alphas[:-1]) < 1e-4


def test_march_step_size_error():
    def rhs(y):
        return np.full_like(y, -1e6)

    with pytest.raises(StepSizeError):
        _march(rhs, np.array([1e-3, 1.0, 0.0]), 0.1, 1e-3, lambda t, y: None)


def test_trajectory_csv(traj_s, tmp_path):
    path = tmp_path / "traj.csv"
    traj_s.write_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    width = traj_s.states.shape[1]
    assert rows[0] == ["t", "z", *[f"z_{i}" for i in range(width)], "rho"]
    assert len(rows) == traj_s.t.size + 1
    assert float(rows[1][0]) == 0.0
