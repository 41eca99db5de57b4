"""Fluid limit of the ladder-time chain and its explicit solution.

``z_i(t)`` approximates ``N_i(tN) / N``, the density of sleeping vertices of
induced degree ``i`` after ``tN`` ladder times, and the companion ``z(t)``
approximates ``T_{tN} / N``.  Writing ``E = sum_j j z_j`` and
``F = sum_j j (j - 1) z_j``, the drifts are

    dz/dt   = (2 - rho) / rho
    dz_i/dt = (1 / rho) * (-i z_i / E + (1 - F / E) (i z_i - (i + 1) z_{i+1}) / E)

where ``rho`` is the survival probability of the size-biased law of ``z``.
Multiplying every drift by ``rho`` removes the inner root solve; that system
(the "primed" one here) runs in explored-fraction time and has an explicit
solution, the coefficients of ``f(u - (1 - s) b)`` with ``u = f^{-1}(1 - t)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .degrees import DegreeDistribution
from .errors import DomainError, StepSizeError, SubcriticalError, SubcriticalStateError
from .genfun import GenFun, alpha_c, g_alpha, series_coefficients, survival_root

CRITICAL_SLACK = 1e-6
MIN_RHO = 1e-6
CLIP_TOL = 1e-9


@dataclass(frozen=True)
class TruncationSpec:
    """Degree cut-off Delta = floor(sqrt(E[D^2] / epsilon)); Markov gives P(D >= Delta) <= epsilon."""

    epsilon: float
    delta_cap: int

    @classmethod
    def for_distribution(cls, dist: DegreeDistribution, epsilon: float) -> "TruncationSpec":
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        return cls(epsilon, int(math.floor(math.sqrt(dist.second_moment / epsilon))))

    def width(self, dist: DegreeDistribution) -> int:
        """Highest degree kept in the state vector."""
        return min(self.delta_cap, dist.support_max)

    def initial(self, dist: DegreeDistribution) -> np.ndarray:
        z = np.zeros(self.width(dist) + 1)
        z[:] = dist.masses[: z.size]
        return z


def _moments(z):
    i = np.arange(z.size)
    return float(i @ z), float((i * (i - 1)) @ z)


def size_biased(z) -> np.ndarray:
    """Coefficients (i + 1) z_{i+1} / sum_j j z_j of the size-biased generating function."""
    z = np.asarray(z, dtype=float)
    e1, _ = _moments(z)
    if not e1 > 0:
        raise SubcriticalStateError("state has no half-edges left")
    return np.arange(1, z.size) * z[1:] / e1


def state_rho(z, hint: float | None = None) -> float:
    """Survival probability rho of the size-biased law of ``z``."""
    z = np.asarray(z, dtype=float)
    e1, e2 = _moments(z)
    if not e1 > 0:
        raise SubcriticalStateError("state has no half-edges left")
    slope = e2 / e1
    if slope <= 1.0 + CRITICAL_SLACK:
        raise SubcriticalStateError(f"size-biased mean {slope:.8g} is critical or below")
    coeffs = size_biased(z)[::-1].tolist()

    def phi(s):
        acc = 0.0
        for c in coeffs:
            acc = acc * s + c
        return acc

    try:
        rho = survival_root(phi, slope, hint)
    except SubcriticalError as exc:
        raise SubcriticalStateError(str(exc)) from exc
    if rho < MIN_RHO:
        raise SubcriticalStateError(f"rho = {rho:.3g} below {MIN_RHO}")
    return rho


@dataclass
class FluidState:
    """Per-degree densities at ladder time ``t`` and their survival probability."""

    t: float
    z: np.ndarray
    rho: float

    @classmethod
    def from_vector(cls, z, t: float = 0.0, hint: float | None = None) -> "FluidState":
        z = np.asarray(z, dtype=float)
        return cls(t, z, state_rho(z, hint))

    @property
    def mass(self) -> float:
        return float(self.z.sum())


def drift_T(state: FluidState) -> float:
    """Expected gap between consecutive ladder times, in units of one ladder index."""
    if not state.rho >= MIN_RHO:
        raise SubcriticalStateError("rho is too small; the drift diverges")
    return (2.0 - state.rho) / state.rho


def _primed_drift(z):
    # rho * dz_i/dt, the right-hand side of the explored-fraction system
    e1, e2 = _moments(z)
    if not e1 > 0:
        raise SubcriticalStateError("state has no half-edges left")
    i = np.arange(z.size)
    iz = i * z
    shifted = np.append(iz[1:], 0.0)
    return (-iz + (1.0 - e2 / e1) * (iz - shifted)) / e1


def drift_vector(state: FluidState) -> np.ndarray:
    """All degree drifts f_0 .. f_Delta at once."""
    return _primed_drift(state.z) / state.rho


def drift_Ni(state: FluidState, i: int) -> float:
    if i < 0:
        raise ValueError("degree must be non-negative")
    if i >= state.z.size:
        return 0.0
    return float(drift_vector(state)[i])


def drift_Ni_hat(state: FluidState, i: int) -> float:
    """Same drift written with the size-biased masses p^_{i-1}, p^_i."""
    ph = size_biased(state.z)
    e1, e2 = _moments(state.z)
    slope = e2 / e1
    prev = ph[i - 1] if 1 <= i <= ph.size else 0.0
    cur = ph[i] if i < ph.size else 0.0
    return float(-prev / state.rho + (1.0 - slope) * (prev - cur) / state.rho)


@dataclass
class Trajectory:
    """Accepted RK4 nodes of one solve.

    ``companion`` is ``z(t)`` for the ladder-time system and absent for the
    primed one; ``rho`` is recorded only where it was solved for.
    """

    t: np.ndarray
    states: np.ndarray
    companion: np.ndarray | None = None
    rho: np.ndarray | None = None
    stop_reason: str = "t_end"
    system: str = "S"
    halvings: int = field(default=0)

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    def at(self, t) -> np.ndarray:
        """States linearly interpolated at times ``t`` (shape ``(len(t), Delta + 1)``)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.column_stack([np.interp(t, self.t, col) for col in self.states.T])

    def companion_at(self, t):
        if self.companion is None:
            raise ValueError("trajectory has no companion")
        return np.interp(t, self.t, self.companion)

    def write_csv(self, path) -> None:
        width = self.states.shape[1]
        nan = np.full(self.t.size, np.nan)
        comp = self.companion if self.companion is not None else nan
        rho = self.rho if self.rho is not None else nan
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "z", *[f"z_{i}" for i in range(width)], "rho"])
            for k in range(self.t.size):
                row = [self.t[k], comp[k], *self.states[k], rho[k]]
                out.writerow([repr(float(v)) for v in row])


def _clip(z):
    low = z.min()
    if low < -CLIP_TOL or not np.all(np.isfinite(z)):
        return None
    return np.maximum(z, 0.0)


def _rk4(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _march(rhs, y0, t_end, dt, on_accept, max_halvings=10):
    """Fixed-step RK4 that halves the step on trouble.

    ``rhs`` may raise :class:`SubcriticalStateError`; if that persists after
    ``max_halvings`` halvings the march stops there.  A state that leaves the
    non-negative orthant persistently is a :class:`StepSizeError`.
    """
    t = 0.0
    y = y0
    halvings = 0
    while t < t_end - 1e-15:
        h = min(dt, t_end - t)
        for attempt in range(max_halvings + 1):
            try:
                new = _rk4(rhs, y, h)
            except SubcriticalStateError:
                new = "critical"
            else:
                clipped = _clip(new[:-1])
                new = None if clipped is None else np.append(clipped, new[-1])
            if isinstance(new, np.ndarray):
                break
            if attempt == max_halvings:
                if new == "critical":
                    return "critical", halvings
                raise StepSizeError(f"RK4 left the invariant region at t={t:.6g} despite step halving")
            h *= 0.5
            halvings += 1
        t += h
        y = new
        on_accept(t, y)
    return "t_end", halvings


def solve_system(
    initial: DegreeDistribution,
    trunc: TruncationSpec,
    t_end: float,
    dt: float = 1e-3,
) -> Trajectory:
    """RK4 on the ladder-time system together with the companion z(t).

    Runs to ``t_end`` or until the state becomes critical, whichever comes
    first; the reason is kept in ``stop_reason``.
    """
    if dt > 1e-3:
        raise ValueError("dt must be at most 1e-3")
    z0 = trunc.initial(initial)
    try:
        rho0 = state_rho(z0)
    except SubcriticalStateError as exc:
        raise SubcriticalError(f"initial law is not supercritical: {exc}") from exc
    hint = [rho0]

    def rhs(y):
        z = np.maximum(y[:-1], 0.0)
        rho = state_rho(z, hint[0])
        hint[0] = rho
        out = np.empty_like(y)
        out[:-1] = _primed_drift(z) / rho
        out[-1] = (2.0 - rho) / rho
        return out

    ts, ys, rhos = [0.0], [np.append(z0, 0.0)], [rho0]

    def accept(t, y):
        ts.append(t)
        ys.append(y)
        try:
            rhos.append(state_rho(y[:-1], hint[0]))
        except SubcriticalStateError:
            rhos.append(np.nan)

    reason, halvings = _march(rhs, ys[0], t_end, dt, accept)
    ys = np.array(ys)
    return Trajectory(
        np.array(ts), ys[:, :-1], ys[:, -1], np.array(rhos), reason, "S", halvings
    )


def solve_system_prime(
    initial: DegreeDistribution,
    trunc: TruncationSpec,
    t_end: float,
    dt: float = 1e-3,
) -> Trajectory:
    """RK4 on the explored-fraction system; it needs no root solve.

    The sum of the state drops at rate exactly one, so it equals
    ``sum(initial) - t`` at every node up to rounding.
    """
    if dt > 1e-3:
        raise ValueError("dt must be at most 1e-3")
    gf = GenFun(initial)
    t_prime_max = alpha_c(gf)
    if t_end > t_prime_max:
        raise DomainError(f"t_end beyond t'_max = {t_prime_max}")
    z0 = trunc.initial(initial)

    def rhs(y):
        z = y[:-1]
        e1, e2 = _moments(z)
        if not e1 > 0 or e2 / e1 <= 1.0:
            raise SubcriticalStateError("primed system reached a critical state")
        return np.append(_primed_drift(z), 0.0)

    ts, ys = [0.0], [np.append(z0, 0.0)]

    def accept(t, y):
        ts.append(t)
        ys.append(y)

    reason, halvings = _march(rhs, ys[0], t_end, dt, accept)
    return Trajectory(np.array(ts), np.array(ys)[:, :-1], stop_reason=reason, system="S'", halvings=halvings)


def closed_form_coeffs(initial: DegreeDistribution, t: float, max_degree: int) -> np.ndarray:
    """Explicit solution of the primed system: [s^i] f(u - (1 - s) b), u = f^{-1}(1 - t)."""
    gf = GenFun(initial)
    tpm = alpha_c(gf)
    if t < 0 or t > tpm + 1e-12:
        raise DomainError(f"t must lie in [0, t'_max = {tpm}]")
    return series_coefficients(gf, min(t, tpm), max_degree)


@dataclass(frozen=True)
class IdentityReport:
    t: float
    dt: float
    delta: int
    residual: float
    e: float
    z_shift: float

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "dt": self.dt,
            "delta": self.delta,
            "residual": self.residual,
            "E": self.e,
            "Z": self.z_shift,
        }


def _closed_e(gf: GenFun, time: float):
    # E(t) = sum_i i zeta_i(t) of the explicit solution, and its derivative
    u = float(gf.finv(1.0 - time))
    return float(gf.df(u)) ** 2 / gf.mean, -2.0 * float(gf.d2f(u)) / gf.mean


def truncated_solution(initial: DegreeDistribution, trunc: TruncationSpec, t: float, dt: float = 1e-3):
    """RK4 solution of the truncated linear system at time ``t``, plus Z(t).

    The truncated system is driven by ``E(t)`` of the full solution, available
    in closed form as ``f'(u)^2 / f'(1)`` with derivative ``-2 f''(u) / f'(1)``.
    ``Z`` is integrated as an extra RK4 component.  Returns ``(zeta, Z, h)``
    with ``h`` the step actually used.
    """
    gf = GenFun(initial)
    tpm = alpha_c(gf)
    if not 0 <= t <= tpm:
        raise DomainError(f"t must lie in [0, t'_max = {tpm}]")
    pi = trunc.initial(initial)
    idx = np.arange(pi.size)

    def rhs(time, y):
        e, de = _closed_e(gf, time)
        zeta = y[:-1]
        out = np.empty_like(y)
        out[:-1] = 0.5 * idx * de / e * zeta
        out[:-2] -= idx[1:] * zeta[1:] * (0.5 * de / e + 1.0 / e)
        out[-1] = 0.5 * de / math.sqrt(e) + 1.0 / math.sqrt(e)
        return out

    y = np.append(pi, 0.0)
    steps = max(int(round(t / dt)), 1) if t > 0 else 0
    h = t / steps if steps else 0.0
    time = 0.0
    for _ in range(steps):
        k1 = rhs(time, y)
        k2 = rhs(time + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(time + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(time + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        time += h
    return y[:-1], float(y[-1]), h


def verify_truncated_identity(
    initial: DegreeDistribution,
    trunc: TruncationSpec,
    t: float,
    dt: float = 1e-3,
    s_points: int = 33,
) -> IdentityReport:
    """Residual of ``sum_i zeta_i s^i = f_Delta((s sqrt(E(t)) - Z(t)) / sqrt(E(0)))``.

    The sup is taken over ``s_points`` equispaced values of s in [0, 1].
    """
    zeta, z_shift, h = truncated_solution(initial, trunc, t, dt)
    gf = GenFun(initial)
    pi = trunc.initial(initial)
    e0, _ = _closed_e(gf, 0.0)
    et, _ = _closed_e(gf, t)
    s = np.linspace(0.0, 1.0, s_points)
    lhs = np.polyval(zeta[::-1], s)
    rhs_val = np.polyval(pi[::-1], (s * math.sqrt(et) - z_shift) / math.sqrt(e0))
    return IdentityReport(t, h, pi.size - 1, float(np.max(np.abs(lhs - rhs_val))), et, z_shift)


@dataclass
class TimeChange:
    """Ladder time mapped to explored fraction, alpha = (t + z(t)) / 2."""

    t: np.ndarray
    alpha: np.ndarray
    densities: np.ndarray

    def alpha_of_t(self, t):
        return np.interp(t, self.t, self.alpha)

    def t_of_alpha(self, alpha):
        return np.interp(alpha, self.alpha, self.t)

    def densities_at(self, alpha) -> np.ndarray:
        """Per-degree densities as functions of explored fraction."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        return np.column_stack([np.interp(alpha, self.alpha, col) for col in self.densities.T])

    def pgf(self, alpha, s):
        """(1 / (1 - alpha)) sum_i z_i s^i at explored fraction alpha."""
        dens = self.densities_at([alpha])[0]
        return np.polyval(dens[::-1], np.asarray(s, dtype=float)) / (1.0 - alpha)


def time_change(traj: Trajectory) -> TimeChange:
    if traj.companion is None:
        raise ValueError("time change needs the companion z(t)")
    alpha = 0.5 * (traj.t + traj.companion)
    if np.any(np.diff(alpha) <= 0):
        raise ValueError("time change is not strictly increasing")
    return TimeChange(traj.t, alpha, traj.states)


def pgf_gap(initial: DegreeDistribution, change: TimeChange, alphas, s_points: int = 33) -> float:
    """Largest gap between the composed densities' generating function and g(alpha, s)."""
    gf = GenFun(initial)
    s = np.linspace(0.0, 1.0, s_points)
    return max(float(np.max(np.abs(change.pgf(a, s) - g_alpha(gf, a, s)))) for a in alphas)
