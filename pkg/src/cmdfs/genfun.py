"""Generating-function numerics for the degree law seen by the exploration.

Notation used throughout: ``f`` is the probability generating function of
the initial law, ``u = f^{-1}(1 - alpha)`` and ``b = f'(u) / f'(1)``.  The
law of the sleeping graph after exploring a fraction ``alpha`` of the
vertices has generating function

    g(alpha, s) = f(u - (1 - s) b) / (1 - alpha).

Most solvers below bisect on ``u`` rather than on ``alpha``; the map
``u -> 1 - f(u)`` is monotone, and working in ``u`` avoids a nested
inversion of ``f`` inside every bisection step.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy import stats

from .degrees import DegreeDistribution
from .errors import CmdfsError, DomainError, NoRootError, SubcriticalError

CLOSED_FORM_FAMILIES = ("poisson", "dirac", "binomial", "geometric")

# below this rho the implicit equation for alpha(rho) is solved in expanded form
SMALL_RHO = 1e-3


class QuadratureError(CmdfsError, RuntimeError):
    """Grid and doubled-grid quadratures disagree beyond tolerance."""


@numba.njit(cache=True)
def _horner(coeffs, s):
    out = np.empty_like(s)
    for j in range(s.size):
        acc = 0.0
        x = s[j]
        for k in range(coeffs.size - 1, -1, -1):
            acc = acc * x + coeffs[k]
        out[j] = acc
    return out


def polyval(s, coeffs):
    """Evaluate sum_k coeffs[k] s^k; compiled because power-law series run to ~10^5 terms."""
    s = np.asarray(s, dtype=float)
    return _horner(np.ascontiguousarray(coeffs, dtype=float), s.ravel()).reshape(s.shape)


def bisect(fun, lo, hi, iters: int = 200, xtol: float = 0.0):
    """Vectorised bisection for a sign change of ``fun`` between ``lo`` and ``hi``.

    ``fun(lo)`` and ``fun(hi)`` are assumed to have opposite signs (or be
    zero); no check is done here.  Returns the midpoint of the final bracket.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    f_lo_sign = np.sign(fun(lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)) or np.all(hi - lo <= xtol):
            break
        same = np.sign(fun(mid)) == f_lo_sign
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


class GenFun:
    """Generating function of a degree law with derivatives and inverse.

    ``method="auto"`` uses the exact closed form when the law carries one of
    the named family tags, otherwise the truncated power series.
    ``method="series"`` always uses the series (useful as a cross-check).
    """

    def __init__(self, dist: DegreeDistribution, method: str = "auto"):
        if method not in ("auto", "series"):
            raise ValueError("method must be 'auto' or 'series'")
        self.dist = dist
        self.closed = method == "auto" and dist.family in CLOSED_FORM_FAMILIES
        self.method = "closed" if self.closed else "series"
        self._series_cache: dict[int, np.ndarray] = {}
        self.mean = float(self.deriv(1.0, 1))
        self.f2 = float(self.deriv(1.0, 2))
        if not self.mean > 0:
            raise DomainError("degree law must have positive mean")

    def _series(self, n: int) -> np.ndarray:
        # coefficients of the n-th derivative, lowest order first
        c = self._series_cache.get(n)
        if c is None:
            m = self.dist.masses
            k = np.arange(m.size, dtype=float)
            falling = np.ones_like(k)
            for j in range(n):
                falling *= k - j
            c = (m * falling)[n:]
            if c.size == 0:
                c = np.zeros(1)
            self._series_cache[n] = c
        return c

    def deriv(self, s, n: int = 0):
        """n-th derivative of f at s."""
        s = np.asarray(s, dtype=float)
        if not self.closed:
            return polyval(s, self._series(n))
        fam, prm = self.dist.family, self.dist.params
        if fam == "poisson":
            c = prm[0]
            return c**n * np.exp(c * (s - 1.0))
        if fam == "dirac":
            d = prm[0]
            if n > d:
                return np.zeros_like(s)
            return math.perm(d, n) * s ** (d - n)
        if fam == "binomial":
            d, p = prm
            if n > d:
                return np.zeros_like(s)
            return math.perm(d, n) * p**n * (1.0 - p + p * s) ** (d - n)
        # geometric on {0, 1, ...}
        p = prm[0]
        q = 1.0 - p
        return math.factorial(n) * p * q**n / (1.0 - q * s) ** (n + 1)

    def f(self, s):
        return self.deriv(s, 0)

    def df(self, s):
        return self.deriv(s, 1)

    def d2f(self, s):
        return self.deriv(s, 2)

    def hat(self, s):
        """Size-biased generating function f'(s) / f'(1)."""
        return self.df(s) / self.mean

    @property
    def hat_slope(self) -> float:
        """f''(1) / f'(1): mean of the size-biased offspring law."""
        return self.f2 / self.mean

    @property
    def supercritical(self) -> bool:
        return self.hat_slope > 1.0

    def finv(self, y):
        """Inverse of f on [f(0), 1] by bisection."""
        y = np.asarray(y, dtype=float)
        f0 = float(self.f(0.0))
        if np.any(y < f0 - 1e-15) or np.any(y > 1.0 + 1e-15):
            raise DomainError(f"f^-1 is defined on [{f0}, 1]")
        return bisect(lambda s: self.f(s) - y, np.zeros_like(y), np.ones_like(y), xtol=1e-16)


def require_supercritical(gf: GenFun) -> None:
    if not gf.supercritical:
        raise SubcriticalError(
            f"size-biased mean f''(1)/f'(1) = {gf.hat_slope:.6g} <= 1: no giant component"
        )


def survival_root(phi, slope: float, hint: float | None = None) -> float:
    """Smallest positive rho with 1 - rho = phi(1 - rho) for a PGF ``phi``.

    ``slope`` is phi'(1) and must exceed 1.  The function
    h(rho) = phi(1 - rho) - (1 - rho) is convex with h(0) = 0 and h'(0) < 0,
    so it is negative exactly on (0, rho*); any negative point is a valid
    lower bracket and h(1) = phi(0) >= 0 is always an upper one.
    """
    if not slope > 1.0:
        raise SubcriticalError(f"offspring mean {slope:.6g} <= 1")

    def h(r):
        return phi(1.0 - r) - (1.0 - r)

    lo = hi = None
    if hint is not None and 0 < hint <= 1:
        w = 1e-3
        a, b = max(hint - w, 1e-300), min(hint + w, 1.0)
        if h(a) < 0 and h(b) >= 0:
            lo, hi = a, b
    if lo is None:
        lo, hi = 0.5, 1.0
        for _ in range(1100):
            if h(lo) < 0:
                break
            lo *= 0.5
        else:
            raise NoRootError("could not bracket the survival probability")
    return _scalar_bisect(h, lo, hi)


def _scalar_bisect(fun, lo: float, hi: float) -> float:
    # plain-float twin of :func:`bisect` for hot scalar loops
    sign_lo = fun(lo) > 0
    for _ in range(1100):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if (fun(mid) > 0) == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_rho(gf: GenFun) -> float:
    """Survival probability of the Galton-Watson tree with offspring law f^."""
    require_supercritical(gf)
    return survival_root(gf.hat, gf.hat_slope)


def xi(gf: GenFun) -> float:
    """Asymptotic fraction of vertices in the giant component."""
    return float(1.0 - gf.f(1.0 - solve_rho(gf)))


def critical_u(gf: GenFun) -> float:
    """The u in (0, 1) with f''(u) = f'(1)."""
    require_supercritical(gf)
    # f'' is increasing on [0, 1]
    target = gf.mean
    if gf.d2f(0.0) - target > 0:
        raise NoRootError("f''(0) exceeds f'(1); no critical point in [0, 1]")
    return float(bisect(lambda u: gf.d2f(u) - target, 0.0, 1.0))


def alpha_c(gf: GenFun) -> float:
    """Explored fraction at which the sleeping graph becomes critical."""
    return float(1.0 - gf.f(critical_u(gf)))


def _u_b(gf: GenFun, alpha):
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0) or np.any(alpha >= 1):
        raise DomainError("alpha must lie in [0, 1)")
    u = gf.finv(1.0 - alpha)
    return u, gf.df(u) / gf.mean


def _inner(gf, alpha, s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s > 1):
        raise DomainError("s must lie in [0, 1]")
    u, b = _u_b(gf, alpha)
    arg = u - (1.0 - s) * b
    if np.any(arg < -1e-12) or np.any(arg > 1.0 + 1e-12):
        raise DomainError("inner argument of g(alpha, s) left [0, 1]; alpha beyond alpha_c?")
    return u, b, np.clip(arg, 0.0, 1.0)


def g_alpha(gf: GenFun, alpha, s):
    """Generating function of the sleeping-graph degree law at explored fraction alpha."""
    alpha = np.asarray(alpha, dtype=float)
    _, _, arg = _inner(gf, alpha, s)
    return gf.f(arg) / (1.0 - alpha)


def g_hat_alpha(gf: GenFun, alpha, s):
    """Size-biased version of :func:`g_alpha` in s."""
    u, _, arg = _inner(gf, alpha, s)
    return gf.df(arg) / gf.df(u)


def alpha_of_rho(gf: GenFun, rho):
    """Solve 1 - rho = g^(alpha, 1 - rho) for alpha in [0, alpha_c].

    At rho = 0 the equation holds for every alpha; the boundary value is
    alpha_c, taken by continuity.
    """
    rho = np.asarray(rho, dtype=float)
    r_pi = solve_rho(gf)
    if np.any(rho < 0) or np.any(rho > r_pi * (1 + 1e-12)):
        raise DomainError(f"rho must lie in [0, rho_pi={r_pi}]")
    rho = np.minimum(rho, r_pi)
    uc = critical_u(gf)
    mean = gf.mean

    small = rho < SMALL_RHO

    def F(u, r):
        # (g^(alpha, 1 - r) - (1 - r)) / r; Taylor-expanded in r when r is small
        b = gf.df(u) / mean
        direct = gf.df(np.maximum(u - r * b, 0.0)) / gf.df(u) - (1.0 - r)
        direct = direct / np.maximum(r, 1e-300)
        series = 1.0
        for n in range(1, 6):
            series = series + (r * b) ** (n - 1) * gf.deriv(u, n + 1) * (-1) ** n / (math.factorial(n) * mean)
        return np.where(small, series, direct)

    ok = (rho == 0) | ((F(uc, rho) >= -1e-9) & (F(1.0, rho) <= 1e-9))
    if not np.all(ok):
        raise NoRootError("alpha(rho) is not bracketed by [0, alpha_c]")
    u = bisect(lambda u: F(u, rho), np.full_like(rho, uc), np.ones_like(rho))
    alpha = np.maximum(1.0 - gf.f(u), 0.0)
    alpha = np.where(rho == 0, 1.0 - gf.f(uc), alpha)
    alpha = np.where(rho >= r_pi, 0.0, alpha)
    return alpha if alpha.ndim else float(alpha)


def series_coefficients(gf: GenFun, t: float, max_degree: int) -> np.ndarray:
    """Coefficients [s^i] f(u - (1 - s) b), i = 0..max_degree, with u = f^{-1}(1 - t).

    Uses (a + b s)^k with a + b = u, i.e. a binomial re-expansion of each term
    of the (truncated) degree law.  Dividing by (1 - t) gives the law pi_t.
    """
    if not 0 <= t < 1:
        raise DomainError("t must lie in [0, 1)")
    u, b = (float(x) for x in _u_b(gf, t))
    if u - b < -1e-12:
        raise DomainError("time beyond the range where the solution is a generating series")
    m = gf.dist.masses
    out = np.zeros(max_degree + 1)
    i = np.arange(max_degree + 1)[:, None]
    if t == 0:
        n = min(m.size, max_degree + 1)
        out[:n] = m[:n]
        return out
    p = min(b / u, 1.0)
    weights = m * u ** np.arange(m.size)
    keep = np.flatnonzero(weights > 0)
    for start in range(0, keep.size, 4096):
        ks = keep[start : start + 4096]
        out += stats.binom.pmf(i, ks[None, :], p) @ weights[ks]
    return out


def pi_alpha(gf: GenFun, alpha: float, max_degree: int) -> np.ndarray:
    """Masses of the sleeping-graph degree law pi_alpha up to max_degree."""
    return series_coefficients(gf, alpha, max_degree) / (1.0 - alpha)


def heavy_tail_factorial_moment(gf: GenFun, alpha: float, n: int) -> float:
    """n-th factorial moment of pi_alpha, i.e. the n-th s-derivative of g at s = 1."""
    ac = alpha_c(gf)
    if not 0 <= alpha <= ac:
        raise DomainError(f"alpha must lie in [0, alpha_c={ac}]")
    if n < 0:
        raise DomainError("moment order must be non-negative")
    u, b = (float(x) for x in _u_b(gf, alpha))
    return float(b**n * gf.deriv(u, n) / (1.0 - alpha))


# -- limit profile ------------------------------------------------------------


def _node_map(x):
    # Chebyshev-type clustering applied twice: rho-nodes crowd both endpoints
    # to fourth order, which tames the root-type behaviour of alpha(rho) at rho_pi.
    y = 0.5 * (1.0 - np.cos(np.pi * x))
    return 0.5 * (1.0 - np.cos(np.pi * y))


def _node_map_deriv(x):
    y = 0.5 * (1.0 - np.cos(np.pi * x))
    return 0.25 * np.pi**2 * np.sin(np.pi * y) * np.sin(np.pi * x)


def _profile_arrays(gf, n_intervals, r_pi):
    # alpha is sampled at the nodes and at every midpoint; Simpson on each
    # interval gives the cumulative integral node by node, and composite
    # Simpson on the nodes alone gives an independent coarse estimate
    x = np.linspace(0.0, 1.0, 2 * n_intervals + 1)
    rho = r_pi * _node_map(x)
    rho[0], rho[-1] = 0.0, r_pi
    alpha = np.asarray(alpha_of_rho(gf, rho))
    f = alpha * r_pi * _node_map_deriv(x)
    h = x[1] - x[0]
    pieces = h / 3.0 * (f[:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    tail = cum[-1] - cum  # integral of alpha from rho to rho_pi
    fc = f[::2]
    coarse = 2.0 * h / 3.0 * (fc[0] + fc[-1] + 4.0 * fc[1:-1:2].sum() + 2.0 * fc[2:-1:2].sum())
    return rho[::2], alpha[::2], tail, float(coarse)


@dataclass
class ProfileCurve:
    rho: np.ndarray
    alpha: np.ndarray
    x_up: np.ndarray
    y_up: np.ndarray
    x_down: np.ndarray
    y_down: np.ndarray
    rho_pi: float
    xi_pi: float
    alpha_c: float
    h_max: float
    t_nodes: np.ndarray = field(repr=False)
    h_nodes: np.ndarray = field(repr=False)

    def h(self, t):
        """Limiting contour height at rescaled time t in [0, 2]."""
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.t_nodes, self.h_nodes, left=0.0, right=0.0)

    @property
    def peak_time(self) -> float:
        return float(self.x_up[0])

    def summary(self) -> dict:
        return {
            "rho_pi": self.rho_pi,
            "xi_pi": self.xi_pi,
            "alpha_c": self.alpha_c,
            "h_max": self.h_max,
        }

    def write_csv(self, directory, t_points: int = 2001) -> dict:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "curves": directory / "profile.csv",
            "h": directory / "profile_h.csv",
            "summary": directory / "profile_summary.json",
        }
        with paths["curves"].open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "x_up", "y_up", "x_down", "y_down"])
            for row in zip(self.rho, self.x_up, self.y_up, self.x_down, self.y_down):
                w.writerow([repr(float(v)) for v in row])
        t = np.linspace(0.0, 2.0, t_points)
        with paths["h"].open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "h"])
            for a, b in zip(t, self.h(t)):
                w.writerow([repr(float(a)), repr(float(b))])
        paths["summary"].write_text(json.dumps(self.summary(), indent=2, sort_keys=True))
        return paths


def limit_profile(gf: GenFun, grid_size: int = 256, rtol_check: float = 1e-5) -> ProfileCurve:
    """Parametric limit shape of the rescaled DFS contour.

    The increasing branch is traced as rho decreases from rho_pi to 0 and the
    decreasing branch as rho increases back to rho_pi.  The integral of
    alpha is computed by Simpson's rule on each interval of a clustered
    rho-grid (midpoints included); the height is cross-checked against
    composite Simpson on the nodes alone and a :class:`QuadratureError` is
    raised if they differ by more than ``rtol_check``.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    require_supercritical(gf)
    n = grid_size + (grid_size % 2)
    r_pi = solve_rho(gf)
    ac = alpha_c(gf)
    rho, alpha, tail, coarse = _profile_arrays(gf, n, r_pi)
    h_max = float(tail[0])
    if abs(h_max - coarse) > rtol_check:
        raise QuadratureError(f"H_max {h_max} vs coarse {coarse}: quadrature unreliable")

    x_up = (2.0 - rho) * alpha - tail
    y_up = rho * alpha + tail
    x_up[-1], y_up[-1] = 0.0, 0.0
    _, _, arg = _inner(gf, alpha, 1.0 - rho)
    g_val = gf.f(arg) / (1.0 - alpha)
    x_down = x_up + 2.0 * (1.0 - alpha) * (1.0 - g_val)
    y_down = y_up.copy()
    xi_pi = float(1.0 - gf.f(1.0 - r_pi))

    # rising branch: rho from rho_pi down to 0; falling branch: rho from 0 up
    t_nodes = np.concatenate([x_up[::-1], x_down[1:]])
    h_nodes = np.concatenate([y_up[::-1], y_down[1:]])
    if x_down[-1] < 2.0:
        t_nodes = np.append(t_nodes, 2.0)
        h_nodes = np.append(h_nodes, 0.0)
    t_nodes, h_nodes = _merge_ties(t_nodes, h_nodes)
    return ProfileCurve(
        rho=rho,
        alpha=alpha,
        x_up=x_up,
        y_up=y_up,
        x_down=x_down,
        y_down=y_down,
        rho_pi=r_pi,
        xi_pi=xi_pi,
        alpha_c=ac,
        h_max=h_max,
        t_nodes=t_nodes,
        h_nodes=h_nodes,
    )


def _merge_ties(t, h):
    # enforce a non-decreasing abscissa; equal abscissae keep the largest height
    t = np.maximum.accumulate(t)
    uniq, inv = np.unique(t, return_inverse=True)
    best = np.full(uniq.size, -np.inf)
    np.maximum.at(best, inv, h)
    return uniq, best
