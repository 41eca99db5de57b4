"""Explicit formulas for Poisson, d-regular, binomial and geometric laws.

These are independent of the generic machinery in :mod:`cmdfs.genfun` and
serve as oracles for it.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate


def poisson_g(c, alpha, s):
    return np.exp(c * (1.0 - np.asarray(alpha)) * (np.asarray(s) - 1.0))


def poisson_g_hat(c, alpha, s):
    return poisson_g(c, alpha, s)


def poisson_alpha_c(c):
    return 1.0 - 1.0 / c


def _dirac_q(d, alpha):
    return (1.0 - np.asarray(alpha, dtype=float)) ** ((d - 2.0) / d)


def dirac_g(d, alpha, s):
    return (1.0 + (np.asarray(s) - 1.0) * _dirac_q(d, alpha)) ** d


def dirac_g_hat(d, alpha, s):
    return (1.0 + (np.asarray(s) - 1.0) * _dirac_q(d, alpha)) ** (d - 1)


def dirac_alpha_c(d):
    # d (d-1) u^(d-2) = d with u^d = 1 - alpha
    return 1.0 - (1.0 / (d - 1.0)) ** (d / (d - 2.0))


def dirac_alpha_of_rho(d, rho):
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = -np.expm1(np.log1p(-rho) / (d - 1.0)) / rho
    ratio = np.where(rho == 0, 1.0 / (d - 1.0), ratio)
    return 1.0 - ratio ** (d / (d - 2.0))


def dirac_h_max_integrand(d, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = ((1.0 - x ** (1.0 / (d - 1.0))) / (1.0 - x)) ** (d / (d - 2.0))
    return np.where(x == 1, (1.0 / (d - 1.0)) ** (d / (d - 2.0)), val)


def dirac_h_max(d):
    val, _ = integrate.quad(lambda x: float(dirac_h_max_integrand(d, x)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return 1.0 - val


def binomial_pi_alpha_p(d, p, alpha):
    """Success probability of the binomial law pi_alpha = Bin(d, p (1-alpha)^((d-2)/d))."""
    return p * _dirac_q(d, alpha)


def binomial_g(d, p, alpha, s):
    q = binomial_pi_alpha_p(d, p, alpha)
    return (1.0 - q + q * np.asarray(s)) ** d


def binomial_g_hat(d, p, alpha, s):
    q = binomial_pi_alpha_p(d, p, alpha)
    return (1.0 - q + q * np.asarray(s)) ** (d - 1)


def geometric_p_alpha(p, alpha):
    return p / (p + (1.0 - p) * (1.0 - np.asarray(alpha, dtype=float)) ** 3)


def geometric_g(p, alpha, s):
    pa = geometric_p_alpha(p, alpha)
    return pa / (1.0 - (1.0 - pa) * np.asarray(s))


def geometric_g_hat(p, alpha, s):
    return geometric_g(p, alpha, s) ** 2


def geometric_rho(p):
    return 0.5 * ((1.0 - 3.0 * p) / (1.0 - p) + np.sqrt((1.0 + 3.0 * p) / (1.0 - p)))


def geometric_alpha_of_rho(p, rho):
    rho = np.asarray(rho, dtype=float)
    w = 1.0 - rho
    return 1.0 - (p / (1.0 - p)) ** (1.0 / 3.0) * (1.0 / (w + np.sqrt(w))) ** (1.0 / 3.0)


def geometric_h_max(p):
    """Integral of alpha(rho) over [0, rho_pi], written in the variable x = 1 - rho."""
    r = geometric_rho(p)
    k = (p / (1.0 - p)) ** (1.0 / 3.0)
    val, _ = integrate.quad(lambda x: (x + np.sqrt(x)) ** (-1.0 / 3.0), 1.0 - r, 1.0, epsabs=1e-13, epsrel=1e-13)
    return r - k * val


def pi_alpha_masses(family, params, alpha, max_degree):
    """Masses of pi_alpha for the families where it has a named law."""
    from scipy import stats

    k = np.arange(max_degree + 1)
    if family == "poisson":
        return stats.poisson.pmf(k, params[0] * (1.0 - alpha))
    if family == "dirac":
        return stats.binom.pmf(k, params[0], _dirac_q(params[0], alpha))
    if family == "binomial":
        return stats.binom.pmf(k, params[0], binomial_pi_alpha_p(params[0], params[1], alpha))
    if family == "geometric":
        pa = geometric_p_alpha(params[0], alpha)
        return pa * (1.0 - pa) ** k
    raise ValueError(f"no closed form for family {family!r}")
