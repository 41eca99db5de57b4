"""Degree laws and concrete degree sequences.

A :class:`DegreeDistribution` is a probability mass function on the
non-negative integers.  Infinite-support families are truncated where the
tail drops below ``TAIL_EPS`` and renormalised; the family tag is kept so
that generating functions can use exact closed forms instead of the
truncated series.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special, stats

TAIL_EPS = 1e-12
DEFAULT_GAMMA = 2.5

FAMILIES = ("poisson", "dirac", "binomial", "geometric", "power_law", "explicit")


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    family: str
    params: tuple
    masses: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("masses must be a non-empty 1-d array")
        if np.any(m < 0):
            raise ValueError("masses must be non-negative")
        total = m.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValueError("masses must have positive finite sum")
        # trailing zeros carry no information
        nz = np.flatnonzero(m)
        m = m[: nz[-1] + 1] / total
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    # -- constructors -------------------------------------------------------

    @classmethod
    def poisson(cls, c: float) -> "DegreeDistribution":
        if not c > 0:
            raise ValueError("poisson rate must be positive")
        kmax = int(stats.poisson.isf(TAIL_EPS, c)) + 1
        masses = stats.poisson.pmf(np.arange(kmax + 1), c)
        return cls("poisson", (float(c),), masses)

    @classmethod
    def dirac(cls, d: int) -> "DegreeDistribution":
        d = _as_degree(d)
        masses = np.zeros(d + 1)
        masses[d] = 1.0
        return cls("dirac", (d,), masses)

    @classmethod
    def binomial(cls, d: int, p: float) -> "DegreeDistribution":
        d = _as_degree(d)
        if not 0 < p <= 1:
            raise ValueError("binomial p must lie in (0, 1]")
        masses = stats.binom.pmf(np.arange(d + 1), d, p)
        return cls("binomial", (d, float(p)), masses)

    @classmethod
    def geometric(cls, p: float) -> "DegreeDistribution":
        """Geometric law on {0, 1, ...}: P(k) = p (1-p)^k."""
        if not 0 < p <= 1:
            raise ValueError("geometric p must lie in (0, 1]")
        if p == 1:
            return cls("geometric", (1.0,), np.array([1.0]))
        kmax = int(math.ceil(math.log(TAIL_EPS) / math.log1p(-p)))
        k = np.arange(kmax + 1)
        masses = p * (1 - p) ** k
        return cls("geometric", (float(p),), masses)

    @classmethod
    def power_law(cls, gamma: float, kmin: int = 1) -> "DegreeDistribution":
        """Law with tail P(D >= k) = (kmin / k)^gamma for k >= kmin.

        Requires gamma > 2 so that the second moment is finite.
        """
        if not gamma > 2:
            raise ValueError(f"power law needs gamma > 2 for a finite second moment, got {gamma}")
        kmin = _as_degree(kmin)
        if kmin < 1:
            raise ValueError("kmin must be at least 1")
        kmax = int(math.ceil(kmin * TAIL_EPS ** (-1.0 / gamma)))
        k = np.arange(kmin, kmax + 1, dtype=float)
        tail = (kmin / k) ** gamma
        masses = np.zeros(kmax + 1)
        masses[kmin:] = tail - np.append(tail[1:], 0.0)
        return cls("power_law", (float(gamma), kmin), masses)

    @classmethod
    def explicit(cls, masses) -> "DegreeDistribution":
        return cls("explicit", (), np.asarray(masses, dtype=float))

    @classmethod
    def parse(cls, text: str) -> "DegreeDistribution":
        """Build a law from ``family:arg,arg`` such as ``poisson:3`` or ``binomial:5,0.6``."""
        name, _, rest = text.strip().partition(":")
        args = [a for a in rest.split(",") if a.strip()] if rest else []
        name = name.strip().lower().replace("-", "_")
        if name == "explicit":
            return cls.explicit([float(a) for a in args])
        if name in ("dirac", "regular"):
            return cls.dirac(int(args[0]))
        if name == "binomial":
            return cls.binomial(int(args[0]), float(args[1]))
        if name == "power_law":
            return cls.power_law(float(args[0]), *(int(a) for a in args[1:]))
        if name in ("poisson", "geometric"):
            return getattr(cls, name)(float(args[0]))
        raise ValueError(f"unknown degree law {text!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "DegreeDistribution":
        if "explicit" in data:
            return cls.explicit(data["explicit"])
        family = data["family"]
        params = data.get("params", [])
        if family == "explicit":
            return cls.explicit(params)
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        return getattr(cls, family)(*params)

    def to_dict(self) -> dict:
        if self.family == "explicit":
            return {"explicit": self.masses.tolist()}
        return {"family": self.family, "params": list(self.params)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DegreeDistribution":
        return cls.from_dict(json.loads(text))

    # -- summaries ----------------------------------------------------------

    @property
    def support_max(self) -> int:
        return self.masses.size - 1

    def pmf(self, k: int) -> float:
        return float(self.masses[k]) if 0 <= k < self.masses.size else 0.0

    @property
    def mean(self) -> float:
        fam, prm = self.family, self.params
        if fam == "poisson":
            return prm[0]
        if fam == "dirac":
            return float(prm[0])
        if fam == "binomial":
            return prm[0] * prm[1]
        if fam == "geometric":
            return (1 - prm[0]) / prm[0]
        if fam == "power_law":
            gamma, kmin = prm
            return kmin + kmin**gamma * float(special.zeta(gamma, kmin + 1))
        return float(np.arange(self.masses.size) @ self.masses)

    @property
    def second_moment(self) -> float:
        """E[D^2]."""
        fam, prm = self.family, self.params
        if fam == "poisson":
            c = prm[0]
            return c * c + c
        if fam == "dirac":
            return float(prm[0] ** 2)
        if fam == "binomial":
            d, p = prm
            return d * p * (1 - p) + (d * p) ** 2
        if fam == "geometric":
            q = 1 - prm[0]
            return q * (1 + q) / prm[0] ** 2
        if fam == "power_law":
            # E[D^2] = sum_k (2k - 1) P(D >= k)
            gamma, kmin = prm
            tail = 2 * special.zeta(gamma - 1, kmin + 1) - special.zeta(gamma, kmin + 1)
            return kmin**2 + kmin**gamma * float(tail)
        k = np.arange(self.masses.size)
        return float((k * k) @ self.masses)

    def tv_distance(self, other) -> float:
        other_masses = other.masses if isinstance(other, DegreeDistribution) else other
        return tv_distance(self.masses, other_masses)

    def __repr__(self) -> str:
        if self.family == "explicit":
            return f"DegreeDistribution.explicit(<{self.masses.size} masses>)"
        args = ", ".join(repr(p) for p in self.params)
        return f"DegreeDistribution.{self.family}({args})"


def tv_distance(p, q) -> float:
    """Total-variation distance between two mass vectors indexed from 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = max(p.size, q.size)
    p = np.pad(p, (0, n - p.size))
    q = np.pad(q, (0, n - q.size))
    return 0.5 * float(np.abs(p - q).sum())


def _as_degree(d) -> int:
    if int(d) != d or d < 0:
        raise ValueError(f"degree must be a non-negative integer, got {d!r}")
    return int(d)


@dataclass(frozen=True, eq=False)
class DegreeSequence:
    degrees: np.ndarray
    parity_fixed: bool = False

    def __post_init__(self):
        d = np.array(self.degrees, dtype=np.int64).ravel()
        if d.size == 0:
            raise ValueError("degree sequence must be non-empty")
        if np.any(d < 0):
            raise ValueError("degrees must be non-negative")
        d.setflags(write=False)
        object.__setattr__(self, "degrees", d)

    def __len__(self) -> int:
        return int(self.degrees.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DegreeSequence):
            return NotImplemented
        return self.parity_fixed == other.parity_fixed and np.array_equal(self.degrees, other.degrees)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def total(self) -> int:
        return int(self.degrees.sum())

    def is_even(self) -> bool:
        return self.total % 2 == 0

    def to_text(self) -> str:
        return "".join(f"{d}\n" for d in self.degrees.tolist())

    @classmethod
    def from_text(cls, text: str) -> "DegreeSequence":
        return cls(np.array([int(line) for line in text.split()], dtype=np.int64))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "DegreeSequence":
        return cls.from_text(Path(path).read_text())


def fix_parity(degrees) -> DegreeSequence:
    """Increment the last degree if the sum is odd."""
    d = np.array(degrees, dtype=np.int64)
    if d.sum() % 2:
        d[-1] += 1
        return DegreeSequence(d, parity_fixed=True)
    return DegreeSequence(d)


def sample_degree_sequence(dist: DegreeDistribution, n: int, seed) -> DegreeSequence:
    """Draw ``n`` i.i.d. degrees from ``dist`` and fix the parity of the sum.

    The same ``seed`` always yields the same sequence.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if dist.family == "power_law" and not dist.params[0] > 2:
        raise ValueError("power law needs gamma > 2")
    rng = np.random.default_rng(seed)
    fam, prm = dist.family, dist.params
    if fam == "poisson":
        d = rng.poisson(prm[0], size=n)
    elif fam == "dirac":
        d = np.full(n, prm[0])
    elif fam == "binomial":
        d = rng.binomial(prm[0], prm[1], size=n)
    elif fam == "geometric":
        d = rng.geometric(prm[0], size=n) - 1
    else:
        cdf = np.cumsum(dist.masses)
        cdf[-1] = 1.0
        d = np.searchsorted(cdf, rng.random(n), side="right")
    return fix_parity(d)


def empirical_distribution(seq) -> DegreeDistribution:
    degrees = seq.degrees if isinstance(seq, DegreeSequence) else np.asarray(seq, dtype=np.int64)
    if degrees.size == 0:
        raise ValueError("empty degree sequence")
    counts = np.bincount(degrees)
    return DegreeDistribution.explicit(counts / degrees.size)


@dataclass(frozen=True)
class AssumptionReport:
    n: int
    gamma: float
    second_moment: float
    reference_second_moment: float | None
    max_degree: int
    max_degree_bound: float
    moment_ok: bool
    max_degree_ok: bool

    @property
    def ok(self) -> bool:
        return self.moment_ok and self.max_degree_ok


def validate_assumptions(
    seq: DegreeSequence,
    gamma: float = DEFAULT_GAMMA,
    dist: DegreeDistribution | None = None,
    moment_rtol: float = 0.05,
) -> AssumptionReport:
    """Check the moment condition and the max-degree bound N^(1/gamma).

    With ``dist`` the empirical second moment must sit within ``moment_rtol``
    (relative) of the law's; without it only finiteness is checked.
    """
    d = seq.degrees.astype(float)
    n = d.size
    m2 = float(np.mean(d * d))
    ref = dist.second_moment if dist is not None else None
    moment_ok = math.isfinite(m2) and (ref is None or abs(m2 - ref) <= moment_rtol * ref)
    bound = n ** (1.0 / gamma)
    dmax = int(seq.degrees.max())
    return AssumptionReport(
        n=n,
        gamma=gamma,
        second_moment=m2,
        reference_second_moment=ref,
        max_degree=dmax,
        max_degree_bound=bound,
        moment_ok=bool(moment_ok),
        max_degree_ok=bool(dmax <= bound),
    )
