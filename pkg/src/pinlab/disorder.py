"""
Heavy-tailed environment: a centred, shifted Pareto law and its size-biased tilt.

With Y Pareto(gamma) on [1, inf) the site variable is ``omega = c (Y - mu)``,
``mu = gamma / (gamma - 1)`` and ``c = a (gamma - 1)``.  All queries are
expressed through the Pareto coordinate ``y = x / c + mu``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .mc import as_rng


@dataclass(frozen=True)
class EnvironmentLaw:
    gamma: float
    a: float

    @property
    def c(self) -> float:
        return self.a * (self.gamma - 1)

    @property
    def c_p(self) -> float:
        return self.c ** self.gamma

    @property
    def mu(self) -> float:
        return self.gamma / (self.gamma - 1)

    @property
    def marginal_alpha(self) -> float:
        """Renewal exponent 1 - 1/gamma of the marginal case."""
        return 1 - 1 / self.gamma

    # x / c + mu, written so that x = -a maps to y = 1 exactly (mu - a / c = 1)
    def pareto_coord(self, x):
        return (np.asarray(x, dtype=float) + self.a) / self.c + 1.0

    def from_pareto(self, y):
        return self.c * (np.asarray(y, dtype=float) - 1.0) - self.a

    def cdf(self, x):
        y = np.maximum(self.pareto_coord(x), 1.0)
        return 1.0 - y ** -self.gamma

    def quantile(self, p):
        return self.from_pareto((1.0 - np.asarray(p, dtype=float)) ** (-1 / self.gamma))

    def median(self) -> float:
        return float(self.from_pareto(2 ** (1 / self.gamma)))


def make_env_law(gamma: float, a: float) -> EnvironmentLaw:
    if not 1 < gamma < 2:
        raise DomainError(f"gamma must lie in (1, 2), got {gamma}")
    if not 0 < a < 1:
        raise DomainError(f"a must lie in (0, 1), got {a}")
    return EnvironmentLaw(float(gamma), float(a))


def env_tail(law: EnvironmentLaw, x):
    """P[omega >= x]; equals 1 below the support edge -a."""
    y = np.maximum(law.pareto_coord(x), 1.0)
    out = y ** -law.gamma
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EnvironmentSample:
    omega: np.ndarray
    seed: object = field(default=None, compare=False)

    def __len__(self):
        return len(self.omega)


def _pareto_draws(gamma: float, rng, size) -> np.ndarray:
    return (1.0 - rng.random(size)) ** (-1 / gamma)


def sample_env(law: EnvironmentLaw, N: int, seed) -> EnvironmentSample:
    """N iid sites by inverse CDF; deterministic given ``seed``."""
    rng = as_rng(seed)
    omega = law.from_pareto(_pareto_draws(law.gamma, rng, N))
    # rounding in c*(y - mu) can dip an ulp below the support edge
    np.maximum(omega, -law.a, out=omega)
    return EnvironmentSample(omega, seed if not isinstance(seed, np.random.Generator) else None)


def sample_env_array(law: EnvironmentLaw, rng, size) -> np.ndarray:
    omega = law.from_pareto(_pareto_draws(law.gamma, rng, size))
    return np.maximum(omega, -law.a)


@dataclass(frozen=True)
class TiltedLaw:
    """Environment law with density (1 + beta x) against ``base``."""

    base: EnvironmentLaw
    beta: float

    @property
    def weight(self) -> float:
        # beta * c * mu; coefficient of the heavier y^(1-gamma) term in the tail
        return self.beta * self.base.a * self.base.gamma

    def tail_y(self, y):
        g = self.base.gamma
        y = np.maximum(np.asarray(y, dtype=float), 1.0)
        return (1 - self.weight) * y ** -g + self.weight * y ** (1 - g)

    def tail(self, x):
        return self.tail_y(self.base.pareto_coord(x))

    def cdf(self, x):
        g = self.base.gamma
        y = np.maximum(self.base.pareto_coord(x), 1.0)
        direct = (1 - y ** -g) + self.weight * (y ** -g - y ** (1 - g))
        return np.where(direct < 0.5, direct, 1.0 - self.tail_y(y))

    def density_ratio(self, x):
        return 1.0 + self.beta * np.asarray(x, dtype=float)

    def sample(self, rng, size=None) -> np.ndarray:
        rng = as_rng(rng)
        v = 1.0 - rng.random(size)
        y = self._invert_tail(np.atleast_1d(v))
        out = np.maximum(self.base.from_pareto(y), -self.base.a)
        return out if size is not None else float(out[0])

    def _invert_tail(self, v: np.ndarray) -> np.ndarray:
        """Solve tail_y(y) = v for y >= 1: bracketed bisection in log y, then secant."""
        g, w = self.base.gamma, self.weight
        # y^-g <= tail <= y^(1-g), and tail >= w y^(1-g)
        lo = -np.log(v) / g
        if w > 0:
            lo = np.maximum(lo, np.log(w / v) / (g - 1))
        lo = np.maximum(lo, 0.0)
        hi = np.maximum(-np.log(v) / (g - 1), lo) + 1e-12
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            above = self.tail_y(np.exp(mid)) >= v
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        # one secant step on the final bracket
        f_lo = self.tail_y(np.exp(lo)) - v
        f_hi = self.tail_y(np.exp(hi)) - v
        denom = f_lo - f_hi
        safe = denom > 0
        s = np.where(safe, lo + f_lo * (hi - lo) / np.where(safe, denom, 1.0), 0.5 * (lo + hi))
        return np.exp(np.clip(s, lo, hi))


def tilted_cdf(law: EnvironmentLaw, beta: float, x):
    """Exact integral of (1 + beta t) dP(t) over [-a, x]."""
    out = TiltedLaw(law, float(beta)).cdf(x)
    return float(out) if np.ndim(out) == 0 else out


def tilted_tail(law: EnvironmentLaw, beta: float, x):
    out = TiltedLaw(law, float(beta)).tail(x)
    return float(out) if np.ndim(out) == 0 else out


def sample_tilted(law: EnvironmentLaw, beta: float, rng, size=None):
    return TiltedLaw(law, float(beta)).sample(rng, size)
