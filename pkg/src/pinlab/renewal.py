"""
Power-law renewal processes.

The inter-arrival law K is truncated at ``n_max`` and normalized.  Probabilities
up to ``HEAD_CAP`` are stored explicitly; beyond that a zeta law keeps the closed
form ``K(n) = c_k n^{-(1+alpha)}`` with the normalizer taken from the Hurwitz
zeta function, so horizons like ``n_max = 10**12`` cost nothing to represent.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaincc, gamma as gamma_fn, logsumexp, zeta

from .errors import DomainError
from .mc import as_rng

HEAD_CAP = 1 << 20
MAX_ENUMERATION = 16


@dataclass(frozen=True, eq=False)
class InterArrivalLaw:
    """Jump law K(1..n_max) of a recurrent renewal.

    ``probs`` holds K(1..len(probs)).  When ``power_tail`` is set, K continues
    as ``c_k n^{-(1+alpha)}`` up to ``n_max``.  The constructor does not
    validate; use :meth:`check_invariants`.
    """

    alpha: float
    n_max: int
    probs: np.ndarray
    c_k: float
    power_tail: bool = False

    @classmethod
    def from_probs(cls, probs, alpha: float = 0.5, c_k: float | None = None) -> "InterArrivalLaw":
        probs = np.asarray(probs, dtype=float)
        if c_k is None:
            c_k = float(probs[-1] * len(probs) ** (1 + alpha))
        return cls(float(alpha), len(probs), probs, float(c_k))

    @property
    def head_len(self) -> int:
        return len(self.probs)

    @cached_property
    def _cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    @cached_property
    def log_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def pmf(self, n):
        n = np.asarray(n)
        out = np.zeros(n.shape, dtype=float)
        inside = (n >= 1) & (n <= self.n_max)
        head = inside & (n <= self.head_len)
        out[head] = self.probs[n[head] - 1]
        if self.power_tail:
            tail = inside & (n > self.head_len)
            out[tail] = self.c_k * n[tail].astype(float) ** (-(1 + self.alpha))
        return out

    def head(self, n: int) -> np.ndarray:
        """K(1..min(n, n_max)) as an array."""
        n = min(int(n), self.n_max)
        if n <= self.head_len:
            return self.probs[:n]
        return self.pmf(np.arange(1, n + 1))

    def log_head(self, n: int) -> np.ndarray:
        n = min(int(n), self.n_max)
        if n <= self.head_len:
            return self.log_probs[:n]
        with np.errstate(divide="ignore"):
            return np.log(self.head(n))

    def _zeta_survival(self, m):
        s = 1.0 + self.alpha
        return self.c_k * (zeta(s, np.asarray(m, dtype=float) + 1.0) - zeta(s, self.n_max + 1.0))

    def survival(self, m):
        """P[tau_1 > m]."""
        m = np.asarray(m)
        out = np.ones(m.shape, dtype=float)
        pos = m >= 1
        head = pos & (m <= self.head_len)
        total_head = self._cdf[-1]
        out[head] = total_head - self._cdf[m[head] - 1]
        if self.power_tail:
            out[head] += self._zeta_survival(self.head_len)
            tail = pos & (m > self.head_len)
            out[tail] = self._zeta_survival(np.minimum(m[tail], self.n_max))
        else:
            out[pos & (m > self.head_len)] = 0.0
        return np.clip(out, 0.0, 1.0)

    def sample_jumps(self, rng, size: int) -> np.ndarray:
        rng = as_rng(rng)
        u = rng.random(size)
        idx = np.searchsorted(self._cdf, u, side="right")
        jumps = idx + 1
        over = idx >= self.head_len
        if over.any():
            if self.power_tail:
                jumps[over] = self._invert_tail(1.0 - u[over])
            else:
                # rounding left a sliver above the table's cumulative sum
                jumps[over] = self.head_len
        return jumps

    def _invert_tail(self, v: np.ndarray) -> np.ndarray:
        # smallest n > head_len with survival(n) < v
        lo = np.full(v.shape, float(self.head_len))
        hi = np.full(v.shape, float(self.n_max))
        while True:
            active = hi - lo > 1
            if not active.any():
                break
            mid = np.floor((lo + hi) / 2)
            below = self._zeta_survival(mid) < v
            hi = np.where(active & below, mid, hi)
            lo = np.where(active & ~below, mid, lo)
        return hi.astype(np.int64)

    def laplace(self, x: float) -> float:
        """log of sum_{n<=n_max} exp(-n x) K(n)."""
        n = np.arange(1, self.head_len + 1)
        with np.errstate(divide="ignore"):
            head = logsumexp(self.log_probs - n * x)
        if not self.power_tail or self.n_max == self.head_len:
            return float(head)
        a, b = float(self.head_len), float(self.n_max)
        if x * a > 700:
            return float(head)
        tail = self.c_k * _power_exp_sum(self.alpha, x, a, b)
        return float(np.logaddexp(head, np.log(tail)))

    def check_invariants(self, tol: float = 1e-12) -> list[str]:
        problems = []
        total = float(self.probs.sum())
        if self.power_tail:
            total += float(self._zeta_survival(self.head_len))
        if abs(total - 1.0) > tol:
            problems.append(f"normalization: sum K = {total!r}")
        if np.any(self.probs <= 0):
            problems.append("positivity: some K(n) <= 0")
        if self.head_len > 1 and np.any(np.diff(self.probs) >= 0):
            problems.append("monotonicity: K not strictly decreasing")
        lo = max(1, self.n_max // 2)
        check = np.unique(np.linspace(lo, self.n_max, 64).astype(np.int64))
        scaled = self.pmf(check) * check.astype(float) ** (1 + self.alpha)
        if np.any(np.abs(scaled / self.c_k - 1) > 0.01):
            problems.append("tail constant: K(n) n^(1+alpha) deviates from c_k by > 1%")
        return problems


def _power_exp_sum(alpha: float, x: float, a: float, b: float) -> float:
    """sum_{n=a+1}^{b} n^{-(1+alpha)} e^{-n x} by Euler-Maclaurin (a >~ 1e5)."""
    def f(t):
        return t ** (-(1 + alpha)) * np.exp(-x * t)

    def df(t):
        return -f(t) * ((1 + alpha) / t + x)

    if x == 0:
        integral = (a ** -alpha - b ** -alpha) / alpha
    else:
        integral = x ** alpha * (_upper_gamma_neg(alpha, x * a) - _upper_gamma_neg(alpha, x * b))
    return integral + (f(b) - f(a)) / 2 + (df(b) - df(a)) / 12


def _upper_gamma_neg(alpha: float, z: float) -> float:
    """Upper incomplete gamma Gamma(-alpha, z) for alpha in (0, 1)."""
    upper = gammaincc(1 - alpha, z) * gamma_fn(1 - alpha)
    return (z ** -alpha * np.exp(-z) - upper) / alpha


def make_zeta_law(alpha: float, n_max: int = 10**6, head: int = HEAD_CAP) -> InterArrivalLaw:
    """K(n) proportional to n^{-(1+alpha)} on 1..n_max."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if int(n_max) != n_max or n_max < 2:
        raise DomainError(f"n_max must be an integer >= 2, got {n_max}")
    n_max = int(n_max)
    if n_max <= head:
        weights = np.arange(1, n_max + 1, dtype=float) ** (-(1 + alpha))
        z = weights.sum()
        return InterArrivalLaw(float(alpha), n_max, weights / z, float(1 / z))
    s = 1.0 + alpha
    c_k = 1.0 / (zeta(s) - zeta(s, n_max + 1.0))
    probs = c_k * np.arange(1, head + 1, dtype=float) ** (-s)
    return InterArrivalLaw(float(alpha), n_max, probs, float(c_k), power_tail=True)


def doney_constant(law: InterArrivalLaw) -> float:
    a = law.alpha
    return a * np.sin(np.pi * a) / (np.pi * law.c_k)


@dataclass(frozen=True, eq=False)
class RenewalMassTable:
    u: np.ndarray
    law: InterArrivalLaw

    @property
    def N(self) -> int:
        return len(self.u) - 1


def renewal_mass(law: InterArrivalLaw, N: int) -> RenewalMassTable:
    """u(0..N) from u(n) = sum_k K(k) u(n-k)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    K = law.head(N)
    L = len(K)
    k_rev = K[::-1].copy()
    u = np.zeros(N + 1)
    u[0] = 1.0
    for n in range(1, N + 1):
        w = min(n, L)
        u[n] = k_rev[L - w:] @ u[n - w:n]
    return RenewalMassTable(u, law)


@dataclass(frozen=True)
class RenewalPath:
    contacts: np.ndarray
    N: int
    pinned: bool

    def occupancy(self) -> np.ndarray:
        occ = np.zeros(self.N + 1, dtype=bool)
        occ[self.contacts] = True
        return occ


def sample_path(law: InterArrivalLaw, N: int, rng) -> RenewalPath:
    """Free renewal observed on [0, N]."""
    rng = as_rng(rng)
    parts = [np.zeros(1, dtype=np.int64)]
    t, size = 0, 16
    while True:
        pos = t + np.cumsum(law.sample_jumps(rng, size))
        inside = pos[pos <= N]
        parts.append(inside)
        if len(inside) < size:
            break
        t = int(pos[-1])
        size *= 2
    contacts = np.concatenate(parts)
    return RenewalPath(contacts, N, bool(contacts[-1] == N))


class BridgeSampler:
    """Exact sampler of the renewal conditioned on N in tau (h-transform)."""

    def __init__(self, law: InterArrivalLaw, mass: RenewalMassTable, N: int):
        if mass.N < N:
            raise DomainError("mass table does not cover 0..N")
        self.law, self.N = law, N
        self._K = law.head(N)
        self._u = mass.u
        self._rows: dict[int, np.ndarray] = {}

    def step_probs(self, remaining: int) -> np.ndarray:
        """P[next gap = k | remaining distance], k = 1..min(n_max, remaining)."""
        w = min(remaining, len(self._K))
        p = self._K[:w] * self._u[remaining - 1::-1][:w]
        return p / self._u[remaining]

    def _cdf(self, remaining: int) -> np.ndarray:
        row = self._rows.get(remaining)
        if row is None:
            row = np.cumsum(self.step_probs(remaining))
            self._rows[remaining] = row
        return row

    def sample(self, rng) -> RenewalPath:
        rng = as_rng(rng)
        contacts = [0]
        t = 0
        while t < self.N:
            cdf = self._cdf(self.N - t)
            k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")) + 1
            t += min(k, len(cdf))
            contacts.append(t)
        return RenewalPath(np.asarray(contacts, dtype=np.int64), self.N, True)


@functools.lru_cache(maxsize=16)
def _bridge_sampler(law, mass, N):
    return BridgeSampler(law, mass, N)


def sample_bridge(law: InterArrivalLaw, mass: RenewalMassTable, N: int, rng) -> RenewalPath:
    return _bridge_sampler(law, mass, N).sample(rng)


def enumerate_occupancy(law: InterArrivalLaw, N: int, pinned: bool):
    """All renewal patterns on [0, N] with their probabilities.

    Returns ``(occ, prob)``: boolean array (paths, N+1) and probabilities.
    Pinned patterns carry ``prod K(gaps)``; free patterns additionally carry
    the probability that the next jump overshoots N.  Zero-probability
    patterns are dropped.
    """
    if N > MAX_ENUMERATION:
        raise DomainError(f"enumeration refused for N = {N} > {MAX_ENUMERATION}")
    if N < 1:
        raise DomainError("N must be >= 1")
    free = N - 1 if pinned else N
    count = 1 << free
    bits = ((np.arange(count)[:, None] >> np.arange(free)[None, :]) & 1).astype(bool)
    occ = np.zeros((count, N + 1), dtype=bool)
    occ[:, 0] = True
    occ[:, 1:free + 1] = bits
    if pinned:
        occ[:, N] = True
    prob = np.ones(count)
    last = np.zeros(count, dtype=np.int64)
    for p in range(1, N + 1):
        hit = occ[:, p]
        prob[hit] *= law.pmf(p - last[hit])
        last[hit] = p
    if not pinned:
        prob *= law.survival(N - last)
    keep = prob > 0
    return occ[keep], prob[keep]


def enumerate_paths(law: InterArrivalLaw, N: int, pinned: bool):
    occ, prob = enumerate_occupancy(law, N, pinned)
    out = []
    for row, p in zip(occ, prob):
        contacts = np.flatnonzero(row)
        out.append((RenewalPath(contacts, N, bool(row[N])), float(p)))
    return out


def all_subsets(items):
    items = list(items)
    return itertools.chain.from_iterable(
        itertools.combinations(items, k) for k in range(len(items) + 1))
