"""
Finite-volume partition functions of the disordered pinning model.

Sites are numbered 1..N and ``omega[n-1]`` is the disorder at site n; the
origin carries no weight.  Recursions run in the log domain with a
log-sum-exp over the jump window, batched over environments (rows).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn, logsumexp

from .disorder import EnvironmentLaw, make_env_law, sample_env_array
from .errors import DomainError
from .mc import Estimate, replica_rng, run_replicas
from .renewal import InterArrivalLaw, make_zeta_law, renewal_mass


@dataclass(frozen=True, eq=False)
class PolymerParams:
    beta: float
    h: float
    N: int
    law: InterArrivalLaw
    env_law: EnvironmentLaw

    def __post_init__(self):
        if not 0 <= self.beta <= 1:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if 1 - self.beta * self.env_law.a <= 0:
            raise DomainError("1 - beta a must be positive")

    def replace(self, **kw) -> "PolymerParams":
        fields = dict(beta=self.beta, h=self.h, N=self.N, law=self.law, env_law=self.env_law)
        fields.update(kw)
        return PolymerParams(**fields)


def default_params(beta=0.5, h=0.0, N=100, gamma=1.5, a=0.5, alpha=None, n_max=10**6):
    env_law = make_env_law(gamma, a)
    alpha = env_law.marginal_alpha if alpha is None else alpha
    return PolymerParams(beta, h, N, make_zeta_law(alpha, n_max), env_law)


def log_weights(beta: float, h: float, omega) -> np.ndarray:
    """log of e^h (1 + beta omega); refuses nonpositive weights."""
    omega = np.asarray(omega, dtype=float)
    arg = beta * omega
    if np.any(arg <= -1):
        raise DomainError("nonpositive pinning weight 1 + beta omega")
    return h + np.log1p(arg)


def forward_log(logw: np.ndarray, log_k: np.ndarray) -> np.ndarray:
    """Forward log partition values for each row of ``logw`` (R, N).

    Returns (R, N+1); column n is log Z(n) with the weight of site n included.
    """
    logw = np.atleast_2d(logw)
    R, N = logw.shape
    L = min(N, len(log_k))
    k_rev = log_k[:L][::-1]
    out = np.full((R, N + 1), -np.inf)
    out[:, 0] = 0.0
    for n in range(1, N + 1):
        w = min(n, L)
        out[:, n] = logw[:, n - 1] + logsumexp(out[:, n - w:n] + k_rev[L - w:], axis=1)
    return out


def backward_log(logw: np.ndarray, log_k: np.ndarray) -> np.ndarray:
    """log of E[prod of weights on tau in (n, N]; N in tau | n in tau], n = 0..N."""
    logw = np.atleast_2d(logw)
    R, N = logw.shape
    L = min(N, len(log_k))
    out = np.full((R, N + 1), -np.inf)
    out[:, N] = 0.0
    for n in range(N - 1, -1, -1):
        w = min(N - n, L)
        # successors n+1..n+w; weight of site m is logw[:, m-1]
        seg = out[:, n + 1:n + w + 1] + logw[:, n:n + w] + log_k[:w]
        out[:, n] = logsumexp(seg, axis=1)
    return out


@dataclass(frozen=True, eq=False)
class PartitionTable:
    log_z_fwd: np.ndarray
    log_z_bwd: np.ndarray
    params: PolymerParams

    @property
    def log_z(self) -> float:
        return float(self.log_z_fwd[-1])


def _omega(env, N: int) -> np.ndarray:
    omega = np.asarray(getattr(env, "omega", env), dtype=float)
    if len(omega) < N:
        raise DomainError(f"environment has {len(omega)} sites, need {N}")
    return omega[:N]


def forward_partition(params: PolymerParams, env) -> PartitionTable:
    logw = log_weights(params.beta, params.h, _omega(env, params.N))
    log_k = params.law.log_head(params.N)
    fwd = forward_log(logw[None, :], log_k)[0]
    bwd = backward_log(logw[None, :], log_k)[0]
    return PartitionTable(fwd, bwd, params)


def log_partition_batch(params: PolymerParams, omegas: np.ndarray) -> np.ndarray:
    """log Z_N for every row of ``omegas``."""
    logw = log_weights(params.beta, params.h, np.atleast_2d(omegas)[:, :params.N])
    return forward_log(logw, params.law.log_head(params.N))[:, -1]


def window_partition(params: PolymerParams, env, a: int, b: int) -> float:
    """log Z^h_[a,b]: weights on tau in [a, b] given a, b in tau.

    Both endpoints carry their weight; the origin (a = 0) has none.
    """
    if not (0 <= a < b):
        raise DomainError(f"need 0 <= a < b, got a={a}, b={b}")
    omega = _omega(env, b)
    return float(window_log_batch(params, omega[None, :], a, b)[0])


def window_log_batch(params: PolymerParams, omegas: np.ndarray, a: int, b: int) -> np.ndarray:
    omegas = np.atleast_2d(omegas)
    logw = log_weights(params.beta, params.h, omegas[:, a:b])
    length = b - a
    log_k = params.law.log_head(length)
    out = forward_log(logw, log_k)[:, -1]
    if a >= 1:
        out = out + log_weights(params.beta, params.h, omegas[:, a - 1])
    return out - np.log(_mass(params.law, length)[length])


@functools.lru_cache(maxsize=64)
def _mass_cached(law, N):
    return renewal_mass(law, N).u


def _mass(law, N):
    return _mass_cached(law, max(N, 1))


@dataclass(frozen=True)
class ContactProfile:
    profile: np.ndarray          # P[n in tau], n = 1..N
    expected_contacts: float


def contact_profile(params: PolymerParams, env, table: PartitionTable | None = None) -> ContactProfile:
    table = forward_partition(params, env) if table is None else table
    logp = table.log_z_fwd[1:] + table.log_z_bwd[1:] - table.log_z
    prof = np.exp(logp)
    return ContactProfile(prof, float(prof.sum()))


def homogeneous_log_partition(law: InterArrivalLaw, N: int, h: float) -> float:
    logw = np.full((1, N), float(h))
    return float(forward_log(logw, law.log_head(N))[0, -1])


def homogeneous_g(law: InterArrivalLaw, x: float) -> float:
    if x < 0:
        raise DomainError("g is defined for x >= 0")
    return -law.laplace(float(x))


def homogeneous_free_energy(law: InterArrivalLaw, h: float, tol: float = 1e-12) -> float:
    """0 for h <= 0, else the root of g(x) = h."""
    if h <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while homogeneous_g(law, hi) < h:
        lo, hi = hi, 2 * hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if homogeneous_g(law, mid) < h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def homogeneous_small_h(law: InterArrivalLaw, h: float) -> float:
    """Leading small-h behaviour of the pure free energy."""
    a = law.alpha
    return (a * h / (law.c_k * gamma_fn(1 - a))) ** (1 / a)


@dataclass(frozen=True)
class FreeEnergyEstimate:
    estimate: float
    stderr: float
    n_samples: int
    N: int


def sample_environments(env_law: EnvironmentLaw, n_sites: int, master_seed: int,
                        start: int, stop: int) -> np.ndarray:
    """Rows start..stop-1, each drawn from its own replica stream."""
    return np.stack([sample_env_array(env_law, replica_rng(master_seed, i), n_sites)
                     for i in range(start, stop)]) if stop > start else np.empty((0, n_sites))


def _log_z_chunk(params, master_seed, start, stop):
    omegas = sample_environments(params.env_law, params.N, master_seed, start, stop)
    return log_partition_batch(params, omegas)


def log_partition_samples(params: PolymerParams, n_samples: int, master_seed: int,
                          workers: int = 1) -> np.ndarray:
    fn = functools.partial(_log_z_chunk, params, master_seed)
    return run_replicas(fn, n_samples, workers)


def quenched_free_energy_mc(params: PolymerParams, n_samples: int, master_seed: int,
                            workers: int = 1) -> FreeEnergyEstimate:
    if n_samples < 2:
        raise DomainError("n_samples must be >= 2")
    if params.beta == 0:
        exact = homogeneous_log_partition(params.law, params.N, params.h) / params.N
        return FreeEnergyEstimate(exact, 0.0, n_samples, params.N)
    est = Estimate.from_samples(log_partition_samples(params, n_samples, master_seed, workers) / params.N)
    return FreeEnergyEstimate(est.mean, est.stderr, est.n, params.N)


@dataclass(frozen=True)
class ScanRow:
    h: float
    estimate: float
    stderr: float
    crossed: bool


@dataclass(frozen=True)
class CriticalScan:
    beta: float
    N: int
    floor: float
    rows: list
    crossing_h: float | None


def critical_point_scan(beta: float, h_grid, N: int, n_samples: int, master_seed: int,
                        law: InterArrivalLaw | None = None, env_law: EnvironmentLaw | None = None,
                        workers: int = 1) -> CriticalScan:
    """Quenched free-energy estimates along ``h_grid``.

    ``floor`` = (1/N) log(1/u(N)) is the finite-size offset of the pinned
    pure model at h = 0.  The crossing is the first h whose estimate, shifted
    up by the floor, exceeds 3 stderr.  Common random numbers are used across
    h.  Exploratory only.
    """
    h_grid = [float(h) for h in h_grid]
    if h_grid != sorted(h_grid):
        raise DomainError("h_grid must be sorted")
    env_law = env_law or make_env_law(1.5, 0.5)
    law = law or make_zeta_law(env_law.marginal_alpha)
    floor = float(-np.log(_mass(law, N)[N]) / N)
    rows, crossing = [], None
    for h in h_grid:
        p = PolymerParams(beta, h, N, law, env_law)
        est = quenched_free_energy_mc(p, n_samples, master_seed, workers)
        crossed = crossing is None and est.estimate + floor > 3 * est.stderr
        if crossed:
            crossing = h
        rows.append(ScanRow(h, est.estimate, est.stderr, crossed))
    return CriticalScan(beta, N, floor, rows, crossing)
