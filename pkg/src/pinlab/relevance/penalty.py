"""
Dual-peak penalization of a block environment.

A dual peak is a pair of sites i < j in a block with
``min(omega_i, omega_j) >= V(j - i)``, where
``V(n) = exp(M^2) (ell log(ell) n)^(1 / (2 gamma))``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from ..disorder import EnvironmentLaw, env_tail, sample_env_array
from ..errors import DomainError
from ..mc import Estimate, replica_rng, run_replicas

# relative slack on the candidate window before the exact threshold test
_WINDOW_SLACK = 1e-9


@dataclass(frozen=True)
class PenaltyConfig:
    M: float
    ell: int
    gamma: float = 1.5
    eta: float = 0.5
    theta: float = 0.8
    A: float = 1.0

    @property
    def alpha(self) -> float:
        return 1 - 1 / self.gamma

    @property
    def cost_exponent(self) -> float:
        return self.theta / (1 - self.theta)

    def theta_admissible(self) -> bool:
        return self.gamma / (2 * self.gamma - 1) < self.theta < 1


def v_threshold(cfg: PenaltyConfig, n):
    if cfg.ell <= 2:
        raise DomainError(f"ell must be >= 3 so that log(ell) > 1, got {cfg.ell}")
    scale = cfg.ell * math.log(cfg.ell)
    out = math.exp(cfg.M ** 2) * (scale * np.asarray(n, dtype=float)) ** (1 / (2 * cfg.gamma))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class DualPeakReport:
    occurred: bool
    witness: tuple | None
    scan_cost: int


def scan_dual_peak(cfg: PenaltyConfig, positions, values) -> DualPeakReport:
    """Dual-peak search among sites at increasing ``positions``.

    Only sites above V(1) can take part, and a candidate with value x reaches
    at most distance (x e^{-M^2})^{2 gamma} / (ell log ell).
    """
    positions = np.asarray(positions)
    values = np.asarray(values, dtype=float)
    v1 = v_threshold(cfg, 1)
    cand = values >= v1
    pos, val = positions[cand], values[cand]
    if len(pos) < 2:
        return DualPeakReport(False, None, 0)
    scale = cfg.ell * math.log(cfg.ell)
    reach = (val * math.exp(-cfg.M ** 2)) ** (2 * cfg.gamma) / scale
    cost = 0
    for a in range(len(pos) - 1):
        limit = reach[a] * (1 + _WINDOW_SLACK) + 1
        for b in range(a + 1, len(pos)):
            d = pos[b] - pos[a]
            if d > limit:
                break
            cost += 1
            if min(val[a], val[b]) >= v_threshold(cfg, d):
                return DualPeakReport(True, (int(pos[a]), int(pos[b])), cost)
    return DualPeakReport(False, None, cost)


def detect_dual_peak(cfg: PenaltyConfig, env) -> DualPeakReport:
    omega = np.asarray(getattr(env, "omega", env), dtype=float)
    if len(omega) != cfg.ell:
        raise DomainError(f"block environment must have ell = {cfg.ell} sites")
    return scan_dual_peak(cfg, np.arange(1, cfg.ell + 1), omega)


def detect_dual_peak_naive(cfg: PenaltyConfig, env) -> bool:
    omega = np.asarray(getattr(env, "omega", env), dtype=float)
    ell = len(omega)
    for i in range(ell):
        for j in range(i + 1, ell):
            if min(omega[i], omega[j]) >= v_threshold(cfg, j - i):
                return True
    return False


def dual_peak_flags(cfg: PenaltyConfig, omegas: np.ndarray) -> np.ndarray:
    """Dual-peak flag of every row of ``omegas`` (R, ell)."""
    omegas = np.atleast_2d(omegas)
    flags = np.zeros(len(omegas), dtype=bool)
    busy = np.flatnonzero((omegas >= v_threshold(cfg, 1)).sum(axis=1) >= 2)
    sites = np.arange(1, omegas.shape[1] + 1)
    for r in busy:
        flags[r] = scan_dual_peak(cfg, sites, omegas[r]).occurred
    return flags


def g_penalty(cfg: PenaltyConfig, env) -> float:
    return math.exp(-cfg.M) if detect_dual_peak(cfg, env).occurred else 1.0


def _flags_chunk(cfg, env_law, master_seed, start, stop):
    omegas = np.stack([sample_env_array(env_law, replica_rng(master_seed, i), cfg.ell)
                       for i in range(start, stop)])
    return dual_peak_flags(cfg, omegas)


def dual_peak_flag_samples(cfg, env_law, n_samples, master_seed, workers=1) -> np.ndarray:
    fn = functools.partial(_flags_chunk, cfg, env_law, master_seed)
    return run_replicas(fn, n_samples, workers).astype(bool)


@dataclass(frozen=True)
class PenaltyCost:
    cost: Estimate
    p_dual: Estimate
    two_point: float     # 1 + (e^{M theta/(1-theta)} - 1) P_hat[A]
    bound: float         # 1 + e^{M theta/(1-theta)} P_hat[A]


def penalty_cost_mc(cfg: PenaltyConfig, env_law: EnvironmentLaw, n_samples: int,
                    master_seed: int, workers: int = 1) -> PenaltyCost:
    """Monte Carlo mean of g^{-theta/(1-theta)} over one block."""
    if not 0 < cfg.theta < 1:
        raise DomainError("theta must lie in (0, 1)")
    flags = dual_peak_flag_samples(cfg, env_law, n_samples, master_seed, workers)
    boost = math.exp(cfg.M * cfg.cost_exponent)
    p = Estimate.from_samples(flags)
    if cfg.M == 0:
        cost = Estimate.exact(1.0, n_samples)
    else:
        cost = Estimate.from_samples(np.where(flags, boost, 1.0))
    return PenaltyCost(cost, p, 1 + (boost - 1) * p.mean, 1 + boost * p.mean)


@dataclass(frozen=True)
class DualPeakProbability:
    estimate: Estimate
    method: str
    p_two: float    # probability of at least two candidate sites (conditional method)


def _conditional_chunk(cfg, env_law, master_seed, start, stop):
    ell, g = cfg.ell, env_law.gamma
    y1 = float(env_law.pareto_coord(v_threshold(cfg, 1)))
    p1 = env_tail(env_law, v_threshold(cfg, 1))
    ks = np.arange(2, ell + 1)
    pk = binom.pmf(ks, ell, p1)
    cdf = np.cumsum(pk / pk.sum())
    below_mass = 1 - y1 ** -g
    rows = np.empty((stop - start, ell))
    for r, i in enumerate(range(start, stop)):
        rng = replica_rng(master_seed, i)
        k = ks[min(int(np.searchsorted(cdf, rng.random(), side="right")), len(ks) - 1)]
        y = (1 - rng.random(ell) * below_mass) ** (-1 / g)
        hot = rng.choice(ell, size=k, replace=False)
        y[hot] = y1 * (1 - rng.random(k)) ** (-1 / g)
        rows[r] = env_law.from_pareto(y)
    return dual_peak_flags(cfg, rows)


def dual_peak_probability_mc(cfg: PenaltyConfig, env_law: EnvironmentLaw, n_samples: int,
                             master_seed: int, method: str = "conditional",
                             workers: int = 1) -> DualPeakProbability:
    """Estimate P[A_ell].

    ``plain`` samples block environments directly.  ``conditional`` samples
    them conditioned on at least two sites exceeding V(1) (a necessary
    condition for a dual peak) and rescales by the exact probability of that
    condition; it is unbiased and resolves small probabilities.
    """
    if method == "plain":
        flags = dual_peak_flag_samples(cfg, env_law, n_samples, master_seed, workers)
        return DualPeakProbability(Estimate.from_samples(flags), method, float("nan"))
    if method != "conditional":
        raise DomainError(f"unknown method {method!r}")
    p1 = env_tail(env_law, v_threshold(cfg, 1))
    p_two = float(binom.sf(1, cfg.ell, p1))
    fn = functools.partial(_conditional_chunk, cfg, env_law, master_seed)
    flags = run_replicas(fn, n_samples, workers).astype(float)
    est = Estimate.from_samples(flags)
    return DualPeakProbability(Estimate(p_two * est.mean, p_two * est.stderr, est.n), method, p_two)


def dual_peak_scaling(M_grid, ell: int, env_law: EnvironmentLaw, n_samples: int,
                      master_seed: int, method: str = "conditional", workers: int = 1):
    """Least-squares slope of log P[A_ell] against M^2 plus the per-M estimates."""
    ests = []
    for M in M_grid:
        cfg = PenaltyConfig(M=float(M), ell=ell, gamma=env_law.gamma)
        ests.append(dual_peak_probability_mc(cfg, env_law, n_samples, master_seed, method, workers))
    x = np.asarray(M_grid, dtype=float) ** 2
    with np.errstate(divide="ignore"):
        y = np.log([e.estimate.mean for e in ests])
    slope = float(np.polyfit(x, y, 1)[0]) if np.all(np.isfinite(y)) else float("nan")
    return slope, ests
