"""
One-block estimates under the size-biased environment.

Given a renewal bridge tau between d and f, the environment at contact sites
in [d, f] is drawn from the tilted law (1 + beta x) dP and elsewhere from P.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from ..disorder import TiltedLaw, sample_env_array
from ..errors import DomainError
from ..mc import Estimate, replica_rng, run_replicas
from ..polymer import PolymerParams, _mass, sample_environments, window_log_batch
from ..renewal import BridgeSampler, RenewalMassTable, RenewalPath
from .penalty import PenaltyConfig, dual_peak_flags, scan_dual_peak, v_threshold


def _check_window(cfg: PenaltyConfig, d: int, f: int, allow_origin: bool = False):
    lo = 0 if allow_origin else 1
    if not (lo <= d < f <= cfg.ell):
        raise DomainError(f"need {lo} <= d < f <= ell, got d={d}, f={f}, ell={cfg.ell}")
    if f - d < cfg.eta * cfg.ell:
        raise DomainError(f"window f - d = {f - d} is shorter than eta * ell = {cfg.eta * cfg.ell}")


def _block_chunk(params, cfg, d, f, master_seed, start, stop):
    omegas = sample_environments(params.env_law, cfg.ell, master_seed, start, stop)
    lz = window_log_batch(params, omegas, d, f)
    g = np.where(dual_peak_flags(cfg, omegas), math.exp(-cfg.M), 1.0)
    return g * np.exp(lz)


def penalized_block_mc(params: PolymerParams, cfg: PenaltyConfig, d: int, f: int,
                       n_samples: int, master_seed: int, workers: int = 1) -> Estimate:
    """E[g(omega_1..omega_ell) Z^0_[d,f]] over block environments (h is set to 0)."""
    _check_window(cfg, d, f)
    p0 = params.replace(h=0.0, N=cfg.ell)
    fn = functools.partial(_block_chunk, p0, cfg, d, f, master_seed)
    return Estimate.from_samples(run_replicas(fn, n_samples, workers))


def _bridge(params, length):
    mass = RenewalMassTable(_mass(params.law, length), params.law)
    return BridgeSampler(params.law, mass, length)


def _tilted_block(rng, params, tilt, sampler, d, ell):
    """One (tau, omega) draw: tau bridge on [d, f], omega on sites 1..ell."""
    path = sampler.sample(rng)
    sites = path.contacts + d
    sites = sites[sites >= 1]
    omega = sample_env_array(params.env_law, rng, ell)
    omega[sites - 1] = tilt.sample(rng, len(sites))
    return sites, omega


def _decomposition_chunk(params, cfg, d, f, master_seed, start, stop):
    sampler = _bridge(params, f - d)
    tilt = TiltedLaw(params.env_law, params.beta)
    rows = np.empty((stop - start, cfg.ell))
    for r, i in enumerate(range(start, stop)):
        _, rows[r] = _tilted_block(replica_rng(master_seed, i), params, tilt, sampler, d, cfg.ell)
    no_peak = ~dual_peak_flags(cfg, rows)
    e = math.exp(-cfg.M)
    return e + (1 - e) * no_peak


def penalized_block_decomposition_mc(params: PolymerParams, cfg: PenaltyConfig, d: int, f: int,
                                     n_samples: int, master_seed: int,
                                     workers: int = 1) -> Estimate:
    """The same expectation as :func:`penalized_block_mc`, written as
    e^{-M} + (1 - e^{-M}) E_tau[P_tau(no dual peak) | d, f in tau]."""
    _check_window(cfg, d, f)
    fn = functools.partial(_decomposition_chunk, params, cfg, d, f, master_seed)
    return Estimate.from_samples(run_replicas(fn, n_samples, workers))


def r_alpha_quarter(r: int, alpha: float) -> int:
    """floor(r^{alpha/4}), robust to rounding at exact powers."""
    return int(math.floor(r ** (alpha / 4) * (1 + 1e-12)))


def b_event(cfg: PenaltyConfig, omega, occ, r: int, alpha: float | None = None) -> bool:
    """Some i in [1, r], j in [1, r^{alpha/4}] with i, i+j in tau and a dual peak at (i, i+j)."""
    alpha = cfg.alpha if alpha is None else alpha
    J = r_alpha_quarter(r, alpha)
    for i in range(1, r + 1):
        if not occ[i]:
            continue
        for j in range(1, J + 1):
            if occ[i + j] and min(omega[i - 1], omega[i + j - 1]) >= v_threshold(cfg, j):
                return True
    return False


@dataclass(frozen=True)
class TiltedEventResult:
    complement: Estimate          # E_tau[ 1{A(d,f,tau) fails} ]
    n_a: int
    n_a_outside_block_event: int  # A(d,f,tau) without A_ell; must be 0
    n_b: int
    n_b_outside_a: int            # B(r,tau) without A(d,f,tau); must be 0
    r: int


def _tilted_event_chunk(params, cfg, d, f, r, master_seed, start, stop):
    sampler = _bridge(params, f - d)
    tilt = TiltedLaw(params.env_law, params.beta)
    out = np.zeros((stop - start, 4))
    for k, i in enumerate(range(start, stop)):
        rng = replica_rng(master_seed, i)
        sites, omega = _tilted_block(rng, params, tilt, sampler, d, cfg.ell)
        a_hit = scan_dual_peak(cfg, sites, omega[sites - 1]).occurred
        block_hit = a_hit and dual_peak_flags(cfg, omega[None, :])[0]
        occ = np.zeros(f - d + 1, dtype=bool)
        occ[sites - d] = True
        b_hit = r >= 1 and b_event(cfg, omega[d:], occ, r)
        out[k] = (a_hit, a_hit and not block_hit, b_hit, b_hit and not a_hit)
    return out


def tilted_event_mc(params: PolymerParams, cfg: PenaltyConfig, d: int, f: int, n_samples: int,
                    master_seed: int, workers: int = 1) -> TiltedEventResult:
    """Probability that the tilted contact sites in [d, f] carry no dual peak.

    Also counts, on the same joint samples, the inclusions
    A(d,f,tau) within A_ell and B(r,tau) within A(d,f,tau), r = floor(eta ell / 4).
    """
    _check_window(cfg, d, f, allow_origin=True)
    r = int(cfg.eta * cfg.ell / 4)
    if r + r_alpha_quarter(max(r, 1), cfg.alpha) > f - d:
        r = 0
    fn = functools.partial(_tilted_event_chunk, params, cfg, d, f, r, master_seed)
    data = run_replicas(fn, n_samples, workers)
    return TiltedEventResult(
        Estimate.from_samples(1.0 - data[:, 0]),
        int(data[:, 0].sum()), int(data[:, 1].sum()),
        int(data[:, 2].sum()), int(data[:, 3].sum()), r)


@dataclass(frozen=True)
class YStatistic:
    r: int
    value: int
    terms: int     # pairs (i, i+j) both in tau


def y_statistic(cfg: PenaltyConfig, env, path: RenewalPath, r: int,
                alpha: float | None = None) -> YStatistic:
    """Y = sum_{i<=r} sum_{j<=r^{alpha/4}} W(i,j) delta_i delta_{i+j}."""
    alpha = cfg.alpha if alpha is None else alpha
    J = r_alpha_quarter(r, alpha)
    omega = np.asarray(getattr(env, "omega", env), dtype=float)
    if path.N < r + J or len(omega) < r + J:
        raise DomainError(f"path and environment must cover 1..{r + J}")
    occ = path.occupancy()
    value = terms = 0
    for j in range(1, J + 1):
        both = occ[1:r + 1] & occ[1 + j:r + 1 + j]
        terms += int(both.sum())
        w = np.minimum(omega[:r], omega[j:r + j]) >= v_threshold(cfg, j)
        value += int((both & w).sum())
    return YStatistic(r, value, terms)
