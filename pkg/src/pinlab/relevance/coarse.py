"""
Coarse graining into blocks of size ell and fractional moments.

For a system of size N = m ell, ``Z^I`` is the contribution of renewal paths
whose set of visited blocks is exactly I.  Paths visit blocks in increasing
order, so "every block of I is visited" means no jump skips a block of I.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainError
from ..mc import Estimate, run_replicas
from ..polymer import (PolymerParams, _mass, forward_log, homogeneous_log_partition,
                       log_partition_samples, log_weights, sample_environments, window_partition)
from .penalty import PenaltyConfig, dual_peak_flags


@dataclass(frozen=True)
class BlockSet:
    m: int
    members: tuple

    def __post_init__(self):
        members = tuple(sorted(set(int(i) for i in self.members)))
        if any(i < 1 or i > self.m for i in members):
            raise DomainError(f"block indices must lie in 1..{self.m}")
        object.__setattr__(self, "members", members)

    @property
    def contributes(self) -> bool:
        return self.m in self.members


def block_sets(m: int, contributing_only: bool = True) -> list[BlockSet]:
    """All subsets of 1..m (only those containing m by default), in a fixed order."""
    out = []
    for k in range(m + 1):
        for c in itertools.combinations(range(1, m + 1), k):
            bs = BlockSet(m, c)
            if bs.contributes or not contributing_only:
                out.append(bs)
    return out


def _check_size(N: int, m: int, ell: int):
    if N != m * ell:
        raise DomainError(f"N = {N} is not m * ell = {m} * {ell}")


def _block_sites(b: int, ell: int) -> range:
    return range(ell * (b - 1) + 1, ell * b + 1)


def coarse_log_batch(logw: np.ndarray, log_k: np.ndarray, ell: int, blocks: BlockSet) -> np.ndarray:
    """log Z^I for every row of log-weights (R, N) by restricted forward recursion."""
    logw = np.atleast_2d(logw)
    R, N = logw.shape
    _check_size(N, blocks.m, ell)
    if not blocks.contributes:
        return np.full(R, -np.inf)
    ext = np.concatenate([log_k, np.full(max(0, N - len(log_k)), -np.inf)])
    out = np.full((R, N + 1), -np.inf)
    out[:, 0] = 0.0
    prev_sites = [0]
    for b in blocks.members:
        sites = list(_block_sites(b, ell))
        for idx, n in enumerate(sites):
            preds = np.asarray(prev_sites + sites[:idx])
            out[:, n] = logw[:, n - 1] + logsumexp(out[:, preds] + ext[n - preds - 1], axis=1)
        prev_sites = sites
    return out[:, N]


def coarse_grained_partition(params: PolymerParams, env, blocks: BlockSet, ell: int) -> float:
    """log Z^I for one environment; -inf when m is not in I."""
    omega = np.asarray(getattr(env, "omega", env), dtype=float)[:params.N]
    _check_size(params.N, blocks.m, ell)
    logw = log_weights(params.beta, params.h, omega)[None, :]
    return float(coarse_log_batch(logw, params.law.log_head(params.N), ell, blocks)[0])


def coarse_grained_partition_decomposed(params: PolymerParams, env, blocks: BlockSet,
                                        ell: int) -> float:
    """log Z^I summed over first/last contacts (d_k, f_k) in each visited block.

    Each block contributes u(f - d) Z^h_[d,f]; consecutive blocks are joined
    by K(d_{k+1} - f_k).  Independent of :func:`coarse_log_batch`.
    """
    omega = np.asarray(getattr(env, "omega", env), dtype=float)[:params.N]
    _check_size(params.N, blocks.m, ell)
    if not blocks.contributes:
        return -math.inf
    law = params.law
    logw = log_weights(params.beta, params.h, omega)
    u = _mass(law, ell)
    exits = {0: 0.0}
    for b in blocks.members:
        sites = list(_block_sites(b, ell))
        entry = {}
        for d in sites:
            terms = [v + math.log(k) for f, v in exits.items()
                     if (k := float(law.pmf(np.array([d - f]))[0])) > 0]
            entry[d] = logsumexp(terms) if terms else -math.inf
        new_exits = {}
        for f in sites:
            terms = []
            for d in sites:
                if d > f or entry[d] == -math.inf:
                    continue
                if d == f:
                    inner = logw[d - 1]
                else:
                    inner = math.log(u[f - d]) + window_partition(params, omega, d, f)
                terms.append(entry[d] + inner)
            new_exits[f] = logsumexp(terms) if terms else -math.inf
        if b == blocks.m:
            return float(new_exits[params.N])
        exits = new_exits
    return -math.inf


@dataclass(frozen=True)
class CoarseSamples:
    """Per-replica log Z, log Z^I and per-block dual-peak flags."""

    log_z: np.ndarray
    log_z_blocks: np.ndarray      # (R, len(subsets))
    flags: np.ndarray             # (R, m) bool; empty when no penalty config
    subsets: list


def _coarse_chunk(params, ell, m, subsets, cfg, master_seed, start, stop):
    omegas = sample_environments(params.env_law, params.N, master_seed, start, stop)
    logw = log_weights(params.beta, params.h, omegas)
    log_k = params.law.log_head(params.N)
    cols = [forward_log(logw, log_k)[:, -1]]
    cols += [coarse_log_batch(logw, log_k, ell, bs) for bs in subsets]
    if cfg is not None:
        cols += [dual_peak_flags(cfg, omegas[:, ell * i:ell * (i + 1)]).astype(float)
                 for i in range(m)]
    return np.column_stack(cols)


def coarse_samples(params: PolymerParams, ell: int, n_samples: int, master_seed: int,
                   cfg: PenaltyConfig | None = None, workers: int = 1) -> CoarseSamples:
    m = params.N // ell
    _check_size(params.N, m, ell)
    subsets = block_sets(m)
    fn = functools.partial(_coarse_chunk, params, ell, m, subsets, cfg, master_seed)
    data = run_replicas(fn, n_samples, workers)
    k = len(subsets)
    flags = data[:, 1 + k:].astype(bool) if cfg is not None else np.zeros((len(data), 0), bool)
    return CoarseSamples(data[:, 0], data[:, 1:1 + k], flags, subsets)


@dataclass(frozen=True)
class FractionalMoment:
    total: Estimate
    per_subset: dict | None


def fractional_moment_mc(params: PolymerParams, theta: float, n_samples: int, master_seed: int,
                         ell: int | None = None, workers: int = 1) -> FractionalMoment:
    """Monte Carlo E[Z^theta]; with ``ell`` also E[(Z^I)^theta] for every I containing m."""
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)")
    if params.beta == 0:
        lz = homogeneous_log_partition(params.law, params.N, params.h)
        total = Estimate.exact(math.exp(theta * lz), n_samples)
        if ell is None:
            return FractionalMoment(total, None)
    if ell is None:
        lz = log_partition_samples(params, n_samples, master_seed, workers)
        return FractionalMoment(Estimate.from_samples(np.exp(theta * lz)), None)
    s = coarse_samples(params, ell, n_samples, master_seed, None, workers)
    per = {bs.members: Estimate.from_samples(np.exp(theta * s.log_z_blocks[:, i]))
           for i, bs in enumerate(s.subsets)}
    total = (Estimate.exact(math.exp(theta * lz), n_samples) if params.beta == 0
             else Estimate.from_samples(np.exp(theta * s.log_z)))
    return FractionalMoment(total, per)


@dataclass(frozen=True)
class HolderTerms:
    members: tuple
    theta: float
    moment: Estimate      # E[(Z^I)^theta]
    cost: Estimate        # E[G_I^{-theta/(1-theta)}]
    benefit: Estimate     # E[G_I Z^I]

    @property
    def bound(self) -> float:
        t = self.theta
        return self.cost.mean ** (1 - t) * self.benefit.mean ** t


def holder_terms(samples: CoarseSamples, cfg: PenaltyConfig, theta: float) -> list[HolderTerms]:
    """Both sides of the Hoelder split for every I, on one batch of samples."""
    g = np.where(samples.flags, math.exp(-cfg.M), 1.0)       # (R, m)
    out = []
    for i, bs in enumerate(samples.subsets):
        cols = [b - 1 for b in bs.members]
        G = np.prod(g[:, cols], axis=1)
        lz = samples.log_z_blocks[:, i]
        out.append(HolderTerms(
            bs.members,
            theta,
            Estimate.from_samples(np.exp(theta * lz)),
            Estimate.from_samples(G ** (-theta / (1 - theta))),
            Estimate.from_samples(G * np.exp(lz)),
        ))
    return out


def holder_decomposition_mc(params: PolymerParams, cfg: PenaltyConfig, theta: float,
                            n_samples: int, master_seed: int, workers: int = 1):
    s = coarse_samples(params, cfg.ell, n_samples, master_seed, cfg, workers)
    return holder_terms(s, cfg, theta)
