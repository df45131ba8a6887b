"""
Resumable parameter sweeps and the marginal-regime scan.

Grid points run one after another; the replicas of a point are spread over
worker processes by :func:`pinlab.mc.run_replicas`, which keeps results
independent of the worker count.  Each point draws from its own seed, derived
from the master seed and the point itself, so skipping finished points on a
rerun does not shift the streams of the others.
"""
from __future__ import annotations

import functools
import hashlib
import json
import math
import time
from dataclasses import dataclass

from ..disorder import make_env_law
from ..mc import Estimate
from ..polymer import PolymerParams, quenched_free_energy_mc
from ..relevance import (PenaltyConfig, dual_peak_probability_mc, fractional_moment_mc,
                         marginal_h, penalized_block_mc, penalty_cost_mc)
from ..renewal import make_zeta_law
from .config import SweepConfig
from .store import ResultRecord, Store


def point_seed(master_seed: int, point: dict) -> int:
    text = f"{master_seed}|" + json.dumps(point, sort_keys=True)
    return int(hashlib.sha256(text.encode()).hexdigest()[:15], 16)


@functools.lru_cache(maxsize=8)
def _law(alpha: float, n_max: int):
    return make_zeta_law(alpha, n_max)


def _params(p: dict, n_max: int, h=None, N=None) -> PolymerParams:
    return PolymerParams(p["beta"], p.get("h", 0.0) if h is None else h,
                         p.get("N", p.get("ell")) if N is None else N,
                         _law(p["alpha"], n_max), make_env_law(p["gamma"], p["a"]))


def evaluate_point(operation: str, p: dict, n: int, seed: int, n_max: int = 10**6,
                   workers: int = 1) -> Estimate:
    if operation == "free-energy":
        fe = quenched_free_energy_mc(_params(p, n_max), n, seed, workers=workers)
        return Estimate(fe.estimate, fe.stderr, fe.n_samples)
    if operation == "frac-moment":
        return fractional_moment_mc(_params(p, n_max), p["theta"], n, seed, workers=workers).total
    env = make_env_law(p["gamma"], p["a"])
    if operation == "dual-peak":
        cfg = PenaltyConfig(M=p["M"], ell=p["ell"], gamma=p["gamma"])
        return dual_peak_probability_mc(cfg, env, n, seed, workers=workers).estimate
    if operation == "penalty-cost":
        cfg = PenaltyConfig(M=p["M"], ell=p["ell"], gamma=p["gamma"], theta=p["theta"])
        return penalty_cost_mc(cfg, env, n, seed, workers=workers).cost
    if operation == "block-benefit":
        cfg = PenaltyConfig(M=p["M"], ell=p["ell"], gamma=p["gamma"], eta=p["eta"])
        return penalized_block_mc(_params(p, n_max, h=0.0), cfg, 1, p["ell"], n, seed, workers)
    raise ValueError(f"unknown operation {operation!r}")


def run_sweep(config: SweepConfig, store: Store | None = None, workers: int = 1,
              stop_after: int | None = None) -> list[ResultRecord]:
    """Evaluate every grid point not yet in the store; returns the new records.

    ``stop_after`` ends the run after that many new points (used to exercise
    interrupted runs).
    """
    store = store or Store(config.store)
    store.ensure_writable()
    exp_id = config.experiment_id
    store.open_experiment(exp_id, config.to_dict(), config.master_seed)
    done = {r.key() for r in store.records(exp_id)}
    new = []
    for p in config.points():
        probe = ResultRecord(exp_id, config.operation, p, 0.0, 0.0, 0, ())
        if probe.key() in done:
            continue
        if stop_after is not None and len(new) >= stop_after:
            break
        seed = point_seed(config.master_seed, p)
        t0 = time.perf_counter()
        est = evaluate_point(config.operation, p, config.replicas, seed, config.n_max, workers)
        rec = ResultRecord(exp_id, config.operation, p, est.mean, est.stderr, est.n,
                           (seed, 0, config.replicas))
        store.append(rec, time.perf_counter() - t0)
        new.append(rec)
    return new


@dataclass(frozen=True)
class MarginalRow:
    beta: float
    h_beta: float
    ell_target: float      # ceil(1/h_beta) before clamping
    ell: int               # block length actually used
    capped: bool           # ell_target exceeded ell_max
    floored: bool          # ell_target below 3, raised to 3
    cost: float
    cost_stderr: float
    p_dual: float
    two_point_small: bool  # e^{M theta/(1-theta)} P[A] < 1, the regime where cost <= 2
    benefit: float
    benefit_stderr: float
    frac_moment: float
    frac_moment_stderr: float


def marginal_scan(beta_grid, A: float, M: float, eta: float, replicas: int, seed: int,
                  gamma: float = 1.5, a: float = 0.5, theta: float = 0.8, ell_max: int = 256,
                  exponent: float | None = None, n_max: int = 10**6,
                  workers: int = 1) -> list[MarginalRow]:
    """For each beta: h = h_beta, ell = ceil(1/h); penalty cost, benefit and E[Z^theta] at m = 2."""
    env = make_env_law(gamma, a)
    law = _law(env.marginal_alpha, n_max)
    rows = []
    for beta in beta_grid:
        h = marginal_h(beta, A, gamma, exponent)
        target = math.inf if h == 0 else math.ceil(1 / h)
        ell = int(min(max(target, 3), ell_max))
        cfg = PenaltyConfig(M=M, ell=ell, gamma=gamma, eta=eta, theta=theta, A=A)
        cost = penalty_cost_mc(cfg, env, replicas, seed, workers)
        params = PolymerParams(beta, 0.0, ell, law, env)
        benefit = penalized_block_mc(params, cfg, 1, ell, replicas, seed + 1, workers)
        fm = fractional_moment_mc(params.replace(h=h, N=2 * ell), theta, replicas, seed + 2,
                                  workers=workers)
        boost = math.exp(M * cfg.cost_exponent)
        rows.append(MarginalRow(beta, h, float(target), ell, target > ell_max, target < 3,
                                cost.cost.mean, cost.cost.stderr, cost.p_dual.mean,
                                boost * cost.p_dual.mean < 1, benefit.mean, benefit.stderr,
                                fm.total.mean, fm.total.stderr))
    return rows
