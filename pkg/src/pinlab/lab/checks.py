"""
Acceptance checks run by ``pinlab verify``.

Each check returns a :class:`CheckResult`.  The ``fast`` level trims Monte
Carlo sample counts; ``full`` uses the stated counts and adds the ell-trend
diagnostics.
"""
from __future__ import annotations

import json
import math
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from ..disorder import make_env_law, sample_env, tilted_tail
from ..polymer import (PolymerParams, contact_profile, forward_partition,
                       homogeneous_free_energy, homogeneous_g, homogeneous_log_partition,
                       homogeneous_small_h, log_partition_samples)
from ..relevance import (PenaltyConfig, block_sets, coarse_grained_partition,
                         coarse_grained_partition_decomposed, coarse_samples, dual_peak_scaling,
                         exact_moment_sums, holder_terms, pair_marginal_check, penalized_block_mc,
                         penalty_cost_mc, tilted_event_mc, u_orthogonality_check,
                         v_threshold, x_discrepancy_mc)
from ..renewal import (InterArrivalLaw, doney_constant, enumerate_occupancy, make_zeta_law,
                       renewal_mass)
from .config import SweepConfig
from .store import Store
from .sweep import run_sweep

LEVELS = ("fast", "full")
FAULTS = ("corrupt-k",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} ({self.seconds:.1f}s): {self.detail}"


def _n(level: str, fast: int, full: int) -> int:
    return full if level == "full" else fast


def _corrupt(law: InterArrivalLaw) -> InterArrivalLaw:
    probs = law.probs.copy()
    probs[[2, 5, 9]] *= np.array([1.7, 0.2, 3.0])
    return InterArrivalLaw(law.alpha, law.n_max, probs, law.c_k, law.power_tail)


def check_law_invariants(level="fast", faults=()) -> CheckResult:
    problems = []
    for alpha in (1 / 3, 0.5, 0.8):
        law = make_zeta_law(alpha, 10**6)
        if "corrupt-k" in faults:
            law = _corrupt(law)
        problems += [f"alpha={alpha:.3g}: {p}" for p in law.check_invariants()]
        u = renewal_mass(law, 200).u
        if not (u[0] == 1 and np.all((u[1:] > 0) & (u[1:] <= 1))):
            problems.append(f"alpha={alpha:.3g}: u outside (0, 1]")
    return CheckResult("law-invariants", not problems, "; ".join(problems) or "K and u invariants hold")


def check_oracle_equivalence(level="fast", faults=()) -> CheckResult:
    """forward_partition against exhaustive enumeration, 100 random configurations."""
    rng = np.random.default_rng(2024)
    env = make_env_law(1.5, 0.5)
    laws = [make_zeta_law(a, n) for a in (1 / 3, 0.5, 0.8) for n in (5, 10**6)]
    worst = 0.0
    for _ in range(100):
        law = laws[rng.integers(len(laws))]
        N = int(rng.integers(1, 15))
        params = PolymerParams(float(rng.uniform(0, 1)), float(rng.uniform(-1, 1)), N, law, env)
        omega = sample_env(env, N, int(rng.integers(2**31))).omega
        occ, prob = enumerate_occupancy(law, N, pinned=True)
        logw = params.h + np.log1p(params.beta * omega)
        log_terms = np.log(prob) + occ[:, 1:].astype(float) @ logw
        exact = logsumexp(log_terms)
        got = forward_partition(params, omega).log_z
        worst = max(worst, abs(math.expm1(got - exact)))
    return CheckResult("c1-oracle-equivalence", worst <= 1e-10,
                       f"max relative error {worst:.2e} over 100 configurations (tol 1e-10)")


def check_renewal_asymptotics(level="fast", faults=()) -> CheckResult:
    N = 10**4

    def ratio(n_max):
        law = make_zeta_law(0.5, n_max)
        return renewal_mass(law, N).u[N] / (doney_constant(law) * (N + 1) ** -0.5)

    r = ratio(10**6)
    ref = ratio(10**10)
    return CheckResult("c2-renewal-asymptotics", 0.95 <= r <= 1.05,
                       f"u(1e4)/asymptote = {r:.4f} at n_max=1e6 (target [0.95, 1.05]); "
                       f"{ref:.4f} at n_max=1e10")


def check_exact_identities(level="fast", faults=()) -> CheckResult:
    env = make_env_law(1.5, 0.5)
    law = make_zeta_law(0.5, 10**6)
    rng = np.random.default_rng(11)
    worst_sum = worst_route = 0.0
    for m in range(1, 5):
        for ell in (2, 3, 6):
            params = PolymerParams(0.6, float(rng.uniform(-0.5, 0.5)), m * ell, law, env)
            omega = sample_env(env, m * ell, int(rng.integers(2**31))).omega
            parts = np.array([coarse_grained_partition(params, omega, b, ell) for b in block_sets(m)])
            alt = np.array([coarse_grained_partition_decomposed(params, omega, b, ell)
                            for b in block_sets(m)])
            lz = forward_partition(params, omega).log_z
            worst_sum = max(worst_sum, abs(math.expm1(logsumexp(parts) - lz)))
            worst_route = max(worst_route, float(np.max(np.abs(np.expm1(alt - parts)))))
    pm = pair_marginal_check(law, 12)
    orth = [u_orthogonality_check(make_zeta_law(a, 10**6), 12) for a in (1 / 3, 0.5)]
    sep = max(o.max_separated for o in orth)
    worst = max(worst_sum, worst_route, pm.pair_error, pm.triple_error, sep)
    return CheckResult("c3-exact-identities", worst <= 1e-12,
                       f"sum_I Z^I vs Z {worst_sum:.1e}, two Z^I routes {worst_route:.1e}, "
                       f"pair {pm.pair_error:.1e}, triple {pm.triple_error:.1e}, "
                       f"separated E[U U] {sep:.1e} (tol 1e-12)")


def check_inequalities(level="fast", faults=()) -> CheckResult:
    n = _n(level, 2000, 10**4)
    env = make_env_law(1.5, 0.5)
    law = make_zeta_law(env.marginal_alpha, 10**6)
    beta, h, N, theta = 0.5, 0.0, 12, 0.8
    params = PolymerParams(beta, h, N, law, env)
    fails = []

    lz = log_partition_samples(params.replace(N=100), n, 41)
    jensen_gap = logsumexp(lz) - math.log(n) - lz.mean()
    if jensen_gap < 0:
        fails.append("Jensen")
    f_hat, se = lz.mean() / 100, lz.std(ddof=1) / math.sqrt(n) / 100
    upper = homogeneous_log_partition(law, 100, h) / 100
    lower = homogeneous_log_partition(law, 100, h + math.log(1 - env.a * beta)) / 100
    if not lower - 3 * se <= f_hat <= upper + 3 * se:
        fails.append("annealed/shifted-h bounds")

    cfg = PenaltyConfig(M=0.5, ell=4, gamma=1.5, theta=theta)
    s = coarse_samples(params, 4, n, 43, cfg)
    zt = np.exp(theta * s.log_z)
    parts = np.exp(theta * s.log_z_blocks)
    lhs, lhs_se = zt.mean(), zt.std(ddof=1) / math.sqrt(n)
    rhs, rhs_se = parts.sum(axis=1).mean(), parts.sum(axis=1).std(ddof=1) / math.sqrt(n)
    if lhs - rhs > 3 * math.hypot(lhs_se, rhs_se):
        fails.append("fractional subadditivity")

    worst_holder = -math.inf
    for t in holder_terms(s, cfg, theta):
        b = t.bound
        b_se = b * math.hypot((1 - theta) * t.cost.stderr / t.cost.mean,
                              theta * t.benefit.stderr / t.benefit.mean)
        z = (t.moment.mean - b) / max(math.hypot(t.moment.stderr, b_se), 1e-300)
        worst_holder = max(worst_holder, z)
        if t.moment.mean - b > 3 * math.hypot(t.moment.stderr, b_se):
            fails.append(f"Hoelder I={t.members}")
    z_all = np.exp(s.log_z)
    g = np.prod(np.where(s.flags, math.exp(-cfg.M), 1.0), axis=1)
    if (g * z_all).mean() > z_all.mean():
        fails.append("g <= 1 benefit")
    if np.any(g > 1):
        fails.append("g <= 1")
    return CheckResult("c4-inequalities", not fails,
                       (f"failed: {', '.join(fails)}; " if fails else "") +
                       f"{n} replicas; Jensen gap {jensen_gap:.3g}, F_hat {f_hat:.4g} in "
                       f"[{lower:.4g}, {upper:.4g}], E[Z^t] {lhs:.4g} <= sum_I {rhs:.4g}, "
                       f"worst Hoelder z {worst_holder:.2f}, dual-peak rate {s.flags.mean():.3g}")


def check_homogeneous(level="fast", faults=()) -> CheckResult:
    law = make_zeta_law(0.5, 10**6)
    inv = max(abs(homogeneous_free_energy(law, homogeneous_g(law, x)) - x) for x in (0.1, 0.5, 1, 2))
    big = make_zeta_law(0.5, 10**14)
    ratio = homogeneous_free_energy(big, 1e-4) / homogeneous_small_h(big, 1e-4)
    env = make_env_law(1.5, 0.5)
    params = PolymerParams(0.5, 0.05, 200, law, env)
    omega = sample_env(env, 200, 5).omega
    eps = 1e-4
    fd = (forward_partition(params.replace(h=0.05 + eps), omega).log_z
          - forward_partition(params.replace(h=0.05 - eps), omega).log_z) / (2 * eps)
    contacts = contact_profile(params, omega).expected_contacts
    rel = abs(contacts / fd - 1)
    ok = inv <= 1e-10 and 0.9 <= ratio <= 1.1 and rel <= 1e-4
    return CheckResult("c5-homogeneous", ok,
                       f"max |F(g(x)) - x| {inv:.1e}; small-h ratio {ratio:.4f} (n_max=1e14); "
                       f"contacts vs d/dh log Z rel {rel:.1e}")


def check_dual_peak(level="fast", faults=(), workers=1) -> CheckResult:
    n = _n(level, 2 * 10**4, 10**5)
    env = make_env_law(1.5, 0.5)
    slope, ests = dual_peak_scaling([1.0, 1.25, 1.5], 1024, env, n, 17, workers=workers)
    cost = penalty_cost_mc(PenaltyConfig(M=1.5, ell=1024, gamma=1.5, theta=0.8), env, n, 19, workers)
    ok = slope <= -2 * 1.5 + 0.2 and cost.cost.mean <= 2
    probs = ", ".join(f"{e.estimate.mean:.3g}" for e in ests)
    return CheckResult("c6-dual-peak-scaling", ok,
                       f"{n} samples per M; P[A] = {probs}; slope {slope:.3f} (need <= -2.8); "
                       f"penalty cost at M=1.5 {cost.cost.mean:.4f} +- {cost.cost.stderr:.1e}")


def check_tilted_tail(level="fast", faults=()) -> CheckResult:
    env = make_env_law(1.5, 0.5)
    cfg = PenaltyConfig(M=1.0, ell=1024, gamma=1.5)
    n = np.arange(1, 1001)
    slope = np.polyfit(np.log(n), np.log(tilted_tail(env, 0.5, v_threshold(cfg, n))), 1)[0]
    target = -env.marginal_alpha / 2
    return CheckResult("c7-tilted-tail", abs(slope / target - 1) <= 0.1,
                       f"slope {slope:.5f} vs -alpha/2 = {target:.5f}")


def check_moment_sums(level="fast", faults=()) -> CheckResult:
    law = make_zeta_law(1 / 3, 10**6)
    a = law.alpha
    rs = [2**k for k in range(4, 15)]
    sums = np.array([exact_moment_sums(law, r) for r in rs])
    r = np.array(rs, dtype=float)
    norm = np.column_stack([sums[:, 0] / (r**a * np.log(r)),
                            sums[:, 1] / (r**(1.5 * a) * np.log(r)),
                            sums[:, 2] / (r**(1.5 * a) * np.log(r))])
    with np.errstate(divide="ignore"):
        spread = norm.max(axis=0) / norm.min(axis=0)
    ok = bool(np.all(spread <= 10))
    zero = [rs[i] for i in np.flatnonzero(sums[:, 1] == 0)]
    return CheckResult("c8-moment-sums", ok,
                       f"alpha=1/3, max/min S1 {spread[0]:.3g}, S3a {spread[1]:.3g}, "
                       f"S3b {spread[2]:.3g} (need <= 10); S3a = 0 at r = {zero} "
                       f"(floor(r^(alpha/4)) = 1 leaves no pair j < k)")


def check_l2_coupling(level="fast", faults=(), workers=1) -> CheckResult:
    n = _n(level, 4000, 10**4)
    law = make_zeta_law(1 / 3, 10**6)
    ests = [x_discrepancy_mc(law, 2**k, n, 23, workers) for k in (6, 8, 10, 12)]
    means = [e.mean for e in ests]
    ok = all(b < a for a, b in zip(means, means[1:]))
    z = [(a.mean - b.mean) / math.hypot(a.stderr, b.stderr) for a, b in zip(ests, ests[1:])]
    return CheckResult("c9-l2-coupling", ok,
                       f"{n} paths; E[(X1-X2)^2] = " + ", ".join(f"{m:.4f}" for m in means)
                       + "; step z-scores " + ", ".join(f"{v:.1f}" for v in z))


DETERMINISM_CONFIG = {"operation": "free-energy",
                      "grid": {"beta": [0.3, 0.8], "h": [0.0, 0.05], "N": [60]},
                      "replicas": 600, "master_seed": 99}


def check_determinism(level="fast", faults=()) -> CheckResult:
    cfg = SweepConfig.from_dict(DETERMINISM_CONFIG)
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for w in (1, 8):
            store = Store(Path(tmp) / f"w{w}")
            run_sweep(cfg, store, workers=w)
            blobs.append((store.exp_dir(cfg.experiment_id) / "results.jsonl").read_bytes())
    same = blobs[0] == blobs[1]
    return CheckResult("c10-determinism", same,
                       f"results.jsonl {'byte-identical' if same else 'differs'} for workers 1 and 8 "
                       f"({len(blobs[0])} bytes)")


def check_ell_trend(level="full", faults=(), workers=1) -> CheckResult:
    """Tilted no-dual-peak probability and penalized block value as ell grows.

    The trend is slow (logarithmic in ell), so it is tested through the
    regression slope against log2(ell): negative at 3 sigma, with no single
    step rising by more than 3 sigma.
    """
    env = make_env_law(1.5, 0.5)
    law = make_zeta_law(env.marginal_alpha, 10**6)
    n = _n(level, 500, 2000)
    ks = np.arange(6, 13)
    comp, bene = [], []
    for k in ks:
        ell = int(2**k)
        cfg = PenaltyConfig(M=0.5, ell=ell, gamma=1.5, eta=0.5)
        params = PolymerParams(1.0, 0.0, ell, law, env)
        res = tilted_event_mc(params, cfg, 0, ell, n, 31, workers)
        comp.append(res.complement)
        if res.n_a_outside_block_event or res.n_b_outside_a:
            return CheckResult("ell-trend", False, f"event inclusion violated at ell={ell}")
        if k <= 9:
            bene.append(penalized_block_mc(params, cfg, 1, ell, n, 37, workers).mean)
    y = np.array([c.mean for c in comp])
    se = np.array([c.stderr for c in comp])
    c = (ks - ks.mean()) / np.sum((ks - ks.mean()) ** 2)
    slope, slope_se = float(c @ y), float(np.sqrt(c**2 @ se**2))
    steps_ok = all(b.mean - a.mean <= 3 * math.hypot(a.stderr, b.stderr)
                   for a, b in zip(comp, comp[1:]))
    ok = slope < -3 * slope_se and steps_ok
    return CheckResult("ell-trend", ok,
                       "beta=1, M=0.5: tilted no-peak probability over ell=2^6..2^12: "
                       + ", ".join(f"{v:.3f}" for v in y)
                       + f"; slope per doubling {slope:.4f} +- {slope_se:.4f}"
                       + "; penalized block value ell=2^6..2^9: "
                       + ", ".join(f"{b:.3f}" for b in bene))


CHECKS = [
    check_law_invariants, check_oracle_equivalence, check_renewal_asymptotics,
    check_exact_identities, check_inequalities, check_homogeneous, check_dual_peak,
    check_tilted_tail, check_moment_sums, check_l2_coupling, check_determinism,
]
FULL_ONLY = [check_ell_trend]
PARALLEL = {check_dual_peak, check_l2_coupling, check_ell_trend}


def verify(level: str = "fast", faults=(), only=None, workers: int = 1,
           progress=None) -> list[CheckResult]:
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    unknown = set(faults) - set(FAULTS)
    if unknown:
        raise ValueError(f"unknown fault {sorted(unknown)}; known: {FAULTS}")
    checks = CHECKS + (FULL_ONLY if level == "full" else [])
    results = []
    for fn in checks:
        if only and not any(o in fn.__name__.replace("_", "-") for o in only):
            continue
        t0 = time.perf_counter()
        kw = {"workers": workers} if fn in PARALLEL else {}
        try:
            res = fn(level, tuple(faults), **kw)
        except Exception as exc:  # a crashing check is a failing check
            name = fn.__name__.removeprefix("check_").replace("_", "-")
            res = CheckResult(name, False, f"error: {type(exc).__name__}: {exc}")
        res = CheckResult(res.name, res.passed, res.detail, time.perf_counter() - t0)
        results.append(res)
        if progress:
            progress(res)
    return results


def report_json(results: list[CheckResult]) -> str:
    return json.dumps({"passed": all(r.passed for r in results),
                       "checks": [asdict(r) for r in results]}, indent=2)
