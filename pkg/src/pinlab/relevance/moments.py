"""
Renewal moment identities and second-moment statistics used for the Y count.

``delta_i`` is the indicator of i in tau; ``delta_{i,j}`` of {i, i+j} in tau and
``delta_{i,j,k}`` of {i, i+j, i+j+k} in tau.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..mc import Estimate, replica_rng, run_replicas
from ..renewal import InterArrivalLaw, enumerate_occupancy, renewal_mass, sample_path
from .tilted import r_alpha_quarter

MAX_EXACT = 14


@dataclass(frozen=True)
class PairMarginalReport:
    pair_error: float
    triple_error: float


def pair_marginal_check(law: InterArrivalLaw, r: int) -> PairMarginalReport:
    """Max deviation of E[delta_{i,j}] from u(i)u(j) (and the triple version), i+j(+k) <= r."""
    if r > MAX_EXACT:
        raise DomainError(f"exact enumeration needs r <= {MAX_EXACT}")
    occ, prob = enumerate_occupancy(law, r, pinned=False)
    u = renewal_mass(law, r).u
    x = occ.astype(float)
    second = x.T @ (prob[:, None] * x)
    pair = 0.0
    for i in range(1, r):
        for j in range(1, r - i + 1):
            pair = max(pair, abs(second[i, i + j] - u[i] * u[j]))
    triple = 0.0
    for i in range(1, r - 1):
        third = x.T @ ((prob * x[:, i])[:, None] * x)
        for j in range(1, r - i):
            for k in range(1, r - i - j + 1):
                triple = max(triple, abs(third[i + j, i + j + k] - u[i] * u[j] * u[k]))
    return PairMarginalReport(pair, triple)


def exact_moment_sums(law: InterArrivalLaw, r: int):
    """(S1, S3a, S3b): expectations of the Y-variance sums, computed through u."""
    a = law.alpha
    J = r_alpha_quarter(r, a)
    u = renewal_mass(law, max(r, J, 1)).u
    su = u[1:r + 1].sum()
    j = np.arange(1, J + 1)
    s1 = su * np.sum(u[j] * j ** -a)
    s3a = 0.0
    for jj in range(1, J + 1):
        k = np.arange(jj + 1, J + 1)
        s3a += np.sum(u[jj] * u[k - jj] * jj ** (-a / 2) * k.astype(float) ** -a)
    jg, kg = np.meshgrid(j, j, indexing="ij")
    s3b = np.sum(u[jg] * u[kg] * (jg * kg * np.maximum(jg, kg)).astype(float) ** (-a / 2))
    return float(s1), float(su * s3a), float(su * s3b)


def x_statistics(occ: np.ndarray, r: int, alpha: float, u: np.ndarray):
    """(X1, X2) for one occupancy vector covering 0..r + r^{alpha/4}."""
    J = r_alpha_quarter(r, alpha)
    norm = np.sum(np.arange(1, J + 1, dtype=float) ** -alpha * u[1:J + 1])
    x1 = occ[1:r + 1].sum() * r ** -alpha
    s = 0.0
    for j in range(1, J + 1):
        s += j ** -alpha * np.sum(occ[1:r + 1] & occ[1 + j:r + 1 + j])
    return float(x1), float(s * r ** -alpha / norm)


def _x_chunk(law, r, master_seed, start, stop):
    J = r_alpha_quarter(r, law.alpha)
    u = renewal_mass(law, max(J, 1)).u
    out = np.empty(stop - start)
    for k, i in enumerate(range(start, stop)):
        occ = sample_path(law, r + J, replica_rng(master_seed, i)).occupancy()
        x1, x2 = x_statistics(occ, r, law.alpha, u)
        out[k] = (x1 - x2) ** 2
    return out


def x_discrepancy_mc(law: InterArrivalLaw, r: int, n_samples: int, master_seed: int,
                     workers: int = 1) -> Estimate:
    """Monte Carlo E[(X1_r - X2_r)^2] over free renewal paths."""
    if r < 2:
        raise DomainError("r must be >= 2")
    fn = functools.partial(_x_chunk, law, r, master_seed)
    return Estimate.from_samples(run_replicas(fn, n_samples, workers))


@dataclass(frozen=True)
class OrthogonalityReport:
    max_separated: float     # max |E[U_i1 U_i2]| over |i1 - i2| >= r^{alpha/4}
    max_diag_ratio: float    # max E[U_i^2] / (r^{alpha/2} i^{alpha-1})
    diag_bound_ok: bool      # E[U_i^2] <= r^{alpha/2} u(i)


def u_orthogonality_check(law: InterArrivalLaw, r: int) -> OrthogonalityReport:
    a = law.alpha
    J = r_alpha_quarter(r, a)
    H = r + J
    if H > MAX_EXACT:
        raise DomainError(f"r + r^(alpha/4) = {H} exceeds {MAX_EXACT}")
    occ, prob = enumerate_occupancy(law, H, pinned=False)
    u = renewal_mass(law, H).u
    x = occ.astype(float)
    w = np.arange(1, J + 1, dtype=float) ** -a
    U = np.zeros((len(prob), r + 1))
    for i in range(1, r + 1):
        U[:, i] = x[:, i] * ((x[:, i + 1:i + J + 1] - u[1:J + 1]) @ w)
    cov = U.T @ (prob[:, None] * U)
    sep = 0.0
    for i1 in range(1, r + 1):
        for i2 in range(i1 + J, r + 1):
            sep = max(sep, abs(cov[i1, i2]))
    i = np.arange(1, r + 1)
    diag = np.diag(cov)[1:]
    ratio = float(np.max(diag / (r ** (a / 2) * i.astype(float) ** (a - 1))))
    ok = bool(np.all(diag <= r ** (a / 2) * u[1:r + 1] * (1 + 1e-12)))
    return OrthogonalityReport(float(sep), ratio, ok)


def conditioning_constant(law: InterArrivalLaw, N: int) -> float:
    """Smallest C with E[F | N in tau] <= C E[F] for all F of tau on [0, N/2].

    It is the largest likelihood ratio over atoms (patterns of tau on [0, N/2]);
    the ratio only depends on the last contact of the pattern.
    """
    if N < 2 or N > 2 * MAX_EXACT:
        raise DomainError(f"N must lie in 2..{2 * MAX_EXACT}")
    half = N // 2
    u = renewal_mass(law, N).u
    occ, prob = enumerate_occupancy(law, half, pinned=False)
    best = 0.0
    for last in np.unique([np.flatnonzero(row)[-1] for row in occ]):
        m = np.arange(half - last + 1, N - last + 1)
        joint = np.sum(law.pmf(m) * u[N - last - m])
        ratio = joint / (float(law.survival(np.array([half - last]))[0]) * u[N])
        best = max(best, float(ratio))
    return best
