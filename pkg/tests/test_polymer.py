import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import logsumexp

from pinlab.disorder import make_env_law, sample_env
from pinlab.errors import DomainError
from pinlab.polymer import (PolymerParams, contact_profile, critical_point_scan,
                            forward_partition, homogeneous_free_energy, homogeneous_g,
                            homogeneous_log_partition, homogeneous_small_h, log_partition_samples,
                            quenched_free_energy_mc, window_partition)
from pinlab.renewal import enumerate_occupancy, make_zeta_law, renewal_mass

ENV = make_env_law(1.5, 0.5)
LAW = make_zeta_law(0.5, 10**6)
LAW3 = make_zeta_law(1 / 3, 10**6)


def params(beta=0.5, h=0.0, N=12, law=LAW):
    return PolymerParams(beta, h, N, law, ENV)


def enumerated_log_z(p, omega):
    occ, prob = enumerate_occupancy(p.law, p.N, pinned=True)
    logw = p.h + np.log1p(p.beta * omega[:p.N])
    return logsumexp(np.log(prob) + occ[:, 1:].astype(float) @ logw)


def enumerated_profile(p, omega):
    occ, prob = enumerate_occupancy(p.law, p.N, pinned=True)
    logw = p.h + np.log1p(p.beta * omega[:p.N])
    lw = np.log(prob) + occ[:, 1:].astype(float) @ logw
    w = np.exp(lw - logsumexp(lw))
    return w @ occ[:, 1:]


# -- partition function -------------------------------------------------------

def test_one_site():
    omega = np.array([0.7])
    p = params(beta=0.4, h=0.3, N=1)
    z = math.exp(0.3) * (1 + 0.4 * 0.7) * LAW.head(1)[0]
    assert forward_partition(p, omega).log_z == pytest.approx(math.log(z), rel=1e-14)


def test_pure_model_is_renewal_mass():
    u = renewal_mass(LAW, 50).u
    t = forward_partition(params(beta=0.0, h=0.0, N=50), np.zeros(50))
    assert np.allclose(np.exp(t.log_z_fwd), u, rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(beta=st.floats(0, 1), h=st.floats(-2, 2), N=st.integers(1, 14), seed=st.integers(0, 10**6),
       which=st.sampled_from([0, 1, 2]))
def test_forward_matches_enumeration(beta, h, N, seed, which):
    law = [LAW, LAW3, make_zeta_law(0.8, 4)][which]
    p = params(beta, h, N, law)
    omega = sample_env(ENV, N, seed).omega
    got = forward_partition(p, omega).log_z
    assert abs(math.expm1(got - enumerated_log_z(p, omega))) <= 1e-10


def test_table_shape_and_start():
    t = forward_partition(params(N=30), sample_env(ENV, 30, 0))
    assert len(t.log_z_fwd) == 31 and len(t.log_z_bwd) == 31
    assert t.log_z_fwd[0] == 0.0
    assert np.all(np.isfinite(t.log_z_fwd))


def test_nonpositive_weight_rejected():
    # a law whose support reaches below -1/beta cannot be built through PolymerParams
    with pytest.raises(DomainError):
        forward_partition(params(beta=1.0, N=3), np.array([0.1, -1.0, 0.2]))


def test_short_environment_rejected():
    with pytest.raises(DomainError):
        forward_partition(params(N=10), np.zeros(5))


def test_params_validation():
    with pytest.raises(DomainError):
        params(beta=1.5)
    with pytest.raises(DomainError):
        params(N=0)


# -- windows ------------------------------------------------------------------

def test_window_pure_is_one():
    p = params(beta=0.0, h=0.0, N=20)
    for a, b in [(0, 5), (3, 20), (7, 8)]:
        assert window_partition(p, np.zeros(20), a, b) == pytest.approx(0.0, abs=1e-13)


def test_window_one_step():
    # both endpoints carry weight; the origin does not
    omega = np.array([0.3, -0.2, 1.5])
    p = params(beta=0.6, h=0.1, N=3)
    w = lambda n: math.exp(0.1) * (1 + 0.6 * omega[n - 1])  # noqa: E731
    assert math.exp(window_partition(p, omega, 2, 3)) == pytest.approx(w(2) * w(3), rel=1e-13)
    assert math.exp(window_partition(p, omega, 0, 1)) == pytest.approx(w(1), rel=1e-13)


def test_window_matches_enumeration():
    rng = np.random.default_rng(4)
    p = params(beta=0.7, h=-0.2, N=14)
    omega = sample_env(ENV, 14, 8).omega
    for _ in range(10):
        a = int(rng.integers(0, 10))
        b = int(rng.integers(a + 1, 15))
        sub = p.replace(N=b - a)
        lz = enumerated_log_z(sub, omega[a:b])
        if a >= 1:
            lz += p.h + math.log1p(p.beta * omega[a - 1])
        lz -= math.log(renewal_mass(LAW, b - a).u[b - a])
        assert window_partition(p, omega, a, b) == pytest.approx(lz, abs=1e-12)


def test_window_mean_is_one():
    p = params(beta=0.3, h=0.0, N=20)
    vals = np.array([math.exp(window_partition(p, sample_env(ENV, 20, s).omega, 4, 20))
                     for s in range(20000)])
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - 1) <= 3 * se


def test_window_bad_range():
    with pytest.raises(DomainError):
        window_partition(params(N=10), np.zeros(10), 5, 5)


# -- contact profile ----------------------------------------------------------

def test_profile_endpoint_and_pure_bridge():
    N = 40
    prof = contact_profile(params(beta=0.0, N=N), np.zeros(N)).profile
    u = renewal_mass(LAW, N).u
    n = np.arange(1, N + 1)
    assert prof[-1] == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(prof, u[n] * u[N - n] / u[N], rtol=1e-11)


@pytest.mark.parametrize("seed", range(5))
def test_profile_matches_enumeration(seed):
    p = params(beta=0.8, h=0.2, N=12, law=LAW3)
    omega = sample_env(ENV, 12, seed).omega
    assert np.allclose(contact_profile(p, omega).profile, enumerated_profile(p, omega),
                       atol=1e-10, rtol=0)


def test_profile_is_derivative():
    p = params(beta=0.5, h=0.05, N=200)
    omega = sample_env(ENV, 200, 3).omega
    eps = 1e-4
    fd = (forward_partition(p.replace(h=0.05 + eps), omega).log_z
          - forward_partition(p.replace(h=0.05 - eps), omega).log_z) / (2 * eps)
    assert contact_profile(p, omega).expected_contacts == pytest.approx(fd, rel=1e-4)


# -- homogeneous model --------------------------------------------------------

def test_g_values():
    assert homogeneous_g(LAW, 0.0) == pytest.approx(0.0, abs=1e-14)
    assert homogeneous_g(LAW, 1.0) > homogeneous_g(LAW, 0.5) > 0
    k1 = LAW.head(1)[0]
    assert abs(homogeneous_g(LAW, 50.0) + math.log(k1) - 50.0) <= 1e-10
    with pytest.raises(DomainError):
        homogeneous_g(LAW, -0.1)


def test_g_oracle_direct_sum():
    law = make_zeta_law(0.5, 1000)
    n = np.arange(1, 1001)
    for x in (0.01, 0.3, 2.0):
        direct = -math.log(np.sum(np.exp(-n * x) * law.head(1000)))
        assert homogeneous_g(law, x) == pytest.approx(direct, rel=1e-13)


def test_g_lazy_tail_against_explicit():
    # explicit table up to 2^22 against the lazy-tail representation of the same law
    from pinlab.renewal import make_zeta_law as mk
    lazy = mk(0.5, 1 << 22, head=1 << 12)
    full = mk(0.5, 1 << 22)
    for x in (1e-7, 1e-4, 1e-2):
        assert homogeneous_g(lazy, x) == pytest.approx(homogeneous_g(full, x), rel=1e-9)


def test_free_energy_inverse():
    assert homogeneous_free_energy(LAW, -0.3) == 0.0
    assert homogeneous_free_energy(LAW, 0.0) == 0.0
    for x in (0.1, 0.5, 1.0, 2.0):
        assert abs(homogeneous_free_energy(LAW, homogeneous_g(LAW, x)) - x) <= 1e-10


def test_small_h_asymptote():
    big = make_zeta_law(0.5, 10**14)
    ratio = homogeneous_free_energy(big, 1e-4) / homogeneous_small_h(big, 1e-4)
    assert 0.9 <= ratio <= 1.1


# -- Monte Carlo --------------------------------------------------------------

def test_pure_estimate_exact():
    p = params(beta=0.0, h=0.1, N=100)
    est = quenched_free_energy_mc(p, 10, 0)
    assert est.stderr == 0.0
    assert est.estimate == homogeneous_log_partition(LAW, 100, 0.1) / 100


def test_quenched_bounds():
    beta, h, N = 0.6, 0.02, 150
    p = params(beta, h, N, LAW3)
    est = quenched_free_energy_mc(p, 2000, 5)
    upper = homogeneous_log_partition(LAW3, N, h) / N
    lower = homogeneous_log_partition(LAW3, N, h + math.log(1 - ENV.a * beta)) / N
    assert est.estimate <= upper + 3 * est.stderr
    assert est.estimate >= lower - 3 * est.stderr


def test_annealed_identity_and_jensen():
    p = params(0.4, 0.0, 60, LAW3)
    lz = log_partition_samples(p, 10**4, 9)
    z = np.exp(lz)
    exact = math.exp(homogeneous_log_partition(LAW3, 60, 0.0))
    assert abs(z.mean() - exact) <= 3 * z.std(ddof=1) / math.sqrt(len(z))
    assert lz.mean() <= logsumexp(lz) - math.log(len(lz))


def test_deterministic_across_workers():
    p = params(0.5, 0.0, 40, LAW3)
    a = log_partition_samples(p, 700, 3, workers=1)
    b = log_partition_samples(p, 700, 3, workers=3)
    assert np.array_equal(a, b)
    assert np.array_equal(a[:300], log_partition_samples(p, 300, 3))


def test_too_few_samples():
    with pytest.raises(DomainError):
        quenched_free_energy_mc(params(), 1, 0)


def test_critical_scan():
    grid = [-0.02, 0.0, 0.02, 0.05, 0.1, 0.2]
    s0 = critical_point_scan(0.0, grid, 200, 256, 1)
    s8 = critical_point_scan(0.8, grid, 200, 256, 1)
    assert s0.crossing_h == 0.02
    assert s8.crossing_h is not None and s8.crossing_h > s0.crossing_h
    assert sum(r.crossed for r in s8.rows) == 1
    est = [r.estimate for r in s8.rows]
    se = [r.stderr for r in s8.rows]
    assert all(b >= a - 3 * max(sa, sb) for a, b, sa, sb in zip(est, est[1:], se, se[1:]))
    with pytest.raises(DomainError):
        critical_point_scan(0.0, [0.1, 0.0], 50, 10, 0)
