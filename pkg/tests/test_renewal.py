import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinlab.errors import DomainError
from pinlab.renewal import (InterArrivalLaw, RenewalMassTable, doney_constant, enumerate_occupancy,
                            enumerate_paths, make_zeta_law, renewal_mass, sample_bridge,
                            sample_path)


@pytest.fixture(scope="module")
def law():
    return make_zeta_law(0.5, 10**6)


def deterministic_law():
    return InterArrivalLaw.from_probs([1.0], alpha=0.5, c_k=1.0)


# -- construction -------------------------------------------------------------

def test_two_point_law():
    k = make_zeta_law(0.5, 2)
    assert k.pmf(np.array([1]))[0] == pytest.approx(1 / (1 + 2**-1.5), rel=1e-14)
    assert k.pmf(np.array([1]))[0] == pytest.approx(0.73880, abs=1e-5)


def test_k1_matches_partial_zeta_sum(law):
    # oracle: direct partial sum, independent of the law's internals
    m = np.arange(1, 10**6 + 1, dtype=float)
    z = np.sum(m**-1.5)
    assert law.pmf(np.array([1]))[0] == pytest.approx(1 / z, rel=1e-12)
    # the infinite sum gives 1/zeta(1.5) = 0.38279; truncation moves it by ~3e-4
    tail_bound = 2 / math.sqrt(10**6)
    assert 1 / (z + tail_bound) <= 0.38279 + 1e-5
    assert abs(law.pmf(np.array([1]))[0] - 0.3828) < 1e-3


@pytest.mark.parametrize("alpha", [0.1, 1 / 3, 0.5, 0.9])
def test_invariants_hold(alpha):
    law = make_zeta_law(alpha, 10**5)
    assert law.check_invariants() == []
    assert law.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert law.c_k == pytest.approx(1 / np.sum(np.arange(1, 10**5 + 1.0) ** -(1 + alpha)))


def test_lazy_tail_normalized():
    law = make_zeta_law(0.5, 10**12)
    assert law.power_tail
    assert law.check_invariants() == []
    assert law.survival(np.array([0]))[0] == 1.0
    assert law.survival(np.array([10**12]))[0] == 0.0
    # head and tail meet continuously
    n = np.array([law.head_len, law.head_len + 1])
    ratio = law.pmf(n) * n.astype(float) ** 1.5 / law.c_k
    assert np.allclose(ratio, 1.0, rtol=1e-12)


@pytest.mark.parametrize("alpha, n_max", [(0.0, 10), (1.0, 10), (-0.2, 10), (0.5, 1)])
def test_domain_errors(alpha, n_max):
    with pytest.raises(DomainError):
        make_zeta_law(alpha, n_max)


def test_corrupted_table_detected(law):
    probs = law.probs.copy()
    probs[3] *= 2
    bad = InterArrivalLaw(law.alpha, law.n_max, probs, law.c_k)
    problems = bad.check_invariants()
    assert any("normalization" in p for p in problems)
    assert any("monotonicity" in p for p in problems)


# -- renewal mass -------------------------------------------------------------

def test_small_u_values(law):
    K = law.head(2)
    u = renewal_mass(law, 2).u
    assert u[0] == 1
    assert u[1] == K[0]
    assert u[2] == pytest.approx(K[1] + K[0] ** 2, rel=1e-15)


def test_recursion_identity(law):
    t = renewal_mass(law, 300)
    K = law.head(300)
    for n in (1, 7, 150, 300):
        assert t.u[n] == pytest.approx(np.dot(K[:n], t.u[n - 1::-1][:n]), rel=1e-14)
    assert np.all((t.u > 0) & (t.u <= 1))


def test_mass_equals_enumeration(law):
    u = renewal_mass(law, 14).u
    for n in range(1, 15):
        _, prob = enumerate_occupancy(law, n, pinned=True)
        assert abs(prob.sum() - u[n]) <= 1e-12


def test_doney_constant(law):
    assert doney_constant(law) == pytest.approx(1 / (2 * math.pi * law.c_k), rel=1e-14)
    assert doney_constant(law) == pytest.approx(0.4157, abs=1e-3)
    assert doney_constant(make_zeta_law(1e-6, 100)) < 1e-4
    assert doney_constant(make_zeta_law(1 - 1e-6, 100)) < 1e-4


def test_u_scaling_settles():
    # with a horizon far beyond N the truncation does not bend u
    law = make_zeta_law(0.5, 10**12)
    N = 10**5
    u = renewal_mass(law, N).u
    n = np.arange(N // 2, N + 1)
    s = u[n] * (n + 1.0) ** 0.5
    assert s.max() / s.min() - 1 < 0.02


# -- sampling -----------------------------------------------------------------

def test_single_step_law(law):
    rng = np.random.default_rng(0)
    hits = [len(sample_path(law, 1, rng).contacts) == 2 for _ in range(20000)]
    p = law.pmf(np.array([1]))[0]
    se = math.sqrt(p * (1 - p) / 20000)
    assert abs(np.mean(hits) - p) < 4 * se


def test_deterministic_jumps():
    path = sample_path(deterministic_law(), 7, 3)
    assert list(path.contacts) == list(range(8))
    assert path.pinned


def test_free_path_marginals(law):
    rng = np.random.default_rng(1)
    n = 10**5
    occ = np.zeros(51)
    for _ in range(n):
        occ += sample_path(law, 50, rng).occupancy()
    freq = occ / n
    u = renewal_mass(law, 50).u
    se = np.sqrt(u * (1 - u) / n)
    assert np.all(np.abs(freq[1:] - u[1:]) <= 3.5 * se[1:])


def test_path_gaps_in_range(law):
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = sample_path(law, 500, rng)
        gaps = np.diff(p.contacts)
        assert p.contacts[0] == 0 and np.all(gaps >= 1) and p.contacts[-1] <= 500
        assert p.pinned == (p.contacts[-1] == 500)


def test_tail_jumps_reach_horizon():
    law = make_zeta_law(0.5, 10**9)
    jumps = law.sample_jumps(np.random.default_rng(2), 10**5)
    assert jumps.max() > law.head_len
    assert jumps.max() <= 10**9
    # P[tau_1 > m] against the empirical frequency
    m = 10**6
    p = law.survival(np.array([m]))[0]
    assert abs(np.mean(jumps > m) - p) < 4 * math.sqrt(p / 10**5)


# -- bridges ------------------------------------------------------------------

def test_bridge_of_length_one(law):
    mass = renewal_mass(law, 5)
    assert list(sample_bridge(law, mass, 1, 0).contacts) == [0, 1]


def test_bridge_marginals(law):
    N, n = 100, 10**5
    mass = renewal_mass(law, N)
    rng = np.random.default_rng(7)
    occ = np.zeros(N + 1)
    for _ in range(n):
        path = sample_bridge(law, mass, N, rng)
        assert path.pinned and path.contacts[-1] == N
        occ += path.occupancy()
    u = mass.u
    exact = u * u[::-1] / u[N]
    se = np.sqrt(exact * (1 - exact) / n)
    inside = slice(1, N)
    assert np.all(np.abs(occ[inside] / n - exact[inside]) <= 4 * se[inside] + 1e-12)


def test_bridge_step_probabilities_sum_to_one(law):
    from pinlab.renewal import BridgeSampler
    s = BridgeSampler(law, renewal_mass(law, 60), 60)
    for rem in (1, 2, 17, 60):
        assert s.step_probs(rem).sum() == pytest.approx(1.0, abs=1e-13)


def test_bridge_needs_covering_table(law):
    with pytest.raises(DomainError):
        sample_bridge(law, renewal_mass(law, 5), 10, 0)


# -- enumeration --------------------------------------------------------------

def test_enumeration_n2(law):
    K = law.head(2)
    paths = enumerate_paths(law, 2, pinned=True)
    got = {tuple(p.contacts): q for p, q in paths}
    assert got == pytest.approx({(0, 2): K[1], (0, 1, 2): K[0] ** 2})


def test_enumeration_deterministic_law():
    assert len(enumerate_paths(deterministic_law(), 3, pinned=True)) == 1
    assert len(enumerate_paths(deterministic_law(), 3, pinned=False)) == 1


def test_enumeration_free_total(law):
    # free patterns on [0, N] are a partition of the whole space
    for N in (1, 5, 12):
        _, prob = enumerate_occupancy(law, N, pinned=False)
        assert prob.sum() == pytest.approx(1.0, abs=1e-12)


def test_enumeration_limit(law):
    with pytest.raises(DomainError):
        enumerate_paths(law, 17, pinned=True)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(0.05, 0.95), n_max=st.integers(2, 20), N=st.integers(1, 12))
def test_mass_matches_enumeration_property(alpha, n_max, N):
    law = make_zeta_law(alpha, n_max)
    _, prob = enumerate_occupancy(law, N, pinned=True)
    assert abs(prob.sum() - renewal_mass(law, N).u[N]) <= 1e-12


def test_mass_table_type(law):
    t = renewal_mass(law, 10)
    assert isinstance(t, RenewalMassTable) and t.N == 10 and t.law is law
