import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize, stats

from pinlab.disorder import (TiltedLaw, env_tail, make_env_law, sample_env, sample_tilted,
                             tilted_cdf, tilted_tail)
from pinlab.errors import DomainError
from pinlab.relevance import PenaltyConfig, v_threshold


@pytest.fixture(scope="module")
def law():
    return make_env_law(1.5, 0.5)


def density(law, x):
    """Base density, written from scratch: Y = x/c + mu is Pareto(gamma)."""
    y = x / law.c + law.gamma / (law.gamma - 1)
    return np.where(y >= 1, law.gamma * y ** (-law.gamma - 1) / law.c, 0.0)


def test_constants(law):
    assert law.c == pytest.approx(0.25)
    assert law.c_p == pytest.approx(0.25**1.5)
    assert law.median() == pytest.approx(0.25 * (2 ** (2 / 3) - 3), rel=1e-12)
    assert law.median() == pytest.approx(-0.3532, abs=1e-4)
    # median by numeric inversion of the CDF
    assert optimize.brentq(lambda x: law.cdf(x) - 0.5, -0.5, 5) == pytest.approx(law.median(), abs=1e-12)


@pytest.mark.parametrize("gamma, a", [(1.0, 0.5), (2.0, 0.5), (1.5, 0.0), (1.5, 1.0)])
def test_domain(gamma, a):
    with pytest.raises(DomainError):
        make_env_law(gamma, a)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@settings(max_examples=25, deadline=None)
@given(gamma=st.floats(1.05, 1.95), a=st.floats(0.05, 0.95))
def test_support_and_mean(gamma, a):
    law = make_env_law(gamma, a)
    assert env_tail(law, -a) == 1.0
    assert env_tail(law, -a - 1) == 1.0
    # E[omega] = c (E[Y] - mu) with E[Y] = gamma / (gamma - 1); integrate in u = 1/y
    mean, _ = integrate.quad(lambda u: law.from_pareto(1 / u) * gamma * u ** (gamma - 1), 0, 1)
    assert abs(mean) < 1e-8


def test_tail_at_pareto_two(law):
    g = law.gamma
    assert env_tail(law, law.c * (2 - g / (g - 1))) == pytest.approx(2**-g, rel=1e-14)


def test_tail_constant(law):
    x = 1e4
    assert abs(env_tail(law, x) * x**1.5 / law.c_p - 1) < 0.01


def test_tail_matches_quadrature(law):
    grid = np.linspace(-0.5, 20, 100)
    for x in grid:
        q, _ = integrate.quad(lambda t: density(law, t), x, np.inf, epsabs=1e-13, epsrel=1e-12)
        assert env_tail(law, x) == pytest.approx(q, abs=1e-10)


def test_samples_support_and_determinism(law):
    s = sample_env(law, 10**6, 3)
    assert s.omega.min() >= -0.5
    assert np.array_equal(s.omega, sample_env(law, 10**6, 3).omega)
    assert not np.array_equal(s.omega[:10], sample_env(law, 10, 4).omega)


def test_ks_distance(law):
    x = sample_env(law, 10**5, 9).omega
    res = stats.kstest(x, law.cdf)
    assert res.statistic < 1.63 / math.sqrt(10**5)


def test_trimmed_mean(law):
    # the variance is infinite, so compare a 0.1% two-sided trimmed mean with its exact value
    x = sample_env(law, 10**7, 11).omega
    lo, hi = law.quantile(0.001), law.quantile(0.999)
    num, _ = integrate.quad(lambda t: t * density(law, t), lo, hi, limit=200)
    oracle = num / 0.998
    assert stats.trim_mean(x, 0.001) == pytest.approx(oracle, abs=1e-2)


# -- tilted law ---------------------------------------------------------------

def test_tilted_cdf_endpoints(law):
    assert tilted_cdf(law, 0.7, -0.5) == pytest.approx(0.0, abs=1e-15)
    assert tilted_cdf(law, 0.7, 1e12) == pytest.approx(1.0, abs=1e-5)
    assert tilted_cdf(law, 0.7, np.inf) == 1.0


def test_tilted_beta_zero_is_base(law):
    x = np.linspace(-0.5, 50, 200)
    assert np.allclose(tilted_cdf(law, 0.0, x), law.cdf(x), atol=1e-15)


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0])
def test_tilted_cdf_matches_quadrature(law, beta):
    for x in np.linspace(-0.5, 20, 100):
        q, _ = integrate.quad(lambda t: (1 + beta * t) * density(law, t), -0.5, x,
                              epsabs=1e-13, epsrel=1e-12)
        assert tilted_cdf(law, beta, x) == pytest.approx(q, abs=1e-10)


def test_tilted_density_ratio_positive(law):
    t = TiltedLaw(law, 1.0)
    x = np.linspace(-0.5, 100, 50)
    assert np.all(t.density_ratio(x) >= 1 - 1.0 * 0.5)


def test_tilted_sampler_ks(law):
    t = TiltedLaw(law, 0.8)
    x = t.sample(np.random.default_rng(0), 10**5)
    assert x.min() >= -0.5
    assert stats.kstest(x, t.cdf).pvalue > 0.001


def test_tilted_histogram_ratio(law):
    n = 10**6
    beta = 0.8
    rng = np.random.default_rng(1)
    tilted = sample_tilted(law, beta, rng, n)
    base = sample_env(law, n, 2).omega
    edges = np.linspace(-0.5, 10, 15)
    ht, _ = np.histogram(tilted, edges)
    hb, _ = np.histogram(base, edges)
    # exact per-bucket ratio: the mean of (1 + beta x) over the bucket under P
    exact = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        num = tilted_cdf(law, beta, hi) - tilted_cdf(law, beta, lo)
        den = law.cdf(hi) - law.cdf(lo)
        exact.append(num / den)
    exact = np.array(exact)
    for (lo, hi), r in zip(zip(edges[:-1], edges[1:]), exact):
        num, _ = integrate.quad(lambda t: (1 + beta * t) * density(law, t), lo, hi)
        den, _ = integrate.quad(lambda t: density(law, t), lo, hi)
        assert r == pytest.approx(num / den, rel=1e-9)
    keep = hb > 2000
    assert np.all(np.abs(ht[keep] / hb[keep] / exact[keep] - 1) < 0.05)


def test_tiny_tilt_matches_base(law):
    x = sample_tilted(law, 1e-12, np.random.default_rng(3), 10**5)
    assert stats.kstest(x, law.cdf).pvalue > 0.001


def test_scalar_draw(law):
    v = sample_tilted(law, 0.5, np.random.default_rng(4))
    assert isinstance(v, float) and v >= -0.5


def test_tilted_running_mean_grows(law):
    x = sample_tilted(law, 1.0, np.random.default_rng(5), 10**6)
    running = np.cumsum(x) / np.arange(1, len(x) + 1)
    checkpoints = running[[10**3 - 1, 10**5 - 1, 10**6 - 1]]
    assert checkpoints[-1] > 5
    assert checkpoints[-1] > checkpoints[0]


def test_tilted_tail_slope(law):
    cfg = PenaltyConfig(M=1.0, ell=1024, gamma=1.5)
    n = np.arange(1, 1001)
    slope = np.polyfit(np.log(n), np.log(tilted_tail(law, 0.5, v_threshold(cfg, n))), 1)[0]
    assert abs(slope / (-law.marginal_alpha / 2) - 1) < 0.1


def test_tilted_tail_sandwich(law):
    cfg = PenaltyConfig(M=1.0, ell=256, gamma=1.5)
    beta = 0.3
    n = np.arange(1, 10**4 + 1)
    scale = beta * (cfg.ell * math.log(cfg.ell) * n) ** (-law.marginal_alpha / 2)
    ratio = tilted_tail(law, beta, v_threshold(cfg, n)) / scale
    assert ratio.max() / ratio.min() < 2
