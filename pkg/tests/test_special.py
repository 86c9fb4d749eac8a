import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from msnfa.special import (
    MILLS_SWITCH,
    TruncatedNormalSpec,
    mills_ratio_inv,
    norm_cdf,
    norm_log_cdf,
    norm_pdf,
    tn_first_two_moments,
    tn_moments,
)

mpmath.mp.dps = 50


def mp_mills_inv(x):
    x = mpmath.mpf(x)
    return float(mpmath.npdf(x) / mpmath.ncdf(x))


@pytest.mark.parametrize("x", [-40.0, -20.0, -8.5, -8.0, -7.9, -3.0, 0.0, 1.0, 5.0, 30.0])
def test_mills_ratio_inv_against_high_precision(x):
    assert mills_ratio_inv(x) == pytest.approx(mp_mills_inv(x), rel=1e-12)


def test_mills_ratio_at_zero():
    assert mills_ratio_inv(0.0) == pytest.approx(2 / np.sqrt(2 * np.pi), rel=1e-15)


def test_mills_ratio_continuous_across_switch():
    eps = 1e-12
    lo, hi = mills_ratio_inv(MILLS_SWITCH - eps), mills_ratio_inv(MILLS_SWITCH + eps)
    assert abs(lo - hi) / hi < 1e-12


def test_mills_ratio_deep_tail_is_finite_and_asymptotic():
    x = np.array([-1e3, -1e6, -1e150])
    r = mills_ratio_inv(x)
    assert np.all(np.isfinite(r))
    assert np.allclose(r, -x + 1 / (-x), rtol=1e-12)


def test_mills_ratio_shapes():
    assert np.ndim(mills_ratio_inv(0.3)) == 0
    assert mills_ratio_inv(np.zeros((2, 3))).shape == (2, 3)


@given(st.floats(-60, 60))
def test_mills_ratio_monotone_decreasing(x):
    assert mills_ratio_inv(x) >= mills_ratio_inv(x + 0.01) - 1e-12


def test_normal_helpers_match_scipy():
    x = np.linspace(-30, 10, 81)
    assert np.allclose(norm_pdf(x), stats.norm.pdf(x), rtol=1e-12, atol=0)
    assert np.allclose(norm_cdf(x), stats.norm.cdf(x), rtol=1e-13, atol=0)
    assert np.allclose(norm_log_cdf(x), stats.norm.logcdf(x), rtol=1e-13)


def test_standard_half_normal_moments():
    w1, w2 = tn_moments(TruncatedNormalSpec(0.0, 1.0), 2)
    assert w1 == pytest.approx(np.sqrt(2 / np.pi), abs=1e-15)
    assert w2 == pytest.approx(1.0, abs=1e-15)


def test_large_positive_mu_recovers_untruncated():
    w1, w2 = tn_moments(TruncatedNormalSpec(10.0, 1.0), 2)
    assert w1 == pytest.approx(10.0, abs=1e-12)
    assert w2 == pytest.approx(101.0, abs=1e-10)


def test_deep_negative_mu_stays_finite():
    w1, w2 = tn_moments(TruncatedNormalSpec(-40.0, 1.0), 2)
    assert np.isfinite(w1) and np.isfinite(w2)
    assert 0 < w1 < 1 / 40
    # exponential-like limit: E W^2 ~ 2 E(W)^2
    assert w2 == pytest.approx(2 * w1**2, rel=1e-2)


def test_invalid_specs():
    with pytest.raises(ValueError):
        TruncatedNormalSpec(0.0, 0.0)
    with pytest.raises(ValueError):
        tn_moments(TruncatedNormalSpec(0.0, 1.0), 0)


@given(st.floats(-5, 5), st.floats(0.2, 3.0))
def test_moments_against_quadrature(mu, sigma):
    spec = TruncatedNormalSpec(mu, sigma)
    m = tn_moments(spec, 4)
    tn = stats.truncnorm(-mu / sigma, np.inf, loc=mu, scale=sigma)
    for k in range(1, 5):
        ref, _ = integrate.quad(lambda w: w**k * tn.pdf(w), 0, np.inf, epsabs=1e-13, epsrel=1e-11)
        assert m[k - 1] == pytest.approx(ref, rel=1e-8, abs=1e-12)


@given(st.floats(-30, 30), st.floats(0.05, 10.0))
def test_moment_properties(mu, sigma):
    w1, w2 = tn_moments(TruncatedNormalSpec(mu, sigma), 2)
    assert w1 > 0
    assert w2 >= w1 * w1 * (1 - 1e-9)


def test_vectorised_moments_agree_with_scalar(rng):
    mu = rng.normal(scale=4, size=50)
    sigma = rng.uniform(0.1, 2, size=50)
    w1, w2 = tn_first_two_moments(mu, sigma)
    for k in range(50):
        ref = tn_moments(TruncatedNormalSpec(mu[k], sigma[k]), 2)
        assert w1[k] == pytest.approx(ref[0], rel=1e-13)
        assert w2[k] == pytest.approx(ref[1], rel=1e-12)
