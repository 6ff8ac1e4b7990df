import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsprt.errors import ConfigError
from dsprt.models import (ErrorLevels, HypothesisModel, ModelKind, brownian_mean_period,
                          gaussian_abs_moment, h_function, llr_increment, local_error_levels,
                          sprt_kl_lower_bounds, sprt_performance_brownian, wald_thresholds)
from scipy import integrate, stats

mpmath.mp.dps = 40


def h_exact(x, y):
    x, y = mpmath.mpf(x), mpmath.mpf(y)
    return float(x * mpmath.log(x / (1 - y)) + (1 - x) * mpmath.log((1 - x) / y))


# ---------------------------------------------------------------- HypothesisModel

def test_gaussian_llr_of_observation():
    m = HypothesisModel.gaussian(1.0, 1.0)
    assert m.llr_of_observation(0.7) == pytest.approx(0.2, abs=1e-15)
    assert m.llr_of_observation(0.5) == 0.0


def test_llr_increment_matches_observation_form():
    m = HypothesisModel.gaussian(0.8, 0.3)
    for z in (-1.3, 0.0, 0.4, 2.2):
        xi1 = m.mu * m.h + math.sqrt(m.h) * z
        xi0 = math.sqrt(m.h) * z
        assert llr_increment(m, z, 1) == pytest.approx(m.llr_of_observation(xi1), abs=1e-14)
        assert llr_increment(m, z, 0) == pytest.approx(m.llr_of_observation(xi0), abs=1e-14)


def test_llr_increment_mirror_is_exact():
    m = HypothesisModel.brownian(1.3, 1e-3)
    for z in np.random.default_rng(1).standard_normal(50):
        assert llr_increment(m, -z, 0) == -llr_increment(m, z, 1)


def test_llr_increment_rejects_bad_truth():
    with pytest.raises(ValueError):
        llr_increment(HypothesisModel.gaussian(1, 1), 0.1, 2)


def test_model_validation():
    with pytest.raises(ConfigError):
        HypothesisModel.gaussian(1.0, 0.0)
    with pytest.raises(ConfigError):
        HypothesisModel.gaussian(float("nan"), 1.0)
    assert HypothesisModel("gaussian", 1.0, 1.0).kind is ModelKind.GAUSSIAN_SAMPLED


def test_h0_sample_mean_of_increment():
    m = HypothesisModel.gaussian(1.0, 0.1)
    z = np.random.default_rng(11).standard_normal(10**6)
    ell = llr_increment(m, z, 0)
    se = ell.std(ddof=1) / math.sqrt(ell.size)
    assert abs(ell.mean() - (-0.05)) < 4 * se


def test_increment_variance_is_mu2_h():
    m = HypothesisModel.gaussian(1.0, 3.0464)
    ell = llr_increment(m, np.random.default_rng(4).standard_normal(200_000), 1)
    # variance of a sample variance for a Gaussian: 2 sigma^4 / (n-1)
    se = math.sqrt(2 / (ell.size - 1)) * m.h
    assert abs(ell.var(ddof=1) - m.h) < 4 * se


# ---------------------------------------------------------------- closed forms

def test_h_function_values():
    assert h_function(0.5, 0.5) == 0.0
    assert h_function(0.01, 0.01) == pytest.approx(4.50322, abs=1e-5)
    assert h_function(0.01, 0.001) == pytest.approx(h_exact("0.01", "0.001"), rel=1e-13)
    assert h_function(0.001, 0.01) == pytest.approx(h_exact("0.001", "0.01"), rel=1e-13)


@pytest.mark.parametrize("x,y", [(0.0, 0.5), (0.5, 1.0), (-0.1, 0.2), (1.0, 0.3)])
def test_h_function_domain(x, y):
    with pytest.raises(ValueError):
        h_function(x, y)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
def test_h_function_nonnegative_below_diagonal(x, y):
    if x + y <= 1:
        assert h_function(x, y) >= -1e-12
    assert h_function(x, y) == pytest.approx(h_exact(x, y), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 0.999))
def test_h_function_zero_on_antidiagonal(x):
    assert abs(h_function(x, 1 - x)) < 1e-9


def test_wald_thresholds():
    a, b = wald_thresholds(ErrorLevels(0.01, 0.01))
    assert a == b == pytest.approx(math.log(99), abs=1e-12)
    assert math.log(99) == pytest.approx(4.59512, abs=1e-5)
    a, b = wald_thresholds(ErrorLevels(0.01, 0.001))
    assert a == pytest.approx(6.89770, abs=1e-5)
    assert b == pytest.approx(4.60417, abs=1e-5)


def test_wald_thresholds_monotone():
    grid = np.linspace(0.001, 0.3, 40)
    a_vals = [wald_thresholds(ErrorLevels(0.05, g))[0] for g in grid]
    b_vals = [wald_thresholds(ErrorLevels(g, 0.05))[1] for g in grid]
    assert np.all(np.diff(a_vals) < 0)
    assert np.all(np.diff(b_vals) < 0)


def test_error_levels_validation():
    with pytest.raises(ConfigError):
        ErrorLevels(0.0, 0.1)
    with pytest.raises(ConfigError):
        ErrorLevels(0.6, 0.5)


def test_sprt_performance_brownian():
    p = sprt_performance_brownian([1, 1], ErrorLevels(0.01, 0.01))
    assert p.e0_delay == pytest.approx(4.50322, abs=1e-5)
    assert p.e1_delay == pytest.approx(4.50322, abs=1e-5)
    p1 = sprt_performance_brownian([1], ErrorLevels(0.01, 0.01))
    assert p1.e0_delay == pytest.approx(2 * h_exact("0.01", "0.01"), rel=1e-12)
    assert p1.e0_delay == pytest.approx(9.00645, abs=5e-5)  # quoted to five decimals
    half = sprt_performance_brownian([0.3, 2.0], ErrorLevels(0.5 - 1e-12, 0.5 - 1e-12))
    assert max(half.e0_delay, half.e1_delay, half.kl0, half.kl1) < 1e-9
    with pytest.raises(ValueError):
        sprt_performance_brownian([0, 0], ErrorLevels(0.01, 0.01))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.1, 3), min_size=1, max_size=4), st.floats(1e-5, 0.4),
       st.floats(1e-5, 0.4))
def test_kl_equals_rate_times_delay(mu, a, b):
    p = sprt_performance_brownian(mu, ErrorLevels(a, b))
    n2 = sum(m * m for m in mu)
    assert p.kl0 == pytest.approx(n2 / 2 * p.e0_delay, rel=1e-12)
    assert p.kl1 == pytest.approx(n2 / 2 * p.e1_delay, rel=1e-12)


def test_sprt_kl_lower_bounds():
    assert sprt_kl_lower_bounds(ErrorLevels(0.01, 0.01)) == pytest.approx((4.50322, 4.50322), abs=1e-5)
    k0, k1 = sprt_kl_lower_bounds(ErrorLevels(0.001, 0.01))
    assert k0 == pytest.approx(h_exact("0.001", "0.01"), rel=1e-12)
    assert k1 == pytest.approx(h_exact("0.01", "0.001"), rel=1e-12)


def test_local_error_levels_inverts_wald():
    for lo, hi in [(1.0, 1.0), (2.0, 0.5), (0.3, 3.0)]:
        lv = local_error_levels(lo, hi)
        a, b = wald_thresholds(lv)
        assert (a, b) == pytest.approx((lo, hi), rel=1e-12)


def test_brownian_mean_period():
    e0, e1 = brownian_mean_period(1.0, 2.0, 2.0)
    assert e0 == e1 == pytest.approx(3.0464, abs=5e-5)
    # exit time of drift-1/2, unit-variance Brownian motion from (-2, 2)
    d, L = 0.5, 2.0
    direct = L / d * math.tanh(d * L)
    assert e1 == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("mean,sd,p", [(0.5, 1.0, 2), (-0.05, math.sqrt(0.1), 2), (1.2, 0.7, 3),
                                       (0.0, 1.0, 1), (-2.0, 0.5, 2.5)])
def test_gaussian_abs_moment_quadrature(mean, sd, p):
    f = lambda x: abs(x) ** p * stats.norm.pdf(x, mean, sd)
    val = sum(integrate.quad(f, lo, hi, limit=200)[0] for lo, hi in ((-np.inf, 0.0), (0.0, np.inf)))
    assert gaussian_abs_moment(mean, sd, p) == pytest.approx(val, rel=1e-8)
