import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from rbmprop.core import ModelShape
from rbmprop.mcmc import (ConstantSeriesError, acf, cell_probability_series,
                          default_block_len, ess_block_means,
                          summarize_posterior, total_variation)
from rbmprop.presets import table1_theta


def ar1(rho, M, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(M)
    x = np.empty(M)
    x[0] = e[0] / np.sqrt(1 - rho ** 2)
    for k in range(1, M):
        x[k] = rho * x[k - 1] + e[k]
    return x


# -- cell series -------------------------------------------------------------------

def test_series_constant_at_zero():
    s = ModelShape(3, 2)
    ser = cell_probability_series(np.zeros((5, s.dim)), s)
    np.testing.assert_allclose(ser, 1 / 8, atol=1e-15)


def test_series_rows_normalised_and_spot_checked():
    rng = np.random.default_rng(0)
    th = table1_theta()
    draws = th.flat + 0.3 * rng.standard_normal((20, th.shape.dim))
    ser = cell_probability_series(draws, th.shape)
    np.testing.assert_allclose(ser.sum(1), 1.0, atol=1e-10)
    _, _, marg = oracles.brute_force(draws[0], 4, 4, "pm1")
    np.testing.assert_allclose(ser[0], marg, atol=1e-10)


# -- ACF ---------------------------------------------------------------------------

def test_acf_white_noise():
    x = np.random.default_rng(1).standard_normal(10_000)
    r = acf(x, 20)
    assert r[0] == 1.0
    assert np.all(np.abs(r[1:]) < 0.05)


def test_acf_ar1():
    r = acf(ar1(0.8, 100_000, 2), 10)
    assert np.all(np.abs(r - 0.8 ** np.arange(11)) < 0.02)


def test_acf_constant_flagged():
    with pytest.raises(ConstantSeriesError):
        acf(np.full(50, 0.3), 5)


def test_acf_lag_too_long():
    with pytest.raises(ValueError):
        acf(np.arange(5.0), 5)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(12, 200), elements=st.floats(-1e3, 1e3)))
def test_acf_bounded(x):
    if np.ptp(x) == 0:
        return
    r = acf(x, 10)
    assert r[0] == pytest.approx(1.0)
    assert np.all(np.abs(r) <= 1 + 1e-12)


# -- ESS ---------------------------------------------------------------------------

def test_ess_unit_blocks():
    x = np.random.default_rng(3).standard_normal(777)
    e = ess_block_means(x, 1)
    assert e.m_eff == 777 and e.c_hat == e.sigma2


def test_ess_white_noise():
    x = np.random.default_rng(4).standard_normal(10_000)
    e = ess_block_means(x, 100)
    assert 7000 <= e.m_eff <= 13000


def test_ess_ar1():
    x = ar1(0.8, 100_000, 5)
    e = ess_block_means(x)
    assert e.block_len == 316
    assert abs(e.m_eff / e.M - 1 / 9) <= 0.3 / 9


def test_ess_block_means_against_direct_loop():
    x = np.random.default_rng(6).random(60)
    b = 7
    means = [x[j:j + b].mean() for j in range(60 - b + 1)]
    e = ess_block_means(x, b)
    assert e.c_hat == pytest.approx(b * np.var(means, ddof=1), rel=1e-12)
    assert e.m_eff == pytest.approx(60 * np.var(x, ddof=1) / e.c_hat, rel=1e-12)


def test_ess_errors_and_constant():
    with pytest.raises(ValueError):
        ess_block_means(np.arange(10.0), 11)
    e = ess_block_means(np.ones(40))
    assert e.constant and np.isnan(e.m_eff)
    assert default_block_len(1000) == 31


# -- summaries ------------------------------------------------------------------------

def test_tv_properties():
    p = np.array([0.2, 0.3, 0.5])
    assert total_variation(p, p) == 0.0
    assert total_variation([1, 0], [0, 1]) == 1.0


@given(st.lists(st.floats(0.01, 1), min_size=4, max_size=4),
       st.lists(st.floats(0.01, 1), min_size=4, max_size=4))
def test_tv_range(a, b):
    a, b = np.array(a) / sum(a), np.array(b) / sum(b)
    assert 0 <= total_variation(a, b) <= 1
    assert total_variation(a, b) == pytest.approx(total_variation(b, a))


def test_summary_at_truth():
    th = table1_theta()
    ser = cell_probability_series(np.tile(th.flat, (30, 1)), th.shape)
    s = summarize_posterior(ser, ser[0], ser[0])
    assert s["tv_post_true"] < 1e-12 and s["coverage"] == 16
    for c in s["cells"]:
        assert c["post_mean"] == pytest.approx(c["true"], abs=1e-15)


def test_summary_quantile_order():
    rng = np.random.default_rng(7)
    th = table1_theta()
    ser = cell_probability_series(th.flat + 0.2 * rng.standard_normal((200, 24)), th.shape)
    s = summarize_posterior(ser, ser.mean(0), ser.mean(0))
    for c in s["cells"]:
        assert c["q05"] <= c["post_mean"] <= c["q95"]


def test_summary_dimension_mismatch():
    with pytest.raises(ValueError):
        summarize_posterior(np.full((10, 4), 0.25), np.full(8, 1 / 8), np.full(4, 0.25))
