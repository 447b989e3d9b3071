import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_theta
from rbmprop.core import (Coding, ModelShape, ShapeMismatchError, ThetaVector,
                          mean_statistic, statistic_table)
from rbmprop.diagnostics import (HullEstimateSpec, degeneracy_epsilon, diagnose,
                                 hull_distance, interpretability_gap, lrep,
                                 modal_set_mass, one_flip_sensitivity)
from rbmprop.presets import table1_theta

ZO = Coding.ZERO_ONE
TETRA = 1 / math.sqrt(3)


# -- hull distance --------------------------------------------------------------

def test_tetrahedron_oracle_value():
    assert oracles.exact_hull_distance([0, 0, 0], 1, 1, "pm1") == pytest.approx(TETRA, abs=1e-12)


@pytest.mark.parametrize("count", [1024, 4096])
def test_tetrahedron_sampled_estimate(count):
    est = hull_distance(np.zeros(3), ModelShape(1, 1),
                        HullEstimateSpec(count, refine=0))
    assert 0.5774 <= est <= 0.62


def test_tetrahedron_refined_estimate():
    est = hull_distance(np.zeros(3), ModelShape(1, 1), HullEstimateSpec(4096))
    assert TETRA - 1e-9 <= est <= 0.62


def test_vertex_gives_zero():
    s = ModelShape(2, 2)
    tab = statistic_table(s)
    for idx in (0, 5, 15):
        assert abs(hull_distance(tab[idx], s, HullEstimateSpec(64))) < 1e-12


def test_hull_upper_bound_and_bias_shape22():
    rng = np.random.default_rng(2024)
    s = ModelShape(2, 2)
    for _ in range(20):
        mu = mean_statistic(random_theta(s, rng))
        exact = oracles.exact_hull_distance(mu, 2, 2, "pm1")
        raw = hull_distance(mu, s, HullEstimateSpec(1024, refine=0))
        est = hull_distance(mu, s, HullEstimateSpec(1024))
        assert raw >= exact - 1e-9 and est >= exact - 1e-9
        assert est <= 1.10 * exact + 1e-9


def test_hull_deterministic_and_dimension_checked():
    s = ModelShape(2, 2)
    mu = mean_statistic(ThetaVector.zeros(s))
    spec = HullEstimateSpec(256, seed=9)
    assert hull_distance(mu, s, spec) == hull_distance(mu, s, spec)
    with pytest.raises(ShapeMismatchError):
        hull_distance(np.zeros(3), s, spec)


def test_hull_spec_validation():
    with pytest.raises(ValueError):
        HullEstimateSpec(0)


# -- epsilon ---------------------------------------------------------------------

def test_epsilon_values():
    assert degeneracy_epsilon(ModelShape(1, 1)) == pytest.approx(0.05, abs=1e-15)
    assert degeneracy_epsilon(3, 0.0) == 0.0
    assert degeneracy_epsilon(ModelShape(4, 4)) == pytest.approx((1 - 0.9 ** (3 / 24)) / 2, abs=1e-15)
    assert degeneracy_epsilon(ModelShape(4, 4)) == pytest.approx(0.00654, abs=5e-6)


@given(st.integers(1, 24), st.floats(0.001, 0.49))
def test_epsilon_solves_volume_equation(m, eps0):
    eps = degeneracy_epsilon(m, eps0)
    assert 1 - (1 - 2 * eps0) ** 3 == pytest.approx(1 - (1 - 2 * eps) ** m, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("bad", [-0.1, 0.5, 0.7])
def test_epsilon_range(bad):
    with pytest.raises(ValueError):
        degeneracy_epsilon(ModelShape(1, 1), bad)


# -- LREP, one-flip, modal mass --------------------------------------------------------

def test_lrep_examples():
    assert lrep(ThetaVector.zeros(ModelShape(3, 3))) == (0.0, 0.0)
    t = 0.8
    L, per = lrep(ThetaVector.from_flat(ModelShape(1, 1), [t, 0, 0]))
    assert L == pytest.approx(2 * t, abs=1e-12) and per == pytest.approx(2 * t, abs=1e-12)


def test_lrep_table1_against_oracle():
    th = table1_theta()
    _, _, marg = oracles.brute_force(th.flat, 4, 4, "pm1")
    L, per = lrep(th)
    assert L == pytest.approx(math.log(max(marg) / min(marg)), abs=1e-10)
    assert per == pytest.approx(L / 4, abs=1e-12)


def test_one_flip_examples():
    assert one_flip_sensitivity(ThetaVector.zeros(ModelShape(2, 3))) == 0.0
    assert one_flip_sensitivity(ThetaVector.from_flat(ModelShape(1, 1), [1.3, 0, 0])) == pytest.approx(2.6, abs=1e-12)


def test_one_flip_against_pair_scan():
    rng = np.random.default_rng(8)
    s = ModelShape(3, 2)
    th = random_theta(s, rng)
    _, _, marg = oracles.brute_force(th.flat, 3, 2, "pm1")
    best = max(math.log(marg[a] / marg[a ^ (1 << k)]) for a in range(8) for k in range(3))
    assert one_flip_sensitivity(th) == pytest.approx(best, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_proposition_one_property(nv, nh, seed):
    th = random_theta(ModelShape(nv, nh), np.random.default_rng(seed))
    assert one_flip_sensitivity(th) >= lrep(th)[1] - 1e-12


def test_modal_mass_examples():
    assert modal_set_mass(ThetaVector.zeros(ModelShape(2, 2)), 0.3) == 0.0
    got = modal_set_mass(ThetaVector.from_flat(ModelShape(1, 1), [5, 0, 0]), 0.5)
    assert got == pytest.approx(math.exp(10) / (1 + math.exp(10)), abs=1e-15)
    assert got == pytest.approx(0.99995, abs=1e-5)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2])
def test_modal_mass_eps_range(bad):
    with pytest.raises(ValueError):
        modal_set_mass(ThetaVector.zeros(ModelShape(1, 1)), bad)


# -- interpretability -------------------------------------------------------------------

def test_gap_zero_without_interactions():
    s = ModelShape(3, 2)
    th = ThetaVector.from_flat(s, np.r_[np.linspace(-1, 1, 5), np.zeros(6)])
    gap, gmax = interpretability_gap(th)
    np.testing.assert_array_equal(gap, 0.0)
    assert gmax == 0.0


@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4))
def test_gap_closed_form_zero_one(a, b, c):
    _, mu = oracles.closed_form_11_zero_one(a, b, c)
    _, mu0 = oracles.closed_form_11_zero_one(a, b, 0.0)
    gap, gmax = interpretability_gap(ThetaVector.from_flat(ModelShape(1, 1, ZO), [a, b, c]))
    np.testing.assert_allclose(gap, np.abs(np.subtract(mu, mu0)), atol=1e-10)
    assert gmax == pytest.approx(max(gap), abs=0)


def test_gap_table1_small():
    _, gmax = interpretability_gap(table1_theta())
    assert gmax < 0.02


# -- diagnose ---------------------------------------------------------------------------

def test_diagnose_examples():
    r = diagnose(ThetaVector.zeros(ModelShape(1, 1)))
    assert not r.near_degenerate and r.hull_distance > r.epsilon == pytest.approx(0.05)
    assert not diagnose(table1_theta()).near_degenerate
    s = ModelShape(2, 2)
    big = ThetaVector.from_flat(s, np.r_[np.zeros(4), np.full(4, 10.0)])
    assert diagnose(big).near_degenerate


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_report_invariants(nv, nh, seed):
    r = diagnose(random_theta(ModelShape(nv, nh), np.random.default_rng(seed)),
                 HullEstimateSpec(128))
    assert r.near_degenerate == (r.hull_distance < r.epsilon)
    assert r.delta_one_flip >= r.lrep_per_visible - 1e-12
    assert 0.0 <= r.modal_set_mass <= 1.0
    assert r.hull_distance >= 0 and r.lrep >= 0
