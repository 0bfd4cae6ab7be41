import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from utils import GammaForms as gamma_forms
from utils import ScalarFunction as functions
from utils.BrownianPaths import PathConfig, simulate_batch
from utils.GammaForms import ArcsineRule, theta

SQUARE = functions.power(2)


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 2.0, 3.0])
def test_theta_forms_agree(x):
    assert abs(theta(x) - theta.reference(x)) < 1e-12
    assert abs(theta.alternate(x) - theta(x)) < 1e-8


def test_theta_values():
    assert theta(0.0) == 1.0
    assert theta(-1.0) == theta(1.0)
    assert theta(10.0) < 1e-20


def test_arcsine_rule_moments():
    rule = ArcsineRule.build()
    assert math.isclose(float(np.sum(rule.weights)), 1.0, rel_tol=1e-13)
    assert math.isclose(rule.expectation(lambda z: z), 0.5, rel_tol=1e-12)
    assert math.isclose(rule.expectation(lambda z: z ** 2), 3 / 8, rel_tol=1e-12)
    split = ArcsineRule.build(64, (0.5,))
    assert math.isclose(split.expectation(lambda z: (z > 0.5).astype(float)), 0.5, rel_tol=1e-12)


def test_z_gamma():
    assert gamma_forms.z_gamma(0.0, 0.5) == 1.0
    np.testing.assert_allclose(gamma_forms.z_gamma(np.array([1.0, -1.0]), 0.75), theta(2.0))
    with pytest.raises(ValueError):
        gamma_forms.z_gamma(0.0, 1.0)


@given(st.floats(min_value=0.0, max_value=0.95), st.floats(min_value=-3.0, max_value=3.0))
@settings(max_examples=40, deadline=None)
def test_conditional_h_of_one_is_z(t, b):
    value = gamma_forms.conditional_h(functions.constant(1.0), t, b)
    assert abs(value - gamma_forms.z_gamma(b, t)) < 1e-8


@given(st.floats(min_value=0.0, max_value=0.99))
@settings(max_examples=40, deadline=None)
def test_n_h_at_gamma_closed_forms(gamma):
    assert abs(gamma_forms.n_h_at_gamma(functions.identity(), gamma) - (1 + gamma) / 2) < 1e-10
    expected = gamma ** 2 + gamma * (1 - gamma) + 3 / 8 * (1 - gamma) ** 2
    assert abs(gamma_forms.n_h_at_gamma(SQUARE, gamma) - expected) < 1e-10


def test_n_h_at_gamma_rejects_one():
    with pytest.raises(ValueError):
        gamma_forms.n_h_at_gamma(functions.identity(), np.array([0.5, 1.0]))


def test_h_martingale_of_a_constant():
    b = np.array([0.0, 0.3, 1.0])
    np.testing.assert_allclose(gamma_forms.h_martingale(functions.constant(1.0), 0.5, b, 0.2), 1.0, atol=1e-8)


def test_conditional_h_with_a_step():
    # h = 1_{u > 3/4} at t = 1/2 and B_t = 0: P[arcsine > 1/2] = 1/2
    value = gamma_forms.conditional_h(functions.step(0.75), 0.5, 0.0)
    assert abs(value - 0.5) < 1e-10


def test_odd_and_even_projections():
    grid = np.linspace(0.0, 0.99, 12)
    np.testing.assert_allclose(gamma_forms.conditional_f_given_gamma(SQUARE, grid), 2 * (1 - grid), rtol=1e-10)
    np.testing.assert_allclose(gamma_forms.conditional_f_given_gamma(functions.identity(), grid), 0.0, atol=1e-12)
    mixed = SQUARE + functions.power(3)
    np.testing.assert_allclose(gamma_forms.conditional_f_given_gamma(gamma_forms.even_projection(mixed), grid),
                               gamma_forms.conditional_f_given_gamma(SQUARE, grid), rtol=1e-10)


def test_gamma_kernel():
    kernel = gamma_forms.gamma_kernel(SQUARE)
    assert math.isclose(float(kernel(0.25)), 1.5, rel_tol=1e-10)


def test_heat_semigroup():
    b = np.array([0.0, 1.0, -2.0])
    np.testing.assert_allclose(gamma_forms.heat_semigroup(SQUARE, 0.5, b), b ** 2 + 0.5, rtol=1e-12)


@pytest.mark.parametrize("t, b", [(0.0, 0.0), (0.25, 0.5), (0.5, 1.0), (0.75, 2.0)])
def test_perp_discrepancy_for_constants(t, b):
    value = gamma_forms.m_f_perp(functions.constant(1.0), t, b, 0.0)
    assert abs(value.direct) < 1e-8
    assert abs((value.decomposed - value.direct) - (1 - 2 * theta(abs(b) / math.sqrt(1 - t)))) < 1e-6


def test_perp_starts_at_zero():
    assert abs(gamma_forms.m_f_perp(SQUARE, 0.0, 0.0, 0.0).direct) < 1e-6
    with pytest.raises(ValueError):
        gamma_forms.m_f_perp(SQUARE, 1.0, 0.0, 0.0)


def test_stopped_brownian_vanishes_at_last_zero():
    batch = simulate_batch(PathConfig(dt=1e-3, seed=8), range(200))
    outcome = gamma_forms.stopped_brownian_check(batch, 1.0)
    assert outcome.zero_fraction >= 0.99
    assert np.all(outcome.last_zero <= 1.0)
    stop = gamma_forms.stop_indices(batch, 1.0)
    assert np.all((stop >= 0) & (stop <= batch.steps))


def test_balayage_martingale_is_stopped():
    batch = simulate_batch(PathConfig(dt=1e-2, seed=2), range(20))
    stop = np.full(len(batch), 30)
    stopped = gamma_forms.balayage_martingale(batch, lambda g: np.ones_like(g), stop_index=stop)
    np.testing.assert_array_equal(stopped[:, 30:], np.repeat(batch.values[:, 30:31], batch.steps - 29, axis=1))
    np.testing.assert_array_equal(stopped[:, :31], batch.values[:, :31])


def test_imhof_checks():
    rng = np.random.default_rng(4)
    gamma = np.sin(np.pi * rng.random(4000) / 2) ** 2
    b1 = rng.choice([-1.0, 1.0], 4000) * np.sqrt(1 - gamma) * rng.rayleigh(size=4000)
    outcome = gamma_forms.imhof_checks(gamma, b1)
    assert outcome.ks.p_value > 0.001
    assert outcome.independence < 0.1
    assert outcome.second_moment.z_score(2.0) < 4
    assert set(outcome.as_dict()) == {"ks", "independence", "correlations", "second_moment"}
