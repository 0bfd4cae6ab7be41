import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from utils import Laguerre as laguerre
from utils import ScalarFunction as functions
from utils.exceptions import DegreeOverflowError


def test_gauss_laguerre_integrates_monomials():
    rule = laguerre.QuadratureRule.gauss_laguerre(64)
    assert rule.order == 64
    assert rule.monomial_defect(20) < 1e-10


def test_weights_sum_to_one():
    rule = laguerre.QuadratureRule.gauss_laguerre(32)
    assert math.isclose(float(np.sum(rule.weights)), 1.0, rel_tol=1e-13)


@pytest.mark.parametrize("m, n", [(0, 0), (1, 1), (2, 5), (7, 7), (10, 3)])
def test_orthonormality(m, n):
    assert laguerre.orthonormality_defect(m, n) < 1e-10


@given(st.integers(min_value=0, max_value=20), st.floats(min_value=0.0, max_value=30.0))
@settings(max_examples=100, deadline=None)
def test_recurrence_matches_scipy(n, x):
    assert np.isclose(laguerre.laguerre_eval(n, x), special.eval_laguerre(n, x), rtol=1e-8, atol=1e-8)


def test_table_shape():
    x = np.linspace(0.0, 3.0, 7).reshape(7, 1)
    table = laguerre.laguerre_table(4, x)
    assert table.shape == (5, 7, 1)
    np.testing.assert_allclose(table[1], 1 - x)


def test_degree_cap():
    with pytest.raises(DegreeOverflowError):
        laguerre.laguerre_eval(10, 1.0, cap=5)
    with pytest.raises(ValueError):
        laguerre.laguerre_table(-1, 1.0)


def test_configured_cap_reaches_expansions():
    with pytest.raises(DegreeOverflowError):
        laguerre.expand(functions.identity(), 5, cap=4)
    with pytest.raises(DegreeOverflowError):
        laguerre.laguerre_function(5, cap=4)(1.0)
    expansion = laguerre.expand(functions.identity(), 4, cap=4)
    assert expansion.cap == 4
    np.testing.assert_allclose(expansion.synthesize([0.0, 2.0]), [0.0, 2.0], atol=1e-10)
    assert len(laguerre.function_suite(cap=4)) == len(laguerre.function_suite())
    # Degrees above the default cap are available when the configuration raises it
    wide = laguerre.expand(functions.exp_decay(), 70, cap=80)
    assert wide.degree == 70


def test_expansion_of_identity():
    # x = L_0 - L_1
    expansion = laguerre.expand(functions.identity(), 3)
    np.testing.assert_allclose(expansion.coefficients, [1.0, -1.0, 0.0, 0.0], atol=1e-12)
    assert abs(expansion.residual) < 1e-10
    assert expansion.l2_error(functions.identity()) < 1e-6


def test_step_function_integrated_exactly():
    value = laguerre.weighted_integral(functions.step(1.0), functions.step(1.0).breakpoints)
    assert math.isclose(value, math.exp(-1), rel_tol=1e-12)


def test_adaptive_integrate():
    assert math.isclose(laguerre.adaptive_integrate(lambda x: x ** 3), 6.0, rel_tol=1e-12)
    assert math.isclose(laguerre.adaptive_integrate(lambda x: np.exp(-x)), 0.5, rel_tol=1e-12)


def test_hat_closed_forms():
    grid = np.linspace(0.0, 4.0, 9)
    np.testing.assert_allclose(laguerre.hat_transform(functions.identity())(grid), grid + 1, rtol=1e-12)
    np.testing.assert_allclose(laguerre.hat_transform(functions.exp_decay())(grid), np.exp(-grid) / 2,
                               rtol=1e-10)
    step = laguerre.hat_transform(functions.step(1.0))
    assert math.isclose(float(step(0.5)), math.exp(-0.5), rel_tol=1e-10)
    assert math.isclose(float(step(2.0)), 1.0, rel_tol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_hat_of_laguerre(n):
    grid = np.linspace(0.0, 5.0, 11)
    hat = laguerre.hat_transform(laguerre.laguerre_function(n))
    expected = laguerre.laguerre_eval(n, grid) - laguerre.laguerre_eval(n - 1, grid)
    np.testing.assert_allclose(hat(grid), expected, atol=1e-10)


def test_hat_repeated_arguments():
    hat = laguerre.hat_transform(functions.power(2))
    x = np.array([[0.5, 0.5, 1.0], [1.0, 0.5, 2.0]])
    np.testing.assert_allclose(hat(x), x ** 2 + 2 * x + 2, rtol=1e-12)


@given(st.floats(min_value=-3.0, max_value=3.0), st.floats(min_value=-3.0, max_value=3.0))
@settings(max_examples=30, deadline=None)
def test_hat_is_linear(a, b):
    grid = np.linspace(0.0, 3.0, 7)
    combined = functions.identity().scaled(a) + functions.exp_decay().scaled(b)
    left = laguerre.hat_transform(combined)(grid)
    right = a * laguerre.hat_transform(functions.identity())(grid) + b * laguerre.hat_transform(
        functions.exp_decay())(grid)
    np.testing.assert_allclose(left, right, atol=1e-10)


@pytest.mark.parametrize("phi", [functions.identity(), functions.power(2), functions.exp_decay(),
                                 laguerre.laguerre_function(3)], ids=lambda phi: phi.name)
def test_hat_identity(phi):
    assert laguerre.hat_identity_defect(phi, np.linspace(0.0, 5.0, 26)) < 1e-6


def test_function_suite():
    names = [phi.name for phi in laguerre.function_suite()]
    assert names == ["const(1)", "const(5)", "x", "x^2", "exp(-x)", "L1", "L2", "L3", "L4", "1(x>1)"]
    assert all(phi.square_integrable for phi in laguerre.function_suite())
