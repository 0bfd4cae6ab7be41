import math

import numpy as np
import pytest

from utils import Laguerre as laguerre
from utils import PhiMartingales as phi_family
from utils import ScalarFunction as functions
from utils.PhiMartingales import PhiMartingaleSpec
from utils.exceptions import IntegrabilityError, MonotonicityError

IDENTITY = PhiMartingaleSpec.build(functions.identity())


def test_antiderivative():
    grid = np.array([0.0, 0.5, 2.0, 3.0])
    np.testing.assert_allclose(phi_family.antiderivative(functions.identity())(grid), grid ** 2 / 2, atol=1e-13)
    step = phi_family.antiderivative(functions.step(1.0))
    np.testing.assert_allclose(step(grid), np.maximum(grid - 1, 0.0), atol=1e-13)


def test_spec_build():
    assert IDENTITY.name == "x"
    np.testing.assert_allclose(IDENTITY.hat(np.array([0.0, 1.0])), [1.0, 2.0], rtol=1e-12)
    assert IDENTITY.hat_defect(np.linspace(0.0, 4.0, 9)) < 1e-6
    with pytest.raises(IntegrabilityError):
        PhiMartingaleSpec.build(functions.ScalarFunction(lambda x: np.exp(2 * np.asarray(x)), name="exp(2x)"))


def test_m_phi_limits():
    # Z = 1 gives hat(A), Z = 0 gives phi(A)
    assert math.isclose(phi_family.m_phi(IDENTITY, 1.0, 0.7), 1.7, rel_tol=1e-12)
    assert math.isclose(phi_family.m_phi(IDENTITY, 0.0, 0.7), 0.7, rel_tol=1e-12)
    assert math.isclose(phi_family.terminal_value(IDENTITY, 0.7), 0.7)


@pytest.mark.parametrize("phi", [functions.constant(2.0), functions.identity(), functions.power(2),
                                 functions.exp_decay(), laguerre.laguerre_function(2)], ids=lambda phi: phi.name)
def test_two_closed_forms_agree(phi):
    spec = PhiMartingaleSpec.build(phi)
    z = np.array([0.0, 0.5, 1.0])
    a = np.array([0.3, 0.7, 1.5])
    np.testing.assert_allclose(phi_family.leminermee_value(spec, z, a), phi_family.m_phi(spec, z, a),
                               rtol=1e-9, atol=1e-9)


def test_values_at_l():
    assert phi_family.values_at_L(IDENTITY, 2.0) == pytest.approx((3.0, 2.0), abs=1e-12)


def test_corimport_residual():
    grid = np.linspace(0.0, 10.0, 201)
    assert phi_family.corimport_residual(PhiMartingaleSpec.build(functions.constant(5.0)), grid) < 1e-10
    assert phi_family.corimport_residual(IDENTITY, grid) == pytest.approx(1.0, abs=1e-10)
    assert phi_family.corimport_residual(PhiMartingaleSpec.build(functions.exp_decay()), grid) >= 0.4


def test_expected_values():
    values = phi_family.expected_values(IDENTITY)
    assert values.at_L == pytest.approx(2.0, abs=1e-9)
    assert values.at_infinity == pytest.approx(1.0, abs=1e-9)
    at_l, at_infinity = phi_family.sampled_expected_values(IDENTITY, 20000, np.random.default_rng(1))
    assert at_l.z_score(2.0) < 4
    assert at_infinity.z_score(1.0) < 4


@pytest.mark.parametrize("phi", laguerre.function_suite(), ids=lambda phi: phi.name)
def test_s1_gap_is_minus_first_coefficient(phi):
    spec = PhiMartingaleSpec.build(phi)
    assert abs(phi_family.s1_gap(spec) + phi_family.first_coefficient(spec)) < 1e-8


def test_laguerre_members():
    assert phi_family.s1_gap(PhiMartingaleSpec.build(laguerre.laguerre_function(1))) == pytest.approx(-1.0, abs=1e-9)
    for n in (2, 3, 4):
        assert abs(phi_family.s1_gap(PhiMartingaleSpec.build(laguerre.laguerre_function(n)))) < 1e-9


def test_supremum_of_identity():
    # M = Z + A for phi(x) = x; with A flat and Z touching 1 the running sup is A + 1
    z = np.array([1.0, 0.4, 1.0, 0.2, 0.6])
    a = np.array([0.0, 0.0, 0.5, 0.5, 0.5])
    np.testing.assert_allclose(phi_family.supremum_value(IDENTITY, z, a), [1.0, 1.0, 1.5, 1.5, 1.5])
    assert phi_family.supremum_defect(IDENTITY, z, a) == pytest.approx(0.0, abs=1e-12)


def test_supremum_needs_monotone_phi():
    spec = PhiMartingaleSpec.build(functions.exp_decay())
    with pytest.raises(MonotonicityError):
        phi_family.supremum_defect(spec, np.ones(3), np.zeros(3))


def test_path_gap_at_the_last_zero():
    a = np.array([0.0, 0.5, 2.0])
    # Z_L = 1: the whole spread hat - phi
    np.testing.assert_allclose(phi_family.path_gap(IDENTITY, np.ones(3), a), np.ones(3), rtol=1e-12)
    np.testing.assert_allclose(phi_family.path_gap(IDENTITY, np.zeros(3), a), 0.0, atol=1e-12)
    np.testing.assert_allclose(phi_family.path_gap(IDENTITY, np.full(3, 0.25), a), 0.25, rtol=1e-12)
    square = PhiMartingaleSpec.build(functions.power(2))
    # hat(x^2) - x^2 = 2x + 2
    np.testing.assert_allclose(phi_family.path_gap(square, np.ones(3), a), 2 * a + 2, rtol=1e-10)
