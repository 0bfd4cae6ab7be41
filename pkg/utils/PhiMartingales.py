import logging
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.polynomial import legendre
from numpy.random import Generator

from configuration.constants import (LOGGING_ROOT, QUADRATURE_ORDER, LEGENDRE_ORDER, FINITE_DIFFERENCE_STEP,
                                     DEGREE_CAP)
from utils.Laguerre import adaptive_integrate, expand, hat_identity_defect, hat_transform
from utils.ScalarFunction import ScalarFunction
from utils.Statistics import McEstimate
from utils.exceptions import IntegrabilityError, MonotonicityError

logger = logging.getLogger(f"{LOGGING_ROOT}.phi")


def antiderivative(phi: ScalarFunction) -> ScalarFunction:
    """
    Phi(x) = int_0^x phi(y) dy, by Gauss-Legendre on [0, x] split at the jumps of phi.
    """
    nodes, weights = legendre.leggauss(LEGENDRE_ORDER)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.size)
        for i, upper in enumerate(x.ravel().tolist()):
            points = [0.0, *(b for b in phi.breakpoints if 0 < b < upper), upper]
            total = 0.0
            for left, right in zip(points, points[1:]):
                half = (right - left) / 2
                total += half * float(phi(left + half * (nodes + 1)) @ weights)
            out[i] = total
        return out.reshape(x.shape)

    return ScalarFunction(evaluate, name=f"Phi({phi.name})", x_max=phi.x_max)


@dataclass(frozen=True, eq=False)
class PhiMartingaleSpec:
    """
    A function phi together with its hat transform and antiderivative, ready to build
    M^phi_t = Z_t hat(A_t) + (1 - Z_t) phi(A_t) for an honest time with Exp(1) distributed A_inf.
    """
    phi: ScalarFunction
    hat: ScalarFunction
    antiderivative: ScalarFunction

    @classmethod
    def build(cls, phi: ScalarFunction, order: int = QUADRATURE_ORDER) -> "PhiMartingaleSpec":
        """
        :raises IntegrabilityError: unless int exp(-x)|phi| and int exp(-x)|phi| x are finite
        """
        if not phi.absolutely_integrable or not phi.first_moment_integrable:
            raise IntegrabilityError(f"{phi.name} fails the integrability conditions of the phi family")
        return cls(phi=phi, hat=hat_transform(phi, order), antiderivative=antiderivative(phi))

    @property
    def name(self) -> str:
        return self.phi.name

    @cached_property
    def antiderivative_hat(self) -> ScalarFunction:
        return hat_transform(self.antiderivative)

    def hat_defect(self, grid, step: float = FINITE_DIFFERENCE_STEP) -> float:
        """max |hat - hat' - phi| over the grid"""
        return hat_identity_defect(self.phi, grid, step, hat=self.hat)


def m_phi(spec: PhiMartingaleSpec, z, a):
    """
    Z hat(A) + (1 - Z) phi(A), vectorized over matching z and a.
    """
    z = np.asarray(z, dtype=float)
    value = z * spec.hat(a) + (1 - z) * spec.phi(a)
    return float(value) if np.ndim(value) == 0 else value


def terminal_value(spec: PhiMartingaleSpec, a_inf):
    """M^phi at infinity, where Z has vanished: phi(A_inf)."""
    value = spec.phi(a_inf)
    return float(value) if np.ndim(value) == 0 else value


def path_gap(spec: PhiMartingaleSpec, z_l, a_inf):
    """
    M^phi_L - M^phi_inf path by path, from (Z, A) at the last zero L and A_inf = A_L.
    """
    return m_phi(spec, z_l, a_inf) - terminal_value(spec, a_inf)


def hat_tail(spec: PhiMartingaleSpec, z, a):
    """
    E[Phi(A_inf) | F_t], the phi family applied to the antiderivative.
    """
    z = np.asarray(z, dtype=float)
    value = z * spec.antiderivative_hat(a) + (1 - z) * spec.antiderivative(a)
    return float(value) if np.ndim(value) == 0 else value


def leminermee_value(spec: PhiMartingaleSpec, z, a, tail=None):
    """
    phi(A)(1 - Z) - Phi(A) + E[Phi(A_inf) | F_t].
    :param tail: the conditional expectation of Phi(A_inf), from sampling or (default) from hat_tail
    """
    tail = hat_tail(spec, z, a) if tail is None else tail
    z = np.asarray(z, dtype=float)
    value = spec.phi(a) * (1 - z) - spec.antiderivative(a) + tail
    return float(value) if np.ndim(value) == 0 else value


def values_at_L(spec: PhiMartingaleSpec, a_l: float) -> tuple[float, float]:
    """
    (M^phi_L, E[phi(A_inf) | F_L]) = (hat(A_L), phi(A_L)); Z_L = 1 and A_L = A_inf.
    """
    return float(spec.hat(a_l)), float(spec.phi(a_l))


def corimport_residual(spec: PhiMartingaleSpec, grid) -> float:
    """
    sup over the grid of |hat - phi|: the distance of M^phi from satisfying E[M_inf | F_L] = M_L.
    Zero only for constants.
    """
    grid = np.asarray(grid, dtype=float)
    return float(np.max(np.abs(spec.hat(grid) - spec.phi(grid))))


class ExpectedValues(NamedTuple):
    at_L: float  # E[phi(e1 + e2)]
    at_infinity: float  # E[phi(e1)]


def expected_values(spec: PhiMartingaleSpec) -> ExpectedValues:
    phi = spec.phi
    if not phi.absolutely_integrable or not phi.first_moment_integrable:
        raise IntegrabilityError(f"{phi.name} fails the integrability conditions of the phi family")
    at_l = adaptive_integrate(lambda x: x * phi(x), phi.breakpoints)
    at_infinity = adaptive_integrate(phi, phi.breakpoints)
    logger.getChild("expected_values").debug(f"{phi.name}: E at L {at_l:.10g}, at infinity {at_infinity:.10g}")
    return ExpectedValues(at_L=at_l, at_infinity=at_infinity)


def sampled_expected_values(spec: PhiMartingaleSpec, n: int, rng: Generator) -> tuple[McEstimate, McEstimate]:
    """
    Monte Carlo counterpart of expected_values: phi at Gamma(2, 1) and at Exp(1) samples.
    """
    gamma_samples = rng.gamma(2.0, 1.0, size=n)
    exp_samples = rng.exponential(1.0, size=n)
    return McEstimate.from_samples(spec.phi(gamma_samples)), McEstimate.from_samples(spec.phi(exp_samples))


def s1_gap(spec: PhiMartingaleSpec) -> float:
    """
    E[M^phi_L] - E[M^phi_inf] = -int exp(-x) L_1(x) phi(x) dx.
    """
    if not spec.phi.square_integrable:
        raise IntegrabilityError(f"{spec.name}(A_inf) is not square integrable")
    values = expected_values(spec)
    return values.at_L - values.at_infinity


def first_coefficient(spec: PhiMartingaleSpec, cap: int = DEGREE_CAP) -> float:
    """alpha_1, the L_1 coefficient of phi"""
    return float(expand(spec.phi, 1, cap=cap).coefficients[1])


def _check_monotone(spec: PhiMartingaleSpec, a) -> None:
    upper = float(np.max(a, initial=0.0))
    grid = np.linspace(0.0, upper + 1.0, 401)
    if not spec.phi.is_nondecreasing(grid):
        raise MonotonicityError(f"{spec.name} is not nondecreasing on [0, {upper + 1:g}]")


def supremum_value(spec: PhiMartingaleSpec, z, a) -> np.ndarray:
    """
    Running supremum of M^phi along the last axis.
    """
    return np.maximum.accumulate(np.asarray(m_phi(spec, z, a)), axis=-1)


def supremum_defect(spec: PhiMartingaleSpec, z, a):
    """
    max over t of |sup_{s <= t} M^phi_s - hat(A_t)| for every path.
    :param z: Z series, shape (paths, times) or (times,)
    :param a: A series of the same shape
    :return: per-path defects (a float for one path)
    :raises MonotonicityError: if phi decreases somewhere on the range of A
    """
    a = np.asarray(a, dtype=float)
    _check_monotone(spec, a)
    defect = np.max(np.abs(supremum_value(spec, z, a) - spec.hat(a)), axis=-1)
    return float(defect) if np.ndim(defect) == 0 else defect
