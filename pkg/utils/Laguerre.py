import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np
from numpy.polynomial import legendre
from scipy import special

from configuration.constants import (LOGGING_ROOT, QUADRATURE_ORDER, QUADRATURE_MAX_ORDER, LEGENDRE_ORDER,
                                     QUADRATURE_RELATIVE_TOLERANCE, DEGREE_CAP, FINITE_DIFFERENCE_STEP)
from utils import ScalarFunction as functions
from utils.ScalarFunction import ScalarFunction
from utils.exceptions import DegreeOverflowError, IntegrabilityError

logger = logging.getLogger(f"{LOGGING_ROOT}.laguerre")


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Gauss-Laguerre rule for the measure exp(-x)dx on [0, inf).
    Exact for polynomials of degree <= 2 * len(nodes) - 1.
    """
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_laguerre(cls, order: int = QUADRATURE_ORDER) -> "QuadratureRule":
        return _gauss_laguerre(int(order))

    @property
    def order(self) -> int:
        return len(self.nodes)

    @property
    def capacity(self) -> int:
        """
        Highest polynomial degree integrated exactly.
        """
        return 2 * self.order - 1

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, np.asarray(g(self.nodes), dtype=float)))

    def monomial_defect(self, max_degree: int | None = None) -> float:
        """
        Largest relative error of the rule on x^k against k!, for k up to max_degree.
        The factorials come from mpmath so the reference is exact.
        """
        max_degree = self.capacity if max_degree is None else min(max_degree, self.capacity)
        worst = 0.0
        for k in range(max_degree + 1):
            exact = mpmath.factorial(k)
            approx = mpmath.fsum(mpmath.mpf(float(w)) * mpmath.mpf(float(x)) ** k
                                 for w, x in zip(self.weights, self.nodes))
            worst = max(worst, float(abs(approx - exact) / exact))
        return worst


@lru_cache(maxsize=16)
def _gauss_laguerre(order: int) -> QuadratureRule:
    if order < 1:
        raise ValueError(f"quadrature order must be positive, got {order}")
    nodes, weights = special.roots_laguerre(order)
    keep = weights > 0  # Weights of the far nodes underflow for large orders
    nodes, weights = nodes[keep], weights[keep]
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


@lru_cache(maxsize=4)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return legendre.leggauss(order)


def weighted_integral(g: Callable[[np.ndarray], np.ndarray], breakpoints: tuple[float, ...] = (),
                      order: int = QUADRATURE_ORDER) -> float:
    """
    Integrate exp(-x) g(x) over [0, inf).

    The half line is split at the breakpoints: Gauss-Legendre on every finite piece,
    shifted Gauss-Laguerre on the tail. A step function with jumps at the breakpoints
    is integrated to rounding error this way.
    :param g: vectorized integrand (without the weight)
    :param breakpoints: increasing points in (0, inf) where g may jump
    :param order: Gauss-Laguerre order for the tail
    :return: the integral
    """
    points = [0.0, *(b for b in breakpoints if b > 0)]
    total = 0.0
    legendre_nodes, legendre_weights = _gauss_legendre(LEGENDRE_ORDER)
    for left, right in zip(points, points[1:]):
        half = (right - left) / 2
        x = left + half * (legendre_nodes + 1)
        total += half * float(np.dot(legendre_weights, np.exp(-x) * np.asarray(g(x), dtype=float)))
    rule = QuadratureRule.gauss_laguerre(order)
    tail = points[-1]
    total += math.exp(-tail) * rule.integrate(lambda y: g(y + tail))
    return total


def adaptive_integrate(g: Callable[[np.ndarray], np.ndarray], breakpoints: tuple[float, ...] = (),
                       order: int = QUADRATURE_ORDER) -> float:
    """
    weighted_integral with the order doubled until two successive orders agree
    to QUADRATURE_RELATIVE_TOLERANCE. Logs a warning if QUADRATURE_MAX_ORDER is reached first.
    """
    log = logger.getChild("adaptive")
    previous = weighted_integral(g, breakpoints, order)
    while order < QUADRATURE_MAX_ORDER:
        order *= 2
        current = weighted_integral(g, breakpoints, order)
        if abs(current - previous) <= QUADRATURE_RELATIVE_TOLERANCE * max(1.0, abs(current)):
            return current
        previous = current
    log.warning(f"quadrature did not settle by order {order} (last value {previous!r})")
    return previous


def laguerre_table(n: int, x, cap: int = DEGREE_CAP) -> np.ndarray:
    """
    L_0..L_n at x by the three-term recurrence (k+1)L_{k+1} = (2k+1-x)L_k - kL_{k-1}.
    :return: array of shape (n+1, *x.shape)
    """
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    if n > cap:
        raise DegreeOverflowError(f"degree {n} is above the cap {cap}")
    x = np.asarray(x, dtype=float)
    table = np.empty((n + 1, *x.shape))
    table[0] = 1.0
    if n >= 1:
        table[1] = 1.0 - x
    for k in range(1, n):
        table[k + 1] = ((2 * k + 1 - x) * table[k] - k * table[k - 1]) / (k + 1)
    return table


def laguerre_eval(n: int, x, cap: int = DEGREE_CAP):
    """
    Orthonormal Laguerre polynomial L_n at x.
    :param n: degree, 0 <= n <= cap
    :param x: point(s)
    :param cap: degree cap
    :return: L_n(x), a float for scalar x
    """
    value = laguerre_table(n, x, cap)[n]
    return float(value) if value.ndim == 0 else value


def laguerre_function(n: int, cap: int = DEGREE_CAP) -> ScalarFunction:
    return ScalarFunction(lambda x: laguerre_eval(n, x, cap), name=f"L{n}")


def orthonormality_defect(m: int, n: int, rule: QuadratureRule | None = None) -> float:
    """
    |int exp(-x) L_m L_n dx - delta_mn| by quadrature.
    """
    rule = rule or QuadratureRule.gauss_laguerre()
    if m + n > rule.capacity:
        raise ValueError(f"degrees {m}+{n} exceed the capacity {rule.capacity} of the rule")
    table = laguerre_table(max(m, n), rule.nodes, cap=max(m, n, DEGREE_CAP))
    return abs(float(np.dot(rule.weights, table[m] * table[n])) - (1.0 if m == n else 0.0))


@dataclass(frozen=True, eq=False)
class LaguerreExpansion:
    """
    Coefficients alpha_0..alpha_N of a function in the orthonormal Laguerre basis,
    with the Parseval gap int exp(-x)phi^2 - sum alpha_n^2 as truncation residual.
    """
    coefficients: np.ndarray
    residual: float
    name: str = "phi"
    cap: int = DEGREE_CAP

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def synthesize(self, x):
        x = np.asarray(x, dtype=float)
        table = laguerre_table(self.degree, x, cap=self.cap)
        return np.tensordot(self.coefficients, table, axes=1)

    def l2_error(self, phi: ScalarFunction, order: int = QUADRATURE_ORDER) -> float:
        """
        ||phi - sum alpha_n L_n|| in L^2(exp(-x)dx).
        """
        squared = weighted_integral(lambda x: (phi(x) - self.synthesize(x)) ** 2, phi.breakpoints, order)
        return math.sqrt(max(squared, 0.0))


def expand(phi: ScalarFunction, n: int, rule: QuadratureRule | None = None,
           cap: int = DEGREE_CAP) -> LaguerreExpansion:
    """
    Project phi on L_0..L_n.
    :param phi: function with int exp(-x) phi^2 < inf
    :param n: truncation degree
    :param rule: tail rule (its order is used; jumps of phi are handled through its breakpoints)
    :param cap: degree cap, LabConfig.degree_cap in experiments
    :raises DegreeOverflowError: when n is above the cap
    :return: the expansion
    """
    if not phi.square_integrable:
        raise IntegrabilityError(f"{phi.name} is not square integrable against exp(-x)dx")
    order = rule.order if rule is not None else QUADRATURE_ORDER
    if n > cap:
        raise DegreeOverflowError(f"degree {n} is above the cap {cap}")

    coefficients = np.array([weighted_integral(lambda x, k=k: phi(x) * laguerre_eval(k, x, cap), phi.breakpoints, order)
                             for k in range(n + 1)])
    if not np.all(np.isfinite(coefficients)):
        raise IntegrabilityError(f"non-finite Laguerre coefficient for {phi.name}")
    energy = weighted_integral(lambda x: phi(x) ** 2, phi.breakpoints, order)
    residual = energy - float(np.dot(coefficients, coefficients))
    logger.getChild("expand").debug(f"{phi.name}: degree {n}, Parseval gap {residual:.3e}")
    return LaguerreExpansion(coefficients=coefficients, residual=residual, name=phi.name, cap=cap)


def hat_transform(phi: ScalarFunction, order: int = QUADRATURE_ORDER) -> ScalarFunction:
    """
    The function x -> int_0^inf exp(-y) phi(y + x) dy.
    It satisfies hat - hat' = phi. Jumps of phi are handled by splitting at the shifted breakpoints.
    :param phi: function with int exp(-x)|phi| < inf
    :param order: Gauss-Laguerre order
    :return: the transform as a new ScalarFunction (continuous, so no breakpoints)
    """
    if not phi.absolutely_integrable:
        raise IntegrabilityError(f"{phi.name} is not integrable against exp(-x)dx")
    rule = QuadratureRule.gauss_laguerre(order)

    def smooth(x):
        x = np.asarray(x, dtype=float)
        # Increasing processes repeat their values between increments
        levels, inverse = np.unique(x, return_inverse=True)
        return (phi(rule.nodes + levels[:, None]) @ rule.weights)[inverse].reshape(x.shape)

    def piecewise(x):
        x = np.asarray(x, dtype=float)
        levels, inverse = np.unique(x, return_inverse=True)
        flat = np.array([weighted_integral(lambda y, s=s: phi(y + s), tuple(b - s for b in phi.breakpoints), order)
                         for s in levels])
        return flat[inverse].reshape(x.shape)

    return ScalarFunction(piecewise if phi.breakpoints else smooth, name=f"hat({phi.name})", x_max=phi.x_max)


def hat_identity_defect(phi: ScalarFunction, grid, step: float = FINITE_DIFFERENCE_STEP,
                        hat: ScalarFunction | None = None) -> float:
    """
    max over the grid of |hat(x) - D hat(x) - phi(x)| with D a second order finite difference
    (central, one-sided where x - step < 0).
    """
    hat = hat or hat_transform(phi)
    grid = np.asarray(grid, dtype=float)
    central = (hat(grid + step) - hat(grid - step)) / (2 * step)
    forward = (-3 * hat(grid) + 4 * hat(grid + step) - hat(grid + 2 * step)) / (2 * step)
    derivative = np.where(grid - step < 0, forward, central)
    return float(np.max(np.abs(hat(grid) - derivative - phi(grid))))


def function_suite(cap: int = DEGREE_CAP) -> list[ScalarFunction]:
    """
    The fixed test functions: constants, x, x^2, exp(-x), L_1..L_4 and the step 1_{x>1}.
    """
    return [functions.constant(1.0), functions.constant(5.0), functions.identity(), functions.power(2),
            functions.exp_decay(), *(laguerre_function(k, cap) for k in range(1, 5)), functions.step(1.0)]
