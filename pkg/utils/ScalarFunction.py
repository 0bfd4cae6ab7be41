import logging
import math
import warnings
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

from configuration.constants import LOGGING_ROOT

logger = logging.getLogger(f"{LOGGING_ROOT}.function")


class ScalarFunction:
    """
    A real function of one real variable, evaluated lazily and vectorized.

    Carries what the quadrature code needs to know about it:

    * breakpoints - points where the function may jump (integrals get split there)
    * lazily cached integrability flags against exp(-x)dx on [0, inf)
    """

    def __init__(self, evaluator: Callable[[np.ndarray], np.ndarray], name: str = "phi",
                 breakpoints: tuple[float, ...] = (), x_max: float = math.inf):
        """
        Wrap a callable.
        :param evaluator: numpy-vectorized callable
        :param name: name used in logs and reports
        :param breakpoints: sorted discontinuity locations in (0, inf)
        :param x_max: right end of the domain (inf for functions on the half line)
        """
        self.evaluator = evaluator
        self.name = name
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self.x_max = x_max

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.evaluator(x), dtype=float), x.shape) * 1.0

    def __repr__(self):
        return f"ScalarFunction(name={self.name!r}, breakpoints={self.breakpoints})"

    def _weighted_integral(self, power: int, absolute: bool, square: bool = False) -> float:
        """
        Integrate exp(-x) |phi(x)|^(1 or 2) x^power over [0, inf) adaptively.
        Divergence shows up as a non-finite value or an integration warning.
        """
        def integrand(x):
            value = float(self(x))
            if square:
                value = value * value
            elif absolute:
                value = abs(value)
            return math.exp(-x) * value * x ** power

        points = [0.0, *self.breakpoints]
        total = 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                for left, right in zip(points, points[1:]):
                    total += integrate.quad(integrand, left, right, limit=200)[0]
                total += integrate.quad(integrand, points[-1], math.inf, limit=200)[0]
            except (integrate.IntegrationWarning, OverflowError, ZeroDivisionError) as e:
                logger.debug(f"{self.name}: weighted integral of order {power} diverges ({e})")
                return math.inf
        return total

    @cached_property
    def absolutely_integrable(self) -> bool:
        """int exp(-x)|phi(x)| dx < inf"""
        return math.isfinite(self._weighted_integral(0, absolute=True))

    @cached_property
    def first_moment_integrable(self) -> bool:
        """int exp(-x)|phi(x)| x dx < inf"""
        return math.isfinite(self._weighted_integral(1, absolute=True))

    @cached_property
    def square_integrable(self) -> bool:
        """int exp(-x) phi(x)^2 dx < inf"""
        return math.isfinite(self._weighted_integral(0, absolute=True, square=True))

    def is_nondecreasing(self, grid) -> bool:
        values = self(np.asarray(grid, dtype=float))
        return bool(np.all(np.diff(values) >= -1e-12 * np.maximum(1.0, np.abs(values[:-1]))))

    def shifted(self, shift: float, name: str | None = None) -> "ScalarFunction":
        """
        x -> phi(x + shift), with the breakpoints moved along.
        """
        return ScalarFunction(lambda x: self.evaluator(np.asarray(x) + shift),
                              name=name or f"{self.name}(.+{shift:g})",
                              breakpoints=tuple(b - shift for b in self.breakpoints if b - shift > 0),
                              x_max=self.x_max - shift)

    def __add__(self, other: "ScalarFunction") -> "ScalarFunction":
        return ScalarFunction(lambda x: self(x) + other(x), name=f"{self.name}+{other.name}",
                              breakpoints=self.breakpoints + other.breakpoints,
                              x_max=min(self.x_max, other.x_max))

    def scaled(self, factor: float) -> "ScalarFunction":
        return ScalarFunction(lambda x: factor * self(x), name=f"{factor:g}*{self.name}",
                              breakpoints=self.breakpoints, x_max=self.x_max)


def constant(c: float) -> ScalarFunction:
    return ScalarFunction(lambda x: np.full(np.shape(x), float(c)), name=f"const({c:g})")


def identity() -> ScalarFunction:
    return ScalarFunction(lambda x: x, name="x")


def power(k: int) -> ScalarFunction:
    return ScalarFunction(lambda x: x ** k, name=f"x^{k}")


def exp_decay() -> ScalarFunction:
    return ScalarFunction(lambda x: np.exp(-x), name="exp(-x)")


def step(at: float = 1.0) -> ScalarFunction:
    """
    The Borel indicator 1_{x > at}.
    """
    return ScalarFunction(lambda x: (x > at).astype(float), name=f"1(x>{at:g})", breakpoints=(at,))
