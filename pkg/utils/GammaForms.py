import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import mpmath
import numpy as np
from numpy.polynomial import hermite_e, legendre
from scipy import integrate, special

from configuration.constants import (LOGGING_ROOT, ARCSINE_RULE_ORDER, HERMITE_ORDER, QUADRATURE_ORDER,
                                     QUADRATURE_RELATIVE_TOLERANCE)
from utils import BrownianPaths
from utils.BrownianPaths import PathBatch
from utils.Laguerre import QuadratureRule, weighted_integral
from utils.ScalarFunction import ScalarFunction
from utils.Statistics import KsResult, McEstimate, ks_test, max_abs_correlation
from utils.exceptions import IntegrabilityError, QuadratureError

logger = logging.getLogger(f"{LOGGING_ROOT}.gamma")

# gamma is the last zero of B before 1; gamma_t the last zero before t.

# Arcsine rule pieces graded towards z = 0, where exp(-b^2 / (2z)) switches on for small b
GRADED_BREAKS = tuple(10.0 ** -k for k in range(2, 14, 2))


class ThetaFunction:
    """
    theta(x) = sqrt(2/pi) int_x^inf exp(-v^2/2) dv = erfc(x / sqrt 2),
    also the arcsine average of exp(-x^2 / (2v)).
    """

    def __call__(self, x):
        value = special.erfc(np.abs(np.asarray(x, dtype=float)) / math.sqrt(2))
        return float(value) if np.ndim(value) == 0 else value

    def alternate(self, x, order: int = ARCSINE_RULE_ORDER):
        """
        int_0^1 dv / (pi sqrt(v(1-v))) exp(-x^2 / (2v)) by the arcsine rule.
        """
        x = np.asarray(x, dtype=float)
        rule = ArcsineRule.build(order, GRADED_BREAKS)
        with np.errstate(under="ignore"):
            value = np.exp(-x[..., None] ** 2 / (2 * rule.nodes)) @ rule.weights
        return float(value) if np.ndim(value) == 0 else value

    @staticmethod
    def reference(x: float) -> float:
        """
        High precision value of the same integral through mpmath.
        """
        return float(mpmath.erfc(mpmath.mpf(abs(x)) / mpmath.sqrt(2)))


theta = ThetaFunction()


@dataclass(frozen=True, eq=False)
class ArcsineRule:
    """
    Quadrature for int_0^1 g(z) dz / (pi sqrt(z(1-z))), i.e. the mean of g under the arcsine law.

    With z = sin^2(u) the weight becomes (2/pi) du on [0, pi/2] and the endpoint singularities go away;
    Gauss-Legendre is then applied on [0, pi/2], split at any given jumps of g.
    """
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, order: int = ARCSINE_RULE_ORDER, breaks: tuple[float, ...] = ()) -> "ArcsineRule":
        return _arcsine_rule(order, tuple(sorted(b for b in breaks if 0 < b < 1)))

    def expectation(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.asarray(g(self.nodes), dtype=float) @ self.weights)


@lru_cache(maxsize=64)
def _arcsine_rule(order: int, breaks: tuple[float, ...]) -> ArcsineRule:
    angles = [0.0, *(math.asin(math.sqrt(b)) for b in breaks), math.pi / 2]
    base_nodes, base_weights = legendre.leggauss(order)
    nodes, weights = [], []
    for left, right in zip(angles, angles[1:]):
        half = (right - left) / 2
        u = left + half * (base_nodes + 1)
        nodes.append(np.sin(u) ** 2)
        weights.append(half * base_weights * 2 / math.pi)
    return ArcsineRule(nodes=np.concatenate(nodes), weights=np.concatenate(weights))


def _as_function(h) -> ScalarFunction:
    return h if isinstance(h, ScalarFunction) else ScalarFunction(h, name=getattr(h, "__name__", "h"))


def z_gamma(b, t: float):
    """
    Z_t = P[gamma > t | F_t] = theta(|B_t| / sqrt(1 - t)).
    """
    if not 0 <= t < 1:
        raise ValueError(f"Z is only defined for t in [0, 1), got {t}")
    return theta(np.abs(np.asarray(b, dtype=float)) / math.sqrt(1 - t))


def _conditional_h(h: ScalarFunction, t, b, order: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    shape = np.broadcast_shapes(t.shape, b.shape)
    t, b = np.broadcast_to(t, shape).ravel(), np.broadcast_to(b, shape).ravel()
    out = np.empty(len(t))
    # The rule depends on t only through where the jumps of h land in z
    for value in np.unique(t):
        rows = t == value
        breaks = tuple((p - value) / (1 - value) for p in h.breakpoints)
        rule = ArcsineRule.build(order, breaks + GRADED_BREAKS)
        u = value + rule.nodes * (1 - value)
        with np.errstate(under="ignore", divide="ignore"):
            kernel = np.exp(-b[rows, None] ** 2 / (2 * rule.nodes * (1 - value)))
        out[rows] = (kernel * h(u)) @ rule.weights
    return out.reshape(shape)


def conditional_h(h, t, b, order: int = ARCSINE_RULE_ORDER):
    """
    E[h(gamma) 1_{gamma > t} | F_t] = (1/pi) int_0^1 dz h(t + z(1-t)) / sqrt(z(1-z)) exp(-b^2 / (2z(1-t))).
    :param h: Borel function on [0, 1] (ScalarFunction; its breakpoints split the rule)
    :param t: time(s) in [0, 1)
    :param b: value(s) of B_t
    :param order: arcsine rule order; the result is compared with half that order
    :return: the conditional expectation, broadcast over t and b
    """
    h = _as_function(h)
    if np.any(np.asarray(t) >= 1) or np.any(np.asarray(t) < 0):
        raise ValueError("conditional_h needs t in [0, 1)")
    value = _conditional_h(h, t, b, order)
    coarse = _conditional_h(h, t, b, order // 2)
    gap = float(np.max(np.abs(value - coarse), initial=0.0))
    if gap > 1e-6 * max(1.0, float(np.max(np.abs(value), initial=0.0))):
        raise QuadratureError(f"arcsine rule for {h.name} did not settle (orders {order // 2}/{order} differ by {gap:.2e})")
    return float(value) if np.ndim(value) == 0 else value


def h_martingale(h, t: float, b, gamma_t):
    """
    E[h(gamma) | F_t] = h(gamma_t)(1 - Z_t) + E[h(gamma) 1_{gamma > t} | F_t].
    """
    h = _as_function(h)
    return h(gamma_t) * (1 - z_gamma(b, t)) + conditional_h(h, t, b)


def n_h_at_gamma(h, gamma):
    """
    N^h at gamma: (1/pi) int_0^1 dv h(gamma + v(1-gamma)) / sqrt(v(1-v)).
    Differs from E[N^h_inf | F_gamma] = h(gamma) unless h is constant.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0) or np.any(gamma >= 1):
        raise ValueError("gamma must lie in [0, 1)")
    return conditional_h(h, gamma, 0.0)


def even_projection(f) -> ScalarFunction:
    f = _as_function(f)
    return ScalarFunction(lambda x: (f(x) + f(-np.asarray(x))) / 2, name=f"even({f.name})")


def _check_gaussian_integrability(f: ScalarFunction) -> None:
    """
    E|f(B_1)| < inf, through the Laguerre form int exp(-u)(|f(sqrt 2u)| + |f(-sqrt 2u)|) du / sqrt(...).
    """
    def integrand(x):
        return abs(float(f(x))) * math.exp(-x * x / 2)

    with np.errstate(all="ignore"):
        try:
            value = integrate.quad(integrand, -np.inf, np.inf, limit=200)[0]
        except (OverflowError, ValueError):
            value = math.inf
    if not math.isfinite(value):
        raise IntegrabilityError(f"E|{f.name}(B_1)| is not finite")


def conditional_f_given_gamma(f, gamma, order: int = QUADRATURE_ORDER):
    """
    E[f(B_1) | F_gamma] = (1/2) int |x| exp(-x^2/2) f(x sqrt(1 - gamma)) dx.

    With u = x^2/2 this is (1/2) int_0^inf exp(-u) (f(s sqrt 2u) + f(-s sqrt 2u)) du, s = sqrt(1 - gamma),
    which Gauss-Laguerre handles; zero for odd f.
    """
    f = _as_function(f)
    _check_gaussian_integrability(f)
    gamma = np.asarray(gamma, dtype=float)
    rule = QuadratureRule.gauss_laguerre(order)
    radius = np.sqrt(2 * rule.nodes)
    scale = np.sqrt(1 - gamma)[..., None]
    value = (f(scale * radius) + f(-scale * radius)) / 2 @ rule.weights
    if not np.all(np.isfinite(value)):
        raise IntegrabilityError(f"non-finite conditional expectation for {f.name}")
    return float(value) if np.ndim(value) == 0 else value


def gamma_kernel(f) -> ScalarFunction:
    """
    gamma -> E[f(B_1) | F_gamma] as a function of gamma, ready for conditional_h.
    """
    f = _as_function(f)
    return ScalarFunction(lambda g: conditional_f_given_gamma(f, g), name=f"E[{f.name}(B1)|F_gamma]")


@lru_cache(maxsize=4)
def _hermite(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = hermite_e.hermegauss(order)
    return nodes, weights / math.sqrt(2 * math.pi)


def heat_semigroup(f, t: float, b, order: int = HERMITE_ORDER):
    """
    P_{1-t} f(b) = E[f(b + sqrt(1-t) xi)], xi standard normal, by probabilists' Gauss-Hermite.
    """
    f = _as_function(f)
    nodes, weights = _hermite(order)
    b = np.asarray(b, dtype=float)
    value = f(b[..., None] + math.sqrt(1 - t) * nodes) @ weights
    return float(value) if np.ndim(value) == 0 else value


class PerpValue(NamedTuple):
    direct: float
    decomposed: float
    parts: tuple[float, float, float]


def _quad(integrand, low, high) -> float:
    value, error = integrate.quad(integrand, low, high, limit=200)
    if not math.isfinite(value):
        raise QuadratureError("non-finite quadrature value")
    return value


def m_f_perp(f, t: float, b: float, gamma_t: float) -> PerpValue:
    """
    The martingale E[f(B_1) - E[f(B_1) | F_gamma] | F_t] for even f, two ways.

    direct: P_{1-t} f(b) minus the h-martingale of h = E[f(B_1) | F_gamma = .].
    decomposed: the three-term closed form M1 - M2 - M3, term by term as it is usually written,
    with the theta(|b| / sqrt(1-t)) prefactor on M2.
    """
    if not 0 <= t < 1:
        raise ValueError(f"t must lie in [0, 1), got {t}")
    f = _as_function(f)
    kernel = gamma_kernel(f)
    direct = heat_semigroup(f, t, b) - h_martingale(kernel, t, b, gamma_t)

    spread = 1 - t
    m1 = _quad(lambda z: float(f(z)) * (math.exp(-(z + b) ** 2 / (2 * spread))
                                        + math.exp(-(z - b) ** 2 / (2 * spread))) / math.sqrt(2 * math.pi * spread),
               0, np.inf)
    m2 = theta(abs(b) / math.sqrt(spread)) * _quad(
        lambda z: z * float(f(z * math.sqrt(1 - gamma_t))) * math.exp(-z * z / 2), 0, np.inf)
    rule = ArcsineRule.build(ARCSINE_RULE_ORDER, GRADED_BREAKS)
    with np.errstate(under="ignore", divide="ignore"):
        bridge = np.exp(-b * b / (2 * rule.nodes * spread))
    m3 = _quad(lambda z: z * math.exp(-z * z / 2)
               * float((f(z * math.sqrt(spread) * np.sqrt(1 - rule.nodes)) * bridge) @ rule.weights), 0, np.inf)
    return PerpValue(direct=float(direct), decomposed=m1 - m2 - m3, parts=(m1, m2, m3))


def balayage_martingale(path: PathBatch, x: Callable[[np.ndarray], np.ndarray], stop_index=None):
    """
    X_t = x(g_{t^T}) B_{t^T} on the grid.
    :param path: simulated paths
    :param x: bounded function of the last zero (the predictable integrand evaluated at g)
    :param stop_index: grid index of T per path (the horizon when omitted)
    :return: array (paths, steps + 1), or a series for a single path
    """
    g = np.atleast_2d(BrownianPaths.running_last_zero(path))
    rows = np.arange(len(path))[:, None]
    k = np.arange(path.steps + 1)[None, :]
    stop = np.full(len(path), path.steps) if stop_index is None else np.asarray(stop_index).reshape(-1)
    capped = np.minimum(k, stop[:, None])
    series = np.asarray(x(g[rows, capped]), dtype=float) * path.values[rows, capped]
    return series[0] if isinstance(path, BrownianPaths.BrownianPath) else series


def stop_indices(path: PathBatch, level: float) -> np.ndarray:
    """
    Grid index of T_level ^ horizon (the step in which the level is reached).
    """
    hit = np.atleast_1d(BrownianPaths.first_passage(path, level))
    return np.where(np.isnan(hit), path.steps, np.minimum(np.ceil(np.nan_to_num(hit) / path.dt), path.steps)).astype(int)


def zero_gap(path: PathBatch, location) -> np.ndarray:
    """
    min(|B|) over the two grid points around each location: how far the grid puts B from 0 at a located zero.
    """
    location = np.atleast_1d(np.asarray(location, dtype=float))
    left = np.clip(np.floor(location / path.dt).astype(int), 0, path.steps)
    right = np.minimum(left + 1, path.steps)
    rows = np.arange(len(path))
    return np.minimum(np.abs(path.values[rows, left]), np.abs(path.values[rows, right]))


class StoppedBrownianOutcome(NamedTuple):
    last_zero: np.ndarray  # L = last zero before T_level ^ horizon
    stopped_value: np.ndarray  # B at T_level ^ horizon
    zero_fraction: float  # Share of paths with |B_L| within the zero band


def stopped_brownian_check(path: PathBatch, level: float = 1.0) -> StoppedBrownianOutcome:
    """
    For L the last zero before T_level ^ horizon, B_L = 0 (within the grid zero band).
    """
    stop = stop_indices(path, level)
    g = np.atleast_2d(BrownianPaths.running_last_zero(path))
    rows = np.arange(len(path))
    last_zero = g[rows, stop]
    gaps = zero_gap(path, last_zero)
    has_zero = last_zero > 0
    fraction = float(np.mean(gaps[has_zero] <= path.zero_band)) if has_zero.any() else 1.0
    return StoppedBrownianOutcome(last_zero=last_zero, stopped_value=path.values[rows, stop],
                                  zero_fraction=fraction)


@dataclass(frozen=True)
class ImhofOutcome:
    ks: KsResult
    independence: float
    correlations: dict
    second_moment: McEstimate

    def as_dict(self) -> dict:
        return {"ks": self.ks.as_dict(), "independence": self.independence, "correlations": dict(self.correlations),
                "second_moment": self.second_moment.as_dict()}


def imhof_checks(gamma, b1) -> ImhofOutcome:
    """
    m = |B_1| / sqrt(1 - gamma) is Rayleigh and independent of (sgn B_1, gamma).
    :return: KS result against Rayleigh, the largest |correlation|, and E[m^2] (2 in theory)
    """
    gamma = np.asarray(gamma, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    m = np.abs(b1) / np.sqrt(1 - gamma)
    sign = np.sign(b1)
    early = (gamma <= 0.5).astype(float)
    correlations = max_abs_correlation([("m,gamma", m, gamma), ("m,sign", m, sign), ("sign,gamma", sign, gamma),
                                        ("m,early", m, early), ("sign,early", sign, early)])
    return ImhofOutcome(ks=ks_test(m, "rayleigh"), independence=max(correlations.values()),
                        correlations=correlations, second_moment=McEstimate.from_samples(m ** 2))
