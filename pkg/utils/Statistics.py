import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
import scipy.stats

from configuration.constants import (LOGGING_ROOT, CI99_QUANTILE, MIN_MOMENT_SAMPLES, MIN_KS_SAMPLES, Z_BAND,
                                     GAMMA_BINS)
from utils.exceptions import DegenerateFeatureError

logger = logging.getLogger(f"{LOGGING_ROOT}.statistics")

# Fixed point used by the accumulator: every finite double is an integer multiple of 2^-1074
_SCALE = 1074


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int

    @property
    def ci99(self) -> tuple[float, float]:
        return self.mean - CI99_QUANTILE * self.stderr, self.mean + CI99_QUANTILE * self.stderr

    @classmethod
    def from_samples(cls, samples) -> "McEstimate":
        return MomentAccumulator().add(samples).estimate()

    def z_score(self, target: float = 0.0) -> float:
        """
        |mean - target| in stderr units; 0 for an exact hit with zero spread.
        """
        gap = abs(self.mean - target)
        if self.stderr == 0:
            return 0.0 if gap == 0 else math.inf
        return gap / self.stderr

    def within(self, target: float, band: float = 0.0) -> bool:
        """
        Whether the target lies within max(band, 3 stderr) of the mean.
        """
        return abs(self.mean - target) <= max(band, Z_BAND * self.stderr)

    def as_dict(self) -> dict:
        low, high = self.ci99
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n, "ci99": [low, high]}


def _fixed(value: float, power: int) -> int:
    numerator, denominator = float(value).as_integer_ratio()
    shift = denominator.bit_length() - 1
    return (numerator ** power) << (power * (_SCALE - shift))


@dataclass
class MomentAccumulator:
    """
    Count, sum and sum of squares held exactly, so merging shards in any order
    gives the same estimate bit for bit.
    """
    count: int = 0
    total: int = 0
    total_squares: int = 0

    def add(self, values) -> "MomentAccumulator":
        values = np.asarray(values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise ValueError("cannot accumulate non-finite samples")
        for value in values.tolist():
            self.total += _fixed(value, 1)
            self.total_squares += _fixed(value, 2)
        self.count += len(values)
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        return MomentAccumulator(count=self.count + other.count, total=self.total + other.total,
                                 total_squares=self.total_squares + other.total_squares)

    def estimate(self) -> McEstimate:
        if self.count == 0:
            return McEstimate(mean=math.nan, stderr=math.nan, n=0)
        mean = Fraction(self.total, self.count << _SCALE)
        if self.count == 1:
            return McEstimate(mean=float(mean), stderr=math.nan, n=1)
        second = Fraction(self.total_squares, self.count << (2 * _SCALE))
        variance = max((second - mean * mean) * self.count / (self.count - 1), Fraction(0))
        return McEstimate(mean=float(mean), stderr=math.sqrt(float(variance) / self.count), n=self.count)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n: int
    reference: str

    def as_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "n": self.n, "reference": self.reference}


KS_REFERENCES = {"exp1": "expon", "rayleigh": "rayleigh"}


def ks_test(samples, reference: str, other=None) -> KsResult:
    """
    Kolmogorov-Smirnov distance of the samples to Exp(1), the Rayleigh law, or ("empirical")
    to a second sample, with the asymptotic p-value.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < MIN_KS_SAMPLES:
        raise ValueError(f"a KS test needs at least {MIN_KS_SAMPLES} samples, got {len(samples)}")
    if reference == "empirical":
        if other is None:
            raise ValueError("the empirical reference needs a second sample")
        result = scipy.stats.ks_2samp(samples, np.asarray(other, dtype=float), method="asymp")
    elif reference in KS_REFERENCES:
        result = scipy.stats.kstest(samples, KS_REFERENCES[reference], method="asymp")
    else:
        raise ValueError(f"unknown KS reference {reference!r}")
    return KsResult(statistic=float(result.statistic), p_value=float(result.pvalue), n=len(samples),
                    reference=reference)


@dataclass(frozen=True)
class MomentTest:
    max_z: float
    z: dict[str, float] = field(default_factory=dict)
    estimates: dict[str, McEstimate] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"max_z": self.max_z, "z": dict(self.z),
                "moments": {name: estimate.as_dict() for name, estimate in self.estimates.items()}}


def conditional_moment_test(target, features, dictionary: dict[str, Callable]) -> MomentTest:
    """
    Turn E[target | G] = 0 into the moments E[target * g(features)] = 0, g from the dictionary.
    :param target: per-sample values
    :param features: whatever the dictionary functions take (an array or a dict of arrays)
    :param dictionary: name -> test function
    :return: the z-score of every moment and their max
    """
    target = np.asarray(target, dtype=float)
    if len(target) < MIN_MOMENT_SAMPLES:
        logger.getChild("moment_test").debug(f"only {len(target)} samples (suggested {MIN_MOMENT_SAMPLES})")
    z = {}
    estimates = {}
    for name, g in dictionary.items():
        estimate = McEstimate.from_samples(target * np.asarray(g(features), dtype=float))
        if estimate.stderr == 0 and estimate.mean != 0:
            raise DegenerateFeatureError(f"moment {name} has zero spread and mean {estimate.mean}")
        z[name] = estimate.z_score()
        estimates[name] = estimate
    return MomentTest(max_z=max(z.values(), default=0.0), z=z, estimates=estimates)


@dataclass(frozen=True)
class BinnedComparison:
    max_z: float
    bins: list[dict]

    def as_dict(self) -> dict:
        return {"max_z": self.max_z, "bins": list(self.bins)}


def binned_comparison(feature, observed, predicted, bins: int = GAMMA_BINS,
                      window: tuple[float, float] | None = None) -> BinnedComparison:
    """
    Compare observed with predicted values bin by bin along a feature.
    Bins are quantile bins of the feature (or a single window); each gets the z-score of mean(observed - predicted).
    """
    feature = np.asarray(feature, dtype=float)
    difference = np.asarray(observed, dtype=float) - np.asarray(predicted, dtype=float)
    if window is not None:
        edges = np.array(window, dtype=float)
    else:
        edges = np.quantile(feature, np.linspace(0, 1, bins + 1))
    out = []
    for i, (low, high) in enumerate(zip(edges, edges[1:])):
        last = i == len(edges) - 2
        inside = (feature >= low) & ((feature <= high) if last else (feature < high))
        if inside.sum() < 2:
            continue
        estimate = McEstimate.from_samples(difference[inside])
        out.append({"low": float(low), "high": float(high), "n": int(inside.sum()),
                    "observed": float(np.mean(np.asarray(observed)[inside])),
                    "predicted": float(np.mean(np.asarray(predicted)[inside])),
                    "z": estimate.z_score()})
    return BinnedComparison(max_z=max((b["z"] for b in out), default=0.0), bins=out)


def max_abs_correlation(pairs: Iterable[tuple[str, np.ndarray, np.ndarray]]) -> dict[str, float]:
    """
    |sample correlation| for each named pair.
    """
    return {name: abs(float(np.corrcoef(np.asarray(x, float), np.asarray(y, float))[0, 1])) for name, x, y in pairs}
