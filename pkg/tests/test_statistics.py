import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from utils import Statistics as stats
from utils.Statistics import McEstimate, MomentAccumulator
from utils.exceptions import DegenerateFeatureError

samples = st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=2, max_size=40)


@given(samples, st.integers(min_value=0, max_value=40))
@settings(max_examples=60, deadline=None)
def test_accumulator_ignores_sharding(values, cut):
    cut = min(cut, len(values))
    whole = MomentAccumulator().add(values).estimate()
    left = MomentAccumulator().add(values[:cut])
    right = MomentAccumulator().add(values[cut:])
    assert right.merge(left).estimate() == whole
    assert left.merge(right).estimate() == whole


def test_accumulator_small_counts():
    assert MomentAccumulator().estimate().n == 0
    single = MomentAccumulator().add([2.5]).estimate()
    assert single.mean == 2.5 and math.isnan(single.stderr)
    with pytest.raises(ValueError):
        MomentAccumulator().add([1.0, math.inf])


def test_estimate_matches_numpy():
    values = np.random.default_rng(0).normal(size=1000)
    estimate = McEstimate.from_samples(values)
    assert math.isclose(estimate.mean, values.mean(), rel_tol=1e-12, abs_tol=1e-15)
    assert math.isclose(estimate.stderr, values.std(ddof=1) / math.sqrt(1000), rel_tol=1e-10)
    low, high = estimate.ci99
    assert low < estimate.mean < high


def test_z_score_and_within():
    estimate = McEstimate(mean=1.0, stderr=0.1, n=100)
    assert math.isclose(estimate.z_score(1.2), 2.0)
    assert math.isclose(estimate.z_score(0.8), estimate.z_score(1.2))
    assert estimate.within(1.25)
    assert not estimate.within(1.5)
    assert estimate.within(1.5, band=0.5)
    exact = McEstimate(mean=2.0, stderr=0.0, n=10)
    assert exact.z_score(2.0) == 0.0
    assert exact.z_score(3.0) == math.inf


def test_ks_test():
    rng = np.random.default_rng(3)
    assert stats.ks_test(rng.exponential(size=2000), "exp1").p_value > 0.001
    assert stats.ks_test(rng.uniform(size=2000), "exp1").p_value < 1e-6
    rayleigh = stats.ks_test(rng.rayleigh(size=2000), "rayleigh")
    assert rayleigh.n == 2000 and rayleigh.reference == "rayleigh"
    with pytest.raises(ValueError):
        stats.ks_test(rng.exponential(size=10), "exp1")
    with pytest.raises(ValueError):
        stats.ks_test(rng.exponential(size=200), "gamma")
    with pytest.raises(ValueError):
        stats.ks_test(rng.exponential(size=200), "empirical")


def test_conditional_moment_test():
    rng = np.random.default_rng(5)
    x = rng.normal(size=5000)
    noise = rng.normal(size=5000)
    dictionary = {"1": np.ones_like, "x": lambda f: f, "x^2": lambda f: f ** 2}
    assert stats.conditional_moment_test(noise, x, dictionary).max_z < 5
    biased = stats.conditional_moment_test(noise + x, x, dictionary)
    assert biased.z["x"] > 10
    assert set(biased.as_dict()) == {"max_z", "z", "moments"}


def test_degenerate_feature():
    with pytest.raises(DegenerateFeatureError):
        stats.conditional_moment_test(np.ones(50), np.ones(50), {"1": np.ones_like})


def test_binned_comparison():
    rng = np.random.default_rng(6)
    feature = rng.uniform(size=4000)
    predicted = feature ** 2
    observed = predicted + rng.normal(scale=0.1, size=4000)
    comparison = stats.binned_comparison(feature, observed, predicted, bins=5)
    assert len(comparison.bins) == 5
    assert sum(b["n"] for b in comparison.bins) == 4000
    assert comparison.max_z < 5
    shifted = stats.binned_comparison(feature, observed + 0.1, predicted, window=(0.2, 0.4))
    assert len(shifted.bins) == 1
    assert shifted.max_z > 10


def test_max_abs_correlation():
    rng = np.random.default_rng(7)
    x = rng.normal(size=3000)
    correlations = stats.max_abs_correlation([("same", x, -x), ("independent", x, rng.normal(size=3000))])
    assert math.isclose(correlations["same"], 1.0)
    assert correlations["independent"] < 0.1
