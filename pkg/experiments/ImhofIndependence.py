import math

from configuration.constants import KS_ALPHA, Z_BAND
from experiments.OddEvenProjections import last_zero_functionals
from utils import GammaForms as gamma_forms
from utils.Experiment import Check

# Pairs whose independence is asserted; the early-gamma pairs are only recorded
INDEPENDENT_PAIRS = ("m,gamma", "m,sign", "sign,gamma")


class ImhofIndependence(Check):
    id = "E11"
    name = "imhof-independence"
    anchor = "Imhof/independence"
    description = ("m = |B_1| / sqrt(1 - gamma) is Rayleigh distributed and independent of (sgn B_1, gamma), "
                   "and sgn B_1 is independent of gamma")

    def run(self) -> None:
        samples = self.collect(last_zero_functionals, horizon=1.0)
        outcome = gamma_forms.imhof_checks(samples["gamma"], samples["b1"])
        band = Z_BAND / math.sqrt(len(samples["gamma"]))

        self.record("imhof", outcome)
        self.record("correlation_band", band)
        self.require("rayleigh_law", outcome.ks.p_value > KS_ALPHA)
        for pair in INDEPENDENT_PAIRS:
            self.require(f"uncorrelated:{pair}", outcome.correlations[pair] < band)
        self.require("second_moment", outcome.second_moment.z_score(2.0) < Z_BAND)
