import numpy as np

from configuration.constants import LAST_ZERO_MEAN_BAND, THETA_AGREEMENT
from experiments.OddEvenProjections import last_zero_functionals
from utils import GammaForms as gamma_forms
from utils import ScalarFunction as functions
from utils.Experiment import Check
from utils.Statistics import McEstimate


class LastZeroFailure(Check):
    id = "E8"
    name = "corporgam"
    anchor = "Proposition corporgam"
    description = ("N^h_t = E[h(gamma) | F_t] evaluated at gamma is (1/pi) int h(gamma + v(1-gamma)) dv / "
                   "sqrt(v(1-v)), not h(gamma): for h(u) = u, E[N_gamma] = 3/4 while E[h(gamma)] = 1/2")

    def run(self) -> None:
        gamma = self.collect(last_zero_functionals, horizon=1.0)["gamma"]
        identity = functions.identity()
        at_gamma = gamma_forms.n_h_at_gamma(identity, gamma)
        pathwise = float(np.max(np.abs(at_gamma - (1 + gamma) / 2)))
        n_mean = McEstimate.from_samples(at_gamma)
        h_mean = McEstimate.from_samples(gamma)
        self.dump({"gamma": gamma, "n_at_gamma": at_gamma})

        self.record("pathwise", pathwise)
        self.record("n_at_gamma_mean", n_mean)
        self.record("h_gamma_mean", h_mean)
        self.record("failure_gap", n_mean.mean - h_mean.mean)
        self.require("pathwise_closed_form", pathwise < THETA_AGREEMENT)
        self.require("n_at_gamma_mean", n_mean.within(0.75, LAST_ZERO_MEAN_BAND))
        self.require("h_gamma_mean", h_mean.within(0.5, LAST_ZERO_MEAN_BAND))
