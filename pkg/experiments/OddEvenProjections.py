import numpy as np

from configuration.constants import Z_BAND, ODD_EVEN_MEAN_BAND, QUADRATURE_RELATIVE_TOLERANCE
from utils import BrownianPaths as paths
from utils import GammaForms as gamma_forms
from utils import ScalarFunction as functions
from utils.Experiment import Check
from utils.Statistics import McEstimate, binned_comparison, conditional_moment_test

# Test functions of gamma for the conditional moment dictionaries
GAMMA_DICTIONARY = {"1": lambda g: np.ones_like(g),
                    "gamma": lambda g: g,
                    "gamma^2": lambda g: g ** 2,
                    "early": lambda g: (g <= 0.5).astype(float)}


def last_zero_functionals(batch) -> dict:
    return {"gamma": paths.last_zero_before(batch, 1.0), "b1": batch.values[:, -1]}


class OddEvenProjections(Check):
    id = "E6"
    name = "odd-even-projections"
    anchor = "Eq (casbrown)"
    description = ("E[f(B_1) | F_gamma] vanishes for odd f and is (1/2) int |x| exp(-x^2/2) f(x sqrt(1-gamma)) dx "
                   "for even f; checked on f(x) = x and f(x) = x^2, where it is 2(1 - gamma)")

    def run(self) -> None:
        samples = self.collect(last_zero_functionals, horizon=1.0)
        gamma, b1 = samples["gamma"], samples["b1"]
        self.dump(samples)

        odd = conditional_moment_test(b1, gamma, GAMMA_DICTIONARY)
        square = functions.power(2)
        predicted = gamma_forms.conditional_f_given_gamma(square, gamma)
        binned = binned_comparison(gamma, b1 ** 2, predicted)
        mean = McEstimate.from_samples(predicted)

        grid = np.linspace(0.0, 0.99, 12)
        closed_form = float(np.max(np.abs(gamma_forms.conditional_f_given_gamma(square, grid) - 2 * (1 - grid))))
        odd_projection = float(np.max(np.abs(gamma_forms.conditional_f_given_gamma(functions.identity(), grid))))
        mixed = square + functions.identity()
        even_part = gamma_forms.even_projection(mixed)
        even_gap = float(np.max(np.abs(gamma_forms.conditional_f_given_gamma(even_part, grid)
                                       - gamma_forms.conditional_f_given_gamma(mixed, grid))))

        self.record("odd_moments", odd)
        self.record("even_binned", binned)
        self.record("even_mean", mean)
        self.record("quadrature", {"x^2_closed_form": closed_form, "odd_vanishes": odd_projection,
                                   "even_projection_gap": even_gap})
        self.require("odd_projection_vanishes", odd.max_z < Z_BAND)
        self.require("even_projection_binned", binned.max_z < Z_BAND)
        self.require("even_projection_mean", mean.within(1.0, ODD_EVEN_MEAN_BAND))
        self.require("quadrature_closed_form", closed_form < QUADRATURE_RELATIVE_TOLERANCE)
        self.require("quadrature_odd", odd_projection < QUADRATURE_RELATIVE_TOLERANCE)
        self.require("quadrature_even_part", even_gap < QUADRATURE_RELATIVE_TOLERANCE)
