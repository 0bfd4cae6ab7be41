import numpy as np

from configuration.constants import Z_BAND, PROJECTION_TIME, THETA_AGREEMENT
from utils import BrownianPaths as paths
from utils import GammaForms as gamma_forms
from utils import ScalarFunction as functions
from utils.Experiment import Check
from utils.GammaForms import theta
from utils.Statistics import binned_comparison, conditional_moment_test

PROJECTION_DICTIONARY = {"1": lambda f: np.ones_like(f["b"]),
                         "|b|": lambda f: np.abs(f["b"]),
                         "b^2": lambda f: f["b"] ** 2,
                         "g_t": lambda f: f["g"]}
Z_WINDOW = (0.45, 0.55)  # Band of B_t where P[gamma > t | F_t] is compared with Z_t
THETA_GRID = (0.0, 0.5, 1.0, 2.0, 3.0)


class PredictableProjection(Check):
    id = "E12"
    name = "predictable-projection"
    anchor = "Propositions propangulaire/resolutiondeux via lambda"
    description = ("lambda is the dual predictable projection of 1_{gamma <= t}: "
                   "E[int_t^1 h(u) dlambda_u | F_t] = E[h(gamma) 1_{gamma > t} | F_t] = (1/pi) int_0^1 dz "
                   "h(t + z(1-t)) exp(-B_t^2 / (2z(1-t))) / sqrt(z(1-z)); h(u) = u and u^2 are asserted, "
                   "a step h is recorded")

    def __init__(self, config, stream):
        super().__init__(config, stream)
        self.asserted = [functions.identity(), functions.power(2)]
        self.recorded = [functions.step(0.75)]

    def parameters(self) -> dict:
        return {"n": self.config.n, "dt": self.config.dt, "t": PROJECTION_TIME,
                "h": [h.name for h in self.asserted + self.recorded]}

    def _functionals(self, batch) -> dict:
        k = batch.index(PROJECTION_TIME)
        lam = paths.lambda_process(batch)
        increments = np.diff(lam, axis=1)[:, k:]
        u = batch.times[k:-1]
        gamma = paths.last_zero_before(batch, 1.0)
        out = {"b": batch.values[:, k], "g": paths.last_zero_before(batch, PROJECTION_TIME),
               "after": (gamma > PROJECTION_TIME).astype(float)}
        for h in self.asserted + self.recorded:
            out[f"lambda:{h.name}"] = increments @ h(u)
            out[f"gamma:{h.name}"] = h(gamma) * out["after"]
        return out

    def run(self) -> None:
        samples = self.collect(self._functionals, horizon=1.0)
        features = {"b": samples["b"], "g": samples["g"]}

        for h in self.asserted + self.recorded:
            predicted = gamma_forms.conditional_h(h, PROJECTION_TIME, samples["b"])
            through_lambda = conditional_moment_test(samples[f"lambda:{h.name}"] - predicted, features,
                                                     PROJECTION_DICTIONARY)
            through_gamma = conditional_moment_test(samples[f"gamma:{h.name}"] - predicted, features,
                                                    PROJECTION_DICTIONARY)
            self.record(f"lambda_moments:{h.name}", through_lambda)
            self.record(f"gamma_moments:{h.name}", through_gamma)
            self.record(f"binned:{h.name}", binned_comparison(np.abs(samples["b"]), samples[f"lambda:{h.name}"],
                                                              predicted))
            if h in self.asserted:
                self.require(f"projection:{h.name}", through_lambda.max_z < Z_BAND)

        z = gamma_forms.z_gamma(samples["b"], PROJECTION_TIME)
        window = binned_comparison(samples["b"], samples["after"], z, window=Z_WINDOW)
        self.record("z_window", window)
        self.require("z_window", window.max_z < Z_BAND)

        agreement = {}
        for x in THETA_GRID:
            value = theta(x)
            agreement[f"{x:g}"] = {"erfc": value, "arcsine": abs(theta.alternate(x) - value),
                                   "mpmath": abs(theta.reference(x) - value)}
        self.record("theta", agreement)
        self.require("theta_forms_agree", all(max(v["arcsine"], v["mpmath"]) <= THETA_AGREEMENT
                                              for v in agreement.values()))
