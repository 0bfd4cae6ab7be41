import numpy as np

from configuration.constants import KS_ALPHA, EXPONENTIAL_MEAN_BAND
from utils import BrownianPaths as paths
from utils.Experiment import Check
from utils.Statistics import McEstimate, ks_test


class ExponentialLaw(Check):
    id = "E4"
    name = "exp-law"
    anchor = "Lemma azemgeneral"
    description = ("A_inf is Exp(1): checked for l_{T_1}/2 (last zero before the first passage of 1) "
                   "and for lambda_1 (last zero before time 1)")

    def parameters(self) -> dict:
        return {"n": self.config.n, "dt": self.config.dt, "level": self.config.level,
                "renewal_floor": self.config.renewal_floor, "bridge_corrections": self.config.bridge_corrections}

    def run(self) -> None:
        hitting = self.path_config(0)
        local_times, censored = paths.local_time_at_hit(hitting, range(self.config.n))
        at_hit = local_times / (2 * abs(self.config.level))

        lambdas = self.collect(lambda batch: {"lambda": paths.lambda_process(batch)[:, -1]},
                               substream=1, horizon=1.0)["lambda"]
        consistency = paths.local_time_consistency(paths.simulate_batch(self.path_config(1, horizon=1.0),
                                                                        range(min(self.config.n, 2048))))
        self.dump({"local_time_at_hit_half": at_hit, "lambda_1": lambdas})

        hit_estimate = McEstimate.from_samples(at_hit)
        lambda_estimate = McEstimate.from_samples(lambdas)
        hit_ks = ks_test(at_hit, "exp1")
        lambda_ks = ks_test(lambdas, "exp1")
        self.record("local_time_at_hit", {"mean": hit_estimate, "ks": hit_ks, "censored": censored})
        self.record("lambda", {"mean": lambda_estimate, "ks": lambda_ks})
        self.record("local_time_estimator_gap", consistency)
        self.record("lambda_second_moment", McEstimate.from_samples(np.square(lambdas)))

        self.require("local_time_at_hit_law", hit_ks.p_value > KS_ALPHA)
        self.require("lambda_law", lambda_ks.p_value > KS_ALPHA)
        self.require("local_time_at_hit_mean", hit_estimate.within(1.0, EXPONENTIAL_MEAN_BAND))
        self.require("lambda_mean", lambda_estimate.within(1.0, EXPONENTIAL_MEAN_BAND))
