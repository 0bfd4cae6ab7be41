import numpy as np

from configuration.constants import Z_BAND, ZERO_AT_STOP_SHARE
from utils import BrownianPaths as paths
from utils import GammaForms as gamma_forms
from utils.Experiment import Check
from utils.Statistics import McEstimate, conditional_moment_test

BALAYAGE_SPLIT = 0.5


def _integrand(g):
    """A bounded function of the last zero"""
    return np.cos(2 * np.pi * np.asarray(g))


INCREMENT_DICTIONARY = {"1": lambda f: np.ones_like(f["b"]),
                        "b": lambda f: f["b"],
                        "sign": lambda f: np.sign(f["b"]),
                        "g": lambda f: f["g"]}


class Balayage(Check):
    id = "E9"
    name = "balayage"
    anchor = "Balayage propositions"
    description = ("x(g_t) B_t is a martingale for bounded x (balayage), also stopped at T_level; and "
                   "B vanishes at the last zero before T_level ^ 1")

    def parameters(self) -> dict:
        return {"n": self.config.n, "dt": self.config.dt, "level": self.config.level,
                "split": BALAYAGE_SPLIT}

    def _functionals(self, batch) -> dict:
        split = batch.index(BALAYAGE_SPLIT)
        stop = gamma_forms.stop_indices(batch, self.config.level)
        free = gamma_forms.balayage_martingale(batch, _integrand)
        stopped = gamma_forms.balayage_martingale(batch, _integrand, stop_index=stop)
        check = gamma_forms.stopped_brownian_check(batch, self.config.level)
        g = np.atleast_2d(paths.running_last_zero(batch))[:, split]
        has_zero = check.last_zero > 0
        return {"x_1": free[:, -1], "x_split": free[:, split], "x_stopped": stopped[:, -1],
                "b_split": batch.values[:, split], "g_split": g,
                "b_stopped": check.stopped_value,
                "zero_gap": gamma_forms.zero_gap(batch, check.last_zero),
                "has_zero": has_zero}

    def run(self) -> None:
        samples = self.collect(self._functionals, horizon=1.0)
        terminal = McEstimate.from_samples(samples["x_1"])
        stopped = McEstimate.from_samples(samples["x_stopped"])
        stopped_brownian = McEstimate.from_samples(samples["b_stopped"])
        increments = conditional_moment_test(samples["x_1"] - samples["x_split"],
                                             {"b": samples["b_split"], "g": samples["g_split"]},
                                             INCREMENT_DICTIONARY)
        located = samples["zero_gap"][samples["has_zero"] > 0]
        zero_share = float(np.mean(located <= self.path_config().zero_band)) if len(located) else 1.0

        self.record("terminal_mean", terminal)
        self.record("stopped_mean", stopped)
        self.record("stopped_brownian_mean", stopped_brownian)
        self.record("increment_moments", increments)
        self.record("zero_at_last_zero_share", zero_share)
        self.require("martingale_terminal", terminal.z_score(0.0) < Z_BAND)
        self.require("martingale_stopped", stopped.z_score(0.0) < Z_BAND)
        self.require("martingale_increments", increments.max_z < Z_BAND)
        self.require("zero_at_last_zero", zero_share >= ZERO_AT_STOP_SHARE)
