import math

from configuration.constants import LAGUERRE_GAP_BAND, OVERSHOOT_FACTOR, QUADRATURE_RELATIVE_TOLERANCE
from utils import BrownianPaths as paths
from utils import Laguerre as laguerre
from utils import PhiMartingales as phi_family
from utils import ScalarFunction as functions
from utils.Experiment import Check
from utils.PhiMartingales import PhiMartingaleSpec, first_coefficient
from utils.Statistics import McEstimate


class LaguerreMembership(Check):
    id = "E5"
    name = "laguerre-membership"
    anchor = "Theorem (lag)/(represdephi)"
    description = ("For L = g_{T_1}, E[M^phi_L] - E[M^phi_inf] = -alpha_1(phi): zero for L_n with n != 1, "
                   "-1 for L_1, measured on simulated l_{T_1}/2 and on M^phi read at the last zero before T_1")

    def parameters(self) -> dict:
        return {"n": self.config.n, "dt": self.config.dt, "level": self.config.level,
                "renewal_floor": self.config.renewal_floor, "degree_cap": self.config.degree_cap}

    def run(self) -> None:
        cap = self.config.degree_cap
        height = abs(self.config.level)
        state = paths.azema_at_last_zero(self.path_config(0), range(self.config.n))
        a_inf = state.a
        self.record("censored", state.censored)
        self.record("overshoot", McEstimate.from_samples(1.0 - state.z))

        # L_n(A_inf) are martingales closed at infinity and centered
        table = laguerre.laguerre_table(4, a_inf, cap=cap)
        self.record("laguerre_means", {f"L{k}": McEstimate.from_samples(table[k]) for k in range(1, 5)})

        gaps = {}
        orthogonal = {f"L{k}": laguerre.laguerre_function(k, cap) for k in (0, 2, 3)}
        general = {"x": functions.identity(), "x^2": functions.power(2), "exp(-x)": functions.exp_decay()}
        for name, phi in {**orthogonal, "L1": laguerre.laguerre_function(1, cap), **general}.items():
            spec = PhiMartingaleSpec.build(phi, self.config.quadrature_order)
            spread = spec.hat(a_inf) - spec.phi(a_inf)
            gaps[name] = {
                # Z_L = 1 and A_L = A_inf in continuous time
                "gap": McEstimate.from_samples(spread),
                "path_gap": McEstimate.from_samples(phi_family.path_gap(spec, state.z, a_inf)),
                "grid_allowance": OVERSHOOT_FACTOR * math.sqrt(self.config.dt) * float(abs(spread).mean()) / height,
                "alpha_1": first_coefficient(spec, cap),
            }

        self.record("gaps", gaps)
        for name in orthogonal:
            self.require(f"{name}_in_s1", gaps[name]["gap"].within(0.0, QUADRATURE_RELATIVE_TOLERANCE))
        self.require("L1_gap", gaps["L1"]["gap"].within(-1.0, LAGUERRE_GAP_BAND))
        for name in general:
            self.require(f"{name}_gap_is_minus_alpha_1",
                         gaps[name]["gap"].within(-gaps[name]["alpha_1"], LAGUERRE_GAP_BAND))
        for name, gap in gaps.items():
            band = LAGUERRE_GAP_BAND + gap["grid_allowance"]
            self.require(f"{name}_path_gap", gap["path_gap"].within(-gap["alpha_1"], band))
        self.dump({"a_inf": a_inf, "z_at_last_zero": state.z})
