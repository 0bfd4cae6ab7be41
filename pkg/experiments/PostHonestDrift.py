from configuration.constants import TREE_TOLERANCE
from utils import FiltrationTree as trees
from utils.Experiment import Check

POST_HONEST_MAX_STEPS = 8


class PostHonestDrift(Check):
    id = "E13"
    name = "post-honest-drift"
    anchor = "Theorem resolutionune"
    description = ("For honest L, compares E[sum_{s>L} d<M,mu>_s / (1 - Z_{s-1}) | F_L] = 0 with "
                   "E[M_N | F_L] = M_L, and the Azema-Yor equivalence M_L = 0 <=> E[M_N | F_L] = 0; "
                   "both need L to avoid stopping times, so trees only record them")
    observed = True

    def parameters(self) -> dict:
        return {"tree_steps": min(self.config.tree_steps, POST_HONEST_MAX_STEPS), "tolerance": TREE_TOLERANCE}

    def run(self) -> None:
        agreement = {"both_zero": 0, "both_nonzero": 0, "drift_only_zero": 0, "s2_only_zero": 0}
        azema_yor = {"equivalent": 0, "not_equivalent": 0}
        flagged = 0
        for steps in range(2, min(self.config.tree_steps, POST_HONEST_MAX_STEPS) + 1):
            tree = trees.build_tree(steps, cap=self.config.tree_cap)
            for honest in trees.honest_times(tree):
                candidates = [trees.walk(tree), trees.walk_squared(tree),
                              trees.corollary_projection(tree, trees.walk(tree), honest),
                              trees.corollary_projection(tree, trees.walk_squared(tree), honest)]
                for m in candidates:
                    outcome = trees.resolution_une_defect(tree, m, honest)
                    flagged += outcome.flagged
                    drift_zero = outcome.drift_defect < TREE_TOLERANCE
                    s2_zero = outcome.s2_defect < TREE_TOLERANCE
                    key = ("both_zero" if drift_zero and s2_zero else "both_nonzero" if not (drift_zero or s2_zero)
                           else "drift_only_zero" if drift_zero else "s2_only_zero")
                    agreement[key] += 1
                    yor = trees.azema_yor_defect(tree, m, honest)
                    azema_yor["equivalent" if yor.equivalent else "not_equivalent"] += 1

        tree = trees.build_tree(2, scale=1.0)
        example = trees.resolution_une_defect(tree, trees.walk(tree), trees.honest_max_time(tree))
        self.record("honest_max_example", {"drift_defect": example.drift_defect, "s2_defect": example.s2_defect})
        self.record("agreement", agreement)
        self.record("azema_yor", azema_yor)
        self.record("flagged", flagged)
        self.require("necessary_condition", agreement["s2_only_zero"] == 0)
