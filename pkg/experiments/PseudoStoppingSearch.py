import numpy as np

from configuration.constants import TREE_TOLERANCE, EXHAUSTIVE_RANDOM_TIME_STEPS, EXHAUSTIVE_STOPPING_TIME_STEPS
from utils import FiltrationTree as trees
from utils.Experiment import Check


class PseudoStoppingSearch(Check):
    id = "E14"
    name = "pseudo-stopping-search"
    anchor = "Proposition on pseudo-stopping times"
    description = ("Exhaustive search for random times with A_N = 1 on small trees; each one found must "
                   "satisfy E[M_rho] = M_0 on a martingale basis, T = 0, and keep stopped martingales "
                   "martingales after enlargement")

    def parameters(self) -> dict:
        return {"exhaustive_steps": EXHAUSTIVE_RANDOM_TIME_STEPS, "stopping_steps": EXHAUSTIVE_STOPPING_TIME_STEPS,
                "tolerance": TREE_TOLERANCE}

    def run(self) -> None:
        summary = []
        worst = 0.0
        all_stopping_found = True
        terminal_found = True
        enumeration_complete = True
        for steps in range(2, EXHAUSTIVE_STOPPING_TIME_STEPS + 1):
            tree = trees.build_tree(steps, cap=self.config.tree_cap)
            basis = list(trees.martingale_basis(tree))
            stopping = list(trees.stopping_times(tree))
            family = stopping + trees.structured_times(tree)
            if steps <= EXHAUSTIVE_RANDOM_TIME_STEPS:
                exhaustive = list(trees.all_random_times(tree))
                family += exhaustive
                brute_force = {tuple(rho.values) for rho in exhaustive if trees.is_stopping_time(tree, rho)}
                enumeration_complete &= brute_force == {tuple(rho.values) for rho in stopping}
            found = trees.pseudo_stopping_search(tree, family, basis)
            found_values = {tuple(outcome.time.values) for outcome in found}
            all_stopping_found &= all(tuple(rho.values) in found_values for rho in stopping)
            terminal_found &= tuple(np.full(tree.path_count, steps)) in found_values
            for outcome in found:
                worst = max(worst, outcome.expectation_defect, outcome.s1_defect, outcome.stopped_violation)
            non_stopping = {values for values, outcome in ((tuple(o.time.values), o) for o in found)
                            if not outcome.stopping}
            summary.append({"steps": steps, "stopping": len(stopping), "candidates": len(family),
                            "found": len(found_values), "non_stopping": len(non_stopping)})
            self.log.debug(f"N={steps}: {len(found_values)} distinct pseudo-stopping times, "
                           f"{len(non_stopping)} of them not stopping times")

        self.record("search", summary)
        self.record("worst_defect", worst)
        self.require("stopping_times_enumerated", enumeration_complete)
        self.require("stopping_times_found", all_stopping_found)
        self.require("terminal_time_found", terminal_found)
        self.require("pseudo_stopping_properties", worst < TREE_TOLERANCE)
