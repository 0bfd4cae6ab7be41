import numpy as np

from configuration.constants import TREE_TOLERANCE, EXHAUSTIVE_STOPPING_TIME_STEPS
from utils import FiltrationTree as trees
from utils.Experiment import Check


class TreeCharacterizations(Check):
    id = "E1"
    name = "tree-characterizations"
    anchor = "Theorem caracter1"
    description = ("The three expressions of T(M) agree and E[M_rho] - E[M_N] = T(M) for a spanning "
                   "martingale basis and structured, fuzzed and stopping times on every tree up to tree_steps")

    def parameters(self) -> dict:
        return {"tree_steps": self.config.tree_steps, "fuzz_times": self.config.fuzz_times,
                "tolerance": TREE_TOLERANCE}

    def run(self) -> None:
        rng = self.rng(0)
        worst = {"formulas": 0.0, "expectation_gap": 0.0, "dual_projection": 0.0, "triple": 0.0,
                 "stopping_t": 0.0, "s2_members": 0.0, "s2_members_t": 0.0}
        mismatches = 0  # Times where "A_N = 1" and "T vanishes on the basis" disagree
        times_checked = 0

        for steps in range(2, self.config.tree_steps + 1):
            tree = trees.build_tree(steps, cap=self.config.tree_cap)
            times = trees.structured_times(tree) + list(trees.random_times(tree, self.config.fuzz_times, rng))
            if steps <= EXHAUSTIVE_STOPPING_TIME_STEPS:
                times += list(trees.stopping_times(tree))
            triples = [trees.azema_triple(tree, rho) for rho in times]
            stopping = [trees.is_stopping_time(tree, rho) for rho in times]
            for triple in triples:
                worst["triple"] = max(worst["triple"], max(triple.invariant_defect().values()))

            t_on_basis = np.zeros(len(times))
            for block in trees.martingale_basis(tree):
                for i, (rho, triple) in enumerate(zip(times, triples)):
                    formulas = trees.s1_formulas(tree, block, triple)
                    bracket = np.asarray(formulas.bracket)
                    worst["formulas"] = max(worst["formulas"],
                                            float(np.max(np.abs(bracket - formulas.mu_form))),
                                            float(np.max(np.abs(bracket - formulas.a_form))))
                    at_rho = np.asarray(trees.expectation_at_rho(tree, block, rho))
                    gap = at_rho - block.values[0][0]  # E[M_N] = M_0
                    worst["expectation_gap"] = max(worst["expectation_gap"], float(np.max(np.abs(gap - bracket))))
                    summed, terminal = trees.dual_projection_forms(tree, block, triple)
                    worst["dual_projection"] = max(worst["dual_projection"],
                                                   float(np.max(np.abs(at_rho - summed))),
                                                   float(np.max(np.abs(at_rho - terminal))))
                    t_on_basis[i] = max(t_on_basis[i], float(np.max(np.abs(bracket))))

            for i, triple in enumerate(triples):
                pseudo = float(np.max(np.abs(triple.a.terminal - 1))) <= TREE_TOLERANCE
                mismatches += pseudo != (t_on_basis[i] <= TREE_TOLERANCE)
                if stopping[i]:
                    worst["stopping_t"] = max(worst["stopping_t"], t_on_basis[i])

            # Members of S2 built by projection are in S1
            for honest in trees.honest_times(tree):
                triple = trees.azema_triple(tree, honest)
                for m in (trees.walk(tree), trees.walk_squared(tree)):
                    member = trees.corollary_projection(tree, m, honest)
                    worst["s2_members"] = max(worst["s2_members"], trees.s2_defect(tree, member, honest))
                    worst["s2_members_t"] = max(worst["s2_members_t"],
                                                abs(trees.s1_functional(tree, member, triple)))
            times_checked += len(times)
            self.log.debug(f"N={steps}: {len(times)} times, T max {float(np.max(t_on_basis)):.3e}")

        self.record("defects", worst)
        self.record("times_checked", times_checked)
        self.record("pseudo_stopping_mismatches", mismatches)
        for name, value in worst.items():
            self.require(name, value < TREE_TOLERANCE)
        self.require("pseudo_stopping_equivalence", mismatches == 0)
