import numpy as np

from configuration.constants import TREE_TOLERANCE, RECONSTRUCTION_TOLERANCE
from utils import FiltrationTree as trees
from utils.Experiment import Check


class KunitaWatanabe(Check):
    id = "E2"
    name = "kunita-watanabe"
    anchor = "Eq (kunitwatanbe)"
    description = ("M = N + int k dmu with <N, mu> = 0, and E[sum k d<mu>] = T(M), so membership in S1 "
                   "is read off the integrand")

    def parameters(self) -> dict:
        return {"tree_steps": self.config.tree_steps, "fuzz_times": self.config.fuzz_times,
                "tolerance": TREE_TOLERANCE}

    def run(self) -> None:
        rng = self.rng(0)
        reconstruction = 0.0
        orthogonality = 0.0
        membership_gap = 0.0
        predicate_mismatches = 0
        residual_martingale = 0.0
        for steps in range(2, self.config.tree_steps + 1):
            tree = trees.build_tree(steps, cap=self.config.tree_cap)
            times = trees.structured_times(tree) + list(trees.random_times(tree, self.config.fuzz_times, rng))
            triples = [trees.azema_triple(tree, rho) for rho in times]
            for block in trees.martingale_basis(tree):
                for triple in triples:
                    split = trees.kunita_watanabe(tree, block, triple.mu)
                    rebuilt = split.residual + split.integral
                    reconstruction = max(reconstruction, max(float(np.max(np.abs(r - m)))
                                                             for r, m in zip(rebuilt.values, block.values)))
                    cross = trees.predictable_bracket(tree, split.residual, triple.mu)
                    orthogonality = max(orthogonality, max(float(np.max(np.abs(v))) for v in cross.values))
                    residual_martingale = max(residual_martingale, split.residual.martingale_defect())
                    t_value = np.asarray(trees.s1_functional(tree, block, triple))
                    membership = np.asarray(split.membership)
                    membership_gap = max(membership_gap, float(np.max(np.abs(membership - t_value))))
                    predicate_mismatches += int(np.count_nonzero((np.abs(membership) < TREE_TOLERANCE)
                                                                 != (np.abs(t_value) < TREE_TOLERANCE)))
            self.log.debug(f"N={steps}: {len(times)} times decomposed")

        self.record("reconstruction", reconstruction)
        self.record("orthogonality", orthogonality)
        self.record("residual_martingale_defect", residual_martingale)
        self.record("membership_gap", membership_gap)
        self.record("predicate_mismatches", predicate_mismatches)
        self.require("reconstruction", reconstruction < RECONSTRUCTION_TOLERANCE)
        self.require("orthogonality", orthogonality < TREE_TOLERANCE)
        self.require("residual_martingale", residual_martingale < TREE_TOLERANCE)
        self.require("membership_gap", membership_gap < TREE_TOLERANCE)
        self.require("membership_predicate", predicate_mismatches == 0)
