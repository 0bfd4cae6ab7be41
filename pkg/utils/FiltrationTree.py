import enum
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from configuration.constants import (LOGGING_ROOT, TREE_STEP_CAP, TREE_TOLERANCE, DIVISION_NULL_TOLERANCE,
                                     EXHAUSTIVE_RANDOM_TIME_STEPS, EXHAUSTIVE_STOPPING_TIME_STEPS)
from utils.exceptions import TreeSizeError, NotHonestError, DegenerateDivisionError

logger = logging.getLogger(f"{LOGGING_ROOT}.tree")

# Indexing used throughout this module:
# path p in 0..2^N-1, step t goes up iff bit (N-t) of p is set.
# The node of p at time t is p >> (N-t); the children of node n are 2n and 2n+1.
# A process is a list of arrays, entry t of shape (2^t, *family).
# The optional trailing family axes carry a whole batch of martingales at once.


@dataclass(frozen=True)
class DyadicTree:
    """
    The random walk with N steps of size +-scale, all 2^N paths equally likely.
    """
    steps: int
    scale: float

    @property
    def path_count(self) -> int:
        return 1 << self.steps

    @property
    def paths(self) -> np.ndarray:
        return np.arange(self.path_count, dtype=np.int64)

    def nodes(self, t: int) -> np.ndarray:
        """
        Node of every path at time t.
        """
        return self.paths >> (self.steps - t)

    def conditional_expectation(self, x: np.ndarray, t: int) -> np.ndarray:
        """
        E[X | F_t] for a per-path array X, returned per node at time t.
        """
        x = np.asarray(x, dtype=float)
        return x.reshape(1 << t, 1 << (self.steps - t), *x.shape[1:]).mean(axis=1)

    def spread(self, node_values: np.ndarray, t: int) -> np.ndarray:
        """
        Node values at time t copied out to every path through the node.
        """
        return np.repeat(node_values, 1 << (self.steps - t), axis=0)


def build_tree(steps: int, scale: float | None = None, cap: int = TREE_STEP_CAP) -> DyadicTree:
    """
    Build the dyadic random walk tree.
    :param steps: N, 1 <= N <= cap
    :param scale: increment size (1/sqrt(N) by default)
    :param cap: largest allowed N
    :return: the tree
    """
    if steps < 1:
        raise ValueError(f"a tree needs at least one step, got {steps}")
    if steps > cap:
        raise TreeSizeError(f"{steps} steps is above the cap of {cap}")
    scale = 1 / math.sqrt(steps) if scale is None else float(scale)
    logger.getChild("build").debug(f"tree with {1 << steps} paths (scale {scale:g})")
    return DyadicTree(steps=steps, scale=scale)


@dataclass(frozen=True, eq=False)
class AdaptedProcess:
    """
    Values per (time, node); entry t has shape (2^t, *family).
    """
    tree: DyadicTree
    values: tuple[np.ndarray, ...]
    name: str = "X"

    @property
    def family_shape(self) -> tuple[int, ...]:
        return self.values[0].shape[1:]

    def at(self, t: int) -> np.ndarray:
        return self.values[t]

    def on_paths(self, t: int) -> np.ndarray:
        return self.tree.spread(self.values[t], t)

    @property
    def terminal(self) -> np.ndarray:
        return self.values[self.tree.steps]

    def path_matrix(self) -> np.ndarray:
        """
        Shape (N+1, 2^N, *family).
        """
        return np.stack([self.on_paths(t) for t in range(self.tree.steps + 1)])

    def increments(self, t: int) -> np.ndarray:
        """
        X_t - X_{t-1} per node at time t.
        """
        return self.values[t] - np.repeat(self.values[t - 1], 2, axis=0)

    def __sub__(self, other: "AdaptedProcess") -> "AdaptedProcess":
        return type(self)(self.tree, tuple(_align(a, b)[0] - _align(a, b)[1]
                                           for a, b in zip(self.values, other.values)),
                          name=f"{self.name}-{other.name}")

    def __add__(self, other: "AdaptedProcess") -> "AdaptedProcess":
        return type(self)(self.tree, tuple(_align(a, b)[0] + _align(a, b)[1]
                                           for a, b in zip(self.values, other.values)),
                          name=f"{self.name}+{other.name}")

    def scaled(self, factor: float) -> "AdaptedProcess":
        return type(self)(self.tree, tuple(factor * v for v in self.values), name=f"{factor:g}{self.name}")


class Martingale(AdaptedProcess):
    def martingale_defect(self) -> float:
        """
        max |E[M_{t+1} | F_t] - M_t| over all nodes.
        """
        worst = 0.0
        for t in range(self.tree.steps):
            children = self.values[t + 1].reshape(1 << t, 2, *self.family_shape).mean(axis=1)
            worst = max(worst, float(np.max(np.abs(children - self.values[t]), initial=0.0)))
        return worst


def _align(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Add trailing axes to the lower dimensional array so a family broadcasts against a single process.
    """
    if a.ndim < b.ndim:
        a = a.reshape(a.shape + (1,) * (b.ndim - a.ndim))
    elif b.ndim < a.ndim:
        b = b.reshape(b.shape + (1,) * (a.ndim - b.ndim))
    return a, b


def _reduce_max(x: np.ndarray):
    """
    max |x| over the path axis; a float for a single process, an array for a family.
    """
    worst = np.max(np.abs(x), axis=0) if len(x) else np.zeros(x.shape[1:])
    return float(worst) if np.ndim(worst) == 0 else worst


def _expectation(x: np.ndarray):
    value = np.mean(x, axis=0)
    return float(value) if np.ndim(value) == 0 else value


def closing_martingale(tree: DyadicTree, terminal: np.ndarray, name: str = "M") -> Martingale:
    """
    M_t = E[X | F_t] by backward induction from M_N = X.
    :param terminal: per-path values, shape (2^N, *family)
    """
    terminal = np.asarray(terminal, dtype=float)
    if terminal.shape[0] != tree.path_count:
        raise ValueError(f"expected {tree.path_count} terminal values, got {terminal.shape[0]}")
    values = [terminal]
    for t in range(tree.steps - 1, -1, -1):
        values.append(values[-1].reshape(1 << t, 2, *terminal.shape[1:]).mean(axis=1))
    return Martingale(tree, tuple(reversed(values)), name=name)


def walk(tree: DyadicTree) -> Martingale:
    """
    The random walk S itself.
    """
    values = [np.zeros(1)]
    for t in range(tree.steps):
        values.append(np.repeat(values[-1], 2) + np.tile([-tree.scale, tree.scale], 1 << t))
    return Martingale(tree, tuple(values), name="S")


def walk_squared(tree: DyadicTree) -> Martingale:
    """
    Closing of S_N^2, which is S_t^2 + (N - t) scale^2.
    """
    return closing_martingale(tree, walk(tree).terminal ** 2, name="S^2")


def martingale_basis(tree: DyadicTree, block: int = 256) -> Iterator[Martingale]:
    """
    Closings of the centered path indicators 1_{p=j} - 2^-N, j < 2^N - 1, in family blocks.
    Together they span every martingale started at zero.
    """
    size = tree.path_count
    for start in range(0, size - 1, block):
        columns = np.arange(start, min(start + block, size - 1))
        terminal = np.full((size, len(columns)), -1.0 / size)
        terminal[columns, np.arange(len(columns))] += 1.0
        yield closing_martingale(tree, terminal, name=f"basis[{start}:{columns[-1] + 1}]")


@dataclass(frozen=True, eq=False)
class RandomTime:
    """
    A value in 1..N per path.
    """
    tree: DyadicTree
    values: np.ndarray
    name: str = "rho"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64)
        if values.shape != (self.tree.path_count,):
            raise ValueError(f"a random time needs one value per path ({self.tree.path_count})")
        if values.min() < 1 or values.max() > self.tree.steps:
            raise ValueError(f"random time values must lie in 1..{self.tree.steps}")
        object.__setattr__(self, "values", values)


def value_at(process: AdaptedProcess, rho: RandomTime) -> np.ndarray:
    """
    X_rho per path.
    """
    tree = process.tree
    out = np.empty((tree.path_count, *process.family_shape))
    for t in range(1, tree.steps + 1):
        mask = rho.values == t
        out[mask] = process.values[t][tree.paths[mask] >> (tree.steps - t)]
    return out


def is_stopping_time(tree: DyadicTree, rho: RandomTime) -> bool:
    """
    {rho <= t} is F_t-measurable for every t.
    """
    for t in range(1, tree.steps):
        stopped = (rho.values <= t).reshape(1 << t, -1)
        if np.any(stopped.min(axis=1) != stopped.max(axis=1)):
            return False
    return True


def is_honest(tree: DyadicTree, rho: RandomTime) -> bool:
    """
    On every F_t atom, the paths with rho <= t all share the same rho.
    """
    for t in range(1, tree.steps):
        values = rho.values.reshape(1 << t, -1)
        masked_low = np.where(values <= t, values, tree.steps + 1).min(axis=1)
        masked_high = np.where(values <= t, values, 0).max(axis=1)
        settled = masked_high > 0
        if np.any(masked_low[settled] != masked_high[settled]):
            return False
    return True


@dataclass(frozen=True, eq=False)
class AzemaTriple:
    """
    Z_t = P[rho > t | F_t], the dual optional projection A, and mu = A + Z = E[A_N | F_t].
    """
    z: AdaptedProcess
    a: AdaptedProcess
    mu: Martingale
    rho: RandomTime

    def invariant_defect(self) -> dict[str, float]:
        """
        How far the triple is from its defining identities, one number per identity.
        """
        tree = self.mu.tree
        z_range = max(max(float(np.max(-v, initial=0.0)), float(np.max(v - 1, initial=0.0))) for v in self.z.values)
        monotone = max(float(np.max(-self.a.increments(t), initial=0.0)) for t in range(1, tree.steps + 1))
        sum_defect = max(float(np.max(np.abs(m - a - z))) for m, a, z in zip(self.mu.values, self.a.values,
                                                                             self.z.values))
        return {"z_range": z_range,
                "a_monotone": monotone,
                "mu_sum": sum_defect,
                "mu_martingale": self.mu.martingale_defect(),
                "a_mass": abs(float(np.mean(self.a.terminal)) - 1.0),
                "z_terminal": float(np.max(np.abs(self.z.terminal)))}


def azema_triple(tree: DyadicTree, rho: RandomTime) -> AzemaTriple:
    """
    Z, A and mu for rho by conditional counting over the F_t atoms.
    """
    z = [tree.conditional_expectation(rho.values > t, t) for t in range(tree.steps + 1)]
    a = [np.zeros(1)]
    for t in range(1, tree.steps + 1):
        a.append(np.repeat(a[-1], 2) + tree.conditional_expectation(rho.values == t, t))
    a_process = AdaptedProcess(tree, tuple(a), name="A")
    mu = closing_martingale(tree, a_process.terminal, name="mu")
    return AzemaTriple(z=AdaptedProcess(tree, tuple(z), name="Z"), a=a_process, mu=mu, rho=rho)


def _bracket_increments(m: AdaptedProcess, other: AdaptedProcess, t: int) -> np.ndarray:
    """
    E[dM_t dM'_t | F_{t-1}] per node at time t-1.
    """
    dm, dother = _align(m.increments(t), other.increments(t))
    product = dm * dother
    return product.reshape(1 << (t - 1), 2, *product.shape[1:]).mean(axis=1)


def predictable_bracket(tree: DyadicTree, m: Martingale, other: Martingale) -> AdaptedProcess:
    """
    <M, M'>_t = sum over s <= t of E[dM_s dM'_s | F_{s-1}].
    Predictable, stored at time t with the value repeated over both children.
    """
    first = _align(m.values[0], other.values[0])
    values = [np.zeros(np.broadcast_shapes(first[0].shape, first[1].shape))]
    for t in range(1, tree.steps + 1):
        values.append(np.repeat(values[-1] + _bracket_increments(m, other, t), 2, axis=0))
    return AdaptedProcess(tree, tuple(values), name=f"<{m.name},{other.name}>")


def s1_functional(tree: DyadicTree, m: Martingale, triple: AzemaTriple):
    """
    T(M) = E[<M, mu>_N]; M is in S1 exactly when this vanishes.
    """
    return _expectation(predictable_bracket(tree, m, triple.mu).terminal)


class S1Formulas(NamedTuple):
    bracket: object
    mu_form: object
    a_form: object


def s1_formulas(tree: DyadicTree, m: Martingale, triple: AzemaTriple) -> S1Formulas:
    """
    The three equal expressions of T(M): E[<M,mu>_N], E[M_N (mu_N - 1)] and E[M_N (A_N - 1)].
    """
    terminal = m.terminal
    mu_terminal = _align(terminal, triple.mu.terminal)[1]
    a_terminal = _align(terminal, triple.a.terminal)[1]
    return S1Formulas(bracket=s1_functional(tree, m, triple),
                      mu_form=_expectation(terminal * (mu_terminal - 1)),
                      a_form=_expectation(terminal * (a_terminal - 1)))


def expectation_at_rho(tree: DyadicTree, m: Martingale, rho: RandomTime):
    """
    E[M_rho] by a direct sum over the paths.
    """
    return _expectation(value_at(m, rho))


def dual_projection_forms(tree: DyadicTree, m: Martingale, triple: AzemaTriple) -> tuple:
    """
    E[sum_s M_s dA_s] and E[M_N A_N], both equal to E[M_rho].
    """
    total = 0.0
    for t in range(1, tree.steps + 1):
        values, jumps = _align(m.values[t], triple.a.increments(t))
        total = total + np.sum(values * jumps, axis=0) / (1 << t)
    terminal, a_terminal = _align(m.terminal, triple.a.terminal)
    total = float(total) if np.ndim(total) == 0 else total
    return total, _expectation(terminal * a_terminal)


class KunitaWatanabeDecomposition(NamedTuple):
    residual: Martingale
    integrand: AdaptedProcess
    integral: Martingale
    membership: object


def kunita_watanabe(tree: DyadicTree, m: Martingale, mu: Martingale) -> KunitaWatanabeDecomposition:
    """
    Split M = N + int k dmu with <N, mu> = 0.
    k_t = E[dM dmu | F_{t-1}] / E[dmu^2 | F_{t-1}], set to 0 where the denominator vanishes.
    membership is E[sum_t k_t d<mu>_t], which equals T(M) when mu comes from a random time.
    """
    integrand = [np.zeros(np.broadcast_shapes(*(v.shape for v in _align(m.values[0], mu.values[0]))))]
    integral = [np.zeros_like(integrand[0])]
    membership = np.zeros(integrand[0].shape[1:])
    for t in range(1, tree.steps + 1):
        covariation = _bracket_increments(m, mu, t)
        variance = _align(_bracket_increments(mu, mu, t), covariation)[0]
        null = np.abs(variance) <= DIVISION_NULL_TOLERANCE
        k = np.where(null, 0.0, covariation / np.where(null, 1.0, variance))
        k_children = np.repeat(k, 2, axis=0)
        integrand.append(k_children)
        dmu = _align(mu.increments(t), k_children)[0]
        integral.append(np.repeat(integral[-1], 2, axis=0) + k_children * dmu)
        membership = membership + np.sum(k * variance, axis=0) / (1 << (t - 1))
    integral_process = Martingale(tree, tuple(integral), name=f"int k d{mu.name}")
    residual = Martingale(tree, tuple(_align(mv, iv)[0] - _align(mv, iv)[1]
                                      for mv, iv in zip(m.values, integral)), name=f"N({m.name})")
    membership = float(membership) if np.ndim(membership) == 0 else membership
    return KunitaWatanabeDecomposition(residual=residual,
                                       integrand=AdaptedProcess(tree, tuple(integrand), name="k"),
                                       integral=integral_process, membership=membership)


class SigmaFieldFlavor(enum.Enum):
    OPTIONAL = "optional"
    PREDICTABLE = "predictable"


@dataclass(frozen=True, eq=False)
class SigmaFieldAtRho:
    """
    F_rho (optional) or F_rho- (predictable) as a partition of the paths.
    atoms[p] is the atom label of path p.
    """
    atoms: np.ndarray
    flavor: SigmaFieldFlavor

    @property
    def atom_count(self) -> int:
        return int(self.atoms.max()) + 1

    def conditional_expectation(self, x: np.ndarray) -> np.ndarray:
        """
        E[X | sigma field] per path (uniform path weights).
        """
        return _group_mean(self.atoms, np.asarray(x, dtype=float))


def _group_mean(labels: np.ndarray, x: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(labels, return_inverse=True)
    inverse = inverse.reshape(-1)
    sums = np.zeros((inverse.max() + 1, *x.shape[1:]))
    np.add.at(sums, inverse, x)
    counts = np.bincount(inverse).reshape(-1, *([1] * (x.ndim - 1)))
    return (sums / counts)[inverse]


def sigma_field_at_rho(tree: DyadicTree, rho: RandomTime,
                       flavor: SigmaFieldFlavor = SigmaFieldFlavor.OPTIONAL) -> SigmaFieldAtRho:
    """
    Two paths share an atom iff rho agrees and so do the prefixes up to rho (optional)
    or up to rho - 1 (predictable).
    """
    known = rho.values if flavor is SigmaFieldFlavor.OPTIONAL else rho.values - 1
    prefix = tree.paths >> (tree.steps - known)
    keys = rho.values * tree.path_count + prefix
    _, atoms = np.unique(keys, return_inverse=True)
    return SigmaFieldAtRho(atoms=atoms.reshape(-1), flavor=flavor)


def s2_defect(tree: DyadicTree, m: Martingale, time: RandomTime):
    """
    max over paths of |E[M_N | F_L] - M_L|; zero iff M is in S2 for this time.
    """
    projected = sigma_field_at_rho(tree, time).conditional_expectation(m.terminal)
    return _reduce_max(projected - value_at(m, time))


class AzemaYorOutcome(NamedTuple):
    vanishes_at_l: float
    projection: float
    equivalent: bool


def azema_yor_defect(tree: DyadicTree, m: Martingale, time: RandomTime) -> AzemaYorOutcome:
    """
    a = max|M_L| and b = max|E[M_N | F_L]|, plus whether a = 0 exactly when b = 0.
    Only recorded: the equivalence needs L to avoid stopping times, which trees cannot offer.
    """
    if not is_honest(tree, time):
        raise NotHonestError(f"{time.name} is not honest")
    a = float(np.max(np.abs(value_at(m, time))))
    b = float(np.max(np.abs(sigma_field_at_rho(tree, time).conditional_expectation(m.terminal))))
    return AzemaYorOutcome(vanishes_at_l=a, projection=b,
                           equivalent=(a <= TREE_TOLERANCE) == (b <= TREE_TOLERANCE))


def corollary_projection(tree: DyadicTree, m: Martingale, time: RandomTime) -> Martingale:
    """
    The martingale closed by M_N - E[M_N | F_L], orthogonal to F_L at the terminal time.
    """
    projected = sigma_field_at_rho(tree, time).conditional_expectation(m.terminal)
    return closing_martingale(tree, m.terminal - projected, name=f"{m.name}-E[{m.name}|F_L]")


class EnlargementMode(enum.Enum):
    STOPPED = "stopped"
    HONEST = "honest"


class BracketConvention(enum.Enum):
    """
    How the drift of the enlarged decomposition is discretized:

    * predictable - E[dM dmu | F_{s-1}] over Z_{s-1}
    * optional - realized dM dmu over Z_{s-1}
    * optional-current - realized dM dmu over Z_s
    """
    PREDICTABLE = "predictable"
    OPTIONAL = "optional"
    OPTIONAL_CURRENT = "optional-current"


@dataclass(frozen=True, eq=False)
class EnlargementResidual:
    residual: np.ndarray  # shape (N+1, 2^N, *family), the compensated process per path
    violation: float
    flagged: int
    mode: EnlargementMode
    convention: BracketConvention


def _divide(numerator: np.ndarray, divisor: np.ndarray, active: np.ndarray) -> tuple[np.ndarray, int]:
    """
    numerator / divisor on the active set. Zero over zero is skipped and counted,
    a nonzero numerator over zero raises.
    """
    numerator, divisor = _align(numerator, divisor)
    active = _align(active, numerator)[0]
    null = active & (np.abs(divisor) <= DIVISION_NULL_TOLERANCE)
    if np.any(null & (np.abs(numerator) > DIVISION_NULL_TOLERANCE)):
        raise DegenerateDivisionError("drift term divides a nonzero bracket by zero")
    shape = np.broadcast_shapes(numerator.shape, divisor.shape, active.shape)
    quotient = np.divide(numerator, divisor, out=np.zeros(shape), where=active & ~null)
    return quotient, int(np.count_nonzero(null))


def _enlarged_atoms(tree: DyadicTree, rho: RandomTime, t: int) -> np.ndarray:
    """
    Atoms of F^rho_t: the F_t prefix together with min(rho, t + 1).
    """
    return (tree.paths >> (tree.steps - t)) * (tree.steps + 2) + np.minimum(rho.values, t + 1)


def enlargement_residual(tree: DyadicTree, m: Martingale, rho: RandomTime, mode: EnlargementMode,
                         convention: BracketConvention = BracketConvention.PREDICTABLE,
                         triple: AzemaTriple | None = None) -> EnlargementResidual:
    """
    Subtract the discretized drift of M in the enlarged filtration and measure what is left.

    stopped mode: M_{t^rho} - sum_{s <= t^rho} d<M,mu>_s / Z_{s-1}
    honest mode:  M_t - sum_{s <= t^rho} d<M,mu>_s / Z_{s-1} + sum_{rho < s <= t} d<M,mu>_s / (1 - Z_{s-1})

    The violation is max |E[dM~_{t+1} | F^rho_t]| over all t and atoms.
    """
    if mode is EnlargementMode.HONEST and not is_honest(tree, rho):
        raise NotHonestError(f"{rho.name} is not honest")
    triple = triple or azema_triple(tree, rho)
    log = logger.getChild("enlargement")

    family_shape = np.broadcast_shapes(m.family_shape, triple.mu.family_shape)
    level = np.zeros((tree.path_count, *family_shape))
    residual = [level]
    flagged = 0
    for s in range(1, tree.steps + 1):
        dm = tree.spread(m.increments(s), s)
        if convention is BracketConvention.PREDICTABLE:
            bracket = tree.spread(_bracket_increments(m, triple.mu, s), s - 1)
        else:
            bracket = tree.spread(np.multiply(*_align(m.increments(s), triple.mu.increments(s))), s)
        z_index = s if convention is BracketConvention.OPTIONAL_CURRENT else s - 1
        z = triple.z.on_paths(z_index)
        before = rho.values >= s
        drift, skipped = _divide(bracket, z, before)
        flagged += skipped
        step = np.where(_align(before, dm)[0], dm, 0.0) - drift
        if mode is EnlargementMode.HONEST:
            after_drift, skipped = _divide(bracket, 1 - z, rho.values < s)
            flagged += skipped
            step = step + np.where(_align(rho.values < s, dm)[0], dm, 0.0) + after_drift
        level = level + step
        residual.append(level)

    violation = 0.0
    for t in range(tree.steps):
        increment = residual[t + 1] - residual[t]
        conditional = _group_mean(_enlarged_atoms(tree, rho, t), increment)
        violation = max(violation, float(np.max(np.abs(conditional), initial=0.0)))
    if flagged:
        log.debug(f"{rho.name}: skipped {flagged} zero-over-zero drift terms ({convention.value})")
    return EnlargementResidual(residual=np.stack(residual), violation=violation, flagged=flagged,
                               mode=mode, convention=convention)


def adjudicate_conventions(tree: DyadicTree, m: Martingale, rho: RandomTime,
                           mode: EnlargementMode) -> dict[BracketConvention, float]:
    """
    Violation per bracket convention; inf where the convention divides a nonzero term by zero.
    """
    triple = azema_triple(tree, rho)
    outcome = {}
    for convention in BracketConvention:
        try:
            outcome[convention] = enlargement_residual(tree, m, rho, mode, convention, triple).violation
        except DegenerateDivisionError:
            outcome[convention] = math.inf
    return outcome


@dataclass(frozen=True, eq=False)
class PseudoStoppingOutcome:
    time: RandomTime
    stopping: bool
    expectation_defect: float  # max over the basis of |E[M_rho] - M_0|
    s1_defect: float  # max over the basis of |T(M)|
    stopped_violation: float  # M_{t^rho} fails to be an F^rho martingale by this much


def pseudo_stopping_search(tree: DyadicTree, family: Iterable[RandomTime],
                           basis: list[Martingale] | None = None) -> list[PseudoStoppingOutcome]:
    """
    Keep the times with A_N = 1 on every path and check the three equivalent properties on each.
    """
    basis = basis if basis is not None else list(martingale_basis(tree))
    found = []
    examined = 0
    for rho in family:
        examined += 1
        triple = azema_triple(tree, rho)
        if np.max(np.abs(triple.a.terminal - 1)) > TREE_TOLERANCE:
            continue
        expectation = 0.0
        s1 = 0.0
        stopped = 0.0
        for block in basis:
            expectation = max(expectation, float(np.max(np.abs(expectation_at_rho(tree, block, rho)
                                                                 - block.values[0][0]))))
            s1 = max(s1, float(np.max(np.abs(s1_functional(tree, block, triple)))))
            stopped = max(stopped, enlargement_residual(tree, block, rho, EnlargementMode.STOPPED,
                                                        triple=triple).violation)
        found.append(PseudoStoppingOutcome(time=rho, stopping=is_stopping_time(tree, rho),
                                           expectation_defect=expectation, s1_defect=s1, stopped_violation=stopped))
    logger.getChild("pseudo_stopping").debug(f"{len(found)} of {examined} candidates have A_N = 1")
    return found


class ResolutionOutcome(NamedTuple):
    drift_defect: object
    s2_defect: object
    flagged: int


def resolution_une_defect(tree: DyadicTree, m: Martingale, time: RandomTime) -> ResolutionOutcome:
    """
    max over F_L atoms of |E[sum_{s > L} d<M,mu>_s / (1 - Z_{s-1}) | F_L]|, next to s2_defect(M, L).
    """
    if not is_honest(tree, time):
        raise NotHonestError(f"{time.name} is not honest")
    triple = azema_triple(tree, time)
    total = np.zeros((tree.path_count, *np.broadcast_shapes(m.family_shape, triple.mu.family_shape)))
    flagged = 0
    for s in range(1, tree.steps + 1):
        bracket = tree.spread(_bracket_increments(m, triple.mu, s), s - 1)
        term, skipped = _divide(bracket, 1 - triple.z.on_paths(s - 1), time.values < s)
        flagged += skipped
        total = total + term
    projected = sigma_field_at_rho(tree, time).conditional_expectation(total)
    return ResolutionOutcome(drift_defect=_reduce_max(projected), s2_defect=s2_defect(tree, m, time),
                             flagged=flagged)


# Random time generators

def deterministic_time(tree: DyadicTree, t: int) -> RandomTime:
    return RandomTime(tree, np.full(tree.path_count, t), name=f"t={t}")


def _walk_paths(tree: DyadicTree) -> np.ndarray:
    """
    S_1..S_N per path, shape (2^N, N).
    """
    s = walk(tree)
    return np.stack([s.on_paths(t) for t in range(1, tree.steps + 1)], axis=1)


def honest_max_time(tree: DyadicTree) -> RandomTime:
    """
    The last t in 1..N with S_t = max(S_1, ..., S_N).
    """
    levels = _walk_paths(tree)
    at_max = np.isclose(levels, levels.max(axis=1, keepdims=True))
    last = tree.steps - np.argmax(at_max[:, ::-1], axis=1)
    return RandomTime(tree, last, name="last max")


def structured_times(tree: DyadicTree) -> list[RandomTime]:
    """
    Deterministic times, first and last visits to the overall max and min, the last zero
    (N when there is none) and the first passages above and below zero.
    """
    levels = _walk_paths(tree)
    n = tree.steps

    def first(mask, fallback=n):
        return np.where(mask.any(axis=1), np.argmax(mask, axis=1) + 1, fallback)

    def last(mask, fallback=n):
        return np.where(mask.any(axis=1), n - np.argmax(mask[:, ::-1], axis=1), fallback)

    at_max = np.isclose(levels, levels.max(axis=1, keepdims=True))
    at_min = np.isclose(levels, levels.min(axis=1, keepdims=True))
    at_zero = np.isclose(levels, 0.0)
    times = [deterministic_time(tree, t) for t in range(1, n + 1)]
    times += [RandomTime(tree, first(at_max), name="first max"),
              RandomTime(tree, last(at_max), name="last max"),
              RandomTime(tree, first(at_min), name="first min"),
              RandomTime(tree, last(at_min), name="last min"),
              RandomTime(tree, last(at_zero), name="last zero"),
              RandomTime(tree, first(levels > 0), name="first up"),
              RandomTime(tree, first(levels < 0), name="first down")]
    return times


def honest_times(tree: DyadicTree) -> list[RandomTime]:
    return [rho for rho in structured_times(tree) if is_honest(tree, rho)]


def random_times(tree: DyadicTree, count: int, rng: np.random.Generator) -> Iterator[RandomTime]:
    for i in range(count):
        yield RandomTime(tree, rng.integers(1, tree.steps + 1, size=tree.path_count), name=f"fuzz{i}")


def _stopping_values(depth: int, time: int) -> Iterator[np.ndarray]:
    """
    Every way to stop below a node at `time` that has not stopped yet, with `depth` steps left:
    stop now, or let each child decide on its own. h(0) = 1 and h(d) = 1 + h(d-1)^2 ways.
    """
    yield np.full(1 << depth, time)
    if depth == 0:
        return
    for left, right in itertools.product(list(_stopping_values(depth - 1, time + 1)), repeat=2):
        yield np.concatenate([left, right])


def stopping_times(tree: DyadicTree) -> Iterator[RandomTime]:
    """
    All stopping times with values in 1..N: h(N-1)^2 of them, that is 1, 4, 25, 676 for N = 1..4.
    The root cannot stop at 0, so both nodes at time 1 choose independently.
    """
    if tree.steps > EXHAUSTIVE_STOPPING_TIME_STEPS:
        raise ValueError(f"stopping times are only enumerated up to {EXHAUSTIVE_STOPPING_TIME_STEPS} steps")
    below = list(_stopping_values(tree.steps - 1, 1))
    for i, (left, right) in enumerate(itertools.product(below, repeat=2)):
        yield RandomTime(tree, np.concatenate([left, right]), name=f"stopping{i}")


def all_random_times(tree: DyadicTree) -> Iterator[RandomTime]:
    """
    All N^(2^N) random times.
    """
    if tree.steps > EXHAUSTIVE_RANDOM_TIME_STEPS:
        raise ValueError(f"random times are only enumerated up to {EXHAUSTIVE_RANDOM_TIME_STEPS} steps")
    for i, values in enumerate(itertools.product(range(1, tree.steps + 1), repeat=tree.path_count)):
        yield RandomTime(tree, np.array(values), name=f"time{i}")
