import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from configuration.constants import (LOGGING_ROOT, DEFAULT_DT, DEFAULT_HORIZON, DEFAULT_LEVEL, DEFAULT_SEED,
                                     HORIZON_DOUBLING_CAP, ZERO_BAND_FACTOR, LOCAL_TIME_EPSILON_EXPONENT,
                                     LOCAL_TIME_TOLERANCE, PATH_BLOCK, SAMPLE_CSV_HEADER)

logger = logging.getLogger(f"{LOGGING_ROOT}.paths")

# Sub-stream ids under each path's spawn key
NORMALS = 0
CROSSING_UNIFORMS = 1
ZERO_UNIFORMS = 2


@dataclass(frozen=True)
class PathConfig:
    """
    Everything that determines a simulated path besides its id.
    """
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    level: float = DEFAULT_LEVEL
    seed: int = DEFAULT_SEED
    stream: tuple[int, ...] = ()  # Experiment-specific spawn key prefix
    bridge_corrections: bool = True
    antithetic: bool = False
    renewal_floor: float | None = None  # Negative excursions below this restart at 0 (hitting runs only)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.dt > self.horizon:
            raise ValueError(f"dt ({self.dt}) exceeds the horizon ({self.horizon})")
        if self.renewal_floor is not None and self.renewal_floor >= 0:
            raise ValueError(f"the renewal floor must be negative, got {self.renewal_floor}")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def zero_band(self) -> float:
        return ZERO_BAND_FACTOR * math.sqrt(self.dt)

    def generator(self, path_id: int, kind: int) -> Generator:
        """
        Counter-based generator for one path and one kind of draw.
        Path i gets the same numbers however the batch is partitioned.
        """
        return Generator(Philox(SeedSequence(entropy=self.seed, spawn_key=(*self.stream, path_id, kind))))

    def normal_source(self, path_id: int) -> tuple[Generator, float]:
        """
        Generator for the increments and the sign to apply (antithetic pairs share draws).
        """
        if self.antithetic:
            return self.generator(path_id // 2, NORMALS), (-1.0 if path_id % 2 else 1.0)
        return self.generator(path_id, NORMALS), 1.0


@dataclass(frozen=True, eq=False)
class PathBatch:
    """
    Paths on the grid 0, dt, ..., horizon; one row per path.
    The uniforms drive the Brownian bridge corrections, one per grid step.
    """
    path_ids: np.ndarray
    values: np.ndarray  # (paths, steps + 1), column 0 is B_0 = 0
    crossing_uniforms: np.ndarray  # (paths, steps)
    zero_uniforms: np.ndarray  # (paths, steps)
    dt: float
    bridge_corrections: bool = True

    @property
    def steps(self) -> int:
        return self.values.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    @property
    def zero_band(self) -> float:
        return ZERO_BAND_FACTOR * math.sqrt(self.dt)

    def index(self, t: float) -> int:
        """
        Grid index of time t (rounded to the nearest grid point).
        """
        k = int(round(t / self.dt))
        if not 0 <= k <= self.steps:
            raise ValueError(f"time {t} is outside the simulated range [0, {self.steps * self.dt}]")
        return k

    def at(self, t: float) -> np.ndarray:
        return self.values[:, self.index(t)]

    def row(self, i: int) -> "BrownianPath":
        return BrownianPath(path_ids=self.path_ids[i:i + 1], values=self.values[i:i + 1],
                            crossing_uniforms=self.crossing_uniforms[i:i + 1],
                            zero_uniforms=self.zero_uniforms[i:i + 1], dt=self.dt,
                            bridge_corrections=self.bridge_corrections)

    def __len__(self):
        return len(self.path_ids)


class BrownianPath(PathBatch):
    """
    A batch holding one path; module functions return scalars and 1-d series for it.
    """

    @property
    def path_id(self) -> int:
        return int(self.path_ids[0])


def _draw(config: PathConfig, path_id: int, steps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    normals, sign = config.normal_source(path_id)
    increments = sign * math.sqrt(config.dt) * normals.standard_normal(steps)
    crossing = config.generator(path_id, CROSSING_UNIFORMS).random(steps)
    zero = config.generator(path_id, ZERO_UNIFORMS).random(steps)
    return increments, crossing, zero


def simulate(config: PathConfig, path_id: int = 0) -> BrownianPath:
    """
    One path on [0, horizon]. Same (config, path_id), same path, bit for bit;
    a longer horizon extends the path without changing its prefix.
    """
    increments, crossing, zero = _draw(config, path_id, config.steps)
    values = np.concatenate([[0.0], np.cumsum(increments)])
    return BrownianPath(path_ids=np.array([path_id]), values=values[None, :], crossing_uniforms=crossing[None, :],
                        zero_uniforms=zero[None, :], dt=config.dt, bridge_corrections=config.bridge_corrections)


def simulate_batch(config: PathConfig, path_ids: Iterable[int]) -> PathBatch:
    path_ids = np.asarray(list(path_ids), dtype=np.int64)
    draws = [_draw(config, int(i), config.steps) for i in path_ids]
    increments = np.stack([d[0] for d in draws]) if len(draws) else np.zeros((0, config.steps))
    values = np.concatenate([np.zeros((len(path_ids), 1)), np.cumsum(increments, axis=1)], axis=1)
    return PathBatch(path_ids=path_ids, values=values,
                     crossing_uniforms=np.stack([d[1] for d in draws]) if len(draws) else increments.copy(),
                     zero_uniforms=np.stack([d[2] for d in draws]) if len(draws) else increments.copy(),
                     dt=config.dt, bridge_corrections=config.bridge_corrections)


def iterate_batches(config: PathConfig, n: int, block: int = PATH_BLOCK) -> Iterator[PathBatch]:
    """
    Paths 0..n-1 in blocks of at most `block` paths.
    """
    log = logger.getChild("batches")
    for start in range(0, n, block):
        log.debug(f"paths {start}..{min(start + block, n) - 1} of {n}")
        yield simulate_batch(config, range(start, min(start + block, n)))


def _squeeze(path: PathBatch, x):
    if isinstance(path, BrownianPath):
        x = np.asarray(x)[0]
        return float(x) if np.ndim(x) == 0 else x
    return x


def zero_events(path: PathBatch) -> tuple[np.ndarray, np.ndarray]:
    """
    Steps that contain a zero of B and where it sits.

    A step [a, b] contains a zero if the sign changes (root by linear interpolation) or,
    with bridge corrections, if a sampled bridge touches 0 (probability exp(-2ab/dt), placed mid-step).
    :return: (mask, location), both of shape (paths, steps)
    """
    a, b = path.values[:, :-1], path.values[:, 1:]
    change = (a * b < 0) | (b == 0)
    step_start = np.arange(path.steps) * path.dt
    with np.errstate(divide="ignore", invalid="ignore"):
        root = step_start + path.dt * np.where(change, a / (a - b), 0.5)
    location = np.where(change, root, step_start + path.dt / 2)
    if path.bridge_corrections:
        same_side = (a * b > 0)
        touch = same_side & (path.zero_uniforms < np.exp(np.minimum(-2 * a * b / path.dt, 0.0)))
        change = change | touch
    return change, location


def running_last_zero(path: PathBatch):
    """
    g_t = last zero before t, for every grid time t.
    """
    mask, location = zero_events(path)
    located = np.maximum.accumulate(np.where(mask, location, 0.0), axis=1)
    g = np.concatenate([np.zeros((len(path), 1)), located], axis=1)
    return _squeeze(path, g)


def last_zero_before(path: PathBatch, t: float = 1.0):
    """
    gamma(t) = sup{s <= t: B_s = 0}, resolved on the grid; 0 when no zero is seen after B_0.
    """
    k = path.index(t)
    mask, location = zero_events(path)
    mask, location = mask[:, :k], location[:, :k]
    if k == 0:
        return _squeeze(path, np.zeros(len(path)))
    last = k - 1 - np.argmax(mask[:, ::-1], axis=1)
    gamma = np.where(mask.any(axis=1), location[np.arange(len(path)), last], 0.0)
    return _squeeze(path, gamma)


def _tanaka_increments(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    |b| - |a| - sgn(a)(b - a): nonnegative, and nonzero only on steps where the sign changes.
    """
    return np.abs(b) - np.abs(a) - np.sign(a) * (b - a)


def local_time(path: PathBatch):
    """
    Local time at zero by the Tanaka residual l_t = |B_t| - sum_{s<t} sgn(B_s) dB_s.
    """
    increments = _tanaka_increments(path.values[:, :-1], path.values[:, 1:])
    ell = np.concatenate([np.zeros((len(path), 1)), np.cumsum(increments, axis=1)], axis=1)
    return _squeeze(path, ell)


def occupation_local_time(path: PathBatch, exponent: float = LOCAL_TIME_EPSILON_EXPONENT):
    """
    (time spent in [-eps, eps]) / (2 eps) with eps = dt^exponent.
    """
    epsilon = path.dt ** exponent
    inside = np.abs(path.values[:, :-1]) <= epsilon
    ell = np.concatenate([np.zeros((len(path), 1)), np.cumsum(inside * path.dt, axis=1) / (2 * epsilon)], axis=1)
    return _squeeze(path, ell)


def local_time_consistency(path: PathBatch, tolerance: float = LOCAL_TIME_TOLERANCE) -> float:
    """
    Relative gap between the mean terminal values of the two local time estimators.
    Logs a warning above the tolerance.
    """
    tanaka = float(np.mean(np.atleast_2d(local_time(path))[:, -1]))
    occupation = float(np.mean(np.atleast_2d(occupation_local_time(path))[:, -1]))
    gap = abs(tanaka - occupation) / max(tanaka, 1e-300)
    if gap > tolerance:
        logger.getChild("local_time").warning(f"local time estimators disagree by {gap:.2%} at dt={path.dt:g}")
    return gap


def lambda_process(path: PathBatch):
    """
    lambda_t = sqrt(2/pi) int_0^t dl_u / sqrt(1 - u), with 1 / sqrt(1 - u) averaged over each grid step.
    Needs a path on [0, 1].
    """
    if path.steps * path.dt > 1 + 1e-9:
        raise ValueError("lambda is only defined for paths on [0, 1]")
    increments = _tanaka_increments(path.values[:, :-1], path.values[:, 1:])
    u = np.arange(path.steps + 1) * path.dt
    root = np.sqrt(np.maximum(1 - u, 0.0))
    weights = 2 * (root[:-1] - root[1:]) / path.dt
    lam = math.sqrt(2 / math.pi) * np.cumsum(increments * weights, axis=1)
    return _squeeze(path, np.concatenate([np.zeros((len(path), 1)), lam], axis=1))


def first_passage(path: PathBatch, level: float):
    """
    First time the stored path reaches `level`, nan when it does not within the horizon.
    Straddling steps are located by linear interpolation, sampled bridge crossings mid-step.
    """
    if level == 0:
        raise ValueError("the level must be nonzero")
    direction = math.copysign(1.0, level)
    x = direction * path.values
    height = abs(level)
    a, b = x[:, :-1], x[:, 1:]
    crossed = b >= height
    if path.bridge_corrections:
        bridge = np.exp(np.minimum(-2 * (height - a) * (height - b) / path.dt, 0.0))
        crossed = crossed | ((a < height) & (path.crossing_uniforms < bridge))
    any_hit = crossed.any(axis=1)
    k = np.argmax(crossed, axis=1)
    rows = np.arange(len(path))
    a_k, b_k = a[rows, k], b[rows, k]
    straddle = b_k >= height
    with np.errstate(divide="ignore", invalid="ignore"):
        fraction = np.where(straddle, (height - a_k) / (b_k - a_k), 0.5)
    times = np.where(any_hit, (k + fraction) * path.dt, np.nan)
    return _squeeze(path, times)


class HittingTime(NamedTuple):
    time: float  # On the renewed clock when a renewal floor is set
    censored: bool
    horizon: float  # Horizon reached when the search stopped
    local_time: float  # Tanaka local time at zero accumulated up to the hit
    excursion_start: float = 0.0  # First grid value of the excursion that reaches the level


def _excursion_start(previous: np.ndarray, x: np.ndarray, current: float) -> float:
    changes = np.flatnonzero(previous * x <= 0)
    return float(x[changes[-1]]) if changes.size else current


def hitting_time(config: PathConfig, path_id: int, level: float | None = None) -> HittingTime:
    """
    First passage of `level` with horizon doubling.

    The path is drawn in blocks [0, H], [H, 2H], [2H, 4H], ... from the same counter-based
    streams as simulate(), so it is the same path, extended. The search gives up (censored)
    at HORIZON_DOUBLING_CAP * H. With a renewal floor, an excursion that reaches the floor
    is cut and the walk restarts at 0; this leaves the law of the local time at the hit unchanged.
    """
    level = config.level if level is None else level
    if level == 0:
        raise ValueError("the level must be nonzero")
    direction = math.copysign(1.0, level)
    height = abs(level)
    normals, sign = config.normal_source(path_id)
    crossing = config.generator(path_id, CROSSING_UNIFORMS)
    root_dt = math.sqrt(config.dt)

    position = 0.0
    ell = 0.0
    after_zero = 0.0
    elapsed = 0
    block_steps = config.steps
    limit = config.steps * HORIZON_DOUBLING_CAP
    while elapsed < limit:
        increments = direction * sign * root_dt * normals.standard_normal(block_steps)
        uniforms = crossing.random(block_steps)
        start = 0
        while start < block_steps:
            x = position + np.cumsum(increments[start:])
            previous = np.concatenate([[position], x[:-1]])
            crossed = x >= height
            if config.bridge_corrections:
                crossed |= (previous < height) & (
                        uniforms[start:] < np.exp(np.minimum(-2 * (height - previous) * (height - x) / config.dt, 0.0)))
            hit = int(np.argmax(crossed)) if crossed.any() else None
            floor = None
            if config.renewal_floor is not None:
                below = x <= config.renewal_floor
                floor = int(np.argmax(below)) if below.any() else None
            if floor is not None and (hit is None or floor < hit):
                ell += float(np.sum(_tanaka_increments(previous[:floor + 1], x[:floor + 1])))
                position = 0.0
                after_zero = 0.0
                start += floor + 1
                continue
            if hit is not None:
                ell += float(np.sum(_tanaka_increments(previous[:hit], x[:hit])))
                after_zero = _excursion_start(previous[:hit + 1], x[:hit + 1], after_zero)
                a, b = previous[hit], x[hit]
                fraction = (height - a) / (b - a) if b >= height else 0.5
                time = (elapsed + start + hit + fraction) * config.dt
                return HittingTime(time=time, censored=False, horizon=(elapsed + block_steps) * config.dt,
                                   local_time=ell, excursion_start=after_zero)
            ell += float(np.sum(_tanaka_increments(previous, x)))
            after_zero = _excursion_start(previous, x, after_zero)
            position = float(x[-1])
            start = block_steps
        elapsed += block_steps
        block_steps = elapsed  # Doubles the horizon reached
    logger.getChild("hitting_time").debug(f"path {path_id} censored at horizon {elapsed * config.dt:g}")
    return HittingTime(time=math.inf, censored=True, horizon=elapsed * config.dt, local_time=ell)


def local_time_at_hit(config: PathConfig, path_ids: Iterable[int], level: float | None = None) \
        -> tuple[np.ndarray, int]:
    """
    Local time at zero accumulated until the first passage of `level`, for each path.
    :return: (values of the uncensored paths, number of censored paths)
    """
    values = []
    censored = 0
    for path_id in path_ids:
        outcome = hitting_time(config, int(path_id), level)
        if outcome.censored:
            censored += 1
        else:
            values.append(outcome.local_time)
    if censored:
        logger.getChild("local_time_at_hit").warning(f"{censored} paths censored at "
                                                     f"{HORIZON_DOUBLING_CAP} x horizon; excluded")
    return np.array(values), censored


class LastZeroState(NamedTuple):
    z: np.ndarray
    a: np.ndarray
    censored: int


def azema_at_last_zero(config: PathConfig, path_ids: Iterable[int], level: float | None = None) -> LastZeroState:
    """
    Z = 1 - (x)^+ / |level| and A = l / (2|level|) at the first grid point of the excursion that reaches
    the level, x measured towards the level. A stays flat from there on, so A is also A_inf.
    :return: (Z, A, number of censored paths excluded)
    """
    height = abs(config.level if level is None else level)
    z, a = [], []
    censored = 0
    for path_id in path_ids:
        outcome = hitting_time(config, int(path_id), level)
        if outcome.censored:
            censored += 1
            continue
        z.append(1.0 - min(max(outcome.excursion_start, 0.0), height) / height)
        a.append(outcome.local_time / (2 * height))
    if censored:
        logger.getChild("azema_at_last_zero").warning(f"{censored} paths censored at "
                                                      f"{HORIZON_DOUBLING_CAP} x horizon; excluded")
    return LastZeroState(z=np.array(z), a=np.array(a), censored=censored)


def write_samples(path, samples: dict[str, np.ndarray], path_ids: np.ndarray | None = None) -> None:
    """
    Dump raw per-path samples as CSV rows path_id,functional,value.
    """
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SAMPLE_CSV_HEADER)
        for functional in sorted(samples):
            values = np.asarray(samples[functional])
            ids = np.arange(len(values)) if path_ids is None else path_ids
            for i, value in zip(ids, values):
                writer.writerow([int(i), functional, repr(float(value))])
