import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from configuration.constants import LOGGING_ROOT, VERDICT_PASS, VERDICT_FAIL, VERDICT_OBSERVED
from utils.BrownianPaths import PathConfig, iterate_batches, write_samples
from utils.LabConfig import LabConfig
from utils.conversion import artifact_value

logger = logging.getLogger(f"{LOGGING_ROOT}.experiment")


@dataclass
class Experiment:
    """
    The outcome of one registered check.
    """
    id: str
    anchor: str
    parameters: dict
    verdict: str = VERDICT_OBSERVED
    artifacts: dict = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    wall_clock: float | None = None  # Seconds; only set when timing is on

    def as_dict(self) -> dict:
        out = {"id": self.id, "anchor": self.anchor, "verdict": self.verdict,
               "parameters": artifact_value(self.parameters), "checks": dict(self.checks),
               "artifacts": artifact_value(self.artifacts)}
        if self.wall_clock is not None:
            out["wall_clock"] = self.wall_clock
        return out


class Check:
    """
    Base class of the experiment plug-ins.

    Subclasses set the class-level metadata and implement run(), which records artifacts
    and named pass/fail conditions. Checks whose premises the setting cannot meet set
    observed = True: their conditions are still recorded but never fail the run.
    """
    id = None
    name = None
    anchor = None
    description = None
    observed = False

    def __init__(self, config: LabConfig, stream: tuple[int, ...]):
        """
        :param config: run configuration
        :param stream: seed stream owned by this experiment (spawn key prefix)
        """
        self.config = config
        self.stream = stream
        self.artifacts = {}
        self.checks = {}
        self.log = logger.getChild(self.id or type(self).__name__)

    def run(self) -> None:
        raise NotImplementedError

    def parameters(self) -> dict:
        return {"n": self.config.n, "dt": self.config.dt}

    def rng(self, *key: int) -> Generator:
        """
        A generator on a sub-stream of this experiment's stream.
        """
        return Generator(Philox(SeedSequence(entropy=self.config.seed, spawn_key=(*self.stream, *key))))

    def path_config(self, substream: int = 0, **overrides) -> PathConfig:
        return self.config.path_config((*self.stream, substream), **overrides)

    def collect(self, functional, substream: int = 0, **overrides) -> dict[str, np.ndarray]:
        """
        Run a per-batch functional over config.n paths and concatenate what it returns.
        :param functional: PathBatch -> {name: per-path array}
        :param substream: path stream under this experiment
        :param overrides: PathConfig fields to change (e.g. horizon=1.0)
        """
        paths = self.path_config(substream, **overrides)
        parts = {}
        for batch in iterate_batches(paths, self.config.n):
            for key, value in functional(batch).items():
                parts.setdefault(key, []).append(np.atleast_1d(np.asarray(value, dtype=float)))
        self.log.debug(f"collected {self.config.n} paths on substream {substream}")
        return {key: np.concatenate(values) for key, values in parts.items()}

    def dump(self, samples: dict[str, np.ndarray]) -> None:
        """
        Write raw per-path samples next to the report when dump_samples names a directory.
        """
        if self.config.dump_samples is None:
            return
        directory = Path(self.config.dump_samples)
        directory.mkdir(parents=True, exist_ok=True)
        write_samples(directory / f"{self.id}.csv", samples)

    def record(self, name: str, value) -> None:
        self.artifacts[name] = value

    def require(self, name: str, condition) -> bool:
        """
        Record a named condition of the verdict.
        """
        passed = bool(np.all(condition))
        self.checks[name] = passed
        if not passed:
            self.log.warning(f"{name} does not hold")
        return passed

    def verdict(self) -> str:
        if self.observed:
            return VERDICT_OBSERVED
        return VERDICT_PASS if all(self.checks.values()) else VERDICT_FAIL

    def __repr__(self):
        return f"{type(self).__name__}(id={self.id!r}, anchor={self.anchor!r})"
