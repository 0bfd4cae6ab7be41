import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from configuration.constants import (LOGGING_ROOT, DEFAULT_N, DEFAULT_DT, DEFAULT_SEED, DEFAULT_TREE_STEPS,
                                     DEFAULT_FUZZ_TIMES, DEFAULT_HORIZON, DEFAULT_LEVEL, DEFAULT_RENEWAL_FLOOR,
                                     QUADRATURE_ORDER, DEGREE_CAP, TREE_STEP_CAP, REPORT_FORMATS,
                                     ERROR_CONFIG_KEY, ERROR_CONFIG_VALUE, ERROR_CONFIG_MISSING)
from utils.BrownianPaths import PathConfig
from utils.exceptions import ConfigurationError

logger = logging.getLogger(f"{LOGGING_ROOT}.config")


@dataclass(frozen=True)
class LabConfig:
    """
    Everything a run depends on. Two runs with equal configurations produce equal reports.
    """
    n: int = DEFAULT_N  # Monte Carlo paths per experiment
    dt: float = DEFAULT_DT
    seed: int = DEFAULT_SEED
    tree_steps: int = DEFAULT_TREE_STEPS  # Largest tree in the tree sweeps
    fuzz_times: int = DEFAULT_FUZZ_TIMES  # Random times drawn per tree
    horizon: float = DEFAULT_HORIZON
    level: float = DEFAULT_LEVEL
    bridge_corrections: bool = True
    antithetic: bool = False
    renewal_floor: float | None = DEFAULT_RENEWAL_FLOOR
    quadrature_order: int = QUADRATURE_ORDER
    degree_cap: int = DEGREE_CAP
    tree_cap: int = TREE_STEP_CAP
    out: str | None = None
    format: str = "json"
    dump_samples: str | None = None
    timing: bool = False

    def __post_init__(self):
        problems = {"n": self.n < 1,
                    "dt": not 0 < self.dt <= self.horizon,
                    "seed": self.seed < 0,
                    "tree_steps": not 2 <= self.tree_steps <= self.tree_cap,
                    "fuzz_times": self.fuzz_times < 0,
                    "horizon": not math.isfinite(self.horizon) or self.horizon <= 0,
                    "level": self.level == 0,
                    "renewal_floor": self.renewal_floor is not None and self.renewal_floor >= 0,
                    "quadrature_order": self.quadrature_order < 2,
                    "degree_cap": self.degree_cap < 4,
                    "format": self.format not in REPORT_FORMATS}
        for key, failed in problems.items():
            if failed:
                raise ConfigurationError(ERROR_CONFIG_VALUE.format(key=key, value=getattr(self, key),
                                                                   reason="out of range"))

    def path_config(self, stream: tuple[int, ...], **overrides) -> PathConfig:
        """
        Path sampler settings on a given seed stream.
        """
        settings = {"dt": self.dt, "horizon": self.horizon, "level": self.level, "seed": self.seed,
                    "stream": stream, "bridge_corrections": self.bridge_corrections,
                    "antithetic": self.antithetic, "renewal_floor": self.renewal_floor}
        settings.update(overrides)
        return PathConfig(**settings)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(LabConfig)}
_OPTIONAL = {"renewal_floor", "out", "dump_samples"}


def _coerce(key: str, value):
    """
    Turn a YAML or command line value into the type of the field.
    """
    if value is None:
        if key in _OPTIONAL:
            return None
        raise ConfigurationError(ERROR_CONFIG_VALUE.format(key=key, value=value, reason="may not be empty"))
    default = _FIELDS[key].default
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered not in ("true", "false", "yes", "no", "1", "0"):
                    raise ValueError("expected a boolean")
                return lowered in ("true", "yes", "1")
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError("expected an integer")
            return int(value, 0) if isinstance(value, str) else int(value)
        if isinstance(default, float) or key == "renewal_floor":
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(ERROR_CONFIG_VALUE.format(key=key, value=value, reason=e)) from e


def load_configuration(path) -> dict:
    """
    Load a flat YAML mapping of configuration keys.
    :param path: file to read
    :return: the raw mapping (validated for unknown keys only)
    """
    log = logger.getChild("load")
    try:
        with open(path) as handle:
            loaded = YAML(typ="safe").load(handle)
    except FileNotFoundError as e:
        log.critical(ERROR_CONFIG_MISSING.format(path=path))
        raise ConfigurationError(ERROR_CONFIG_MISSING.format(path=path)) from e
    except YAMLError as e:
        log.critical(f"Could not parse {path}: {e}")
        raise ConfigurationError(f"Could not parse {path}: {e}") from e
    loaded = loaded or {}
    if not isinstance(loaded, dict):
        raise ConfigurationError(f"{path} must hold a flat mapping of keys to values")
    for key in loaded:
        if key not in _FIELDS:
            raise ConfigurationError(ERROR_CONFIG_KEY.format(key=key))
    log.debug(f"Loaded {len(loaded)} keys from {Path(path)}")
    return dict(loaded)


def merge_configuration(file_values: dict | None = None, flags: dict | None = None) -> LabConfig:
    """
    Defaults, overridden by the file, overridden by the flags that were actually given.
    """
    settings = {}
    for source in (file_values or {}, flags or {}):
        for key, value in source.items():
            if key not in _FIELDS:
                raise ConfigurationError(ERROR_CONFIG_KEY.format(key=key))
            if source is flags and value is None:
                continue  # Flag not given
            settings[key] = _coerce(key, value)
    return LabConfig(**settings)
