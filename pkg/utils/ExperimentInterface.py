import importlib
import logging
import time

from configuration.constants import LOGGING_ROOT, EXPERIMENT_TYPES, ERROR_UNKNOWN_EXPERIMENT
from utils.Experiment import Check, Experiment
from utils.LabConfig import LabConfig
from utils.exceptions import UnknownExperimentError

logger = logging.getLogger(f"{LOGGING_ROOT}.interface")

# lab.py <--> ExperimentInterface <--> Check plug-ins (experiments/)


def experiment_class(experiment_id: str) -> type[Check]:
    """
    Import the plug-in class registered under an id.
    :param experiment_id: registry key, e.g. "E4"
    :return: the Check subclass
    """
    if experiment_id not in EXPERIMENT_TYPES:
        raise UnknownExperimentError(ERROR_UNKNOWN_EXPERIMENT.format(id=experiment_id))
    module_name, class_name = EXPERIMENT_TYPES[experiment_id]
    module = importlib.import_module(module_name)
    return getattr(module, class_name)


def experiment_stream(experiment_id: str) -> tuple[int, ...]:
    """
    Seed stream of an experiment: its registry number, so running it alone or with
    the others draws the same numbers.
    """
    return (int(experiment_id.lstrip("E")),)


def run_experiment(experiment_id: str, config: LabConfig) -> Experiment:
    """
    Run one registered check and turn it into an Experiment record.
    """
    log = logger.getChild("run")
    check = experiment_class(experiment_id)(config, experiment_stream(experiment_id))
    log.info(f"{experiment_id} ({check.name}) started")
    started = time.perf_counter()
    check.run()
    elapsed = time.perf_counter() - started
    experiment = Experiment(id=experiment_id, anchor=check.anchor, parameters=check.parameters(),
                            verdict=check.verdict(), artifacts=check.artifacts, checks=check.checks,
                            wall_clock=elapsed if config.timing else None)
    log.info(f"{experiment_id} finished in {elapsed:.1f}s: {experiment.verdict}")
    return experiment


def resolve_ids(selection: str) -> list[str]:
    """
    "all" or a single id to the list of ids to run, in registry order.
    """
    if selection == "all":
        return list(EXPERIMENT_TYPES)
    if selection not in EXPERIMENT_TYPES:
        raise UnknownExperimentError(ERROR_UNKNOWN_EXPERIMENT.format(id=selection))
    return [selection]


def run_experiments(ids: list[str], config: LabConfig) -> list[Experiment]:
    return [run_experiment(experiment_id, config) for experiment_id in ids]


def list_experiments() -> list[dict]:
    """
    Registry contents with the metadata of every plug-in.
    """
    entries = []
    for experiment_id in EXPERIMENT_TYPES:
        check = experiment_class(experiment_id)
        entries.append({"id": experiment_id, "name": check.name, "anchor": check.anchor,
                        "description": check.description})
    return entries
