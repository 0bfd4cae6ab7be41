import logging

import pytest

from configuration.constants import EXPERIMENT_TYPES, VERDICT_PASS, VERDICT_FAIL, VERDICT_OBSERVED
from utils import ExperimentInterface as interface
from utils.Experiment import Check
from utils.LabConfig import LabConfig
from utils.Report import Report, render_report
from utils.exceptions import UnknownExperimentError

TREE_CONFIG = LabConfig(n=200, dt=1e-2, tree_steps=4, fuzz_times=3)


def test_registry_is_complete():
    entries = interface.list_experiments()
    assert [entry["id"] for entry in entries] == [f"E{i}" for i in range(1, 15)]
    for entry in entries:
        assert entry["name"] and entry["anchor"] and entry["description"]
        check = interface.experiment_class(entry["id"])
        assert issubclass(check, Check)
        assert check.id == entry["id"]


def test_resolve_ids():
    assert interface.resolve_ids("all") == list(EXPERIMENT_TYPES)
    assert interface.resolve_ids("E7") == ["E7"]
    with pytest.raises(UnknownExperimentError):
        interface.resolve_ids("E99")
    with pytest.raises(UnknownExperimentError):
        interface.experiment_class("tree")


def test_streams_are_distinct():
    streams = {interface.experiment_stream(experiment_id) for experiment_id in EXPERIMENT_TYPES}
    assert len(streams) == len(EXPERIMENT_TYPES)


@pytest.mark.parametrize("experiment_id", ["E1", "E2"])
def test_tree_experiments_pass(experiment_id):
    experiment = interface.run_experiment(experiment_id, TREE_CONFIG)
    assert experiment.verdict == VERDICT_PASS, experiment.checks
    assert experiment.checks
    assert experiment.wall_clock is None


@pytest.mark.slow
def test_pseudo_stopping_search_passes():
    experiment = interface.run_experiment("E14", TREE_CONFIG)
    assert experiment.verdict == VERDICT_PASS, experiment.checks
    [two, three, four] = experiment.artifacts["search"]
    assert two["steps"] == 2 and four["steps"] == 4
    assert [row["stopping"] for row in experiment.artifacts["search"]] == [4, 25, 676]
    assert three["found"] >= 25
    assert experiment.checks["stopping_times_enumerated"]


def test_timing_is_opt_in():
    experiment = interface.run_experiment("E2", LabConfig(tree_steps=2, fuzz_times=1, timing=True))
    assert experiment.wall_clock is not None
    assert "wall_clock" in experiment.as_dict()


def test_report_is_reproducible():
    config = LabConfig(n=200, dt=1e-2)
    first = Report(config=config.as_dict(), seed=config.seed, experiments=[interface.run_experiment("E4", config)])
    second = Report(config=config.as_dict(), seed=config.seed, experiments=[interface.run_experiment("E4", config)])
    assert render_report(first) == render_report(second)
    assert first.experiments[0].verdict in (VERDICT_PASS, VERDICT_FAIL)


def test_observed_checks_never_fail(tmp_path):
    class AlwaysObserved(Check):
        id = "E0"
        observed = True

        def run(self):
            self.require("impossible", False)

    check = AlwaysObserved(LabConfig(dump_samples=str(tmp_path)), (0,))
    check.run()
    assert check.checks == {"impossible": False}
    assert check.verdict() == VERDICT_OBSERVED
    check.dump({"x": [1.0, 2.0]})
    assert (tmp_path / "E0.csv").exists()


def test_substreams_differ():
    check = Check(LabConfig(), (3,))
    assert check.rng(0).random() != check.rng(1).random()
    assert check.rng(0).random() == Check(LabConfig(), (3,)).rng(0).random()


PATH_CONFIG = LabConfig(n=400, dt=1e-3, tree_steps=4, fuzz_times=3)


@pytest.mark.slow
@pytest.mark.parametrize("experiment_id, verdicts", [
    ("E3", (VERDICT_PASS, VERDICT_OBSERVED)),
    ("E4", (VERDICT_PASS,)),
    ("E5", (VERDICT_PASS,)),
    ("E6", (VERDICT_PASS,)),
    ("E7", (VERDICT_OBSERVED,)),
    ("E8", (VERDICT_PASS,)),
    ("E9", (VERDICT_PASS,)),
    ("E10", (VERDICT_PASS,)),
    ("E11", (VERDICT_PASS,)),
    ("E12", (VERDICT_PASS,)),
    ("E13", (VERDICT_OBSERVED,)),
])
def test_experiment_verdicts_on_small_runs(experiment_id, verdicts):
    experiment = interface.run_experiment(experiment_id, PATH_CONFIG)
    assert experiment.verdict in verdicts, experiment.checks
    assert experiment.checks


def test_enlargement_warns_once_about_skipped_terms(caplog):
    with caplog.at_level(logging.DEBUG, logger="stoplab"):
        experiment = interface.run_experiment("E3", LabConfig(tree_steps=3, fuzz_times=2))
    skipped = experiment.artifacts["skipped_zero_over_zero"]
    assert sum(skipped.values()) > 0
    warnings = [record for record in caplog.records
                if record.levelno == logging.WARNING and "zero-over-zero" in record.getMessage()]
    assert len(warnings) == 1
    assert warnings[0].name.endswith(".E3")


@pytest.mark.slow
def test_laguerre_membership_reads_m_phi_at_the_last_zero():
    experiment = interface.run_experiment("E5", PATH_CONFIG)
    overshoot = experiment.artifacts["overshoot"]
    assert 0.0 < overshoot.mean < 0.1
    gaps = experiment.artifacts["gaps"]
    assert gaps["L1"]["alpha_1"] == pytest.approx(1.0, abs=1e-9)
    for name, gap in gaps.items():
        assert gap["path_gap"].n == gap["gap"].n
        assert experiment.checks[f"{name}_path_gap"]


@pytest.mark.slow
def test_h1_bias_is_reported_apart_from_the_mean():
    experiment = interface.run_experiment("E10", PATH_CONFIG)
    bias = experiment.artifacts["h1_grid_bias"]
    assert bias["estimate"].mean >= -1e-12
    assert bias["estimate"].mean <= bias["tolerance"]
    assert experiment.artifacts["h1_grid_sup"].mean <= experiment.artifacts["h1_mean"].mean + 1e-12
    assert experiment.checks["h1_mean"]
