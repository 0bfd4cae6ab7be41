import json

import pytest

from lab import EXIT_PASS, EXIT_USAGE, build_parser, main


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "lab.yaml"
    path.write_text("n: 200\ndt: 0.01\nfuzz_times: 2\n")
    return str(path)


def test_list(capsys):
    assert main(["list"]) == EXIT_PASS
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 14
    assert lines[0].startswith("E1 ")


def test_unknown_experiment(small_config):
    assert main(["run", "E99", "--config", small_config]) == EXIT_USAGE


def test_bad_values_are_usage_errors(small_config, tmp_path):
    assert main(["run", "E1", "--config", small_config, "--dt", "0"]) == EXIT_USAGE
    assert main(["run", "E1", "--config", str(tmp_path / "missing.yaml")]) == EXIT_USAGE


def test_parser_keeps_flags_unset():
    args = build_parser().parse_args(["run", "E3"])
    assert args.n is None and args.timing is None and args.format is None
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "E3", "--format", "xml"])


def test_run_writes_the_report(small_config, tmp_path):
    out = tmp_path / "report.json"
    assert main(["run", "E1", "--config", small_config, "--tree-steps", "3", "--out", str(out)]) == EXIT_PASS
    document = json.loads(out.read_text())
    assert document["config"]["tree_steps"] == 3
    assert document["config"]["n"] == 200
    assert [experiment["id"] for experiment in document["experiments"]] == ["E1"]


def test_run_to_stdout_as_csv(small_config, capsys):
    assert main(["run", "E2", "--config", small_config, "--tree-steps", "2", "--format", "csv", "-v"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert out.startswith("experiment,metric,value\n")
    assert "E2,verdict,pass" in out
