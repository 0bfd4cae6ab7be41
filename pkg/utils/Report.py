import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from configuration.constants import LOGGING_ROOT, VERSION, CSV_HEADER, REPORT_FORMATS
from utils.Experiment import Experiment
from utils.conversion import artifact_value, flatten

logger = logging.getLogger(f"{LOGGING_ROOT}.report")


@dataclass
class Report:
    config: dict
    seed: int
    experiments: list[Experiment] = field(default_factory=list)
    version: str = VERSION
    wall_clock: float | None = None  # Only kept when timing is on

    def as_dict(self) -> dict:
        out = {"version": self.version, "seed": self.seed, "config": artifact_value(self.config),
               "experiments": [experiment.as_dict() for experiment in self.experiments]}
        if self.wall_clock is not None:
            out["wall_clock"] = self.wall_clock
        return out


def render_report(report: Report, report_format: str = "json") -> str:
    """
    The report as text: canonical JSON, or CSV rows experiment,metric,value.
    """
    if report_format not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {report_format!r}")
    if report_format == "json":
        return json.dumps(report.as_dict(), indent=2, allow_nan=False) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerow(["", "version", report.version])
    writer.writerow(["", "seed", report.seed])
    for experiment in report.experiments:
        record = experiment.as_dict()
        del record["id"]
        for metric, value in flatten(record):
            writer.writerow([experiment.id, metric, value])
    return buffer.getvalue()


def emit_report(report: Report, path=None, report_format: str = "json") -> str:
    """
    Write the report to a file (or just return it when no path is given).
    :raises OSError: when the file cannot be written
    """
    text = render_report(report, report_format)
    if path is not None:
        Path(path).write_text(text)
        logger.getChild("emit").info(f"Wrote {len(report.experiments)} experiment(s) to {path}")
    return text
