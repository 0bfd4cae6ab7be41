import enum
import math

import numpy as np


def artifact_value(value):
    """
    Convert an artifact into plain JSON data.

    Objects with as_dict() are expanded, numpy scalars and arrays become floats and lists,
    enums become their values, and non-finite floats become the strings "inf", "-inf" and "nan"
    so the document stays strict JSON.
    :param value: anything an experiment recorded
    :return: nested dicts, lists, str, int, float, bool and None only
    """
    if hasattr(value, "as_dict"):
        return artifact_value(value.as_dict())
    if isinstance(value, dict):
        return {str(k.value if isinstance(k, enum.Enum) else k): artifact_value(v) for k, v in value.items()}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [artifact_value(v) for v in value]
    if isinstance(value, np.ndarray):
        return [artifact_value(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def flatten(value, prefix: str = "") -> list[tuple[str, object]]:
    """
    Flatten nested artifacts into (dotted metric name, scalar) rows.

    {"ks": {"p_value": 0.4}, "bins": [1, 2]} -> [("ks.p_value", 0.4), ("bins.0", 1), ("bins.1", 2)]
    """
    value = artifact_value(value)
    if isinstance(value, dict):
        rows = []
        for key, inner in value.items():
            rows.extend(flatten(inner, f"{prefix}.{key}" if prefix else str(key)))
        return rows
    if isinstance(value, list):
        rows = []
        for i, inner in enumerate(value):
            rows.extend(flatten(inner, f"{prefix}.{i}" if prefix else str(i)))
        return rows
    return [(prefix, value)]


def registry_table(entries: list[dict]) -> str:
    """
    One line per registered experiment: id, name and anchor in aligned columns.
    """
    if not entries:
        return ""
    id_width = max(len(entry["id"]) for entry in entries)
    name_width = max(len(entry["name"]) for entry in entries)
    return "\n".join(f"{entry['id']:<{id_width}}  {entry['name']:<{name_width}}  {entry['anchor']}"
                     for entry in entries)
