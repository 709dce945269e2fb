"""Report plumbing: JSON-safe conversion, atomic writes, check verdicts."""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class CheckReport:
    """Uniform verdict object: {check, inputs, per_radius[], worst_slack, pass}."""

    check: str
    inputs: dict
    per_radius: list[dict] = field(default_factory=list)
    worst_slack: float = 0.0
    passed: bool = True
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "inputs": jsonify(self.inputs),
            "per_radius": jsonify(self.per_radius),
            "worst_slack": jsonify(self.worst_slack),
            "pass": self.passed,
            "notes": list(self.notes),
        }


def jsonify(obj):
    """Recursively convert numpy scalars/arrays and dataclass-likes for json."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return _safe_float(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float):
        return _safe_float(obj)
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if hasattr(obj, "to_dict"):
        return jsonify(obj.to_dict())
    return str(obj)


def _safe_float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def dumps_json(data) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(jsonify(data), indent=2, sort_keys=True) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(x: float) -> str:
    """Shortest round-trip decimal, identical to the JSON rendering."""
    return repr(float(x))
