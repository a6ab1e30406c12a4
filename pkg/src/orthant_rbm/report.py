"""JSON serialization of reports and the run manifest embedded in each."""

import enum
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["RunManifest", "to_jsonable", "dumps", "file_sha256"]

FLOAT_FORMAT = ".17g"


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Provenance of one CLI invocation.

    ``config`` deliberately leaves out the worker count: results do not
    depend on it, and reports must compare equal across worker counts.
    """

    command: str
    model_sha256: str
    config: dict
    seed: int
    version: str
    wall_time: float

    def to_dict(self):
        # wall_time last, so it is the only line that differs between reruns
        return {
            "command": self.command,
            "model_sha256": self.model_sha256,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "wall_time": self.wall_time,
        }


def to_jsonable(obj):
    """Convert reports, enums and numpy values into plain JSON types."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, FLOAT_FORMAT)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = (pad + _encode(v, indent, level + 1) for v in obj)
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (pad + json.dumps(k) + ": " + _encode(v, indent, level + 1)
                 for k, v in obj.items())
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """Serialize with every float written to 17 significant digits.

    Non-finite floats become ``null``. Scalar lists stay on one line so
    vectors and matrix rows read naturally.
    """
    return _encode(to_jsonable(obj), indent, 0) + "\n"
