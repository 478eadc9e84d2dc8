"""Deterministic JSON output shared by the writers."""

import json
import math

import numpy as np


def jsonable(obj):
    """Convert numpy scalars/arrays to Python types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dump_json(path, doc):
    with open(path, "w") as fh:
        json.dump(jsonable(doc), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
