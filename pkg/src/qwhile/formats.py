"""Reading and writing the JSON matrix, state and predicate files.

A matrix is ``{"dim": n, "rows": [[[re, im], ...], ...]}``. State files add
``"shape": [[name, dim], ...]``; predicate files may add ``"register": [...]``
naming the variables the matrix acts on.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from qwhile.errors import FormatError
from qwhile.linalg import SpaceShape


def matrix_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in a]
    return {"dim": int(a.shape[0]), "rows": rows}


def matrix_from_json(obj: Any) -> np.ndarray:
    if not isinstance(obj, dict) or "rows" not in obj:
        raise FormatError("matrix object needs a 'rows' field")
    rows = obj["rows"]
    if not isinstance(rows, list) or not rows:
        raise FormatError("'rows' must be a nonempty list")
    width = None
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise FormatError(f"row {i} is not a list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FormatError(f"ragged rows: row {i} has {len(row)} entries, expected {width}")
        parsed = []
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
                raise FormatError(f"entry ({i},{j}) must be a [re, im] pair of numbers")
            if not all(math.isfinite(x) for x in z):
                raise FormatError(f"entry ({i},{j}) is not finite")
            parsed.append(complex(z[0], z[1]))
        out.append(parsed)
    a = np.array(out, dtype=complex)
    dim = obj.get("dim")
    if dim is not None and (a.shape[0] != dim or a.shape[1] != dim):
        raise FormatError(f"declared dim {dim} does not match a {a.shape[0]}x{a.shape[1]} matrix")
    return a


def shape_from_json(obj: Any) -> SpaceShape:
    try:
        return SpaceShape.of(*[(str(n), int(d)) for n, d in obj])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad shape {obj!r}: {exc}") from None


def state_to_json(matrix: np.ndarray, shape: SpaceShape) -> dict:
    out = matrix_to_json(matrix)
    out["shape"] = shape.to_json()
    return out


def state_from_json(obj: Any) -> tuple[np.ndarray, SpaceShape]:
    a = matrix_from_json(obj)
    if "shape" not in obj:
        raise FormatError("state file needs a 'shape' field")
    shape = shape_from_json(obj["shape"])
    if a.shape[0] != shape.total_dim:
        raise FormatError(f"state of dimension {a.shape[0]} does not fit shape of dimension {shape.total_dim}")
    return a, shape


def predicate_to_json(matrix: np.ndarray, register=None) -> dict:
    out = matrix_to_json(matrix)
    if register is not None:
        out["register"] = list(register)
    return out


def load_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None


def dump_json(obj: Any, path=None) -> str:
    text = json.dumps(obj, indent=1, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
