"""
Utility functions for report output and JSON encoding.
"""
import os
import json
import math
import logging
import tempfile
import dataclasses
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["parameter", "lhs", "rhs", "relative_violation", "violated"]


def complex_to_json(value: complex) -> Dict[str, float]:
    """Encode a complex amplitude as {"re", "im"}."""
    value = complex(value)
    return {"re": float(value.real), "im": float(value.imag)}


def complex_from_json(value: Any) -> complex:
    """
    Decode a complex amplitude from {"re", "im"}, a [re, im] pair or a plain number.

    Args:
        value: JSON value

    Returns:
        The complex number
    """
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return complex(value)
    raise ValueError(f"cannot read complex amplitude from {value!r}")


def to_jsonable(obj: Any) -> Any:
    """
    Convert reports, dataclasses and numpy values into JSON-compatible objects.

    Args:
        obj: Object to convert

    Returns:
        Nested dicts, lists, strings and finite-or-null numbers
    """
    if hasattr(obj, "to_dict") and callable(obj.to_dict):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        # JSON has no inf/nan
        if math.isfinite(value):
            return value
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return obj


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_json(path: str, payload: Any) -> str:
    """
    Write a JSON document atomically.

    Args:
        path: Destination file
        payload: Report object or plain data

    Returns:
        The path written
    """
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"
    _atomic_write(path, text)
    logger.info(f"Wrote {path}")
    return path


def write_csv(path: str, rows: List[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    """
    Write rows as CSV atomically ('.' decimals, LF line endings, header row).

    Args:
        path: Destination file
        rows: Row dictionaries
        columns: Column order (defaults to the sweep columns)

    Returns:
        The path written
    """
    df = pd.DataFrame(rows, columns=columns or CSV_COLUMNS)
    text = df.to_csv(index=False, lineterminator="\n", float_format="%.12g")
    _atomic_write(path, text)
    logger.info(f"Wrote {len(df)} rows to {path}")
    return path
