"""Small serialization helpers shared by the report writers.

JSON reports never emit bare ``Infinity`` tokens: non-finite floats are
encoded as the strings ``"inf"``, ``"-inf"`` and ``"nan"`` so the files stay
valid JSON for any downstream parser.  Floats in delimited files use
``repr``, the shortest string that round-trips the exact value.
"""
from __future__ import annotations

import json
import math

__all__ = ["fmt_float", "to_jsonable", "dump_json", "parse_float_token"]


def fmt_float(x: float) -> str:
    return repr(float(x))


def parse_float_token(tok: str) -> float:
    return float(tok.strip())


def to_jsonable(value):
    """Recursively convert a report mapping into JSON-safe primitives."""
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if hasattr(value, "item"):
        return to_jsonable(value.item())
    raise TypeError(f"cannot serialize {type(value).__name__} to JSON")


def dump_json(path_or_handle, mapping: dict) -> None:
    text = json.dumps(to_jsonable(mapping), indent=2, sort_keys=True) + "\n"
    if hasattr(path_or_handle, "write"):
        path_or_handle.write(text)
    else:
        with open(path_or_handle, "w", encoding="ascii") as fh:
            fh.write(text)
