"""Rendering of results as aligned text tables or JSON.

Both formats are produced from the same plain-data form (:func:`to_data`),
so they carry identical information.  JSON output is canonical (sorted keys,
two-space indent): parsing and re-emitting it gives byte-identical text.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Mapping, Sequence
from enum import Enum
from typing import Any

import numpy as np

from .model import AgentType, PolynomialValuation, Scenario, type_to_dict

TABLE = "table"
JSON = "json"


def to_data(obj: Any, readable: bool = False) -> Any:
    """Convert results (dataclasses, mappings, numpy scalars) to JSON-ready data.

    ``readable`` renders valuations as polynomial strings instead of term lists.
    """
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, AgentType):
        data = type_to_dict(obj)
        if readable:
            data["valuations"] = {a: str(v) for a, v in obj.valuations.items()}
        return data
    if isinstance(obj, PolynomialValuation):
        return str(obj)
    if isinstance(obj, Scenario):
        return obj.name
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: to_data(getattr(obj, f.name), readable)
            for f in dataclasses.fields(obj)
            if not f.name.startswith("_")
        }
    if isinstance(obj, Mapping):
        return {str(k): to_data(v, readable) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_data(x, readable) for x in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def render_json(data: Any) -> str:
    return json.dumps(to_data(data), indent=2, sort_keys=True, allow_nan=False)


def _cell(x: Any) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.10g}"
    if isinstance(x, (list, tuple)):
        return "(" + ", ".join(_cell(v) for v in x) + ")"
    if isinstance(x, dict):
        return ", ".join(f"{k}={_cell(v)}" for k, v in x.items())
    return str(x)


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Left-aligned text columns separated by two spaces."""
    cells = [[str(h) for h in headers]] + [[_cell(c) for c in row] for row in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _key_values(data: Mapping[str, Any], skip: Sequence[str] = ()) -> str:
    rows = [(k, v) for k, v in data.items() if k not in skip and not isinstance(v, (list, dict))]
    return format_table(["field", "value"], rows) if rows else ""


def _render_section(title: str, data: Any) -> str:
    """Table text for one result section, dispatching on its shape."""
    out = [f"== {title}"]
    if isinstance(data, dict) and "welfare" in data and "argmax" in data:
        rows = [(a, w, "*" if a == data["argmax"] else "", a in data["ties"]) for a, w in data["welfare"].items()]
        out.append(format_table(["allocation", "SW", "argmax", "tied"], rows))
        if data.get("infeasible"):
            out.append("infeasible: " + ", ".join(data["infeasible"]))
    elif isinstance(data, dict) and "ledger" in data and "verdict" in data:
        out.append(_key_values(data, skip=("best_misreport", "witness_misreport")))
        out.append(
            format_table(
                ["misreport", "truthful_u", "deviating_u", "gain"],
                [(r["summary"], r["truthful_utility"], r["deviating_utility"], r["gain"]) for r in data["ledger"]],
            )
        )
    elif isinstance(data, dict) and "rows" in data and "replications" in data:
        out.append(_key_values(data))
        out.append(
            format_table(
                ["agent", "mean", "stderr", "expected", "z"],
                [(r["agent"], r["mean"], r["stderr"], r["expected"], r["z"]) for r in data["rows"]],
            )
        )
    elif isinstance(data, dict) and "static_ok" in data:
        out.append(_key_values(data))
        for key in ("static_witness", "empirical_witness"):
            if data.get(key):
                w = data[key]
                out.append(f"{key}:")
                out.append(format_table(list(w), [list(w.values())]))
    elif isinstance(data, list) and data and isinstance(data[0], dict):
        headers = list(data[0])
        out.append(format_table(headers, [[row.get(h) for h in headers] for row in data]))
    elif isinstance(data, dict):
        nested = {k: v for k, v in data.items() if _is_nested(v)}
        flat = {k: v for k, v in data.items() if k not in nested}
        if flat:
            out.append(format_table(["field", "value"], list(flat.items())))
        for k, v in nested.items():
            out.append(_render_section(f"{title}.{k}", v))
    else:
        out.append(_cell(data))
    return "\n".join(s for s in out if s)


def _is_nested(v: Any) -> bool:
    if isinstance(v, dict):
        return any(isinstance(x, (dict, list)) for x in v.values())
    return isinstance(v, list) and bool(v) and isinstance(v[0], dict)


def render_table(report: Mapping[str, Any]) -> str:
    data = to_data(report, readable=True)
    parts = []
    header = {k: v for k, v in data.items() if not _is_nested(v)}
    if header:
        parts.append(format_table(["field", "value"], list(header.items())))
    for k, v in data.items():
        if k not in header:
            parts.append(_render_section(k, v))
    return "\n\n".join(parts)


def emit_report(result: Any, fmt: str = TABLE) -> str:
    """Render a result (any report object or a mapping of them) as ``table`` or ``json``."""
    if fmt == JSON:
        return render_json(result)
    if fmt != TABLE:
        raise ValueError(f"unknown format {fmt!r}")
    if not isinstance(result, Mapping):
        result = {type(result).__name__: result}
    return render_table(result)
