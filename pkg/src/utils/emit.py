"""JSON and CSV emission with a reproducible run header."""

import csv
import enum
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src import __version__
from src.config import LabConfig, RunConfig
from src.services.dyadic import DyadicAngle, TailBound

TOOL_NAME = "furstenberg-lab"


def format_dyadic(value: DyadicAngle) -> str:
    return value.hex()


def parse_dyadic(text: str, round_bits: Optional[int] = None) -> DyadicAngle:
    """Hex-dyadic ``0x..p-e``, a decimal, or ``p/q`` with power-of-two q."""
    return DyadicAngle.parse(text, round_bits)


def _default(obj: Any) -> Any:
    if isinstance(obj, DyadicAngle):
        return obj.hex()
    if isinstance(obj, TailBound):
        return obj.render()
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.complexfloating):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def build_header(config: RunConfig, budgets: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    The header written into every output.

    Args:
        config: The run configuration (echoed verbatim)
        budgets: Tail bounds, defect budgets and dropped terms of this result

    Returns:
        Header dict with tool, version, config echo, cutoff and budgets
    """
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "config": config.echo(),
        "series_cutoff": config.K,
        "digit_budget_bits": LabConfig.DIGIT_BUDGET_BITS,
        "budgets": dict(budgets or {}),
    }


def render_json(header: Dict[str, Any], result: Any) -> str:
    return json.dumps({"header": header, "result": result}, sort_keys=True, indent=2, default=_default) + "\n"


def render_csv(header: Dict[str, Any], rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    """
    CSV with one ``# key: value`` line per header key, then a fixed column order.

    Cell values that are not plain scalars are written as compact JSON.
    """
    buffer = io.StringIO()
    for key in sorted(header):
        buffer.write(f"# {key}: {json.dumps(header[key], sort_keys=True, default=_default)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells: List[Any] = []
        for column in columns:
            value = row.get(column, "")
            if isinstance(value, (dict, list, tuple, complex, DyadicAngle, TailBound, Fraction)):
                value = json.dumps(value, sort_keys=True, default=_default)
            elif isinstance(value, float):
                value = repr(value)
            elif value is None:
                value = ""
            cells.append(value)
        writer.writerow(cells)
    return buffer.getvalue()


def write_output(text: str, output: Optional[str] = None) -> None:
    """Write to the output path, or stdout when none is given."""
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def load_json(path: str) -> Dict[str, Any]:
    """Read a document written by render_json and return its result."""
    data = json.loads(Path(path).read_text())
    return data.get("result", data)
