"""Write results as structured text and CSV.

Output format:
- Structured text: JSON with every real number rendered in scientific
  notation with 17 significant digits (``1.0000000000000000e+00``).
  Complex numbers become ``[re, im]`` pairs.
- CSV: header row, one sample per line, same number format, ``\\n``
  line endings.
"""

import io
import json
import math
from numbers import Integral, Real
from pathlib import Path

import numpy as np
import pandas as pd

_FLOAT_FORMAT = "%.16e"


def format_number(value: float) -> str:
    """Render a real number with 17 significant digits.

    Non-finite values use the ``NaN`` / ``Infinity`` spellings that
    Python's json module reads back.
    """
    value = float(value)
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    return _FLOAT_FORMAT % value


def render_json(obj, indent: int = 2) -> str:
    """Render nested dicts/lists of numbers as deterministic JSON text.

    Args:
        obj: A dict, list, tuple, numpy array, number, string, bool or None.
        indent: Spaces per nesting level.

    Returns:
        The JSON text, terminated by a newline.
    """
    return _render(obj, indent, 0) + "\n"


def _render(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    closing_pad = " " * (indent * level)

    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, np.generic):
        obj = obj.item()

    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, str):
        return _quote(obj)
    if isinstance(obj, Integral):
        return str(int(obj))
    if isinstance(obj, complex):
        return f"[{format_number(obj.real)}, {format_number(obj.imag)}]"
    if isinstance(obj, Real):
        return format_number(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{_quote(str(key))}: {_render(value, indent, level + 1)}"
            for key, value in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{closing_pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # Flat lists of scalars stay on one line
        if all(not isinstance(item, (dict, list, tuple, np.ndarray)) for item in obj):
            return "[" + ", ".join(_render(item, indent, level + 1) for item in obj) + "]"
        items = [f"{pad}{_render(item, indent, level + 1)}" for item in obj]
        return "[\n" + ",\n".join(items) + f"\n{closing_pad}]"
    raise TypeError(f"Cannot render object of type {type(obj).__name__}")


def _quote(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


def frame_to_csv(frame: pd.DataFrame) -> str:
    """Format a DataFrame as CSV text with 17-digit scientific numbers."""
    output = io.StringIO()
    frame.to_csv(output, index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
    return output.getvalue()


def write_output(text: str, output_path: Path | None = None) -> None:
    """Write text to a file, or to standard output when no path is given."""
    if output_path is None:
        print(text, end="")
        return
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(text)
