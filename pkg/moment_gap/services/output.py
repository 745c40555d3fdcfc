"""
Result emission: CSV scan data, JSON summaries and console tables.

Functions:
    format_number: Render a value for CSV output with 17 significant digits.
    write_csv: Write rows under a fixed header.
    dump_json: Serialize a payload with orjson.
    write_json: Write a JSON payload to a file or stdout.
    render_table: Print a rich table to the console.
"""

import csv
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np
import orjson
from rich.table import Table

from moment_gap.config.logger import stderr_console

console = stderr_console

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def format_number(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> None:
    """
    Write rows as CSV; every numeric field is formatted by ``format_number``.

    Parameters:
    path (Path): Destination file, parents are created.
    header (Sequence[str]): Column names in output order.
    rows (Iterable[Mapping[str, Any]]): One mapping per row.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(header), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: format_number(row.get(key)) for key in header})


def _default(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dump_json(payload: Any) -> bytes:
    return orjson.dumps(payload, default=_default, option=JSON_OPTIONS)


def write_json(path: Optional[Path], payload: Any) -> None:
    """
    Write a JSON document.

    Parameters:
    path (Optional[Path]): Destination file, or None (or "-") for stdout.
    payload (Any): JSON-serializable data; pydantic models and numpy values are accepted.
    """
    content = dump_json(payload) + b"\n"
    if path is None or str(path) == "-":
        sys.stdout.buffer.write(content)
        sys.stdout.flush()
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(content)


def render_table(title: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    table = Table(title=title)
    for column in header:
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(*(format_number(value) if not isinstance(value, str) else value for value in row))
    console.print(table)
