"""Utility functions for run directories and tabular output."""

import csv
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from config import CSV_DIGITS, logger


def ensure_directory_exists(directory: Path) -> None:
    """
    Ensure a directory exists, creating it if necessary.

    Args:
        directory (Path): Directory path to create.
    """
    directory.mkdir(parents=True, exist_ok=True)


def format_number(value: Any) -> str:
    """
    Render a value for CSV and summary output.

    Floats use 17 significant digits so that they parse back exactly; booleans,
    integers and strings are written as-is, None as an empty field.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.{CSV_DIGITS}g}"
    if hasattr(value, "item"):
        return format_number(value.item())
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write a CSV file with a header row.

    Args:
        path (Path): Output file.
        header (Sequence[str]): Column names.
        rows (Iterable[Sequence[Any]]): Data rows, formatted with format_number.

    Returns:
        Path: The written file.
    """
    ensure_directory_exists(path.parent)
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return path


def write_text(path: Path, text: str) -> Path:
    ensure_directory_exists(path.parent)
    path.write_text(text if text.endswith("\n") else text + "\n")
    return path
