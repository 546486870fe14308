"""Small CSV table helpers shared by the CLI and the report builder."""

from __future__ import annotations

import csv
import math

from .errors import ValidationError


def fmt(value, decimals: int = 4) -> str:
    """Fixed-decimal cell text; NaN/None become empty cells."""
    if value is None:
        return ""
    v = float(value)
    if not math.isfinite(v):
        return ""
    return f"{v:.{decimals}f}"


def write_table(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_stat_table(path) -> list[tuple[str, str, str, str]]:
    """Rows of a fit-style table: (coef, estimate, se, stars)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:1] != ["coef"]:
            raise ValidationError(f"{path}: unexpected table header {header}")
        for row in reader:
            padded = row + [""] * (4 - len(row))
            out.append((padded[0], padded[1], padded[2], padded[3]))
    return out
