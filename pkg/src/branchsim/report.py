"""Tabular report bodies for CSV and JSON output.

Floats are written with 17 significant digits so a report round-trips to the
same doubles; no timestamps are written, so equal inputs give equal bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any


def format_number(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int) or hasattr(x, "__index__"):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_value(x: Any) -> str:
    if x is None:
        return "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, (bool, int)):
        return format_number(x)
    if hasattr(x, "__index__"):
        return str(int(x))
    if hasattr(x, "__float__"):
        text = format_number(x)
        return json.dumps(text) if text in ("nan", "inf", "-inf") else text
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps_json(obj: Any) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become strings."""
    return _json_value(obj)


@dataclass
class Report:
    """Header, data rows and footer entries of one command's output."""

    command: str
    seed: int
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    footer: dict[str, Any] = field(default_factory=dict)
    # key statistic for the one-line stdout summary, e.g. "mean=0.66"
    statistic: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns + ["seed"])
        for row in self.rows:
            writer.writerow([_cell(v) for v in row] + [self.seed])
        blanks = [""] * (len(self.columns) - 2)
        for key, value in self.footer.items():
            writer.writerow([key, _cell(value)] + blanks + [self.seed])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [dict(zip(self.columns + ["seed"], list(row) + [self.seed])) for row in self.rows]
        body = {
            "command": self.command,
            "seed": self.seed,
            "columns": self.columns + ["seed"],
            "rows": rows,
            "summary": self.footer,
        }
        return dumps_json(body) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()

    def summary_line(self) -> str:
        return f"{self.command} {self.statistic} seed={self.seed}"


def _cell(v: Any) -> str:
    return v if isinstance(v, str) else format_number(v)
