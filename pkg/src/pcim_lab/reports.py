"""Report documents: a summary, a table, the config and the map that produced them.

JSON reports are single documents. CSV reports carry the same metadata as
``#``-prefixed header lines, followed by the table. Rationals are written as
``"p/q"`` strings, logarithms as decimal doubles.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, TextIO

FORMAT_VERSION = 1


def jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, bytes):
        return value.decode("ascii")
    return value


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return " ".join(_cell(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class Report:
    command: str
    config: dict
    map_text: str | None
    summary: dict = field(default_factory=dict)
    columns: list[str] = field(default_factory=list)
    rows: list[list[Any]] = field(default_factory=list)
    timestamp: str | None = None

    def header(self) -> dict:
        doc = {
            "format": "pcim-lab-report",
            "version": FORMAT_VERSION,
            "command": self.command,
            "config": jsonable(self.config),
            "map": self.map_text,
        }
        if self.timestamp is not None:
            doc["timestamp"] = self.timestamp
        return doc

    def to_json(self) -> str:
        doc = self.header()
        doc["summary"] = jsonable(self.summary)
        doc["columns"] = list(self.columns)
        doc["rows"] = jsonable(self.rows)
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = CsvReportWriter(buf, self)
        writer.write_rows(self.rows)
        writer.finish()
        return buf.getvalue()


def now_stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class CsvReportWriter:
    """Streams a CSV report row by row, flushing after each row."""

    def __init__(self, stream: TextIO, report: Report):
        self.stream = stream
        self.report = report
        header = report.header()
        for key in ("format", "version", "command", "timestamp"):
            if key in header:
                stream.write(f"# {key}: {header[key]}\n")
        stream.write(f"# config: {json.dumps(header['config'], sort_keys=True)}\n")
        if header["map"] is not None:
            for line in header["map"].splitlines():
                stream.write(f"# map: {line}\n")
        self._writer = csv.writer(stream, lineterminator="\n")
        self._writer.writerow(report.columns)
        stream.flush()

    def write_rows(self, rows: Iterable[list]):
        for row in rows:
            self.write_row(row)

    def write_row(self, row: list):
        self._writer.writerow([_cell(jsonable(v)) for v in row])
        self.stream.flush()

    def finish(self):
        if self.report.summary:
            self.stream.write(f"# summary: {json.dumps(jsonable(self.report.summary), sort_keys=True)}\n")
        self.stream.flush()


def read_report(path) -> tuple[str, dict, str | None]:
    """(command, config, map text) from a report written by this tool."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if doc.get("format") != "pcim-lab-report":
            raise ValueError(f"{path} is not a pcim-lab report")
        return doc["command"], doc["config"], doc.get("map")
    command = config = None
    map_lines = []
    for line in text.splitlines():
        if not line.startswith("# "):
            continue
        key, _, value = line[2:].partition(": ")
        if key == "command":
            command = value
        elif key == "config":
            config = json.loads(value)
        elif key == "map":
            map_lines.append(value)
    if command is None or config is None:
        raise ValueError(f"{path} is not a pcim-lab report")
    return command, config, ("\n".join(map_lines) + "\n") if map_lines else None
