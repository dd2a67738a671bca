"""Run reports and their text/CSV serializations."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any

SIG_DIGITS = 12


def fmt(v: Any) -> str:
    """Deterministic scalar formatting; floats get 12 significant digits."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, f".{SIG_DIGITS}g")
    return str(v)


@dataclass
class RunReport:
    """Everything a command produced.

    ``results`` holds scalar outcomes in insertion order. ``columns`` and
    ``rows`` form the table that the CSV format emits. ``wall_time`` is kept
    out of both formats unless ``show_timing`` is set, so serializations stay
    reproducible.
    """

    command: str
    seed: int
    seed_source: str
    version: str
    results: dict = field(default_factory=dict)
    columns: tuple[str, ...] = ()
    rows: list[tuple] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)
    exit_code: int = 0
    wall_time: float = 0.0
    show_timing: bool = False

    def add_row(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(tuple(values))


def _csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _text(report: RunReport) -> str:
    lines = [
        f"qcc {report.version}",
        f"command: {report.command}",
        f"seed: {report.seed} ({report.seed_source})",
    ]
    if report.results:
        width = max(len(k) for k in report.results)
        lines += [f"{k:<{width}}  {fmt(v)}" for k, v in report.results.items()]
    if report.columns:
        cells = [list(report.columns)] + [[fmt(v) for v in r] for r in report.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(report.columns))]
        lines.append("")
        for row in cells:
            lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip())
    lines += [f"note: {m}" for m in report.messages]
    lines.append(f"status: {'pass' if report.exit_code == 0 else 'fail'}")
    if report.show_timing:
        lines.append(f"wall_time_s: {report.wall_time:.3f}")
    return "\n".join(lines) + "\n"


def emit(report: RunReport, format: str = "text") -> str:
    if format == "csv":
        return _csv(report)
    if format == "text":
        return _text(report)
    raise ValueError(f"unknown report format {format!r}")
