"""
Run reporting: the shared collector with tagged progress logging, and the
CSV / JSON emitters every mode writes its artifacts through.
"""
import csv
import json
import math
import sys
from dataclasses import asdict, fields, is_dataclass
from datetime import datetime, timezone

import numpy as np

from errors import ConfigError, DomainError

TIMESTAMP_PREFIX = "# generated "


class ReportCollector:
    """Collects per-mode result rows and failures, and reports them."""

    def __init__(self):
        self.quiet = False
        self.stream = None
        self.rows = {}
        self.failures = {}
        self.final_report = {}

    def _out(self):
        return self.stream if self.stream is not None else sys.stderr

    def log(self, tag, message):
        if not self.quiet:
            print(f"  [{tag.upper()}] {message}", file=self._out())

    def banner(self, title):
        if not self.quiet:
            out = self._out()
            print(f"\n{'=' * 65}", file=out)
            print(title, file=out)
            print(f"{'=' * 65}", file=out)

    def record(self, mode, row):
        self.rows.setdefault(mode, []).append(row)

    def record_failure(self, mode, message):
        self.failures.setdefault(mode, []).append(message)
        self.log(mode, f"FAILED: {message}")

    def reset(self):
        self.rows = {}
        self.failures = {}

    def report(self, mode, passed=None, total=None):
        """
        Print the final summary for a mode and store it in final_report.
        `passed` of `total` checks held (total defaults to the row count);
        passed=None means the mode asserts nothing.
        """
        rows = self.rows.get(mode, [])
        total = len(rows) if total is None else total
        failures = self.failures.get(mode, [])
        self.banner(f"FINAL RESULTS: {mode.upper()}")
        summary = {"rows": len(rows), "errors": len(failures)}
        self.log(mode, f"Rows written:        {len(rows)}")
        if passed is not None:
            summary["passed"] = passed
            self.log(mode, f"Assertions held:     {passed}/{total}")
        if failures:
            self.log(mode, f"Runs with errors:    {len(failures)}")
        summary["ok"] = not failures and (passed is None or passed == total)
        self.final_report[mode] = summary
        return summary


# Shared singleton instance
reports = ReportCollector()


# --------------------------------------------------------------------
# Rows
# --------------------------------------------------------------------
def as_row(obj, extra=None, rename=None):
    """Dataclass or mapping -> flat dict of cell values, with optional column renames."""
    row = asdict(obj) if is_dataclass(obj) else dict(obj)
    if extra:
        row.update(extra)
    if rename:
        row = {rename.get(k, k): v for k, v in row.items()}
    return row


def from_row(cls, row, rename=None):
    """Rebuild a dataclass from a parsed CSV row, ignoring extra columns."""
    names = {f.name for f in fields(cls)}
    back = {v: k for k, v in (rename or {}).items()}
    row = {back.get(k, k): v for k, v in row.items()}
    return cls(**{k: v for k, v in row.items() if k in names})


def format_cell(value):
    """repr for floats, empty for None/NaN; everything else str()."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "True" if value else "False"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "" if math.isnan(value) else repr(value)
    return str(value)


def parse_cell(text):
    if text == "":
        return None
    if text in ("True", "False"):
        return text == "True"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


# --------------------------------------------------------------------
# CSV / JSON
# --------------------------------------------------------------------
def _timestamp_line():
    return TIMESTAMP_PREFIX + datetime.now(timezone.utc).isoformat(timespec="seconds") + "\n"


def write_csv(rows, columns=None, path=None, timestamp=True):
    """
    Write dict rows as CSV to `path` (stdout when None). Columns default to
    the keys of the first row. With `timestamp`, a `# generated` comment line
    comes first; it is the only line that differs between identical runs.
    """
    rows = list(rows)
    if not rows:
        raise DomainError("nothing to write: empty report")
    columns = list(columns or rows[0].keys())

    def emit(handle):
        if timestamp:
            handle.write(_timestamp_line())
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(c)) for c in columns])

    if path is None:
        emit(sys.stdout)
    else:
        with open(path, "w", newline="") as handle:
            emit(handle)
    return columns


def read_csv(path):
    """Inverse of write_csv: list of typed dict rows; comment lines are skipped."""
    with open(path, newline="") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DomainError(f"{path} has no header row") from None
    return [{k: parse_cell(v) for k, v in zip(header, cells)} for cells in reader]


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if is_dataclass(value):
        return asdict(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(obj, path):
    with open(path, "w") as handle:
        json.dump(obj, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write("\n")


def load_json(path):
    """JSON config loader; syntax errors become ConfigError with line/column."""
    try:
        with open(path) as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def emit_plot_data(rows, x_key, curves, path=None, timestamp=True, keys=()):
    """
    Tidy long-format plot data: one (keys..., x, curve, value) row per point
    and curve. Missing values stay as empty cells.
    """
    rows = list(rows)
    if not rows:
        raise DomainError("nothing to plot: empty report")
    keys = list(keys)
    tidy = [{**{k: row.get(k) for k in keys}, x_key: row[x_key], "curve": curve, "value": row.get(curve)}
            for row in rows for curve in curves]
    return write_csv(tidy, keys + [x_key, "curve", "value"], path, timestamp)
