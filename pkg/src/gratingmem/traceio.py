"""CSV formats for pulse traces and sweep tables.

Trace file: optional ``# key = value`` metadata lines, a ``# time_us,signal``
header, then one ``time,signal`` sample per line. Further traces follow after a
blank line and a new header. Sweep table: ``# key = value`` lines recording the
fixed parameters, a ``# param,fwhm_us,peak,energy[,energy_numeric]`` header, rows.
"""
from __future__ import annotations

import io
import math
import re
from pathlib import Path

import numpy as np

from .emission import PulseTrace
from .errors import TraceFormatError
from .sweeps import SweepTable

TRACE_HEADER = "# time_us,signal"
TABLE_HEADER = "# param,fwhm_us,peak,energy,energy_numeric"
_HEADER_RE = re.compile(r"^#\s*time_(\w+)\s*,\s*signal\s*$")
_META_RE = re.compile(r"^#\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")
SWEPT_LABELS = {"i_r_mw_per_cm2": "i_r", "i_w_mw_per_cm2": "i_w", "t_store_us": "t_store"}


def fmt(x):
    """Fixed 17-significant-digit float text."""
    return format(float(x), ".17g")


def _meta_value(text):
    try:
        return float(text)
    except ValueError:
        return text


def _lines(source):
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    return source.read().splitlines()


def parse_traces(lines):
    """Parse trace-file lines into a list of PulseTrace (times in microseconds)."""
    blocks = []
    current = None
    pending_meta = {}

    def close():
        nonlocal current
        if current is not None and current["rows"]:
            blocks.append(current)
        current = None

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            close()
            continue
        if line.startswith("#"):
            m = _HEADER_RE.match(line)
            if m:
                if m.group(1) != "us":
                    raise TraceFormatError(f"time unit '{m.group(1)}' not supported, expected time_us",
                                           lineno)
                close()
                current = {"rows": [], "lines": [], "meta": pending_meta, "start": lineno}
                pending_meta = {}
                continue
            m = _META_RE.match(line)
            if m:
                pending_meta[m.group(1)] = _meta_value(m.group(2))
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceFormatError(f"expected 2 comma-separated fields, got {len(parts)}", lineno)
        try:
            t, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise TraceFormatError(f"non-numeric field in {line!r}", lineno) from None
        if not (math.isfinite(t) and math.isfinite(v)):
            raise TraceFormatError("non-finite value", lineno)
        if current is None:
            current = {"rows": [], "lines": [], "meta": pending_meta, "start": lineno}
            pending_meta = {}
        if current["rows"] and t <= current["rows"][-1][0]:
            raise TraceFormatError(f"time {t!r} is not after previous sample", lineno)
        if v < 0:
            raise TraceFormatError(f"negative signal {v!r}", lineno)
        current["rows"].append((t, v))
    close()
    if not blocks:
        raise TraceFormatError("no trace data found")
    traces = []
    for b in blocks:
        arr = np.array(b["rows"], dtype=float)
        meta = dict(b["meta"])
        if "i_r_mw_per_cm2" in meta:
            meta.setdefault("i_r", meta["i_r_mw_per_cm2"])
        traces.append(PulseTrace(arr[:, 0], arr[:, 1], "us", meta))
    return traces


def ingest_traces(path):
    return parse_traces(_lines(path))


def format_traces(traces):
    out = io.StringIO()
    for k, tr in enumerate(traces):
        if k:
            out.write("\n")
        for key, val in tr.metadata.items():
            out.write(f"# {key} = {fmt(val) if isinstance(val, (int, float)) else val}\n")
        out.write(TRACE_HEADER + "\n")
        for t, v in zip(tr.times, tr.values):
            out.write(f"{fmt(t)},{fmt(v)}\n")
    return out.getvalue()


def to_microseconds(trace, atom):
    if trace.time_unit == "us":
        return trace
    return PulseTrace(atom.internal_to_us(trace.times), trace.values, "us", dict(trace.metadata))


def format_sweep_table(table):
    out = io.StringIO()
    for key, val in table.fixed.items():
        out.write(f"# {key} = {fmt(val) if isinstance(val, (int, float)) else val}\n")
    out.write(TABLE_HEADER + "\n")
    for row in table.rows():
        out.write(",".join(fmt(v) for v in row) + "\n")
    return out.getvalue()


def parse_sweep_table(lines):
    fixed = {}
    rows = []
    seen_header = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.replace(" ", "").startswith("#param,"):
                seen_header = True
                continue
            m = _META_RE.match(line)
            if m:
                fixed[m.group(1)] = _meta_value(m.group(2))
            continue
        if not seen_header:
            raise TraceFormatError("data row before the '# param,...' header", lineno)
        parts = line.split(",")
        if len(parts) not in (4, 5):
            raise TraceFormatError(f"expected 4 or 5 fields, got {len(parts)}", lineno)
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise TraceFormatError(f"non-numeric field in {line!r}", lineno) from None
        if len(vals) == 4:
            vals.append(vals[3])
        rows.append(vals)
    if not rows:
        raise TraceFormatError("sweep table has no rows")
    arr = np.array(rows)
    swept = str(fixed.get("swept", ""))
    param = SWEPT_LABELS.get(swept, swept or "param")
    try:
        return SweepTable(param, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], fixed)
    except ValueError as exc:
        raise TraceFormatError(str(exc)) from None


def read_sweep_table(path):
    return parse_sweep_table(_lines(path))


def looks_like_sweep_table(path):
    for line in _lines(path):
        if line.replace(" ", "").startswith("#param,"):
            return True
    return False
