"""CSV persistence for optimizer traces."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from .optimizers import TraceRecord

__all__ = ["TRACE_COLUMNS", "TIMING_COLUMNS", "write_trace_csv", "read_trace_csv", "format_float",
           "strip_timing"]

TRACE_COLUMNS = ("k", "j", "f_j_before", "f_j_after", "full_f", "alpha", "mu", "fallback_used",
                 "slope", "grad_norm", "elapsed_s")
TIMING_COLUMNS = ("elapsed_s",)


def format_float(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def _row(r: TraceRecord) -> list:
    return [str(r.k), str(r.j), format_float(r.f_j_before), format_float(r.f_j_after),
            format_float(r.full_f), format_float(r.alpha), format_float(r.mu),
            "1" if r.fallback_used else "0", format_float(r.slope), format_float(r.grad_norm),
            format_float(r.elapsed)]


def write_trace_csv(trace: Sequence[TraceRecord], path) -> None:
    """Header plus one row per record, numbers with 17 significant digits;
    absent values are empty cells."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for r in trace:
                w.writerow(_row(r))
    except OSError as exc:
        raise OSError(f"cannot write trace {path}: {exc}") from exc


def _opt_float(s: str):
    return None if s == "" else float(s)


def read_trace_csv(path) -> list:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_COLUMNS:
        raise ValueError(f"{path}: unexpected trace header {rows[0] if rows else None}")
    out = []
    for i, row in enumerate(rows[1:], 2):
        if len(row) != len(TRACE_COLUMNS):
            raise ValueError(f"{path}:{i}: expected {len(TRACE_COLUMNS)} fields, got {len(row)}")
        k, j, fb, fa, full, alpha, mu, fb_used, slope, gn, el = row
        out.append(TraceRecord(int(k), int(j), float(fb), float(fa), _opt_float(full), float(alpha),
                               _opt_float(mu), fb_used == "1", _opt_float(slope), float(gn), float(el)))
    return out


def strip_timing(path) -> str:
    """Trace file content with the wall-clock column removed."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return ""
    drop = [i for i, name in enumerate(rows[0]) if name in TIMING_COLUMNS]
    return "\n".join(",".join(c for i, c in enumerate(row) if i not in drop) for row in rows) + "\n"
