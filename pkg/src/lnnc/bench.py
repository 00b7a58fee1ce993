"""Run matrices of optimizer configurations, persist their artifacts and
compare them."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import BenchConfig
from .optimizers import RunConfig, RunResult, run, trailing_mean
from .plot import epoch_length, render_convergence_plot
from .problems import ProblemSpec, make_problem
from .traceio import read_trace_csv, strip_timing, write_trace_csv

__all__ = ["RunManifest", "ReportRow", "ComparisonReport", "run_id", "execute", "run_matrix",
           "load_manifest", "replay_manifest", "build_report", "PLOT_NAME"]

PLOT_NAME = "convergence.svg"


def _canonical(problem: ProblemSpec, cfg: RunConfig) -> str:
    return json.dumps({"problem": dataclasses.asdict(problem), "run": dataclasses.asdict(cfg)},
                      sort_keys=True, separators=(",", ":"))


def run_id(problem: ProblemSpec, cfg: RunConfig) -> str:
    """Content hash of the problem and run settings (seeds included)."""
    return hashlib.sha256(_canonical(problem, cfg).encode()).hexdigest()[:16]


@dataclass
class RunManifest:
    run_id: str
    label: str
    problem: ProblemSpec
    run: RunConfig
    started: str
    trace: str
    plot: Optional[str]
    version: str = __version__
    aborted: bool = False
    diagnostic: Optional[str] = None

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        d["problem"] = ProblemSpec(**_tuples(d["problem"]))
        d["run"] = RunConfig(**d["run"])
        return cls(**d)


def _tuples(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def load_manifest(path) -> RunManifest:
    return RunManifest.from_json(Path(path).read_text())


@dataclass(frozen=True)
class ReportRow:
    label: str
    final_full_f: Optional[float]
    trailing_mean_f: float
    wall_time: float
    aborted: bool = False
    diagnostic: Optional[str] = None


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple
    winners: dict

    @property
    def any_aborted(self) -> bool:
        return any(r.aborted for r in self.rows)

    def to_text(self) -> str:
        head = f"{'label':<28} {'final full_f':>22} {'epoch mean f_j':>22} {'wall time (s)':>14}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            full = "n/a" if r.final_full_f is None else f"{r.final_full_f:.10g}"
            lines.append(f"{r.label:<28} {full:>22} {r.trailing_mean_f:>22.10g} {r.wall_time:>14.3f}"
                         + ("  ABORTED: " + str(r.diagnostic) if r.aborted else ""))
        lines.append("")
        for metric, label in self.winners.items():
            lines.append(f"best {metric}: {label}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"rows": [dataclasses.asdict(r) for r in self.rows], "winners": self.winners},
                          indent=2) + "\n"


def _row_from_trace(label, trace, aborted=False, diagnostic=None) -> ReportRow:
    if not trace:
        return ReportRow(label, None, float("nan"), 0.0, aborted, diagnostic)
    full = [r.full_f for r in trace if r.full_f is not None]
    tail = trailing_mean([r.f_j_after for r in trace], epoch_length(trace))[-1]
    return ReportRow(label, full[-1] if full else None, float(tail), trace[-1].elapsed, aborted, diagnostic)


def build_report(labels: Sequence[str], traces: Sequence, status: Sequence = ()) -> ComparisonReport:
    """Comparison metrics recomputed from traces: last logged full objective,
    trailing one-epoch mean of ``f_j`` after each step, and wall time."""
    if len(set(labels)) != len(labels):
        raise ValueError("report labels must be unique")
    status = list(status) or [(False, None)] * len(labels)
    rows = tuple(_row_from_trace(lab, tr, *st) for lab, tr, st in zip(labels, traces, status))
    winners = {}
    for metric in ("final_full_f", "trailing_mean_f", "wall_time"):
        cands = [(getattr(r, metric), r.label) for r in rows
                 if not r.aborted and getattr(r, metric) is not None and np.isfinite(getattr(r, metric))]
        if cands:
            winners[metric] = min(cands)[1]
    return ComparisonReport(rows, winners)


def _labels(runs: Sequence[RunConfig]) -> list:
    vary_rule = len({r.rule for r in runs if r.algorithm == "lnnc"}) > 1
    vary_sched = len({r.schedule for r in runs}) > 1
    labels = []
    for r in runs:
        parts = [r.algorithm]
        if vary_rule and r.algorithm == "lnnc":
            parts.append(r.rule)
        if vary_sched:
            parts.append(r.schedule)
        labels.append("-".join(parts))
    seen = {}
    out = []
    for lab in labels:
        n = seen.get(lab, 0)
        seen[lab] = n + 1
        out.append(lab if n == 0 else f"{lab}-{n}")
    return out


def execute(problem: ProblemSpec, cfg: RunConfig) -> RunResult:
    obj = make_problem(problem)
    x0 = obj.initial_point() if problem.x0 is None else np.array(problem.x0, dtype=float)
    return run(obj, x0, cfg)


def run_matrix(bench: BenchConfig, out_dir=None, log_scale: Optional[bool] = None) -> ComparisonReport:
    """Execute every run of ``bench`` and write, under ``out_dir``, one trace
    CSV and manifest per run, a shared convergence plot and the report
    (``report.txt`` / ``report.json``). The report is computed from the
    traces as re-read from disk."""
    out = Path(out_dir if out_dir is not None else bench.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = _labels(bench.runs)
    status, trace_files = [], []
    for label, cfg in zip(labels, bench.runs):
        started = datetime.now(timezone.utc).isoformat()
        result = execute(bench.problem, cfg)
        trace_path = out / f"{label}.csv"
        write_trace_csv(result.trace, trace_path)
        manifest = RunManifest(run_id(bench.problem, cfg), label, bench.problem, cfg, started,
                               trace_path.name, PLOT_NAME, aborted=result.aborted,
                               diagnostic=result.diagnostic)
        (out / f"{label}.manifest.json").write_text(manifest.to_json())
        status.append((result.aborted, result.diagnostic))
        trace_files.append(trace_path)

    traces = [read_trace_csv(p) for p in trace_files]
    plotted = [(lab, tr) for lab, tr in zip(labels, traces) if tr]
    if plotted:
        render_convergence_plot([t for _, t in plotted], [lab for lab, _ in plotted], out / PLOT_NAME,
                                bench.output.log_scale if log_scale is None else log_scale)
    report = build_report(labels, traces, status)
    (out / "report.txt").write_text(report.to_text())
    (out / "report.json").write_text(report.to_json())
    return report


def replay_manifest(path, out_path=None):
    """Re-run a persisted manifest. Writes the new trace next to the original
    (``<name>.replay.csv`` unless ``out_path`` is given) and returns
    ``(identical, new_trace_path, result)``, comparing content without the
    wall-clock column."""
    path = Path(path)
    manifest = load_manifest(path)
    original = path.parent / manifest.trace
    result = execute(manifest.problem, manifest.run)
    new = Path(out_path) if out_path is not None else original.with_suffix(".replay.csv")
    write_trace_csv(result.trace, new)
    identical = strip_timing(original) == strip_timing(new)
    return identical, new, result
