"""Command line: ``lnnc run|replay|plot|report``.

Exit status: 0 on success, 1 on invalid input (or a replay that does not
reproduce its trace), 2 when a run aborted.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import build_report, replay_manifest, run_matrix
from .config import ConfigError, parse_config, render_config
from .plot import render_convergence_plot
from .traceio import read_trace_csv

EXIT_OK, EXIT_INVALID, EXIT_ABORTED = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lnnc", description="Lanczos subspace descent benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every configuration in a config file",
                       epilog="Unrecognised --section.key=value flags override config keys.")
    r.add_argument("config")
    r.add_argument("-o", "--out", help="output directory (overrides output.dir)")
    r.add_argument("--quiet", action="store_true", help="do not echo the resolved config")

    rp = sub.add_parser("replay", help="re-run a manifest and compare traces")
    rp.add_argument("manifest")
    rp.add_argument("-o", "--out", help="where to write the replayed trace")

    pl = sub.add_parser("plot", help="render traces to a two-panel SVG")
    pl.add_argument("traces", nargs="+")
    pl.add_argument("-o", "--out", default="convergence.svg")
    pl.add_argument("--log", action="store_true", help="log-scale objective axis")

    rep = sub.add_parser("report", help="compare traces")
    rep.add_argument("traces", nargs="+")
    rep.add_argument("-o", "--out", help="also write the report here")
    return p


def _labels(paths):
    return [Path(p).stem for p in paths]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    args, extra = parser.parse_known_args(argv)
    if extra and args.command != "run":
        parser.error(f"unrecognised arguments: {' '.join(extra)}")
    try:
        if args.command == "run":
            bench = parse_config(args.config, extra)
            if not args.quiet:
                print(render_config(bench), end="")
            report = run_matrix(bench, args.out)
            print(report.to_text(), end="")
            return EXIT_ABORTED if report.any_aborted else EXIT_OK
        if args.command == "replay":
            identical, new, result = replay_manifest(args.manifest, args.out)
            print(f"replayed trace: {new}")
            print("identical" if identical else "MISMATCH")
            if result.aborted:
                return EXIT_ABORTED
            return EXIT_OK if identical else EXIT_INVALID
        traces = [read_trace_csv(p) for p in args.traces]
        if args.command == "plot":
            render_convergence_plot(traces, _labels(args.traces), args.out, args.log)
            print(f"wrote {args.out}")
            return EXIT_OK
        report = build_report(_labels(args.traces), traces)
        print(report.to_text(), end="")
        if args.out:
            Path(args.out).write_text(report.to_text())
        return EXIT_OK
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
