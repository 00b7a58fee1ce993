"""
LNNC against SGD on a layered Gaussian mixture
==============================================

Runs the benchmark matrix from ``configs/mixture.conf`` and writes traces,
manifests, a two-panel convergence plot and a report under ``runs/mixture``.
Takes a couple of minutes.
"""

from pathlib import Path

from lnnc.bench import replay_manifest, run_matrix
from lnnc.config import parse_config

here = Path(__file__).parent
bench = parse_config(here / "configs" / "mixture.conf")
print(len(bench.runs), "runs on", bench.problem.kind)

# %%
report = run_matrix(bench, here / "runs" / "mixture")
print(report.to_text())

# %%
# Any manifest can be replayed; the trace matches apart from wall-clock times.
identical, path, _ = replay_manifest(here / "runs" / "mixture" / "lnnc.manifest.json")
print("replay identical:", identical, "->", path)
