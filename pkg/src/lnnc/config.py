"""Flat ``key = value`` benchmark configuration files.

Example::

    # saddle comparison
    problem.kind = indefinite_quadratic
    problem.eigenvalues = 1, -1
    problem.x0 = 1, 1e-6
    run.algorithm = lnnc, sgd_constant
    run.k_max = 20
    sgd.alpha = 0.1

``run.algorithm``, ``run.rule`` and ``run.schedule`` accept comma lists; the
run matrix is their product (the step rule only varies for ``lnnc``).
Command-line overrides use the same keys: ``--run.q=5``.
"""
from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .optimizers import RunConfig
from .problems import ProblemSpec

__all__ = ["ConfigError", "BenchConfig", "OutputOptions", "parse_config", "parse_config_text",
           "render_config", "KNOWN_KEYS"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OutputOptions:
    dir: str = "runs"
    log_scale: bool = False


@dataclass(frozen=True)
class BenchConfig:
    problem: ProblemSpec
    runs: tuple
    output: OutputOptions = field(default_factory=OutputOptions)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt(conv: Callable) -> Callable:
    return lambda s: None if s.strip().lower() in ("", "none", "off") else conv(s)


def _tuple(conv: Callable) -> Callable:
    return lambda s: tuple(conv(p) for p in s.split(",") if p.strip())


def _names(s: str) -> tuple:
    return tuple(p.strip() for p in s.split(",") if p.strip())


_PROBLEM_KEYS = {
    "kind": str.strip,
    "dim": _opt(int),
    "components": int,
    "seed": int,
    "eigenvalues": _opt(_tuple(float)),
    "layers": _tuple(int),
    "data_dim": int,
    "samples": int,
    "sigma": float,
    "floor": float,
    "hidden": _tuple(int),
    "target_scale": float,
    "init_scale": float,
    "x0": _opt(_tuple(float)),
}

_RUN_KEYS = {
    "algorithm": _names,
    "rule": _names,
    "schedule": _names,
    "k_max": int,
    "q": int,
    "schedule_seed": int,
    "eta": float,
    "rho": float,
    "alpha0": float,
    "max_backtracks": int,
    "hvp_mode": str.strip,
    "hvp_batch": str.strip,
    "eps0": float,
    "central_diff": _bool,
    "breakdown_tol": _opt(float),
    "pinv_tol": float,
    "tau_nc": _opt(float),
    "tau_desc": float,
    "g_tol": float,
    "grad_tol": _opt(float),
    "log_period": _opt(int),
}

_SGD_KEYS = {"alpha": ("sgd_alpha", float), "alpha0": ("sgd_alpha0", float), "k0": ("sgd_k0", float)}

_OUTPUT_KEYS = {"dir": str.strip, "log_scale": _bool}

KNOWN_KEYS = tuple(
    [f"problem.{k}" for k in _PROBLEM_KEYS]
    + [f"run.{k}" for k in _RUN_KEYS]
    + [f"sgd.{k}" for k in _SGD_KEYS]
    + [f"output.{k}" for k in _OUTPUT_KEYS]
)


def _converter(key: str):
    section, _, name = key.partition(".")
    table = {"problem": _PROBLEM_KEYS, "run": _RUN_KEYS, "output": _OUTPUT_KEYS}.get(section)
    if section == "sgd" and name in _SGD_KEYS:
        return _SGD_KEYS[name][1]
    if table is None or name not in table:
        return None
    return table[name]


def _read_pairs(text: str, source: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = (value, f"{source}:{lineno}")
    return pairs


def _parse_overrides(overrides: Iterable[str]) -> dict:
    pairs = {}
    for item in overrides:
        body = item[2:] if item.startswith("--") else item
        if "=" not in body:
            raise ConfigError(f"override {item!r} must look like --section.key=value")
        key, value = body.split("=", 1)
        pairs[key.strip()] = (value.strip(), f"override {item!r}")
    return pairs


def parse_config_text(text: str, overrides: Iterable[str] = (), source: str = "<config>") -> BenchConfig:
    pairs = _read_pairs(text, source)
    pairs.update(_parse_overrides(overrides))

    values = {}
    for key, (raw, where) in pairs.items():
        conv = _converter(key)
        if conv is None:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            values[key] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None

    if "problem.kind" not in values:
        raise ConfigError(f"{source}: missing required key 'problem.kind'")

    problem_kw = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("problem.")}
    try:
        problem = ProblemSpec(**problem_kw)
    except ValueError as exc:
        raise ConfigError(f"{source}: invalid problem: {exc}") from None

    run_kw = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("run.")}
    for k, v in values.items():
        if k.startswith("sgd."):
            run_kw[_SGD_KEYS[k.split(".", 1)[1]][0]] = v
    algorithms = run_kw.pop("algorithm", ("lnnc",))
    rules = run_kw.pop("rule", ("s_plus_d",))
    schedules = run_kw.pop("schedule", ("round_robin",))
    if not algorithms or not rules or not schedules:
        raise ConfigError(f"{source}: empty list for run.algorithm, run.rule or run.schedule")

    runs = []
    for alg, rule, sched in itertools.product(algorithms, rules, schedules):
        if alg != "lnnc" and rule != rules[0]:
            continue
        try:
            runs.append(RunConfig(algorithm=alg, rule=rule if alg == "lnnc" else "s_plus_d",
                                  schedule=sched, **run_kw))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}: invalid run settings: {exc}") from None

    out_kw = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("output.")}
    return BenchConfig(problem, tuple(runs), OutputOptions(**out_kw))


def parse_config(path, overrides: Iterable[str] = ()) -> BenchConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, overrides, str(path))


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg: BenchConfig) -> str:
    """Fully resolved configuration, one block per run."""
    lines = [f"problem.{k} = {_fmt(v)}" for k, v in dataclasses.asdict(cfg.problem).items()]
    lines += [f"output.{k} = {_fmt(v)}" for k, v in dataclasses.asdict(cfg.output).items()]
    for i, run in enumerate(cfg.runs):
        lines.append(f"# run {i}")
        for k, v in dataclasses.asdict(run).items():
            key = f"sgd.{k[4:]}" if k.startswith("sgd_") else f"run.{k}"
            lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
