"""Batch Lanczos subspace descent and SGD baselines over finite-sum objectives."""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .directions import STEP_RULES, assemble_step, compute_directions, negative_curvature_direction
from .hvp import DEFAULT_EPS0, HVP_MODES, make_hvp
from .lanczos import LanczosError, lanczos
from .problems import ComponentObjective, full_gradient, full_value

__all__ = [
    "ALGORITHMS",
    "RunConfig",
    "TraceRecord",
    "RunResult",
    "IndexSchedule",
    "NotDescentError",
    "LineSearchStep",
    "armijo_linesearch",
    "run_lnnc",
    "run_sgd",
    "run",
    "trailing_mean",
]

ALGORITHMS = ("lnnc", "sgd_constant", "sgd_diminishing", "sgd_linesearch")
SCHEDULES = ("round_robin", "random")


@dataclass(frozen=True)
class RunConfig:
    """Settings for one optimizer run.

    ``log_period=None`` logs the full objective once per epoch (every ``m``
    iterations). ``grad_tol=None`` disables the full-gradient stopping test,
    so exactly ``k_max`` iterations run. ``breakdown_tol`` and ``tau_nc`` of
    None select their scale-aware defaults.
    """

    algorithm: str = "lnnc"
    k_max: int = 1000
    q: int = 5
    schedule: str = "round_robin"
    schedule_seed: int = 0
    rule: str = "s_plus_d"
    eta: float = 1e-4
    rho: float = 0.5
    alpha0: float = 1.0
    max_backtracks: int = 30
    hvp_mode: str = "auto"
    hvp_batch: str = "mini"
    eps0: float = DEFAULT_EPS0
    central_diff: bool = False
    breakdown_tol: Optional[float] = None
    pinv_tol: float = 1e-12
    tau_nc: Optional[float] = None
    tau_desc: float = 1e-12
    g_tol: float = 0.0
    grad_tol: Optional[float] = None
    log_period: Optional[int] = None
    sgd_alpha: float = 0.1
    sgd_alpha0: float = 0.1
    sgd_k0: float = 100.0

    def __post_init__(self):
        problems = []
        if self.algorithm not in ALGORITHMS:
            problems.append(f"algorithm must be one of {ALGORITHMS}")
        if self.k_max < 1:
            problems.append("k_max must be >= 1")
        if self.q < 1:
            problems.append("q must be >= 1")
        if self.schedule not in SCHEDULES:
            problems.append(f"schedule must be one of {SCHEDULES}")
        if self.rule not in STEP_RULES:
            problems.append(f"rule must be one of {STEP_RULES}")
        if not 0 < self.eta < 1:
            problems.append("eta must lie in (0, 1)")
        if not 0 < self.rho < 1:
            problems.append("rho must lie in (0, 1)")
        if not self.alpha0 > 0:
            problems.append("alpha0 must be positive")
        if self.max_backtracks < 0:
            problems.append("max_backtracks must be >= 0")
        if self.hvp_mode not in HVP_MODES:
            problems.append(f"hvp_mode must be one of {HVP_MODES}")
        if self.hvp_batch not in ("mini", "full"):
            problems.append("hvp_batch must be 'mini' or 'full'")
        if not self.eps0 > 0:
            problems.append("eps0 must be positive")
        if self.log_period is not None and self.log_period < 1:
            problems.append("log_period must be >= 1")
        if not self.sgd_alpha > 0 or not self.sgd_alpha0 > 0 or not self.sgd_k0 > 0:
            problems.append("sgd step parameters must be positive")
        if problems:
            raise ValueError("; ".join(problems))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class TraceRecord:
    k: int
    j: int
    f_j_before: float
    f_j_after: float
    full_f: Optional[float]
    alpha: float
    mu: Optional[float]
    fallback_used: bool
    slope: Optional[float]
    grad_norm: float
    elapsed: float


@dataclass
class RunResult:
    trace: list
    x: np.ndarray
    aborted: bool = False
    diagnostic: Optional[str] = None
    converged: bool = False


class IndexSchedule:
    """Component index generator: deterministic cycling or seeded uniform draws."""

    def __init__(self, m: int, kind: str = "round_robin", seed: int = 0):
        if m < 1:
            raise ValueError("m must be >= 1")
        if kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {kind!r}")
        self.m, self.kind = m, kind
        self._k = 0
        self._rng = np.random.default_rng(seed)

    def next(self) -> int:
        if self.kind == "round_robin":
            j = self._k % self.m
        else:
            j = int(self._rng.integers(self.m))
        self._k += 1
        return j

    __next__ = next

    def __iter__(self):
        return self


class NotDescentError(ValueError):
    pass


class LineSearchStep(NamedTuple):
    alpha: float
    value: float


def armijo_linesearch(obj: ComponentObjective, j: int, x, t, g, eta: float = 1e-4, rho: float = 0.5,
                      alpha0: float = 1.0, max_backtracks: int = 30, f0: Optional[float] = None,
                      allow_flat: bool = False) -> Optional[LineSearchStep]:
    """Backtrack ``alpha = alpha0 * rho**i`` until
    ``f_j(x + alpha t) < f_j(x) + eta * alpha * t.g``.

    At most ``max_backtracks + 1`` trial points are evaluated. Returns None
    when none passes. ``allow_flat`` admits ``t.g == 0`` (a pure curvature
    direction), for which the test reduces to strict decrease.
    """
    slope = float(np.dot(t, g))
    if slope > 0 or (slope == 0 and not allow_flat):
        raise NotDescentError("not a descent direction")
    if f0 is None:
        f0 = obj.value(j, x)
    alpha = alpha0
    for _ in range(max_backtracks + 1):
        f = obj.value(j, x + alpha * t)
        if f < f0 + eta * alpha * slope:
            return LineSearchStep(alpha, f)
        alpha *= rho
    return None


def trailing_mean(values, window: int) -> np.ndarray:
    """Mean of the last ``window`` entries up to and including each position."""
    v = np.asarray(values, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(1, v.size + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


class _Recorder:
    def __init__(self, obj, cfg):
        self.obj, self.cfg = obj, cfg
        self.period = cfg.log_period or obj.m
        self.start = time.perf_counter()
        self.trace = []

    def log(self, k, j, f0, f1, alpha, mu, fallback, slope, gnorm, x, force_full=False):
        full = None
        if force_full or (k + 1) % self.period == 0 or k == self.cfg.k_max - 1:
            full = full_value(self.obj, x)
        self.trace.append(TraceRecord(k, j, f0, f1, full, alpha, mu, fallback, slope, gnorm,
                                      time.perf_counter() - self.start))

    def converged(self, x) -> bool:
        tol = self.cfg.grad_tol
        return tol is not None and np.linalg.norm(full_gradient(self.obj, x)) <= tol


def _start(obj, x0, cfg):
    x = np.array(x0, dtype=float)
    if x.shape != (obj.dim,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({obj.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    return x, IndexSchedule(obj.m, cfg.schedule, cfg.schedule_seed), _Recorder(obj, cfg)


def _abort(rec, x, why):
    return RunResult(rec.trace, x, aborted=True, diagnostic=why)


def run_lnnc(obj: ComponentObjective, x0, cfg: RunConfig = RunConfig()) -> RunResult:
    """Batch Lanczos subspace descent.

    Each iteration takes the next component ``j``, runs ``q`` Lanczos steps on
    the component Hessian seeded with ``grad f_j``, forms ``t`` from the
    Newton and negative-curvature directions and backtracks on ``f_j``.

    When ``t`` is zero, not a descent direction, or fails the line search,
    the curvature direction ``d`` alone is tried, then ``-grad f_j``; if all
    fail the iterate is left unchanged. With ``|grad f_j| <= g_tol`` the
    Hessian is probed from a seeded random vector instead and only a
    negative-curvature step is attempted.
    """
    x, sched, rec = _start(obj, x0, cfg)
    q = min(cfg.q, obj.dim)
    for k in range(cfg.k_max):
        j = sched.next()
        f0 = obj.value(j, x)
        g = obj.gradient(j, x)
        gnorm = float(np.linalg.norm(g))
        if not (np.isfinite(f0) and np.isfinite(gnorm)):
            return _abort(rec, x, f"nonfinite objective or gradient at k={k}, j={j}")
        try:
            op = make_hvp(obj, None if cfg.hvp_batch == "full" else j, x, cfg.hvp_mode, cfg.eps0,
                          cfg.central_diff)
            if gnorm <= cfg.g_tol:
                probe = np.random.default_rng([cfg.schedule_seed, k]).normal(size=obj.dim)
                fact = lanczos(op, probe, q, cfg.breakdown_tol)
                d, mu, _ = negative_curvature_direction(fact, g, cfg.tau_nc)
                candidates = [(d, True)] if np.any(d) else []
                primary = None
            else:
                fact = lanczos(op, g, q, cfg.breakdown_tol)
                bundle = compute_directions(fact, g, cfg.tau_nc, cfg.pinv_tol)
                mu = bundle.mu
                step = assemble_step(bundle, cfg.rule, cfg.tau_desc)
                primary = None if step.degenerate else step.t
                candidates = [] if primary is None else [(primary, False)]
                if np.any(bundle.d) and not (primary is not None and np.array_equal(primary, bundle.d)):
                    candidates.append((bundle.d, True))
                candidates.append((-g, False))
        except (LanczosError, FloatingPointError) as exc:
            return _abort(rec, x, f"k={k}, j={j}: {exc}")

        alpha, f1, slope, fallback = 0.0, f0, None, False
        if candidates:
            fallback = True
            for t, flat in candidates:
                if not flat and np.dot(t, g) >= 0:
                    continue
                found = armijo_linesearch(obj, j, x, t, g, cfg.eta, cfg.rho, cfg.alpha0,
                                          cfg.max_backtracks, f0, allow_flat=flat)
                if found is not None:
                    alpha, f1 = found
                    slope = float(np.dot(t, g))
                    fallback = t is not primary
                    x = x + alpha * t
                    break
        if not np.isfinite(f1):
            return _abort(rec, x, f"nonfinite objective after step at k={k}, j={j}")
        done = rec.converged(x)
        rec.log(k, j, f0, f1, alpha, mu, fallback, slope, gnorm, x, force_full=done)
        if done:
            return RunResult(rec.trace, x, converged=True)
    return RunResult(rec.trace, x)


def run_sgd(obj: ComponentObjective, x0, cfg: RunConfig) -> RunResult:
    """Mini-batch gradient descent ``x <- x - alpha_k grad f_j(x)``.

    ``sgd_constant`` uses ``alpha_k = sgd_alpha``; ``sgd_diminishing`` uses
    ``sgd_alpha0 / (1 + k / sgd_k0)``; ``sgd_linesearch`` backtracks on
    ``f_j`` with the Armijo parameters of ``cfg``. Only the line-search
    variant logs a slope, since only it applies a sufficient-decrease test.
    """
    if not cfg.algorithm.startswith("sgd_"):
        raise ValueError(f"run_sgd cannot run algorithm {cfg.algorithm!r}")
    x, sched, rec = _start(obj, x0, cfg)
    for k in range(cfg.k_max):
        j = sched.next()
        f0 = obj.value(j, x)
        g = obj.gradient(j, x)
        gnorm = float(np.linalg.norm(g))
        if not (np.isfinite(f0) and np.isfinite(gnorm)):
            return _abort(rec, x, f"nonfinite objective or gradient at k={k}, j={j}")
        slope = None
        if cfg.algorithm == "sgd_linesearch":
            alpha, f1 = 0.0, f0
            if gnorm > 0:
                found = armijo_linesearch(obj, j, x, -g, g, cfg.eta, cfg.rho, cfg.alpha0,
                                          cfg.max_backtracks, f0)
                if found is not None:
                    alpha, f1 = found
                    slope = float(np.dot(-g, g))
                    x = x - alpha * g
        else:
            if cfg.algorithm == "sgd_constant":
                alpha = cfg.sgd_alpha
            else:
                alpha = cfg.sgd_alpha0 / (1.0 + k / cfg.sgd_k0)
            x = x - alpha * g
            f1 = obj.value(j, x)
        if not np.isfinite(f1):
            return _abort(rec, x, f"nonfinite objective after step at k={k}, j={j}")
        done = rec.converged(x)
        rec.log(k, j, f0, f1, alpha, None, False, slope, gnorm, x, force_full=done)
        if done:
            return RunResult(rec.trace, x, converged=True)
    return RunResult(rec.trace, x)


def run(obj: ComponentObjective, x0, cfg: RunConfig) -> RunResult:
    if cfg.algorithm == "lnnc":
        return run_lnnc(obj, x0, cfg)
    return run_sgd(obj, x0, cfg)
