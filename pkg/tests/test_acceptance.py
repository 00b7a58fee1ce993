"""Acceptance suite. Each criterion adds one PASS/FAIL line to the terminal summary."""
import time

import numpy as np
import pytest

from lnnc.bench import load_manifest, replay_manifest, run_matrix
from lnnc.config import BenchConfig, OutputOptions
from lnnc.hvp import exact_hvp, fd_hvp
from lnnc.lanczos import lanczos
from lnnc.optimizers import RunConfig, run_lnnc, run_sgd, trailing_mean
from lnnc.plot import epoch_length
from lnnc.problems import ProblemSpec, full_gradient, full_value, make_indefinite_quadratic, make_problem
from lnnc.traceio import read_trace_csv, strip_timing

from conftest import ACCEPTANCE_LINES, MatrixObjective, random_symmetric

# Benchmark instance: 204 parameters, 10 components of 400 samples each, so
# every mini-batch holds more samples than there are parameters.
MIXTURE = ProblemSpec("layered_gaussian_mixture", components=10, samples=4000, data_dim=16,
                      layers=(4, 4, 4), seed=0)
SGD_VARIANTS = ("sgd_constant", "sgd_diminishing", "sgd_linesearch")


def verdict(n, title, ok, detail=""):
    line = f"[acceptance {n}] {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def benchmark_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("mixture")
    runs = tuple(RunConfig(algorithm=a, k_max=1000) for a in ("lnnc",) + SGD_VARIANTS)
    started = time.perf_counter()
    report = run_matrix(BenchConfig(MIXTURE, runs, OutputOptions()), out)
    return out, report, time.perf_counter() - started


@pytest.fixture(scope="module")
def small_matrix_dir(tmp_path_factory):
    """Short runs of every algorithm on two problems, for replay and Armijo checks."""
    out = tmp_path_factory.mktemp("small")
    mix = ProblemSpec("layered_gaussian_mixture", components=5, samples=200, data_dim=4, layers=(3, 3), seed=2)
    saddle = ProblemSpec("indefinite_quadratic", eigenvalues=(1.0, -1.0), x0=(1.0, 1e-6))
    for name, problem, k in (("mixture", mix, 60), ("saddle", saddle, 20)):
        runs = tuple(RunConfig(algorithm=a, k_max=k, q=2 if name == "saddle" else 5,
                               schedule=s, schedule_seed=7)
                     for a in ("lnnc",) + SGD_VARIANTS for s in ("round_robin", "random"))
        run_matrix(BenchConfig(problem, runs, OutputOptions()), out / name)
    return out


def test_1_newton_exactness():
    rng = np.random.default_rng(2024)
    iters, worst, t0 = [], 0.0, time.perf_counter()
    for _ in range(20):
        n = int(rng.integers(1, 11))
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        H = Q @ np.diag(rng.uniform(0.1, 10.0, size=n)) @ Q.T
        obj = MatrixObjective(H, rng.normal(size=n))
        res = run_lnnc(obj, rng.normal(size=n), RunConfig(k_max=5, q=n, grad_tol=1e-8))
        iters.append(len(res.trace) if res.converged else -1)
        worst = max(worst, float(np.linalg.norm(full_gradient(obj, res.x))))
    elapsed = time.perf_counter() - t0
    ok = iters == [1] * 20 and worst <= 1e-8 and elapsed < 1.0
    verdict(1, "Newton exactness on convex quadratics", ok,
            f"iterations={sorted(set(iters))}, max |grad|={worst:.2e}, {elapsed:.2f}s")


def test_2_ritz_bound():
    rng = np.random.default_rng(7)
    worst_gap, worst_res, t0 = -np.inf, 0.0, time.perf_counter()
    for _ in range(100):
        H = random_symmetric(rng, 50)
        fact = lanczos(lambda v: H @ v, rng.normal(size=50), 5)
        mu, w = fact.min_eigenpair()
        lam = np.linalg.eigvalsh(H)
        worst_gap = max(worst_gap, np.min(np.abs(lam - mu)) - fact.beta_next)
        d = fact.V @ w
        worst_res = max(worst_res, abs(np.linalg.norm(H @ d - mu * d) - fact.beta_next * abs(w[-1])))
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-10 and worst_res <= 1e-8 and elapsed < 10
    verdict(2, "Ritz value within beta_{q+1} of the spectrum", ok,
            f"max(gap - beta)={worst_gap:.2e}, residual identity err={worst_res:.2e}, {elapsed:.2f}s")


def test_3_lanczos_hygiene():
    rng = np.random.default_rng(11)
    orth, rec, t0 = 0.0, 0.0, time.perf_counter()
    for _ in range(50):
        n = int(rng.integers(20, 201))
        q = int(rng.integers(1, 21))
        H = random_symmetric(rng, n)
        fact = lanczos(lambda v: H @ v, rng.normal(size=n), q)
        V = fact.V
        orth = max(orth, np.abs(V.T @ V - np.eye(V.shape[1])).max())
        R = H @ V - V @ fact.T()
        if fact.v_next is not None:
            R[:, -1] -= fact.beta_next * fact.v_next
        rec = max(rec, np.abs(R).max() / np.linalg.norm(H, 2))
    elapsed = time.perf_counter() - t0
    ok = orth <= 1e-8 and rec <= 1e-8 and elapsed < 10
    verdict(3, "Lanczos orthonormality and recurrence", ok,
            f"orth={orth:.2e}, recurrence={rec:.2e}, {elapsed:.2f}s")


def test_4_fd_hvp_fidelity():
    rng = np.random.default_rng(5)
    problems = {"quartic": make_problem(ProblemSpec("quartic_sum", dim=20, components=4)),
                "mixture": make_problem(MIXTURE)}
    worst, t0 = {}, time.perf_counter()
    for name, obj in problems.items():
        errs = []
        for _ in range(20):
            x = obj.initial_point() + 0.3 * rng.normal(size=obj.dim)
            v = rng.normal(size=obj.dim)
            j = int(rng.integers(obj.m))
            ex = exact_hvp(obj, j, x)(v)
            errs.append(np.linalg.norm(fd_hvp(obj, j, x)(v) - ex) / np.linalg.norm(ex))
        worst[name] = max(errs)
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-4 and elapsed < 5
    verdict(4, "finite-difference HVP matches exact", ok,
            ", ".join(f"{k} max rel err={v:.2e}" for k, v in worst.items()) + f", {elapsed:.2f}s")


def test_5_saddle_escape():
    obj = make_indefinite_quadratic(2, 1, [1.0, -1.0])
    t0 = time.perf_counter()
    lnnc = run_lnnc(obj, [1.0, 1e-6], RunConfig(k_max=20, q=2))
    sgd = run_sgd(obj, [1.0, 1e-6], RunConfig(algorithm="sgd_constant", k_max=100, sgd_alpha=0.1))
    elapsed = time.perf_counter() - t0
    f_lnnc = full_value(obj, lnnc.x)
    f_sgd = full_value(obj, sgd.x)
    ratio = abs(f_lnnc) / max(abs(f_sgd), np.finfo(float).tiny)
    ok = f_lnnc <= -10 and f_sgd >= -1e-3 and ratio > 1e3 and elapsed < 1.0
    verdict(5, "saddle escape versus SGD", ok,
            f"LNNC f={f_lnnc:.4g}, SGD f={f_sgd:.4g}, separation={ratio:.3g}, {elapsed:.2f}s")


@pytest.mark.slow
def test_6_mixture_benchmark(benchmark_dir):
    out, report, elapsed = benchmark_dir
    means = {}
    for label in ("lnnc",) + SGD_VARIANTS:
        trace = read_trace_csv(out / f"{label}.csv")
        means[label] = float(trailing_mean([r.f_j_after for r in trace], epoch_length(trace))[-1])
    best_sgd = min(SGD_VARIANTS, key=means.get)
    svg = (out / "convergence.svg").read_text()
    plotted = all(svg.count(f'data-label="{lab}"') == 2 for lab in means)
    ok = (not report.any_aborted and means["lnnc"] <= means[best_sgd] and plotted
          and "objective vs wall time" in svg and elapsed < 300)
    verdict(6, "LNNC epoch-mean objective <= best SGD on the mixture", ok,
            f"LNNC={means['lnnc']:.5g}, best SGD {best_sgd}={means[best_sgd]:.5g}, {elapsed:.0f}s")


def _armijo_violations(directory):
    checked, bad = 0, []
    for manifest_path in sorted(directory.rglob("*.manifest.json")):
        m = load_manifest(manifest_path)
        for r in read_trace_csv(manifest_path.parent / m.trace):
            if r.alpha > 0 and r.slope is not None:
                checked += 1
                if not r.f_j_after < r.f_j_before + m.run.eta * r.alpha * r.slope:
                    bad.append((manifest_path.name, r.k))
    return checked, bad


@pytest.mark.slow
def test_7_armijo_contract(benchmark_dir, small_matrix_dir):
    t0 = time.perf_counter()
    checked, bad = 0, []
    for d in (benchmark_dir[0], small_matrix_dir):
        c, b = _armijo_violations(d)
        checked, bad = checked + c, bad + b
    elapsed = time.perf_counter() - t0
    ok = checked > 0 and not bad and elapsed < 1.0
    verdict(7, "Armijo condition holds on every accepted step", ok,
            f"{checked} steps checked, {len(bad)} violations, {elapsed:.2f}s")


def test_8_replay_determinism(small_matrix_dir):
    t0 = time.perf_counter()
    manifests = sorted(small_matrix_dir.rglob("*.manifest.json"))
    mismatched = []
    for p in manifests:
        identical, new, _ = replay_manifest(p)
        original = p.parent / load_manifest(p).trace
        if not (identical and strip_timing(original) == strip_timing(new)):
            mismatched.append(p.name)
    elapsed = time.perf_counter() - t0
    ok = len(manifests) == 16 and not mismatched and elapsed < 60
    verdict(8, "replay reproduces traces byte for byte", ok,
            f"{len(manifests)} manifests, {len(mismatched)} mismatched, {elapsed:.1f}s")


@pytest.mark.slow
def test_9_scheduler(benchmark_dir, small_matrix_dir):
    lnnc = read_trace_csv(benchmark_dir[0] / "lnnc.csv")
    counts = np.bincount([r.j for r in lnnc], minlength=MIXTURE.components)
    even = counts.tolist() == [1000 // MIXTURE.components] * MIXTURE.components
    rand = read_trace_csv(small_matrix_dir / "mixture" / "lnnc-random.csv")
    emitted = len(rand) == 60 and (small_matrix_dir / "mixture" / "convergence.svg").exists()
    verdict(9, "round-robin coverage and random-schedule trace", even and emitted,
            f"visits per component={sorted(set(counts.tolist()))}, random trace rows={len(rand)}")
