import numpy as np
import pytest

from lnnc.directions import (
    DirectionBundle,
    assemble_step,
    compute_directions,
    filtered_direction,
    negative_curvature_direction,
    newton_direction,
)
from lnnc.lanczos import LanczosFactorization, lanczos

from conftest import random_symmetric


def fact_for(H, g, q):
    H = np.asarray(H, dtype=float)
    return lanczos(lambda v: H @ v, g, q)


def bundle(s, d, g=None, s_tilde=None):
    s, d = np.asarray(s, float), np.asarray(d, float)
    g = -s if g is None else np.asarray(g, float)
    return DirectionBundle(s, s if s_tilde is None else np.asarray(s_tilde, float), d, -1.0, 0.0, g)


def test_newton_convex_example():
    H, g = np.diag([2.0, 4.0]), np.array([2.0, 4.0])
    s = newton_direction(fact_for(H, g, 2), g)
    np.testing.assert_allclose(s, np.linalg.solve(H, -g), rtol=1e-12)
    np.testing.assert_allclose(s, [-1.0, -1.0], rtol=1e-12)


def test_newton_identity_is_steepest_descent():
    g = np.array([0.5, -2.0, 3.0])
    np.testing.assert_allclose(newton_direction(fact_for(np.eye(3), g, 2), g), -g, rtol=1e-14)


def test_newton_indefinite_example():
    H, g = np.diag([1.0, -1.0]), np.array([1.0, 1.0]) / np.sqrt(2)
    s = newton_direction(fact_for(H, g, 2), g)
    np.testing.assert_allclose(s, np.array([-1.0, 1.0]) / np.sqrt(2), rtol=1e-12)


def test_newton_matches_dense_solve():
    rng = np.random.default_rng(0)
    for n in range(2, 11):
        H = random_symmetric(rng, n)
        if np.linalg.cond(H) > 1e6:
            continue
        g = rng.normal(size=n)
        s = newton_direction(fact_for(H, g, n), g)
        ref = np.linalg.solve(H, -g)
        assert np.linalg.norm(s - ref) <= 1e-8 * np.linalg.norm(ref)


def test_galerkin_residual():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(5, 60))
        H = random_symmetric(rng, n)
        g = rng.normal(size=n)
        fact = fact_for(H, g, min(5, n))
        s = newton_direction(fact, g)
        assert np.linalg.norm(fact.V.T @ (H @ s + g)) <= 1e-6 * np.linalg.norm(g)


def test_filtered_examples():
    H, g = np.diag([2.0, 4.0]), np.array([2.0, 4.0])
    fact = fact_for(H, g, 2)
    assert np.all(fact.alpha > 0)
    np.testing.assert_array_equal(filtered_direction(fact, g), newton_direction(fact, g))

    # hand-built decoupled factorisation with alpha = [2, -1]
    V = np.eye(2)
    fact = LanczosFactorization(V, np.array([2.0, -1.0]), np.array([0.0]), 0.0, None, 1.0, 2)
    g = np.array([2.0, -5.0])  # -V^T g = (-2, 5)
    np.testing.assert_allclose(filtered_direction(fact, g), [-1.0, 0.0])

    fact = LanczosFactorization(V, np.array([-2.0, -1.0]), np.array([0.3]), 0.0, None, 1.0, 2)
    assert not filtered_direction(fact, np.ones(2)).any()


def test_filter_consistency_bitwise():
    rng = np.random.default_rng(2)
    for _ in range(20):
        A = rng.normal(size=(12, 12))
        H = A @ A.T + np.eye(12)
        g = rng.normal(size=12)
        b = compute_directions(fact_for(H, g, 5), g)
        assert np.array_equal(b.s, b.s_tilde)


def test_negative_curvature_examples():
    H, g = np.diag([1.0, -1.0]), np.array([1.0, 1.0]) / np.sqrt(2)
    d, mu, _ = negative_curvature_direction(fact_for(H, g, 2), g)
    assert mu == pytest.approx(-1.0, abs=1e-12)
    np.testing.assert_allclose(d, [0.0, -1.0], atol=1e-12)
    assert d @ g <= 0

    d, mu, _ = negative_curvature_direction(fact_for(np.diag([3.0, 1.0, 2.0]), np.ones(3), 3), np.ones(3), 1e-8)
    assert mu > 0 and not d.any()

    d, mu, _ = negative_curvature_direction(fact_for(H, [1.0, 0.0], 2), np.array([1.0, 0.0]))
    assert mu == 1.0 and not d.any()


def test_curvature_certificate():
    rng = np.random.default_rng(3)
    hits = 0
    for _ in range(40):
        n = int(rng.integers(6, 50))
        H = random_symmetric(rng, n)
        g = rng.normal(size=n)
        fact = fact_for(H, g, 5)
        d, mu, bound = negative_curvature_direction(fact, g)
        if not d.any():
            continue
        hits += 1
        assert abs(np.linalg.norm(d) - 1.0) <= 1e-10
        assert d @ g <= 0
        assert abs(d @ H @ d - mu) <= bound + 1e-8
    assert hits > 20


def test_assemble_rules():
    s, d = np.array([1.0, 0.0]), np.array([0.0, 2.0])
    g = np.array([-1.0, -1.0])
    st = assemble_step(bundle(s, d, g), "s_plus_d")
    np.testing.assert_array_equal(st.t, [1.0, 2.0])
    assert not st.degenerate
    np.testing.assert_array_equal(assemble_step(bundle(s, d, g), "s_plus_scaled_d").t, [1.0, 1.0])
    np.testing.assert_array_equal(
        assemble_step(bundle(s, d, g, s_tilde=[0.5, 0.0]), "stilde_plus_d").t, [0.5, 2.0])
    np.testing.assert_array_equal(assemble_step(bundle(s, np.zeros(2), g), "s_plus_scaled_d").t, s)
    with pytest.raises(ValueError):
        assemble_step(bundle(s, d, g), "s_times_d")


def test_assemble_flags_cancellation():
    st = assemble_step(bundle([0.0, -1.0], [0.0, 1.0], g=[0.0, -1.0]), "s_plus_d")
    np.testing.assert_array_equal(st.t, [0.0, 0.0])
    assert st.degenerate


def test_assemble_flags_non_descent():
    st = assemble_step(bundle([0.0, -2.0], [0.0, 1.0], g=[0.0, -2.0]), "s_plus_d")
    assert st.t @ [0.0, -2.0] > 0
    assert st.degenerate


def test_singular_T_gives_zero_newton_but_keeps_curvature():
    V = np.eye(2)
    fact = LanczosFactorization(V, np.array([0.0, 0.0]), np.array([0.0]), 0.0, None, 1.0, 2)
    b = compute_directions(fact, np.array([1.0, 0.0]))
    assert not b.s.any()
    assert not b.d.any()
