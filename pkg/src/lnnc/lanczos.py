"""Lanczos tridiagonalisation and small symmetric tridiagonal kernels.

``T`` is always described by its diagonal ``alpha`` (length q) and its
off-diagonal ``beta`` (length q - 1), where ``beta[i]`` couples rows ``i``
and ``i + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

__all__ = [
    "LanczosError",
    "ZeroSeedError",
    "SingularTridiagonalError",
    "LanczosFactorization",
    "TridiagEigenPair",
    "lanczos",
    "tridiag_matrix",
    "sturm_count",
    "tridiag_min_eigenpair",
    "tridiag_solve",
]

_EPS = np.finfo(float).eps


class LanczosError(ArithmeticError):
    pass


class ZeroSeedError(LanczosError):
    """The seed vector has zero norm."""


class SingularTridiagonalError(LanczosError):
    """Every eigenvalue of ``T`` fell below the pseudo-inverse tolerance."""


class TridiagEigenPair(NamedTuple):
    mu: float
    w: np.ndarray


@dataclass(frozen=True)
class LanczosFactorization:
    """``H V = V T + beta_next * v_next e_q^T`` with orthonormal columns of V."""

    V: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    beta_next: float
    v_next: Optional[np.ndarray]
    seed_norm: float
    requested_q: int

    @property
    def effective_q(self) -> int:
        return self.alpha.size

    @property
    def breakdown(self) -> bool:
        return self.beta_next == 0.0

    def T(self) -> np.ndarray:
        return tridiag_matrix(self.alpha, self.beta)

    def min_eigenpair(self) -> TridiagEigenPair:
        return tridiag_min_eigenpair(self.alpha, self.beta)

    def solve(self, rhs, filter: str = "none", pinv_tol: float = 1e-12):
        return tridiag_solve(self.alpha, self.beta, rhs, filter, pinv_tol)


def lanczos(op: Callable[[np.ndarray], np.ndarray], g, q: int,
            breakdown_tol: Optional[float] = None) -> LanczosFactorization:
    """Run ``q`` Lanczos steps on the symmetric operator ``op`` seeded with ``g``.

    Every new vector is reorthogonalised (modified Gram-Schmidt, two passes)
    against all previous ones. The process stops early when the next
    off-diagonal falls below ``breakdown_tol`` (default
    ``1e-10 * (1 + |alpha_1|)``); then ``beta_next`` is 0 and the Krylov space
    is invariant.
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    if q < 1:
        raise ValueError("q must be >= 1")
    if q > n:
        raise ValueError(f"q={q} exceeds the dimension {n}")
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        raise ZeroSeedError("zero seed")
    if not np.isfinite(gnorm):
        raise LanczosError("nonfinite seed vector")

    V = np.zeros((n, q))
    alpha = np.zeros(q)
    beta = np.zeros(q)  # beta[i] = |residual| after step i
    V[:, 0] = g / gnorm
    tol = breakdown_tol
    for i in range(q):
        w = np.asarray(op(V[:, i]), dtype=float)
        if not np.all(np.isfinite(w)):
            raise LanczosError(f"nonfinite Hessian-vector product at Lanczos step {i + 1}")
        if i > 0:
            w = w - beta[i - 1] * V[:, i - 1]
        alpha[i] = V[:, i] @ w
        w = w - alpha[i] * V[:, i]
        for _ in range(2):
            for k in range(i + 1):
                w -= (V[:, k] @ w) * V[:, k]
        beta[i] = np.linalg.norm(w)
        if tol is None:
            tol = 1e-10 * (1.0 + abs(alpha[0]))
        if beta[i] < tol:
            return LanczosFactorization(V[:, :i + 1], alpha[:i + 1], beta[:i], 0.0, None, gnorm, q)
        if i + 1 < q:
            V[:, i + 1] = w / beta[i]
    return LanczosFactorization(V, alpha, beta[:q - 1], float(beta[q - 1]), w / beta[q - 1], gnorm, q)


def tridiag_matrix(alpha, beta) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)


def sturm_count(alpha, beta, x: float) -> int:
    """Number of eigenvalues of T strictly below ``x`` (LDL^T pivot signs)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    scale = max(np.max(np.abs(alpha)), np.max(np.abs(beta), initial=0.0), abs(x), 1e-300)
    tiny = _EPS * scale
    count = 0
    d = alpha[0] - x
    for i in range(alpha.size):
        if i > 0:
            d = alpha[i] - x - beta[i - 1] ** 2 / d
        if d == 0.0:
            d = -tiny
        if d < 0:
            count += 1
    return count


def tridiag_min_eigenpair(alpha, beta) -> TridiagEigenPair:
    """Smallest eigenvalue of T by Sturm bisection, eigenvector by inverse
    iteration, eigenvalue polished by the Rayleigh quotient."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    q = alpha.size
    if q == 0:
        raise ValueError("empty tridiagonal")
    if q == 1:
        return TridiagEigenPair(float(alpha[0]), np.ones(1))
    size = max(np.max(np.abs(alpha)), np.max(np.abs(beta)))
    if size == 0.0:
        return TridiagEigenPair(0.0, np.eye(q)[0])
    if not np.isfinite(size):
        raise LanczosError("nonfinite tridiagonal entries")
    mu, w = _min_eigenpair_unit(alpha / size, beta / size)
    return TridiagEigenPair(mu * size, w)


def _min_eigenpair_unit(alpha, beta):
    q = alpha.size
    radius = np.zeros(q)
    radius[:-1] += np.abs(beta)
    radius[1:] += np.abs(beta)
    lo = float(np.min(alpha - radius))
    hi = float(np.max(alpha + radius))
    scale = max(abs(lo), abs(hi))
    lo -= _EPS * scale
    for _ in range(200):
        if hi - lo <= 2 * _EPS * scale:
            break
        mid = 0.5 * (lo + hi)
        if sturm_count(alpha, beta, mid) >= 1:
            hi = mid
        else:
            lo = mid

    # lo sits at or just below the smallest eigenvalue, so the shifted
    # matrix is positive definite and inverse iteration amplifies its eigenvector
    T = tridiag_matrix(alpha, beta)
    shift = lo - 1e3 * _EPS * scale
    A = T - shift * np.eye(q)
    w = np.random.default_rng(12345).uniform(0.5, 1.5, size=q)
    w /= np.linalg.norm(w)
    mu = 0.5 * (lo + hi)
    for _ in range(8):
        w = np.linalg.solve(A, w)
        w /= np.linalg.norm(w)
        mu = float(w @ T @ w)
        if np.linalg.norm(T @ w - mu * w) <= 1e-13 * scale:
            break
    return TridiagEigenPair(mu, w)


def _pinv_solve(A: np.ndarray, rhs: np.ndarray, pinv_tol: float):
    lam, U = np.linalg.eigh(A)
    top = np.max(np.abs(lam))
    keep = np.abs(lam) > pinv_tol * top
    if top == 0.0 or not np.isfinite(top) or not keep.any():
        return None
    return U[:, keep] @ ((U[:, keep].T @ rhs) / lam[keep])


def tridiag_solve(alpha, beta, rhs, filter: str = "none", pinv_tol: float = 1e-12):
    """Solve ``T y = rhs`` through the eigendecomposition of T.

    Eigenvalues with ``|lambda| <= pinv_tol * max|lambda|`` are truncated.
    With ``filter="drop_negative_diagonal"`` only indices with
    ``alpha_i >= 0`` are kept: the principal submatrix on those indices is
    solved against the restricted right-hand side and the result is embedded
    with zeros elsewhere.

    Returns ``(y, kept)`` where ``kept`` is the tuple of retained indices.
    """
    alpha = np.asarray(alpha, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    q = alpha.size
    if rhs.shape != (q,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({q},)")
    T = tridiag_matrix(alpha, beta)
    if filter == "none":
        y = _pinv_solve(T, rhs, pinv_tol)
        if y is None:
            raise SingularTridiagonalError("numerically singular T")
        return y, tuple(range(q))
    if filter != "drop_negative_diagonal":
        raise ValueError(f"unknown filter {filter!r}")
    kept = tuple(int(i) for i in np.flatnonzero(alpha >= 0))
    y = np.zeros(q)
    if not kept:
        return y, kept
    if len(kept) == q:
        y, _ = tridiag_solve(alpha, beta, rhs, "none", pinv_tol)
        return y, kept
    idx = np.array(kept)
    sub = _pinv_solve(T[np.ix_(idx, idx)], rhs[idx], pinv_tol)
    if sub is not None:
        y[idx] = sub
    return y, kept
