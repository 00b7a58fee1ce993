"""Newton, filtered-Newton and negative-curvature directions from a Lanczos
factorisation, and their combination into a step."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lanczos import LanczosFactorization, SingularTridiagonalError

__all__ = [
    "STEP_RULES",
    "DirectionBundle",
    "StepChoice",
    "newton_direction",
    "filtered_direction",
    "negative_curvature_direction",
    "compute_directions",
    "assemble_step",
]

STEP_RULES = ("s_plus_d", "s_plus_scaled_d", "stilde_plus_d")


@dataclass(frozen=True)
class DirectionBundle:
    s: np.ndarray
    s_tilde: np.ndarray
    d: np.ndarray
    mu: float
    ritz_residual_bound: float
    g: np.ndarray


@dataclass(frozen=True)
class StepChoice:
    rule: str
    t: np.ndarray
    degenerate: bool


def newton_direction(fact: LanczosFactorization, g, pinv_tol: float = 1e-12) -> np.ndarray:
    """``s = V y`` with ``T y = -V^T g``: the Galerkin Newton step on the
    Krylov space. Raises :class:`SingularTridiagonalError` for singular T."""
    y, _ = fact.solve(-(fact.V.T @ g), "none", pinv_tol)
    return fact.V @ y


def filtered_direction(fact: LanczosFactorization, g, pinv_tol: float = 1e-12) -> np.ndarray:
    """Newton step restricted to the Lanczos vectors whose diagonal entry of
    T is nonnegative (zero vector if there are none)."""
    y, _ = fact.solve(-(fact.V.T @ g), "drop_negative_diagonal", pinv_tol)
    return fact.V @ y


def negative_curvature_direction(fact: LanczosFactorization, g, tau_nc: Optional[float] = None):
    """Unit Ritz vector of the smallest Ritz value, signed so that ``d.g <= 0``.

    Returns ``(d, mu, bound)`` with ``bound = beta_next * |w_q|``. ``d`` is
    zero when ``mu >= -tau_nc`` (default ``1e-8 * (1 + |alpha_1|)``).
    """
    mu, w = fact.min_eigenpair()
    bound = float(fact.beta_next * abs(w[-1]))
    if tau_nc is None:
        tau_nc = 1e-8 * (1.0 + abs(fact.alpha[0]))
    if mu >= -tau_nc:
        return np.zeros(fact.V.shape[0]), mu, bound
    d = fact.V @ w
    if d @ g > 0:
        d = -d
    return d, mu, bound


def compute_directions(fact: LanczosFactorization, g, tau_nc: Optional[float] = None,
                       pinv_tol: float = 1e-12) -> DirectionBundle:
    """All three directions. A singular T yields ``s = s_tilde = 0`` rather
    than an error so the caller can still use ``d``."""
    g = np.asarray(g, dtype=float)
    try:
        s = newton_direction(fact, g, pinv_tol)
    except SingularTridiagonalError:
        s = np.zeros_like(g)
    if np.all(fact.alpha >= 0):
        s_tilde = s
    else:
        s_tilde = filtered_direction(fact, g, pinv_tol)
    d, mu, bound = negative_curvature_direction(fact, g, tau_nc)
    return DirectionBundle(s, s_tilde, d, mu, bound, g)


def assemble_step(bundle: DirectionBundle, rule: str = "s_plus_d", tau_desc: float = 1e-12) -> StepChoice:
    """Combine the directions per ``rule`` and flag a zero or non-descent step."""
    s, d = bundle.s, bundle.d
    if rule == "s_plus_d":
        t = s + d
    elif rule == "s_plus_scaled_d":
        dn = np.linalg.norm(d)
        t = s + (np.linalg.norm(s) / dn) * d if dn > 0 else s.copy()
    elif rule == "stilde_plus_d":
        t = bundle.s_tilde + d
    else:
        raise ValueError(f"unknown step rule {rule!r}")
    g = bundle.g
    tn = np.linalg.norm(t)
    degenerate = bool(tn < 1e-14 * (1.0 + np.linalg.norm(s))
                      or t @ g > -tau_desc * tn * np.linalg.norm(g))
    return StepChoice(rule, t, degenerate)
