"""Hessian-vector products for one component at one point."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .problems import ComponentObjective, UnsupportedHVP, full_gradient

__all__ = ["HvpOperator", "ZeroDirectionError", "DEFAULT_EPS0", "exact_hvp", "fd_hvp", "make_hvp"]

DEFAULT_EPS0 = float(np.sqrt(np.finfo(float).eps))

HVP_MODES = ("exact", "fd", "auto")


class ZeroDirectionError(ValueError):
    """A finite-difference product was requested along the zero vector."""


class HvpOperator:
    """``v -> H_j(x) v`` frozen at one ``(j, x)`` pair.

    ``j`` is None for the full-batch Hessian. Calling the operator is the same
    as :meth:`apply`.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], x, j: Optional[int], mode: str,
                 eps0: Optional[float] = None):
        self._fn = fn
        self.x = np.array(x, dtype=float)
        self.x.flags.writeable = False
        self.j = j
        self.mode = mode
        self.eps0 = eps0

    @property
    def dim(self) -> int:
        return self.x.size

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != self.x.shape:
            raise ValueError(f"direction has shape {v.shape}, expected {self.x.shape}")
        return self._fn(v)

    __call__ = apply

    def __repr__(self):
        return f"HvpOperator(mode={self.mode!r}, j={self.j}, dim={self.dim})"


def _grad_fn(obj: ComponentObjective, j: Optional[int]):
    if j is None:
        return lambda x: full_gradient(obj, x)
    return lambda x: obj.gradient(j, x)


def exact_hvp(obj: ComponentObjective, j: Optional[int], x) -> HvpOperator:
    """Analytic product; raises :class:`UnsupportedHVP` if the problem has none."""
    if not obj.supports_exact_hvp:
        raise UnsupportedHVP(f"{type(obj).__name__} has no analytic Hessian-vector product")
    x = np.asarray(x, dtype=float)
    if j is None:
        def fn(v):
            out = np.zeros(obj.dim)
            for i in range(obj.m):
                out += obj.exact_hvp(i, x, v)
            return out
    else:
        def fn(v):
            return obj.exact_hvp(j, x, v)
    return HvpOperator(fn, x, j, "exact")


def fd_hvp(obj: ComponentObjective, j: Optional[int], x, eps0: float = DEFAULT_EPS0,
           central: bool = False) -> HvpOperator:
    """Forward-difference product ``(grad(x + e v) - grad(x)) / e``.

    The step is ``e = eps0 * (1 + |x|) / |v|`` so the perturbation size does
    not depend on the scale of ``v``. The base gradient is evaluated once, here,
    and reused by every apply. ``central=True`` switches to the two-sided
    formula (two gradient calls per apply).
    """
    if not eps0 > 0:
        raise ValueError("eps0 must be positive")
    x = np.array(x, dtype=float)
    grad = _grad_fn(obj, j)
    xnorm = np.linalg.norm(x)
    g0 = None if central else grad(x)
    if g0 is not None and not np.all(np.isfinite(g0)):
        raise FloatingPointError("nonfinite gradient at the base point")

    def fn(v):
        vnorm = np.linalg.norm(v)
        if vnorm == 0:
            raise ZeroDirectionError("zero direction")
        eps = eps0 * (1.0 + xnorm) / vnorm
        if central:
            out = (grad(x + eps * v) - grad(x - eps * v)) / (2.0 * eps)
        else:
            out = (grad(x + eps * v) - g0) / eps
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("nonfinite gradient in finite-difference product")
        return out

    return HvpOperator(fn, x, j, "finite_difference", eps0)


def make_hvp(obj: ComponentObjective, j: Optional[int], x, mode: str = "auto",
             eps0: float = DEFAULT_EPS0, central: bool = False) -> HvpOperator:
    """Pick an operator by mode: ``exact``, ``fd`` or ``auto`` (exact when the
    problem supports it)."""
    if mode not in HVP_MODES:
        raise ValueError(f"unknown hvp mode {mode!r}")
    if mode == "exact" or (mode == "auto" and obj.supports_exact_hvp):
        return exact_hvp(obj, j, x)
    return fd_hvp(obj, j, x, eps0, central)
