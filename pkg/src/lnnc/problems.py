"""Finite-sum test objectives ``f(x) = sum_j f_j(x)``.

Every problem exposes per-component ``value``, ``gradient`` and (where an
analytic form is available) ``exact_hvp``. Components are indexed from 0.
Instances hold only read-only arrays, so they can be shared between threads.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "UnsupportedHVP",
    "ProblemSpec",
    "ComponentObjective",
    "IndefiniteQuadratic",
    "QuarticSum",
    "RosenbrockSum",
    "LayeredGaussianMixture",
    "MLPLeastSquares",
    "make_indefinite_quadratic",
    "make_quartic_sum",
    "make_rosenbrock_sum",
    "make_layered_gaussian_mixture",
    "make_mlp_least_squares",
    "make_problem",
    "full_value",
    "full_gradient",
    "partition",
]

PROBLEM_KINDS = (
    "indefinite_quadratic",
    "quartic_sum",
    "rosenbrock_sum",
    "layered_gaussian_mixture",
    "mlp_least_squares",
)


class UnsupportedHVP(NotImplementedError):
    """The objective has no analytic Hessian-vector product."""


@dataclass(frozen=True)
class ProblemSpec:
    """Everything needed to rebuild a problem instance.

    Fields irrelevant to ``kind`` are ignored. ``dim`` may be left as None for
    kinds whose dimension follows from the architecture.
    """

    kind: str
    dim: Optional[int] = None
    components: int = 1
    seed: int = 0
    eigenvalues: Optional[tuple[float, ...]] = None
    layers: tuple[int, ...] = (4, 4, 4)
    data_dim: int = 16
    samples: int = 1000
    sigma: float = 1.0
    floor: float = 1e-100
    hidden: tuple[int, ...] = (8,)
    target_scale: float = 1.0
    init_scale: float = 1.0
    x0: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.components < 1:
            raise ValueError("components must be >= 1")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def partition(n: int, m: int) -> list[slice]:
    """Split ``range(n)`` into ``m`` contiguous equal blocks; the last block
    absorbs the remainder."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if n < m:
        raise ValueError(f"cannot split {n} items into {m} components")
    size = n // m
    return [slice(j * size, (j + 1) * size if j < m - 1 else n) for j in range(m)]


class ComponentObjective:
    """Base class for ``f = sum_j f_j`` oracles."""

    dim: int
    m: int
    supports_exact_hvp = False

    def value(self, j: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, j: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def exact_hvp(self, j: int, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise UnsupportedHVP(f"{type(self).__name__} has no analytic Hessian-vector product")

    def initial_point(self) -> np.ndarray:
        return np.zeros(self.dim)

    def _check(self, j: int, x) -> np.ndarray:
        if not 0 <= j < self.m:
            raise IndexError(f"component index {j} outside [0, {self.m})")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of dimension {self.dim}, got shape {x.shape}")
        return x


def full_value(obj: ComponentObjective, x) -> float:
    return float(sum(obj.value(j, x) for j in range(obj.m)))


def full_gradient(obj: ComponentObjective, x) -> np.ndarray:
    g = np.zeros(obj.dim)
    for j in range(obj.m):
        g += obj.gradient(j, x)
    return g


# ---------------------------------------------------------------------------
# quadratic / quartic


class IndefiniteQuadratic(ComponentObjective):
    """``f_j(x) = (1/m) * 0.5 * x^T D x`` with ``D`` diagonal."""

    supports_exact_hvp = True

    def __init__(self, eigenvalues, m: int = 1, x0=None):
        self.eigenvalues = _frozen(eigenvalues)
        self.dim = self.eigenvalues.size
        self.m = m
        self._x0 = None if x0 is None else _frozen(x0)

    def value(self, j, x):
        x = self._check(j, x)
        return 0.5 * float(np.dot(x, self.eigenvalues * x)) / self.m

    def gradient(self, j, x):
        x = self._check(j, x)
        return self.eigenvalues * x / self.m

    def exact_hvp(self, j, x, v):
        self._check(j, x)
        return self.eigenvalues * np.asarray(v, dtype=float) / self.m

    def initial_point(self):
        return np.ones(self.dim) if self._x0 is None else self._x0.copy()


def make_indefinite_quadratic(dim: int, components: int, eigenvalues: Sequence[float], x0=None):
    """Diagonal quadratic ``0.5 x^T diag(eigenvalues) x`` split evenly over
    ``components`` identical summands. Negative eigenvalues give saddles."""
    if len(eigenvalues) != dim:
        raise ValueError(f"got {len(eigenvalues)} eigenvalues for dim={dim}")
    if components < 1:
        raise ValueError("components must be >= 1")
    return IndefiniteQuadratic(eigenvalues, components, x0)


class QuarticSum(ComponentObjective):
    """``f_j(x) = (1/m) * sum_i x_i^4``."""

    supports_exact_hvp = True

    def __init__(self, dim: int, m: int = 1, x0=None):
        self.dim, self.m = dim, m
        self._x0 = None if x0 is None else _frozen(x0)

    def value(self, j, x):
        x = self._check(j, x)
        return float(np.sum(x**4)) / self.m

    def gradient(self, j, x):
        x = self._check(j, x)
        return 4.0 * x**3 / self.m

    def exact_hvp(self, j, x, v):
        x = self._check(j, x)
        return 12.0 * x**2 * np.asarray(v, dtype=float) / self.m

    def initial_point(self):
        return np.ones(self.dim) if self._x0 is None else self._x0.copy()


def make_quartic_sum(dim: int, components: int = 1, x0=None):
    if dim < 1 or components < 1:
        raise ValueError("dim and components must be >= 1")
    return QuarticSum(dim, components, x0)


# ---------------------------------------------------------------------------
# Rosenbrock


class RosenbrockSum(ComponentObjective):
    """Extended Rosenbrock on coordinate pairs ``(x_{2i}, x_{2i+1})``.

    The ``N/2`` pair terms are split into ``m`` contiguous blocks.
    """

    supports_exact_hvp = True

    def __init__(self, dim: int, m: int = 1, x0=None):
        self.dim, self.m = dim, m
        self.blocks = partition(dim // 2, m)
        self._x0 = None if x0 is None else _frozen(x0)

    def _pairs(self, j, x):
        blk = self.blocks[j]
        return x[0::2][blk], x[1::2][blk], blk

    def value(self, j, x):
        x = self._check(j, x)
        a, b, _ = self._pairs(j, x)
        return float(np.sum(100.0 * (b - a**2) ** 2 + (1.0 - a) ** 2))

    def gradient(self, j, x):
        x = self._check(j, x)
        a, b, blk = self._pairs(j, x)
        g = np.zeros(self.dim)
        g[0::2][blk] = -400.0 * a * (b - a**2) - 2.0 * (1.0 - a)
        g[1::2][blk] = 200.0 * (b - a**2)
        return g

    def exact_hvp(self, j, x, v):
        x = self._check(j, x)
        v = np.asarray(v, dtype=float)
        a, b, blk = self._pairs(j, x)
        va, vb = v[0::2][blk], v[1::2][blk]
        haa = 1200.0 * a**2 - 400.0 * b + 2.0
        hab = -400.0 * a
        out = np.zeros(self.dim)
        out[0::2][blk] = haa * va + hab * vb
        out[1::2][blk] = hab * va + 200.0 * vb
        return out

    def initial_point(self):
        if self._x0 is not None:
            return self._x0.copy()
        x = np.ones(self.dim)
        x[0::2] = -1.2
        return x


def make_rosenbrock_sum(dim: int, components: int = 1, x0=None):
    if dim < 2 or dim % 2:
        raise ValueError(f"rosenbrock pairing needs an even dimension, got {dim}")
    return RosenbrockSum(dim, components, x0)


# ---------------------------------------------------------------------------
# layered Gaussian mixture


class LayeredGaussianMixture(ComponentObjective):
    """Negative log-likelihood of a layered (path) mixture of Gaussians.

    Layer ``l`` has ``K_l`` components with logits ``a_l`` and offsets
    ``mu_l`` (``K_l x D``). A path picks one component per layer; its weight
    is the product of the per-layer softmax weights and its mean is the sum
    of the chosen offsets. The sample density is the weighted sum over all
    paths of the kernel ``exp(-|y - mean|^2 / (2 sigma^2))`` (unnormalised,
    so every density is at most 1). With the likelihood floor ``eps``::

        f_j(x) = (1/S) * sum_{n in block j} [log(1 + eps) - log(p_n(x) + eps)]

    which is smooth, nonnegative and nonconvex. Parameters are packed as
    ``[a_1, ..., a_L, mu_1.ravel(), ..., mu_L.ravel()]``.
    """

    supports_exact_hvp = True

    def __init__(self, spec: ProblemSpec):
        widths = tuple(int(k) for k in spec.layers)
        if len(widths) < 2:
            raise ValueError("layered mixture needs at least 2 layers")
        if any(k < 1 for k in widths):
            raise ValueError(f"degenerate layer widths {widths}")
        if spec.data_dim < 1:
            raise ValueError("data_dim must be >= 1")
        if spec.samples < spec.components:
            raise ValueError(f"{spec.samples} samples cannot feed {spec.components} components")
        if spec.sigma <= 0 or spec.floor <= 0:
            raise ValueError("sigma and floor must be positive")
        self.spec = spec
        self.widths = widths
        self.D = spec.data_dim
        self.m = spec.components
        self.sigma2 = float(spec.sigma) ** 2
        self.log_floor = float(np.log(spec.floor))
        self.offset = float(np.log1p(spec.floor))
        self.dim = sum(widths) * (1 + self.D)
        if spec.dim is not None and spec.dim != self.dim:
            raise ValueError(f"layers {widths} with data_dim {self.D} give dim {self.dim}, not {spec.dim}")

        paths = np.array(list(itertools.product(*[range(k) for k in widths])))
        # one-hot path -> component selectors, one (P, K_l) matrix per layer
        self.select = tuple(_frozen(np.eye(k)[paths[:, l]]) for l, k in enumerate(widths))

        rng = np.random.default_rng(spec.seed)
        logits = [rng.normal(size=k) for k in widths]
        means = [rng.normal(size=(k, self.D)) for k in widths]
        weights = np.exp(sum(S @ (a - _lse(a)) for S, a in zip(self.select, logits)))
        centres = sum(S @ mu for S, mu in zip(self.select, means))
        picks = rng.choice(len(paths), size=spec.samples, p=weights / weights.sum())
        self.data = _frozen(centres[picks] + spec.sigma * rng.normal(size=(spec.samples, self.D)))
        self.blocks = partition(spec.samples, self.m)
        self.n_total = spec.samples

    def unpack(self, x):
        x = np.asarray(x, dtype=float)
        logits, means, pos = [], [], 0
        for k in self.widths:
            logits.append(x[pos:pos + k])
            pos += k
        for k in self.widths:
            means.append(x[pos:pos + k * self.D].reshape(k, self.D))
            pos += k * self.D
        return logits, means

    def _pack(self, logits, means):
        return np.concatenate([*logits, *(mu.ravel() for mu in means)])

    def _forward(self, j, x):
        logits, means = self.unpack(x)
        y = self.data[self.blocks[j]]
        soft = [np.exp(a - _lse(a)) for a in logits]
        logw = sum(S @ (a - _lse(a)) for S, a in zip(self.select, logits))
        centres = sum(S @ mu for S, mu in zip(self.select, means))
        resid = y[:, None, :] - centres[None, :, :]
        z = logw[None, :] - np.einsum("npd,npd->np", resid, resid) / (2.0 * self.sigma2)
        logden = np.logaddexp(_lse(z, axis=1), self.log_floor)
        return soft, resid, z, logden

    def value(self, j, x):
        x = self._check(j, x)
        _, _, _, logden = self._forward(j, x)
        return float(np.sum(self.offset - logden)) / self.n_total

    def _pullback(self, soft, resid, c):
        """Transpose of the Jacobian of the path log-densities ``z`` applied
        to an ``(n, P)`` array."""
        per_path = c.sum(axis=0)
        total = per_path.sum()
        pulled = np.einsum("np,npd->pd", c, resid) / self.sigma2
        logits = [S.T @ per_path - u * total for S, u in zip(self.select, soft)]
        means = [S.T @ pulled for S in self.select]
        return self._pack(logits, means)

    def gradient(self, j, x):
        x = self._check(j, x)
        soft, resid, z, logden = self._forward(j, x)
        gamma = np.exp(z - logden[:, None])
        return self._pullback(soft, resid, -gamma / self.n_total)

    def exact_hvp(self, j, x, v):
        """Analytic Hessian-vector product (forward-over-reverse by hand)."""
        x = self._check(j, x)
        soft, resid, z, logden = self._forward(j, x)
        gamma = np.exp(z - logden[:, None])
        c = -gamma / self.n_total
        dlogits, dmeans = self.unpack(v)

        dlogw = sum(S @ (da - u @ da) for S, u, da in zip(self.select, soft, dlogits))
        dcentres = sum(S @ dmu for S, dmu in zip(self.select, dmeans))
        dz = dlogw[None, :] + np.einsum("npd,pd->np", resid, dcentres) / self.sigma2
        dc = (-gamma * dz + gamma * np.sum(gamma * dz, axis=1, keepdims=True)) / self.n_total
        out = self._pullback(soft, resid, dc)

        # second derivatives of z itself, weighted by c
        total = c.sum()
        per_path = c.sum(axis=0)
        curv_logits = [-total * (u * da - u * (u @ da)) for u, da in zip(soft, dlogits)]
        curv_means = [-(S.T @ (per_path[:, None] * dcentres)) / self.sigma2 for S in self.select]
        return out + self._pack(curv_logits, curv_means)

    def initial_point(self):
        if self.spec.x0 is not None:
            return np.array(self.spec.x0, dtype=float)
        rng = np.random.default_rng([self.spec.seed, 1])
        logits = [np.zeros(k) for k in self.widths]
        means = [self.spec.init_scale * rng.normal(size=(k, self.D)) for k in self.widths]
        return self._pack(logits, means)


def _lse(a, axis=None):
    amax = np.max(a, axis=axis, keepdims=True)
    out = amax + np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True))
    return out.item() if axis is None else np.squeeze(out, axis=axis)


def make_layered_gaussian_mixture(spec: ProblemSpec) -> LayeredGaussianMixture:
    if spec.kind != "layered_gaussian_mixture":
        raise ValueError(f"spec kind is {spec.kind!r}")
    return LayeredGaussianMixture(spec)


# ---------------------------------------------------------------------------
# small MLP least squares


class MLPLeastSquares(ComponentObjective):
    """Least-squares loss of a tanh MLP on seeded synthetic regression data.

    ``f_j = (1/(2S)) * sum_{n in block j} |net(u_n) - y_n|^2``. Targets come
    from a random teacher network scaled by ``target_scale``. No analytic
    Hessian-vector product is provided.
    """

    def __init__(self, spec: ProblemSpec):
        if not spec.hidden or any(h < 1 for h in spec.hidden):
            raise ValueError(f"empty or degenerate architecture {spec.hidden}")
        if spec.samples < spec.components:
            raise ValueError(f"{spec.samples} samples cannot feed {spec.components} components")
        self.spec = spec
        self.sizes = (spec.data_dim, *spec.hidden, 1)
        self.shapes = list(zip(self.sizes[1:], self.sizes[:-1]))
        self.dim = sum(o * i + o for o, i in self.shapes)
        if spec.dim is not None and spec.dim != self.dim:
            raise ValueError(f"architecture {self.sizes} gives dim {self.dim}, not {spec.dim}")
        self.m = spec.components
        rng = np.random.default_rng(spec.seed)
        self.inputs = _frozen(rng.normal(size=(spec.samples, spec.data_dim)))
        teacher = rng.normal(size=self.dim) / np.sqrt(spec.data_dim)
        out, _ = self._forward(teacher, self.inputs)
        self.targets = _frozen(spec.target_scale * out)
        self.blocks = partition(spec.samples, self.m)
        self.n_total = spec.samples

    def _unpack(self, x):
        params, pos = [], 0
        for o, i in self.shapes:
            W = x[pos:pos + o * i].reshape(o, i)
            pos += o * i
            b = x[pos:pos + o]
            pos += o
            params.append((W, b))
        return params

    def _forward(self, x, u):
        acts = [u]
        params = self._unpack(x)
        h = u
        for l, (W, b) in enumerate(params):
            h = h @ W.T + b
            if l < len(params) - 1:
                h = np.tanh(h)
            acts.append(h)
        return h, acts

    def value(self, j, x):
        x = self._check(j, x)
        blk = self.blocks[j]
        out, _ = self._forward(x, self.inputs[blk])
        return 0.5 * float(np.sum((out - self.targets[blk]) ** 2)) / self.n_total

    def gradient(self, j, x):
        x = self._check(j, x)
        blk = self.blocks[j]
        params = self._unpack(x)
        out, acts = self._forward(x, self.inputs[blk])
        delta = (out - self.targets[blk]) / self.n_total
        grads = []
        for l in range(len(params) - 1, -1, -1):
            W, _ = params[l]
            grads.append((delta.T @ acts[l], delta.sum(axis=0)))
            if l > 0:
                delta = (delta @ W) * (1.0 - acts[l] ** 2)
        return np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in reversed(grads)])

    def initial_point(self):
        if self.spec.x0 is not None:
            return np.array(self.spec.x0, dtype=float)
        rng = np.random.default_rng([self.spec.seed, 1])
        return self.spec.init_scale * rng.normal(size=self.dim) / np.sqrt(self.spec.data_dim)


def make_mlp_least_squares(spec: ProblemSpec) -> MLPLeastSquares:
    if spec.kind != "mlp_least_squares":
        raise ValueError(f"spec kind is {spec.kind!r}")
    return MLPLeastSquares(spec)


def make_problem(spec: ProblemSpec) -> ComponentObjective:
    """Build the objective described by ``spec``."""
    kind = spec.kind
    if kind == "indefinite_quadratic":
        eig = spec.eigenvalues
        if eig is None:
            raise ValueError("indefinite_quadratic needs eigenvalues")
        dim = len(eig) if spec.dim is None else spec.dim
        return make_indefinite_quadratic(dim, spec.components, eig, spec.x0)
    if kind == "quartic_sum":
        return make_quartic_sum(spec.dim or 2, spec.components, spec.x0)
    if kind == "rosenbrock_sum":
        return make_rosenbrock_sum(spec.dim or 2, spec.components, spec.x0)
    if kind == "layered_gaussian_mixture":
        return make_layered_gaussian_mixture(spec)
    return make_mlp_least_squares(spec)
