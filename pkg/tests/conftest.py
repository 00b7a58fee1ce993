import numpy as np
import pytest

from lnnc.problems import ComponentObjective, ProblemSpec, make_problem


def central_diff_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * max(1.0, abs(x[i]))
        out[i] = (f(x + e) - f(x - e)) / (2 * e[i])
    return out


class CountingObjective(ComponentObjective):
    """Wraps an objective and counts gradient calls."""

    def __init__(self, inner):
        self.inner = inner
        self.dim, self.m = inner.dim, inner.m
        self.supports_exact_hvp = inner.supports_exact_hvp
        self.gradient_calls = 0

    def value(self, j, x):
        return self.inner.value(j, x)

    def gradient(self, j, x):
        self.gradient_calls += 1
        return self.inner.gradient(j, x)

    def exact_hvp(self, j, x, v):
        return self.inner.exact_hvp(j, x, v)


class MatrixObjective(ComponentObjective):
    """``f(x) = 0.5 x^T H x + b^T x`` with a dense symmetric ``H``; one component."""

    supports_exact_hvp = True

    def __init__(self, H, b=None):
        self.H = np.asarray(H, dtype=float)
        self.dim, self.m = self.H.shape[0], 1
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)

    def value(self, j, x):
        return 0.5 * x @ self.H @ x + self.b @ x

    def gradient(self, j, x):
        return self.H @ x + self.b

    def exact_hvp(self, j, x, v):
        return self.H @ v


def random_symmetric(rng, n):
    A = rng.normal(size=(n, n))
    return (A + A.T) / 2


@pytest.fixture
def small_mixture():
    return make_problem(ProblemSpec("layered_gaussian_mixture", components=4, samples=60, data_dim=3,
                                    layers=(3, 2), seed=11))


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
