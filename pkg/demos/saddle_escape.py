"""
Escaping a saddle with negative curvature
=========================================

On f(x) = (x1^2 - x2^2) / 2 the origin is a saddle. Started a hair off the
stable axis, plain gradient descent creeps along it; the Lanczos step finds
the direction of negative curvature and leaves immediately.
"""

import numpy as np

from lnnc import RunConfig, make_indefinite_quadratic, run_lnnc, run_sgd
from lnnc.problems import full_value

obj = make_indefinite_quadratic(2, 1, [1.0, -1.0])
x0 = np.array([1.0, 1e-6])

# %%
# Twenty LNNC iterations with a two-dimensional Krylov space.
lnnc = run_lnnc(obj, x0, RunConfig(k_max=20, q=2))
for r in lnnc.trace[:4]:
    print(f"k={r.k:2d}  f={r.f_j_after: .4g}  alpha={r.alpha:.3g}  mu={r.mu}  fallback={r.fallback_used}")
print("LNNC after 20 iterations:", full_value(obj, lnnc.x))

# %%
# A hundred constant-step SGD iterations barely move off the axis:
# x2 grows like 1.1^k, so f is still about -1e-4.
sgd = run_sgd(obj, x0, RunConfig(algorithm="sgd_constant", k_max=100, sgd_alpha=0.1))
print("SGD after 100 iterations: ", full_value(obj, sgd.x))
