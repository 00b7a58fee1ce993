"""
Finite-difference Hessian-vector products
=========================================

Compare the one-sided difference of gradients with the exact product on the
layered Gaussian mixture, and show how the step size scales with |v|.
"""

import numpy as np

from lnnc import ProblemSpec, make_problem
from lnnc.hvp import exact_hvp, fd_hvp

obj = make_problem(ProblemSpec("layered_gaussian_mixture", components=10, samples=1000, seed=0))
rng = np.random.default_rng(1)
x = obj.initial_point() + 0.3 * rng.normal(size=obj.dim)
print("parameters:", obj.dim)

# %%
# Relative error of forward and central differences for a few directions.
for scale in (1e-3, 1.0, 1e3):
    v = scale * rng.normal(size=obj.dim)
    ex = exact_hvp(obj, 0, x)(v)
    fwd = fd_hvp(obj, 0, x)(v)
    cen = fd_hvp(obj, 0, x, central=True)(v)
    print(f"|v|={np.linalg.norm(v):9.3g}  forward {np.linalg.norm(fwd - ex) / np.linalg.norm(ex):.2e}"
          f"  central {np.linalg.norm(cen - ex) / np.linalg.norm(ex):.2e}")
