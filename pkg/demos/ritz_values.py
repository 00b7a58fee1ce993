"""
Ritz values from a few Lanczos steps
====================================

Five Lanczos steps on a 50 x 50 symmetric matrix already give a Ritz value
within beta_{q+1} of a true eigenvalue, and the Ritz vector residual equals
beta_{q+1} |w_q|.
"""

import numpy as np

from lnnc import lanczos

rng = np.random.default_rng(0)
A = rng.normal(size=(50, 50))
H = (A + A.T) / 2
g = rng.normal(size=50)

fact = lanczos(lambda v: H @ v, g, 5)
mu, w = fact.min_eigenpair()
lam = np.linalg.eigvalsh(H)

print("smallest Ritz value:     ", mu)
print("closest eigenvalue:      ", lam[np.argmin(np.abs(lam - mu))])
print("smallest eigenvalue:     ", lam[0])
print("beta_{q+1}:              ", fact.beta_next)

# %%
# The residual of the lifted Ritz vector is known without touching H again.
d = fact.V @ w
print("|H d - mu d|:            ", np.linalg.norm(H @ d - mu * d))
print("beta_{q+1} |w_q|:        ", fact.beta_next * abs(w[-1]))
print("orthonormality error:    ", np.abs(fact.V.T @ fact.V - np.eye(5)).max())
