"""Pure NumPy reference implementation of the two-block sampler loop.

Same contract as the compiled kernel in _gibbs_kernel.pyx: all stochastic
inputs (standard gamma and standard normal variates) are pregenerated by the
caller, so both backends consume an identical RNG stream.  fixed_sigma2 <= 0
means the variance is sampled; a positive value pins it (used by conjugacy
checks).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular


def run_chain(Z, y, L, mu, b_sigma, ridge, gammas, normals, fixed_sigma2, alpha0, alpha_out, sigma2_out):
    iters, p = normals.shape
    # alpha = mu + sigma * L^-T z; precompute (L^-1)' once
    linv_t = solve_triangular(L, np.eye(p), lower=True).T
    alpha = np.array(alpha0, dtype=float)
    for t in range(iters):
        resid = y - Z @ alpha
        rate = b_sigma + 0.5 * (resid @ resid) + 0.5 * ridge * (alpha @ alpha)
        sigma2 = fixed_sigma2 if fixed_sigma2 > 0 else rate / gammas[t]
        alpha = mu + np.sqrt(sigma2) * (linv_t @ normals[t])
        alpha_out[t] = alpha
        sigma2_out[t] = sigma2
