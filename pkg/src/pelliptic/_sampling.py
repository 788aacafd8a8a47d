"""Quasi-random point sets used by the inner minimizations."""

import numpy as np
from scipy.stats import norm, qmc


def sphere_points(dim, n, seed=0):
    """Quasi-uniform points on the unit sphere of R^dim.

    Scrambled Sobol points are pushed through the normal inverse CDF and
    normalized, which gives a low-discrepancy rotation-invariant set.
    """
    m = int(np.ceil(np.log2(max(n, 2))))
    sob = qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(m)[:n]
    sob = np.clip(sob, 1e-12, 1 - 1e-12)
    z = norm.ppf(sob)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def complex_sphere_points(d, n, seed=0):
    """Points on the unit sphere of C^d, as an (n, d) complex array."""
    z = sphere_points(2 * d, n, seed=seed)
    return z[:, :d] + 1j * z[:, d:]
