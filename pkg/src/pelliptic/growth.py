"""Refinement-growth rule shared by the sweeps and the local checks."""

import numpy as np

GROWTH_TOL = 0.10


def growth_ratios(values):
    """Successive ratios v[k+1]/v[k] of estimates on doubling grids."""
    v = np.asarray(values, dtype=float)
    return v[1:] / v[:-1]


def classify_growth(values, tol=GROWTH_TOL, min_levels=3):
    """'stable' if every doubling increases the value by less than ``tol``.

    Fewer than ``min_levels`` finite values give 'insufficient'.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < min_levels or not np.all(np.isfinite(v)) or np.any(v <= 0):
        return "insufficient"
    return "stable" if np.all(growth_ratios(v) < 1 + tol) else "growing"


def variation(values):
    """Largest relative change |v[k+1]/v[k] - 1| across doublings."""
    r = growth_ratios(values)
    return float(np.max(np.abs(r - 1))) if len(r) else 0.0
