"""Empirical checks of local estimates for discrete local solutions.

A local solution solves (lam + A) u = f with f vanishing near a ball
B(x0, 2r), so u satisfies the homogeneous equation against test functions
supported in that ball.  The checks compare patch integrals of u over
shrinking and enlarged balls.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .disc import assemble, build_grid, gradient
from .growth import classify_growth, variation
from .resolvent import ShiftedSolver, resolve, resolve_div

DEGENERATE_TOL = 1e-14


@dataclass
class LocalSolution:
    u: np.ndarray
    lam: complex
    x0: np.ndarray
    r: float
    f: np.ndarray
    support_radius: float
    op: object = dc_field(repr=False)
    residual: float = 0.0
    degenerate: bool = False

    @property
    def grid(self):
        return self.op.grid


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3 - 2 * s)


def random_bumps(coords, rng, n_bumps=6, width=(0.08, 0.3), comps=None):
    """Sum of Gaussian bumps with random centers, widths and complex amplitudes."""
    d = coords.shape[1]
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    shape = (len(coords),) if comps is None else (len(coords), comps)
    out = np.zeros(shape, dtype=complex)
    for _ in range(n_bumps):
        c = rng.uniform(lo, hi)
        w = rng.uniform(*width)
        amp = np.exp(-np.sum((coords - c) ** 2, axis=1) / w ** 2)
        k = 1 if comps is None else comps
        z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        out += amp[:, None] * z if comps is not None else amp * z[0]
    return out


def cutoff(coords, x0, radius, width=0.1):
    """0 inside B(x0, radius), rising smoothly to 1 over ``width``."""
    rho = np.linalg.norm(coords - np.asarray(x0), axis=1)
    return _smoothstep((rho - radius) / width)


def make_local_solution(op, lam, x0, r, seed=0, gap=None, amplitude=1.0, solver=None,
                        n_bumps=6):
    """u = (lam + A)^{-1} f for a random smooth f vanishing on B(x0, 2r + gap).

    ``gap`` defaults to sqrt(d) h so that every vertex of every cell of
    Omega(x0, 2r) sees f = 0; pass the coarsest h when the same f must be
    used across refinements.  The support condition is checked exactly.
    """
    grid = op.grid
    if r < grid.h:
        raise ValueError(f"radius {r} too small for mesh size {grid.h}")
    x0 = np.asarray(x0, dtype=float)
    if len(grid.patch(x0, 2 * r)) == 0:
        raise ValueError("Omega(x0, 2r) is empty")
    gap = math.sqrt(grid.d) * grid.h if gap is None else gap
    R = 2 * r + gap
    rng = np.random.default_rng(seed)
    f = amplitude * random_bumps(grid.coords, rng, n_bumps) * cutoff(grid.coords, x0, R)
    f[grid.dirichlet_mask] = 0
    outer = grid.patch(x0, 2 * r)
    if np.any(f[np.unique(grid.cells[outer.cells])] != 0):
        raise AssertionError("right-hand side does not vanish on Omega(x0, 2r)")
    solver = solver or ShiftedSolver(op, lam)
    u = resolve(op, lam, f, solver)
    b = op.m * op.restrict(f)
    A = solver.A
    nb = np.linalg.norm(b)
    res = float(np.linalg.norm(A @ op.restrict(u) - b) / nb) if nb else 0.0
    degenerate = not np.any(f)
    return LocalSolution(u, complex(lam), x0, float(r), f, R, op, res, degenerate)


def _patch_power(u, patch, q):
    a = np.abs(np.asarray(u)[patch.vertices])
    return float(np.sum(patch.weights * a ** q))


@dataclass
class RHEntry:
    p: float
    q: float
    c: float
    lhs: float
    rhs: float
    ratio: float
    mean_ratio: float
    degenerate: bool
    q_substituted: bool = False


def rh_exponent(p, d, q2=None):
    if d >= 3:
        return p * d / (d - 2), False
    return (q2 if q2 is not None else 2 * p), True


def rh_check(sol, p, c, q=None):
    """Weak reverse Hölder ratio of a local solution.

    ratio = (r^-d int_{Omega(x0, cr)} |u|^q)^{1/q} / (r^-d int_{Omega(x0, 2r)} |u|^2)^{1/2}
    with q = p d/(d - 2); in d = 2 a configured ``q`` is used and flagged.
    ``mean_ratio`` uses patch averages instead of the r^-d normalization
    and equals 1 for constants.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    grid = sol.grid
    d = grid.d
    qq, subst = rh_exponent(p, d, q)
    inner = grid.patch(sol.x0, c * sol.r)
    outer = grid.patch(sol.x0, 2 * sol.r)
    out_int = _patch_power(sol.u, outer, 2)
    scale = np.abs(sol.u).max(initial=0.0)
    if len(inner) == 0 or len(outer) == 0 or scale == 0 or \
            math.sqrt(out_int / outer.volume) <= DEGENERATE_TOL * scale:
        return RHEntry(p, qq, c, math.nan, math.nan, math.nan, math.nan, True, subst)
    in_int = _patch_power(sol.u / scale, inner, qq)
    out_int = _patch_power(sol.u / scale, outer, 2)
    rd = sol.r ** d
    lhs = (in_int / rd) ** (1 / qq)
    rhs = (out_int / rd) ** 0.5
    mean_ratio = (in_int / inner.volume) ** (1 / qq) / (out_int / outer.volume) ** 0.5
    return RHEntry(p, qq, c, lhs * scale, rhs * scale, lhs / rhs, mean_ratio, False, subst)


@dataclass
class RHReport:
    p: float
    q: float
    c: float
    ns: list
    ratios: list
    classification: str


def rh_report(entries, ns):
    ratios = [e.ratio for e in entries]
    cls = "degenerate" if any(e.degenerate for e in entries) else classify_growth(ratios)
    e0 = entries[0]
    return RHReport(e0.p, e0.q, e0.c, list(ns), ratios, cls)


def rh_centers(trials, d, seed=0, lo=0.3, hi=0.7, boundary_fraction=0.5):
    """Trial centers uniform in [lo, hi]^d; a ``boundary_fraction`` of them,
    interleaved, is moved onto a random face of the unit box."""
    rng = np.random.default_rng(seed)
    pts, on_bd = [], []
    for k in range(trials):
        x = rng.uniform(lo, hi, d)
        bd = math.floor((k + 1) * boundary_fraction) > math.floor(k * boundary_fraction)
        if bd:
            a = rng.integers(d)
            x[a] = float(rng.integers(2))
        pts.append(x)
        on_bd.append(bd)
    return np.array(pts), np.array(on_bd)


@dataclass
class RHStudy:
    centers: np.ndarray
    on_boundary: np.ndarray
    ns: list
    entries: list  # entries[trial][level]
    reports: list

    def ratios(self):
        return np.array([[e.ratio for e in row] for row in self.entries])

    def variations(self):
        return np.array([math.nan if r.classification == "degenerate" else variation(r.ratios)
                         for r in self.reports])


def rh_study(field, spec, ns, p, lam=1.0, r=0.25, c=None, trials=20, seed=0, gap=None,
             q=None, boundary_fraction=0.5, lo=0.3, hi=0.7, threads=1):
    """Reverse Hölder ratios of local solutions for the same data on every grid.

    Trial k uses data drawn from the seed pair (seed, k); the vanishing zone
    B(x0, 2r + gap) with ``gap`` = sqrt(d) h on the coarsest grid is fixed
    across refinements.
    """
    d = spec.d
    if c is None:
        c = default_c(p, d, spec.M)
    gap = math.sqrt(d) / min(ns) if gap is None else gap
    centers, on_bd = rh_centers(trials, d, seed, lo, hi, boundary_fraction)
    entries = [[None] * len(ns) for _ in range(trials)]
    for j, n in enumerate(ns):
        op = assemble(field, build_grid(spec, n))
        solver = ShiftedSolver(op, lam)

        def work(k):
            sol = make_local_solution(op, lam, centers[k], r, seed=[seed, k], gap=gap,
                                      solver=solver)
            e = rh_check(sol, p, c, q)
            if sol.degenerate:
                e.degenerate = True
            return e

        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                col = list(ex.map(work, range(trials)))
        else:
            col = [work(k) for k in range(trials)]
        for k in range(trials):
            entries[k][j] = col[k]
    reports = [rh_report(row, ns) for row in entries]
    return RHStudy(centers, on_bd, list(ns), entries, reports)


def _cell_sq_gradient(u, grid, cells):
    g = gradient(u, grid, at="gauss")[cells]
    nq = g.shape[1]
    return float(np.sum(grid.cell_volumes[cells] / nq * np.sum(np.abs(g) ** 2, axis=(1, 2))))


def caccioppoli_constant(field, lam, Cd=2.0):
    """2 d^2 C^2 C_d^2 c^*^2 / c_* with C = 1 / cos((theta + theta0)/2), theta = |arg lam|."""
    d = field.d
    theta0 = math.atan(2 * field.c_upper / field.c_lower)
    theta = abs(np.angle(lam))
    if theta + theta0 >= math.pi:
        return math.inf
    C = 1 / math.cos((theta + theta0) / 2)
    return 2 * d ** 2 * C ** 2 * Cd ** 2 * field.c_upper ** 2 / field.c_lower


@dataclass
class CaccioppoliReport:
    lhs: float
    rhs: float
    empirical: float
    theory_constant: float
    touches_dirichlet: bool
    degenerate: bool


def caccioppoli_lhs(sol, radius):
    grid = sol.grid
    patch = grid.patch(sol.x0, radius)
    u2 = _patch_power(sol.u, patch, 2)
    g2 = _cell_sq_gradient(sol.u, grid, patch.cells)
    return abs(sol.lam) * u2 + 0.5 * sol.op.field.c_lower * g2


def caccioppoli_check(sol, Cd=2.0):
    """Empirical constant of the local energy estimate against the r^-2 L^2 mass on the doubled patch."""
    grid = sol.grid
    outer = grid.patch(sol.x0, 2 * sol.r)
    lhs = caccioppoli_lhs(sol, sol.r)
    rhs = _patch_power(sol.u, outer, 2) / sol.r ** 2
    touches = bool(np.any(grid.dirichlet_mask[np.unique(grid.cells[outer.cells])]))
    degenerate = rhs <= DEGENERATE_TOL * max(lhs, 1e-300) or rhs == 0
    emp = math.nan if degenerate else lhs / rhs
    return CaccioppoliReport(lhs, rhs, emp, caccioppoli_constant(sol.op.field, sol.lam, Cd),
                             touches, bool(degenerate))


@dataclass
class GradRHReport:
    lhs: float
    rhs: float
    empirical: float
    exponent: float
    enlarged_radius: float
    truncated: bool
    degenerate: bool


def grad_rh_check(sol):
    """Gradient reverse Hölder: L^2 on Omega(x0, r) against L^{2_*} on Omega(x0, 8 M^2 sqrt(d) r)
    of |lam u| + |lam|^{1/2} |grad u| (cell midpoint values)."""
    grid = sol.grid
    d = grid.d
    s = 2 * d / (d + 2)
    R = 8 * grid.spec.M ** 2 * math.sqrt(d) * sol.r
    truncated = bool(np.any(sol.x0 - R < 0) or np.any(sol.x0 + R > 1))
    um = np.abs(sol.u[grid.cells].mean(axis=1))
    gm = np.linalg.norm(gradient(sol.u, grid), axis=1)
    lam = abs(sol.lam)
    w = lam * um + math.sqrt(lam) * gm
    vol = grid.cell_volumes
    inner = grid.patch(sol.x0, sol.r).cells
    outer = grid.patch(sol.x0, R).cells
    rd = sol.r ** d
    lhs = math.sqrt(np.sum(vol[inner] * w[inner] ** 2) / rd)
    rhs = (np.sum(vol[outer] * w[outer] ** s) / rd) ** (1 / s)
    degenerate = rhs == 0
    return GradRHReport(lhs, rhs, math.nan if degenerate else lhs / rhs, s, R, truncated, degenerate)


# --------------------------------------------------------------------------
# Moser ladder


@dataclass
class Ladder:
    d: int
    p: Fraction
    n0: int
    exponents: list  # Fractions p_0 .. p_{n0+1}
    radii_factors: list  # radius / r for each exponent: 2, 1/alpha, ...
    alpha: float

    @property
    def c(self):
        return self.radii_factors[-1]


def _as_fraction(p):
    return p if isinstance(p, Fraction) else Fraction(str(p))


def moser_ladder(p, d, M=1.0):
    """Exponents 2 (d/(d-2))^k below p, then p and p d/(d-2), with the iteration radii.

    Radii: 2r for p_0 = 2 and (2 alpha)^{-(k-1)} r / alpha for p_k, k >= 1,
    alpha = M^2 sqrt(d).
    """
    if d < 3:
        raise ValueError("the ladder needs d >= 3")
    p = _as_fraction(p)
    if p < 2:
        raise ValueError("p must be at least 2")
    kappa = Fraction(d, d - 2)
    n0 = 0
    while p > 2 * kappa ** n0:
        n0 += 1
    ex = [2 * kappa ** k for k in range(n0)] + [p, kappa * p]
    alpha = M ** 2 * math.sqrt(d)
    radii = [2.0] + [(2 * alpha) ** (-(k - 1)) / alpha for k in range(1, n0 + 2)]
    return Ladder(d, p, n0, ex, radii, alpha)


def default_c(p, d, M=1.0):
    """Inner radius factor (2 alpha)^{-n0} / alpha of the ladder."""
    return moser_ladder(p, d, M).c


@dataclass
class MoserReport:
    ladder: Ladder
    norms: list  # N(p_k, rho_k)
    rungs: list  # N(p_{k+1}, rho_{k+1}) / N(p_k, rho_k)
    chained: float
    product: float
    truncated: bool


def _ladder_norm(sol, q, radius):
    patch = sol.grid.patch(sol.x0, radius)
    if len(patch) == 0:
        return math.nan
    return (_patch_power(sol.u, patch, q) / sol.r ** sol.grid.d) ** (1 / q)


def moser_chain(sol, p, M=None):
    """Per-rung empirical constants of the Moser iteration and their product."""
    grid = sol.grid
    lad = moser_ladder(p, grid.d, grid.spec.M if M is None else M)
    norms = [_ladder_norm(sol, float(q), f * sol.r) for q, f in zip(lad.exponents, lad.radii_factors)]
    truncated = any(not np.isfinite(v) for v in norms)
    if truncated:
        k = next(i for i, v in enumerate(norms) if not np.isfinite(v))
        norms = norms[:k]
    rungs = [norms[k + 1] / norms[k] for k in range(len(norms) - 1)]
    chained = norms[-1] / norms[0] if len(norms) > 1 else math.nan
    product = float(np.prod(rungs)) if rungs else math.nan
    return MoserReport(lad, norms, rungs, chained, product, truncated)


# --------------------------------------------------------------------------
# Shen hypothesis


@dataclass
class ShenTrial:
    x0: np.ndarray
    r: float
    on_boundary: bool
    ratio: float
    degenerate: bool


@dataclass
class ShenReport:
    p: float
    c: float
    alpha1: float
    alpha2: float
    lam: complex
    trials: list

    def constants(self):
        return np.array([t.ratio for t in self.trials if not t.degenerate])

    def summary(self):
        v = self.constants()
        if not len(v):
            return {"n": 0}
        return {"n": int(len(v)), "min": float(v.min()), "median": float(np.median(v)),
                "max": float(v.max())}


def _random_boundary_point(grid, rng):
    d = grid.d
    x = rng.uniform(0, 1, d)
    a = rng.integers(d)
    x[a] = float(rng.integers(2))
    if grid.spec.shape == "lshape" and x[0] > 0.5 and x[1] > 0.5:
        x[1 - a] = 0.5 if a in (0, 1) else x[1 - a]
    return x


def shen_hypothesis_check(op, p, lam, trials=10, seed=0, c=None, r_range=None, solver=None):
    """Empirical constants of the weak reverse Hölder hypothesis for
    T(f, g) = (lam (lam+A)^{-1} f, |lam|^{1/2} (lam+A)^{-1} div g).

    ``p`` is the exponent on the left side; ``c`` defaults to the ladder
    factor for max(2, p (d-2)/d).  Data (f, g) vanish on Omega(x0, alpha2 r)
    with alpha1 = 2/c, alpha2 = 3/c; centers are boundary points or have
    B(x0, alpha2 r) inside the domain.  Radii default to [h, 0.5/alpha2]
    (at least 2h) so that the data are not forced to vanish everywhere.
    """
    if p <= 2:
        raise ValueError("p must exceed 2")
    grid = op.grid
    d = grid.d
    if c is None:
        p_rh = max(2.0, p * (d - 2) / d) if d >= 3 else 2.0
        c = default_c(p_rh, max(d, 3), grid.spec.M)
    a1, a2 = 2 / c, 3 / c
    rng = np.random.default_rng(seed)
    solver = solver or ShiftedSolver(op, lam)
    r_lo, r_hi = r_range or (grid.h, max(0.5 / a2, 2 * grid.h))
    out = []
    for _ in range(trials):
        r = rng.uniform(r_lo, r_hi)
        on_bd = bool(rng.integers(2)) or a2 * r >= 0.5
        if on_bd:
            x0 = _random_boundary_point(grid, rng)
        else:
            x0 = rng.uniform(a2 * r, 1 - a2 * r, d)
        zero = cutoff(grid.coords, x0, a2 * r + math.sqrt(d) * grid.h)
        f = random_bumps(grid.coords, rng) * zero
        f[grid.dirichlet_mask] = 0
        zc = cutoff(grid.centroids, x0, a2 * r + math.sqrt(d) * grid.h)
        g = random_bumps(grid.centroids, rng, comps=d) * zc[:, None]
        u1 = lam * resolve(op, lam, f, solver)
        u2 = math.sqrt(abs(lam)) * resolve_div(op, lam, g, solver)
        mag = np.sqrt(np.abs(u1) ** 2 + np.abs(u2) ** 2)
        inner = grid.patch(x0, r)
        outer = grid.patch(x0, a1 * r)
        o = _patch_power(mag, outer, 2)
        if len(inner) == 0 or o <= (DEGENERATE_TOL * mag.max(initial=0)) ** 2 * outer.volume:
            out.append(ShenTrial(x0, r, on_bd, math.nan, True))
            continue
        rd = r ** d
        ratio = (_patch_power(mag, inner, p) / rd) ** (1 / p) / (o / rd) ** 0.5
        out.append(ShenTrial(x0, r, on_bd, float(ratio), False))
    return ShenReport(p, c, a1, a2, complex(lam), out)
