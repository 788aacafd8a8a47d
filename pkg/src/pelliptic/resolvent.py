"""Resolvent solves, L^p norm probing, sector scans and semigroup kernels.

All public functions take and return full vertex vectors (Dirichlet entries
zero).  Cell data are ``(n_cells, d)`` midpoint arrays unless stated
otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .growth import GROWTH_TOL

RESIDUAL_TOL = 1e-10
DIRECT_LIMIT = 6000


class SolverError(RuntimeError):
    """Linear solve failed; ``residual`` holds the relative residual reached."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


def _amg_preconditioner(P):
    import pyamg

    ml = pyamg.smoothed_aggregation_solver(P.tocsr(), symmetry="symmetric", max_coarse=500)
    cyc = ml.aspreconditioner(cycle="V")

    def apply(b):
        b = np.asarray(b)
        return cyc.matvec(np.ascontiguousarray(b.real)) + 1j * cyc.matvec(np.ascontiguousarray(b.imag))

    return spla.LinearOperator(P.shape, matvec=apply, dtype=complex)


class ShiftedSolver:
    """Solves (lam M + K) x = b and its adjoint on the free vertices.

    Sparse LU for two-dimensional and small problems; otherwise GMRES
    preconditioned by smoothed aggregation AMG on the real SPD matrix
    K_sym + |lam| M.
    """

    def __init__(self, op, lam, method="auto"):
        self.op = op
        self.lam = complex(lam)
        self.A = (self.lam * op.M + op.K).tocsc()
        if method == "auto":
            method = "direct" if (op.grid.d == 2 or op.n_free <= DIRECT_LIMIT) else "amg"
        self.method = method
        if method == "direct":
            self._lu = spla.splu(self.A)
        elif method == "amg":
            K = op.K
            P = ((K + K.conj().T) * 0.5).real + abs(self.lam) * op.M
            if abs(self.lam) == 0 and not len(op.grid.spec.dirichlet):
                raise SolverError("pure Neumann problem at lam = 0 is singular", math.inf)
            self._prec = _amg_preconditioner(sp.csr_matrix(P))
            self._AH = self.A.conj().T.tocsr()
        else:
            raise ValueError(f"unknown method {method!r}")

    def _check(self, A, x, b):
        nb = np.linalg.norm(b)
        if nb == 0:
            return
        res = np.linalg.norm(A @ x - b) / nb
        if not np.isfinite(res) or res > RESIDUAL_TOL:
            raise SolverError("resolvent solve did not reach tolerance", res)

    def _krylov(self, A, b):
        x, info = spla.gmres(A, b, M=self._prec, rtol=1e-11, atol=0.0, restart=60, maxiter=40)
        return x

    def solve(self, b, adjoint=False):
        b = np.asarray(b, dtype=complex)
        if not np.any(b):
            return np.zeros_like(b)
        A = self._AH if (adjoint and self.method == "amg") else (self.A.conj().T if adjoint else self.A)
        if self.method == "direct":
            x = self._lu.solve(b, trans="H" if adjoint else "N")
        elif b.ndim == 1:
            x = self._krylov(A, b)
        else:
            x = np.column_stack([self._krylov(A, b[:, j]) for j in range(b.shape[1])])
        self._check(A, x, b)
        return x


def _seedseq(seed):
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def resolve(op, lam, f, solver=None):
    """u = (lam + A)^{-1} f, i.e. (lam M + K) u = M f on free vertices."""
    solver = solver or ShiftedSolver(op, lam)
    f = np.asarray(f, dtype=complex)
    return op.extend(solver.solve(op.m * op.restrict(f)))


def _div_rhs(op, g):
    """-B^T W g restricted to free vertices, for midpoint or Gauss-point g."""
    grid = op.grid
    g = np.asarray(g, dtype=complex)
    if g.ndim == 2:
        B, w = grid.grad_mid, np.repeat(grid.cell_volumes, grid.d)
    elif g.ndim == 3:
        nq = g.shape[1]
        B, w = grid.grad_gauss, np.repeat(grid.cell_volumes / nq, nq * grid.d)
    else:
        raise ValueError("g must have shape (n_cells, d) or (n_cells, nq, d)")
    return -op.restrict(B.T @ (w * g.ravel()))


def resolve_div(op, lam, g, solver=None):
    """u = (lam + A)^{-1} div g in the weak sense.

    Solves lam (u, v) + t[u, v] = -(g, grad v) for all discrete v.  Cell
    data at Gauss points ``(n_cells, 2**d, d)`` are integrated exactly
    against Q1 gradients; midpoint data use one point per cell.
    """
    solver = solver or ShiftedSolver(op, lam)
    return op.extend(solver.solve(_div_rhs(op, g)))


# --------------------------------------------------------------------------
# operator norm probing


@dataclass
class ProbeSpace:
    """Weighted L^p space of ``comps``-vectors at ``len(weights)`` points."""

    weights: np.ndarray
    comps: int = 1
    coords: np.ndarray | None = None
    h: float = 0.0

    @property
    def size(self):
        return len(self.weights)

    def mags(self, f):
        f = np.asarray(f).reshape(self.size, self.comps)
        return np.linalg.norm(f, axis=1)

    def norm(self, f, p):
        a = self.mags(f)
        top = a.max(initial=0.0)
        if top == 0:
            return 0.0
        return float(top * np.sum(self.weights * (a / top) ** p) ** (1 / p))

    def duality(self, f, p):
        """|f|^{p-2} f, the unnormalized norming element of f in L^{p'}."""
        f = np.asarray(f).reshape(self.size, self.comps)
        a = self.mags(f)
        scale = np.zeros_like(a)
        nz = a > 0
        top = a.max(initial=0.0)
        scale[nz] = (a[nz] / top) ** (p - 2)
        return (scale[:, None] * f).ravel()


@dataclass
class ProbeOperator:
    """Linear map between probe spaces with its adjoint for the weighted pairings."""

    apply: object
    adjoint: object
    space_in: ProbeSpace
    space_out: ProbeSpace


@dataclass
class NormEstimate:
    """LOWER BOUND for an L^p operator norm with its running-max history."""

    value: float
    history: np.ndarray
    n_applies: int
    label: str = "LOWER BOUND"
    argmax: np.ndarray | None = dc_field(default=None, repr=False)


FAMILIES = ("noise", "bump", "delta")


def _split(n, families):
    base, extra = divmod(n, len(families))
    return {f: base + (i < extra) for i, f in enumerate(families)}


def _probe_inputs(space, n, seed, families=FAMILIES, widths=None):
    """Probe inputs from the requested families.

    noise: complex Gaussian point values; bump: Gaussian bumps with random
    centers and log-uniform widths; delta: a single point scaled by its
    inverse weight.  Bump parameters come from their own stream and do not
    depend on the number of points, so the same seed gives the same
    continuum functions on every grid.
    """
    k = space.comps
    counts = _split(n, families)
    rn, rb, rd = (np.random.default_rng(s) for s in _seedseq(seed).spawn(3))
    out = []
    for _ in range(counts.get("noise", 0)):
        out.append(rn.standard_normal(space.size * k) + 1j * rn.standard_normal(space.size * k))
    if widths is None:
        widths = (max(2 * space.h, 1e-3), 0.5)
    for _ in range(counts.get("bump", 0)):
        c = rb.uniform(0.0, 1.0, space.coords.shape[1])
        w = math.exp(rb.uniform(math.log(widths[0]), math.log(widths[1])))
        direc = rb.standard_normal(k) + 1j * rb.standard_normal(k)
        amp = np.exp(-np.sum((space.coords - c) ** 2, axis=1) / w ** 2)
        out.append((amp[:, None] * direc[None]).ravel())
    for _ in range(counts.get("delta", 0)):
        f = np.zeros(space.size * k, dtype=complex)
        i = rd.integers(space.size)
        direc = rd.standard_normal(k) + 1j * rd.standard_normal(k)
        f[i * k:(i + 1) * k] = direc / space.weights[i]
        out.append(f)
    return out


def opnorm_lp(T, p, probes, seed=0, refine=2, power_steps=4, weights=None,
              families=FAMILIES, widths=None, starts=()):
    """Lower-bound estimate of ||T||_{L^p -> L^p}.

    ``T`` is a :class:`ProbeOperator` or a plain callable on vectors (then
    ``weights`` gives the common point weights, default all ones, and no
    duality refinement is possible).  After the random probes, the best
    ``refine`` inputs are improved by ``power_steps`` rounds of
    f <- |T* J(T f)|^{p'-2} T* J(T f) with J the L^p duality map.
    """
    if probes < 1 and not len(starts):
        raise ValueError("probes must be at least 1")
    if not isinstance(T, ProbeOperator):
        n = len(weights) if weights is not None else None
        if n is None:
            raise ValueError("weights are required for a plain callable")
        w = np.asarray(weights, dtype=float)
        sp_ = ProbeSpace(w, 1, np.linspace(0, 1, len(w))[:, None], 1.0 / len(w))
        T = ProbeOperator(T, None, sp_, sp_)
    sin, sout = T.space_in, T.space_out
    best, hist, scored = 0.0, [], []
    n_applies = 0
    arg = None

    def ratio(f):
        nf = sin.norm(f, p)
        if nf == 0:
            return 0.0, None
        y = T.apply(f)
        return sout.norm(y, p) / nf, y

    inputs = [np.asarray(s, dtype=complex).ravel() for s in starts]
    inputs += _probe_inputs(sin, probes, seed, families, widths) if probes else []
    for f in inputs:
        r, y = ratio(f)
        n_applies += 1
        scored.append((r, len(scored), f, y))
        if r > best:
            best, arg = r, f
        hist.append(best)
    if T.adjoint is not None and refine > 0:
        pc = p / (p - 1)
        top = sorted(scored, key=lambda s: (-s[0], s[1]))[:refine]
        for _, _, f, y in top:
            for _ in range(power_steps):
                if y is None or not np.any(y):
                    break
                z = T.adjoint(sout.duality(y, p))
                n_applies += 1
                if not np.any(z):
                    break
                f = sin.duality(z, pc)
                r, y = ratio(f)
                n_applies += 1
                if r > best:
                    best, arg = r, f
                hist.append(best)
    return NormEstimate(float(best), np.asarray(hist), n_applies, argmax=arg)


def _spaces(op):
    grid = op.grid
    vert = ProbeSpace(op.m, 1, grid.coords[grid.free], grid.h)
    cell = ProbeSpace(grid.cell_volumes, grid.d, grid.centroids, grid.h)
    return vert, cell


def probe_operators(op, lam, solver=None):
    """The four scaled resolvent maps at ``lam`` as probe operators.

    res: lam (lam+A)^{-1};  grad: |lam|^{1/2} grad (lam+A)^{-1};
    graddiv: grad (lam+A)^{-1} div;  div: |lam|^{1/2} (lam+A)^{-1} div.
    """
    solver = solver or ShiftedSolver(op, lam)
    grid = op.grid
    B = grid.grad_mid
    w = np.repeat(grid.cell_volumes, grid.d)
    m = op.m
    lam = complex(lam)
    s = math.sqrt(abs(lam))
    vert, cell = _spaces(op)

    def S(b):
        return solver.solve(b)

    def SH(b):
        return solver.solve(b, adjoint=True)

    def grad_free(u):
        return B @ op.extend(u)

    def div_free(g):
        return op.restrict(B.T @ (w * g))

    return {
        "res": ProbeOperator(lambda f: lam * S(m * f),
                             lambda g: np.conj(lam) * SH(m * g), vert, vert),
        "grad": ProbeOperator(lambda f: s * grad_free(S(m * f)),
                              lambda g: s * SH(div_free(g)), vert, cell),
        "graddiv": ProbeOperator(lambda g: -grad_free(S(div_free(g))),
                                 lambda g: -grad_free(SH(div_free(g))), cell, cell),
        "div": ProbeOperator(lambda g: -s * S(div_free(g)),
                             lambda f: -s * grad_free(SH(m * f)), cell, vert),
    }


ESTIMATES = ("res", "grad", "graddiv", "div")


def lax_milgram_constants(c_lower, c_upper, theta):
    """L^2 bounds on the sector |arg lam| < theta from the form constants.

    The numerical range of the form lies in |arg z| <= psi with
    cos(psi) = c_lower / c_upper.  For theta = 0 (real lam >= 0) the
    real-part estimate is used directly.
    """
    psi = math.acos(min(1.0, c_lower / c_upper))
    if theta + psi >= math.pi:
        return {k: math.inf for k in ESTIMATES}
    res = 1 / math.sin(theta + psi) if theta + psi > math.pi / 2 else 1.0
    if theta == 0:
        kappa = 1.0
    else:
        kappa = math.cos((theta + psi) / 2)
    return {
        "res": res,
        "grad": 1 / (kappa * math.sqrt(c_lower)),
        "div": 1 / (kappa * math.sqrt(c_lower)),
        "graddiv": 1 / (kappa * c_lower),
        "psi": psi,
    }


def sample_sector(theta, n_lambda, seed=0, lam_min=1e-2, lam_max=1e4, margin=0.01):
    """Log-uniform moduli and uniform arguments in (-theta + margin, theta - margin)."""
    if not math.pi / 2 < theta < math.pi:
        raise ValueError("theta must lie in (pi/2, pi)")
    if n_lambda < 1:
        raise ValueError("n_lambda must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7919]))
    mod = np.exp(rng.uniform(math.log(lam_min), math.log(lam_max), n_lambda))
    arg = rng.uniform(-theta + margin, theta - margin, n_lambda)
    return mod * np.exp(1j * arg)


@dataclass
class SectorScanResult:
    theta: float
    p: float
    n: int
    lambdas: np.ndarray
    estimates: dict
    probes: int
    failed: np.ndarray
    residuals: np.ndarray
    label: str = "LOWER BOUND"

    def sup(self, key):
        v = self.estimates[key][~self.failed]
        return float(v.max()) if len(v) else math.nan


def _scan_item(op, lam, p, probes, seed, keys, refine, power_steps):
    try:
        solver = ShiftedSolver(op, lam)
    except SolverError as err:
        return None, err.residual
    except RuntimeError:
        return None, math.inf
    ops = probe_operators(op, lam, solver)
    out = {}
    children = _seedseq(seed).spawn(len(keys))
    try:
        for key, ss in zip(keys, children):
            out[key] = opnorm_lp(ops[key], p, probes, seed=ss, refine=refine,
                                 power_steps=power_steps).value
    except SolverError as err:
        return None, err.residual
    return out, 0.0


def sector_scan(op, p, theta, n_lambda, probes, seed=0, lam_min=1e-2, lam_max=1e4,
                margin=0.01, keys=ESTIMATES, threads=1, refine=2, power_steps=4):
    """Estimates of the scaled resolvent norms at sampled lam in S_theta.

    The lam samples depend only on ``seed``, ``theta`` and the range, so
    scans on different grids see identical spectral parameters.
    """
    lams = sample_sector(theta, n_lambda, seed, lam_min, lam_max, margin)
    seeds = _seedseq(seed).spawn(n_lambda)

    def work(i):
        return _scan_item(op, lams[i], p, probes, seeds[i], keys, refine, power_steps)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(work, range(n_lambda)))
    else:
        results = [work(i) for i in range(n_lambda)]
    est = {k: np.full(n_lambda, math.nan) for k in keys}
    failed = np.zeros(n_lambda, dtype=bool)
    resid = np.zeros(n_lambda)
    for i, (vals, r) in enumerate(results):
        if vals is None:
            failed[i] = True
            resid[i] = r
            continue
        for k in keys:
            est[k][i] = vals[k]
    return SectorScanResult(theta, p, op.grid.n, lams, est, probes, failed, resid)


# --------------------------------------------------------------------------
# Meyers sweeps


@dataclass
class MeyersReport:
    p_grid: list
    ns: list
    contrasts: list
    lam: complex
    estimates: np.ndarray  # (n_fields, n_p, n_n)
    bounded: np.ndarray  # (n_fields, n_p)
    eps: list
    saturated: list
    label: str = "LOWER BOUND"

    def growth(self):
        return self.estimates[..., 1:] / self.estimates[..., :-1]


def meyers_eps(p_grid, bounded):
    """Largest p such that every tested p in [2, p] is bounded, minus 2."""
    p_grid = np.asarray(p_grid, dtype=float)
    eps, top = 0.0, True
    for p, b in sorted(zip(p_grid, bounded)):
        if p < 2:
            continue
        if not b:
            top = False
            break
        eps = float(p - 2)
    return eps, top


def meyers_sweep(fields, p_grid, ns, spec, lam=1.0, probes=30, seed=0, threads=1,
                 refine=4, power_steps=20, pool_steps=5, grids=None, families=("bump",),
                 widths=(0.1, 0.5)):
    """Estimate ||grad (lam+A)^{-1} div||_{p->p} per field, exponent and grid.

    Each grid is first probed on its own with smooth bumps (the same
    continuum functions on every grid) and duality refinement.  The best
    input found on each grid is then transferred to all other grids and
    refined there, so every grid competes against the maximizers of the
    others; growth under refinement then reflects the operator rather than
    the luck of a nonconvex search.  An exponent is 'bounded' for a field
    when the estimate grows by less than 10% on every grid doubling.
    """
    from .disc import assemble, build_grid, transfer_cell_field

    p_grid = [float(p) for p in p_grid]
    if any(p <= 1 for p in p_grid):
        raise ValueError("exponents must exceed 1")
    grids = grids or [build_grid(spec, n) for n in ns]
    ops = {}
    for i in range(len(fields)):
        for k in range(len(ns)):
            op = assemble(fields[i], grids[k])
            ops[(i, k)] = probe_operators(op, lam, ShiftedSolver(op, lam))["graddiv"]

    def run(items, fn):
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                return list(ex.map(fn, items))
        return [fn(it) for it in items]

    items = [(i, j, k) for i in range(len(fields)) for j in range(len(p_grid)) for k in range(len(ns))]

    def first(item):
        i, j, k = item
        return opnorm_lp(ops[(i, k)], p_grid[j], probes, seed=seed, refine=refine,
                         power_steps=power_steps, families=families, widths=widths)

    found = dict(zip(items, run(items, first)))

    def second(item):
        i, j, k = item
        d = grids[k].d
        starts = []
        for kk in range(len(ns)):
            if kk == k or found[(i, j, kk)].argmax is None:
                continue
            g = found[(i, j, kk)].argmax.reshape(grids[kk].n_cells, d)
            starts.append(transfer_cell_field(g, grids[kk], grids[k]).ravel())
        if not starts:
            return 0.0
        return opnorm_lp(ops[(i, k)], p_grid[j], 0, starts=starts, refine=len(starts),
                         power_steps=pool_steps).value

    pooled = dict(zip(items, run(items, second)))
    est = np.zeros((len(fields), len(p_grid), len(ns)))
    for (i, j, k) in items:
        est[i, j, k] = max(found[(i, j, k)].value, pooled[(i, j, k)])
    bounded = np.all(growth_ratios_nd(est) < 1 + GROWTH_TOL, axis=-1)
    eps, sat = [], []
    for i in range(len(fields)):
        e, s = meyers_eps(p_grid, bounded[i])
        eps.append(e)
        sat.append(s)
    contrasts = [f.contrast() for f in fields]
    return MeyersReport(p_grid, list(ns), contrasts, lam, est, bounded, eps, sat)


def growth_ratios_nd(est):
    return est[..., 1:] / est[..., :-1]


# --------------------------------------------------------------------------
# semigroup and kernels


def semigroup_apply(op, t, f, m=64, startup=0):
    """e^{-tA} f by Crank-Nicolson with ``m`` substeps.

    ``startup`` initial CN steps are each replaced by two backward Euler
    half steps, which damp the stiff components of rough data; both share
    the matrix M + (t/2m) K.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    tau = t / m
    Ap = (op.M + 0.5 * tau * op.K).tocsc()
    Am = (op.M - 0.5 * tau * op.K).tocsr()
    lu = spla.splu(Ap)
    u = op.restrict(np.asarray(f, dtype=complex)).copy()
    for step in range(m):
        if step < startup:
            u = lu.solve(op.m[:, None] * u if u.ndim > 1 else op.m * u)
            u = lu.solve(op.m[:, None] * u if u.ndim > 1 else op.m * u)
        else:
            u = lu.solve(Am @ u)
    return op.extend(u)


@dataclass
class KernelColumns:
    times: list
    sources: np.ndarray  # vertex numbers
    columns: np.ndarray  # (n_t, n_sources, n_vertices)
    coords: np.ndarray
    d: int


def nearest_vertices(grid, points):
    points = np.atleast_2d(points)
    idx = [int(np.argmin(np.linalg.norm(grid.coords - x, axis=1))) for x in points]
    return np.array(idx)


def kernel_columns(op, times, sources, m=64, startup=2):
    """Columns K_t(., y) from the semigroup applied to e_y / m_y."""
    grid = op.grid
    sources = np.asarray(sources)
    if sources.ndim == 2:
        sources = nearest_vertices(grid, sources)
    if np.any(grid.dirichlet_mask[sources]):
        raise ValueError("kernel sources must be free vertices")
    F = np.zeros((grid.n_vertices, len(sources)), dtype=complex)
    F[sources, np.arange(len(sources))] = 1 / grid.mass[sources]
    cols = []
    for t in times:
        U = semigroup_apply(op, t, F, m=m, startup=startup)
        cols.append(U.T)
    return KernelColumns(list(times), sources, np.array(cols), grid.coords, grid.d)


@dataclass
class KernelFit:
    b: float
    c: float
    omega: float
    accepted: bool
    n_fit: int
    n_samples: int
    max_residual: float
    rms_residual: float
    envelope_ok: bool
    times: list = dc_field(default_factory=list)
    d: int = 2

    def bound(self, t, dist2):
        return self.c * t ** (-0.5 * self.d) * np.exp(-self.b * dist2 / t + self.omega * t)


def gaussian_fit(columns: KernelColumns, d=None, rel_floor=1e-4, floor=1e-14, tol=1e-12):
    """Fit |K_t(x,y)| <= c t^{-d/2} exp(-b |x-y|^2 / t) exp(omega t).

    Least squares of log|K| + (d/2) log t against [1, -|x-y|^2/t, t] over
    samples with |K| >= max(floor, rel_floor * max_x |K_t(x, y)|); then c is
    raised minimally so that every sample lies below the bound.
    """
    d = d or columns.d
    times = np.asarray(columns.times, dtype=float)
    if len(times) < 2 or len(columns.sources) < 1:
        raise ValueError("need at least two times and one source")
    ys = columns.coords[columns.sources]
    rows_s, rows_t, vals = [], [], []
    for it, t in enumerate(times):
        for js, y in enumerate(ys):
            k = np.abs(columns.columns[it, js])
            d2 = np.sum((columns.coords - y) ** 2, axis=1)
            rows_s.append(d2 / t)
            rows_t.append(np.full(len(k), t))
            vals.append(k)
    s = np.concatenate(rows_s)
    tt = np.concatenate(rows_t)
    kk = np.concatenate(vals)
    thresh = []
    for it in range(len(times)):
        for js in range(len(ys)):
            top = np.abs(columns.columns[it, js]).max()
            thresh.append(np.full(columns.columns.shape[2], max(floor, rel_floor * top)))
    keep = kk >= np.concatenate(thresh)
    if keep.sum() < 3:
        raise ValueError("degenerate fit: kernel values below floor")
    y = np.log(kk[keep]) + 0.5 * d * np.log(tt[keep])
    X = np.column_stack([np.ones(keep.sum()), -s[keep], tt[keep]])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a, b, omega = coef
    resid = y - X @ coef
    pos = kk > 0
    excess = (np.log(kk[pos]) + 0.5 * d * np.log(tt[pos]) + b * s[pos] - omega * tt[pos])
    logc = max(a, float(excess.max()))
    c = math.exp(logc)
    bound = c * tt ** (-0.5 * d) * np.exp(-b * s + omega * tt)
    envelope = bool(np.all(kk <= bound * (1 + tol)))
    fit = KernelFit(float(b), c, float(omega), bool(b > 0), int(keep.sum()), len(kk),
                    float(np.abs(resid).max()), float(np.sqrt(np.mean(resid ** 2))), envelope,
                    list(columns.times), d)
    return fit
