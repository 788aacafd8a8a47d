"""p-ellipticity calculus for complex coefficient matrices.

Writing xi = alpha + i beta with real alpha, beta, the map
xi -> Re<mu xi, J_p xi> is a real quadratic form on R^{2d}.  Everything here
reduces to eigenvalues of its symmetric 2d x 2d matrix or to small
minimizations over the unit sphere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import minimize

from ._sampling import complex_sphere_points, sphere_points

P_MAX = 1e6


def conjugate_exponent(p):
    if not 1 < p < math.inf:
        raise ValueError(f"exponent must lie in (1, inf), got {p}")
    return p / (p - 1)


def jp_map(xi, p):
    """J_p(xi) = 2 (Re xi / p' + i Im xi / p)."""
    pc = conjugate_exponent(p)
    xi = np.asarray(xi, dtype=complex)
    return 2 * (xi.real / pc + 1j * xi.imag / p)


@dataclass(frozen=True)
class LocalForm:
    p: float
    S: np.ndarray

    def __call__(self, alpha, beta):
        z = np.concatenate([alpha, beta], axis=-1)
        return np.einsum("...i,ij,...j->...", z, self.S, z)

    @property
    def min_eig(self):
        return float(np.linalg.eigvalsh(self.S)[0])


def form_matrices(mats, p):
    """Stack of symmetric matrices S_p for a stack of coefficient matrices."""
    pc = conjugate_exponent(p)
    mats = np.asarray(mats, dtype=complex)
    A, B = mats.real, mats.imag
    At = np.swapaxes(A, -1, -2)
    Bt = np.swapaxes(B, -1, -2)
    As = 0.5 * (A + At)
    C = Bt / p - B / pc
    Ct = np.swapaxes(C, -1, -2)
    top = np.concatenate([(2 / pc) * As, C], axis=-1)
    bottom = np.concatenate([Ct, (2 / p) * As], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def local_form(mu_x, p):
    """Symmetric matrix of (alpha, beta) -> Re<mu (alpha + i beta), J_p(alpha + i beta)>.

    Diagonal blocks are (2/p') sym(Re mu) and (2/p) sym(Re mu); the
    off-diagonal block carries the cross terms from Im mu.
    """
    return LocalForm(p, form_matrices(np.asarray(mu_x)[None], p)[0])


def form_value(mu_x, p, xi):
    """Re<mu xi, J_p xi> by complex arithmetic."""
    xi = np.asarray(xi, dtype=complex)
    return float(np.real(np.vdot(jp_map(xi, p), np.asarray(mu_x) @ xi)))


def recast_value(mu_x, p, alpha, beta):
    """<mu (2 alpha/p + i beta), 2 alpha/p' + i beta>, the complex quantity of the Lp dissipativity condition."""
    pc = conjugate_exponent(p)
    u = 2 * np.asarray(alpha) / p + 1j * np.asarray(beta)
    v = 2 * np.asarray(alpha) / pc + 1j * np.asarray(beta)
    return np.vdot(v, np.asarray(mu_x) @ u)


def delta_p_matrices(mats, p):
    return np.linalg.eigvalsh(form_matrices(mats, p))[..., 0]


def delta_p(field, p):
    """p-ellipticity constant: infimum over sampled x of lambda_min(S_p(x))."""
    return float(delta_p_matrices(field.sample_matrices(), p).min())


ELLIPTIC_TOL = 1e-12


def is_p_elliptic(field, p, tol=ELLIPTIC_TOL):
    """Delta_p > tol * c_upper; rounding-level values at p = p0 count as 0."""
    return delta_p(field, p) > tol * field.c_upper


def _is_scalar(mu):
    d = mu.shape[0]
    return np.allclose(mu, mu[0, 0] * np.eye(d), rtol=0, atol=1e-14 * max(1.0, abs(mu[0, 0])))


def _delta_ratio(mu, xi):
    mxi = xi @ mu.T
    num = np.real(np.sum(mxi * np.conj(xi), axis=-1))
    den = np.abs(np.sum(mxi * xi, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 1e-300, num / den, np.inf)


@dataclass
class DeltaResult:
    value: float
    converged: bool
    n_seeds: int


def delta_mu_matrix(mu, n_seeds=None, seed=0, n_refine=6, tol=1e-6):
    """inf over unit xi of Re<mu xi, xi> / |<mu xi, conj xi>| for one matrix."""
    mu = np.asarray(mu, dtype=complex)
    d = mu.shape[0]
    if _is_scalar(mu):
        a = mu[0, 0]
        return DeltaResult(float(np.real(a) / abs(a)), True, 0)
    if np.allclose(mu.imag, 0, atol=1e-15):
        # xi^H A xi >= |xi^T A xi| for the positive symmetric part of a real A
        return DeltaResult(1.0, True, 0)
    if n_seeds is None:
        n_seeds = 4096 if d >= 3 else 1024
    xi = complex_sphere_points(d, n_seeds, seed=seed)
    vals = _delta_ratio(mu, xi)
    order = np.argsort(vals)[:n_refine]
    best = float(vals[order[0]])
    converged = True

    def obj(z):
        w = (z[:d] + 1j * z[d:])[None]
        w = w / np.linalg.norm(w)
        return float(_delta_ratio(mu, w)[0])

    for k in order:
        z0 = np.concatenate([xi[k].real, xi[k].imag])
        res = minimize(obj, z0, method="Nelder-Mead",
                       options={"xatol": tol * 1e-2, "fatol": tol * 1e-3, "maxiter": 4000 * d})
        if res.fun < best:
            best = float(res.fun)
            converged = bool(res.success)
    return DeltaResult(best, converged, n_seeds)


def delta_mu(field, seed=0, return_result=False):
    """delta(mu): essential infimum over x and xi of the ratio above.

    For scalar matrices a*I the value is cos(arg a) exactly, and real
    matrices give 1.  Otherwise quasi-random seeding on the sphere followed by
    Nelder-Mead refinement of the best seeds.
    """
    results = [delta_mu_matrix(m, seed=seed) for m in _unique(field.sample_matrices())]
    worst = min(results, key=lambda r: r.value)
    if not worst.converged:
        warnings.warn("delta(mu) minimization did not converge; reporting best bound found")
    return worst if return_result else worst.value


def _unique(mats):
    flat = np.round(mats.reshape(len(mats), -1), 14)
    _, idx = np.unique(flat, axis=0, return_index=True)
    return mats[np.sort(idx)]


def p0_from_delta(delta):
    if delta >= 1 - 1e-12:
        return math.inf
    return 2.0 / (1.0 - delta)


@dataclass
class P0Result:
    value: float
    delta_route: float
    agree: bool


def p0(field, tol=1e-4, check=True, return_result=False):
    """The threshold p_0(mu) in (2, inf] by bisection on the sign of Delta_p.

    Bisection runs on [2, P_MAX] until the bracket is ``tol`` relative;
    returns inf when Delta_{P_MAX} > 0.  The result is cross-checked against
    2 / (1 - delta(mu)) and a warning is issued on disagreement beyond
    10 * tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mats = field.sample_matrices()

    def positive(p):
        return delta_p_matrices(mats, p).min() > 0

    if positive(P_MAX):
        value = math.inf
    else:
        lo, hi = 2.0, P_MAX
        while (hi - lo) > tol * lo:
            mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
            if positive(mid):
                lo = mid
            else:
                hi = mid
        value = 0.5 * (lo + hi)
    if not check:
        return value
    dr = p0_from_delta(delta_mu(field))
    if math.isinf(value) or math.isinf(dr):
        agree = math.isinf(value) == math.isinf(dr) or max(value, dr) >= P_MAX * (1 - tol)
    else:
        agree = abs(value - dr) <= 10 * tol * value
    if not agree:
        warnings.warn(f"p0 bisection ({value:.6g}) and delta route ({dr:.6g}) disagree")
    if return_result:
        return P0Result(value, dr, agree)
    return value


def analyticity_interval(p0_value, d):
    """Open interval of exponents on which A_p is sectorial."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if not p0_value > 2:
        raise ValueError("p0 must exceed 2")
    if math.isinf(p0_value):
        return 1.0, math.inf
    low = p0_value * d / (d * (p0_value - 1) + 2)
    high = math.inf if d == 2 else p0_value * d / (d - 2)
    return low, high


def eps0_lower(p0_value, d):
    if not p0_value >= 2:
        raise ValueError("p0 must be at least 2")
    if math.isinf(p0_value):
        return (d - 2) / (2 * d)
    return (p0_value - 2) * (d - 2) / (2 * p0_value * d)


@dataclass
class SectorAngles:
    theta0: float
    omega: float
    theta: float
    omega_fallback: bool = False


def _omega_matrix(mu, p, n_seeds, seed):
    d = mu.shape[0]
    pc = conjugate_exponent(p)
    z = sphere_points(2 * d, n_seeds, seed=seed)
    a, b = z[:, :d], z[:, d:]
    u = 2 * a / p + 1j * b
    v = 2 * a / pc + 1j * b
    vals = np.abs(np.angle(np.sum((u @ mu.T) * np.conj(v), axis=1)))
    best = float(vals.max())
    ok = True

    def obj(w):
        w = w / np.linalg.norm(w)
        return -abs(np.angle(recast_value(mu, p, w[:d], w[d:])))

    for k in np.argsort(vals)[::-1][:4]:
        res = minimize(obj, z[k], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000 * d})
        if -res.fun > best:
            best = float(-res.fun)
            ok = bool(res.success)
    return best, ok


def sector_angles(field, p, lambda_p, n_seeds=2048, seed=0):
    """theta0 = arctan(2 c^*/c_*), omega by numerical arg-maximization, and
    theta = 3 pi/4 - max(theta0, omega)/2."""
    dp = delta_p(field, p)
    if not 0 < lambda_p <= dp * (1 + 1e-12):
        raise ValueError(f"lambda_p must lie in (0, Delta_p] = (0, {dp:.6g}]")
    theta0 = math.atan(2 * field.c_upper / field.c_lower)
    omega, ok = 0.0, True
    for mu in _unique(field.sample_matrices()):
        w, good = _omega_matrix(mu, p, n_seeds, seed)
        omega = max(omega, w)
        ok = ok and good
    fallback = False
    if not ok or omega >= math.pi / 2:
        pc = conjugate_exponent(p)
        omega = math.atan(2 * field.c_upper * max(p, pc) / lambda_p)
        fallback = True
    theta = 3 * math.pi / 4 - max(theta0, omega) / 2
    return SectorAngles(theta0, omega, theta, fallback)


def perturbed_delta_bound(delta_p_base, p, nu_norm):
    if nu_norm < 0:
        raise ValueError("nu_norm must be nonnegative")
    pc = conjugate_exponent(p)
    return delta_p_base - 2 * max(1 / p, 1 / pc) * nu_norm


@dataclass
class ImBoundReport:
    p: float
    bound: float
    worst_ratio: float
    passes: bool


def im_bound(p):
    return math.sqrt(p - 1) / (p - 2)


def im_bound_check(field, p):
    """Check |Im mu(x)| <= sqrt(p-1)/(p-2) |Re mu(x)| in operator norms.

    A failure certifies that the field is not p-elliptic.
    """
    if not p > 2:
        raise ValueError("p must exceed 2")
    mats = field.sample_matrices()
    re = np.linalg.norm(mats.real, ord=2, axis=(-2, -1))
    im = np.linalg.norm(mats.imag, ord=2, axis=(-2, -1))
    worst = float((im / re).max())
    b = im_bound(p)
    return ImBoundReport(p, b, worst, worst <= b)


def pc_threshold(c_lower, c_upper, eps, tol=1e-10):
    """Smallest p > 2 with sqrt(p-1)/(p-2) c^* < min(eps, c^*, c_*/2), to ``tol``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    target = min(eps, c_upper, c_lower / 2)

    def ok(p):
        return im_bound(p) * c_upper < target

    lo, hi = 2.0, 4.0
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > 1e300:
            return math.inf
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class PEllipticityReport:
    p_grid: list
    delta_p: dict
    delta_mu: float
    p0: float
    p0_delta_route: float
    interval: tuple
    eps0_lower: float
    theta0: float
    omega: float
    theta: float
    omega_fallback: bool
    d: int
    sampling_exact: bool
    notes: list = dc_field(default_factory=list)

    def summary(self):
        return {
            "delta_mu": self.delta_mu,
            "p0": self.p0,
            "p0_delta_route": self.p0_delta_route,
            "p_low": self.interval[0],
            "p_high": self.interval[1],
            "eps0_lower": self.eps0_lower,
            "theta0": self.theta0,
            "omega": self.omega,
            "theta": self.theta,
            "omega_fallback": self.omega_fallback,
            "sampling_exact": self.sampling_exact,
        }


def build_report(field, p_grid, tol=1e-4, angle_p=None):
    """Full calculus report for one field.

    The sector angles are evaluated at ``angle_p`` (default: the largest grid
    exponent at which the field is p-elliptic) with lambda_p = Delta_p.
    """
    p_grid = sorted(float(p) for p in p_grid)
    dvals = {p: delta_p(field, p) for p in p_grid}
    dmu = delta_mu(field)
    res = p0(field, tol=tol, return_result=True)
    notes = []
    if not res.agree:
        notes.append("p0 bisection and delta route disagree")
    interval = analyticity_interval(res.value, field.d)
    eps0 = eps0_lower(res.value, field.d) if field.d >= 3 else 0.0
    if angle_p is None:
        good = [p for p in p_grid if p >= 2 and dvals[p] > ELLIPTIC_TOL * field.c_upper]
        angle_p = max(good) if good else 2.0
    ang = sector_angles(field, angle_p, delta_p(field, angle_p))
    if ang.omega_fallback:
        notes.append("omega from closed-form fallback")
    return PEllipticityReport(p_grid, dvals, dmu, res.value, res.delta_route, interval, eps0,
                              ang.theta0, ang.omega, ang.theta, ang.omega_fallback, field.d,
                              field.sampling_exact, notes)
