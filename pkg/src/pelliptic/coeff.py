"""Coefficient fields, domains and perturbations.

A coefficient field maps points of R^d to complex d x d matrices and carries
declared ellipticity constants ``c_lower`` (lower bound of the real part of
the quadratic form) and ``c_upper`` (bound on the operator norm).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from ._sampling import complex_sphere_points

KINDS = ("constant", "rotation", "checkerboard", "table", "callable")


def hermitian_min_eig(mats):
    """Smallest eigenvalue of the Hermitian part of each matrix in a stack."""
    mats = np.asarray(mats, dtype=complex)
    herm = 0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2)))
    return np.linalg.eigvalsh(herm)[..., 0]


def operator_norm(mats):
    """Largest singular value of each matrix in a stack."""
    return np.linalg.norm(np.asarray(mats), ord=2, axis=(-2, -1))


@dataclass(frozen=True)
class CoefficientField:
    """Complex coefficient matrix field on the unit box of R^d.

    ``evaluator`` is vectorized: it takes an (N, d) array of points and
    returns an (N, d, d) complex array.  Piecewise-constant kinds keep their
    tile values in ``tiles`` so that essential infima are computed exactly.
    """

    d: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    c_lower: float
    c_upper: float
    kind: str
    tiles: Optional[np.ndarray] = None
    tiling: Optional[int] = None
    resolution: int = 16
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.evaluator(x), dtype=complex)

    def sample_matrices(self):
        """Matrices over which essential infima/suprema are taken.

        Exact for constant and tiled fields; midpoint samples of a
        ``resolution``-per-axis grid for general callables.
        """
        if self.tiles is not None:
            return self.tiles
        m = self.resolution
        axes = [(np.arange(m) + 0.5) / m] * self.d
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        return self(pts)

    @property
    def sampling_exact(self):
        return self.tiles is not None

    def adjoint(self):
        """The field x -> mu(x)^* (conjugate transpose)."""
        ev = self.evaluator
        tiles = None if self.tiles is None else np.conj(np.swapaxes(self.tiles, -1, -2))
        return CoefficientField(
            self.d,
            lambda x: np.conj(np.swapaxes(ev(x), -1, -2)),
            self.c_lower,
            self.c_upper,
            self.kind,
            tiles,
            self.tiling,
            self.resolution,
            dict(self.params, adjoint=True),
        )

    def scaled(self, t):
        if t <= 0:
            raise ValueError("scale factor must be positive")
        ev = self.evaluator
        tiles = None if self.tiles is None else t * self.tiles
        return CoefficientField(
            self.d,
            lambda x: t * ev(x),
            t * self.c_lower,
            t * self.c_upper,
            self.kind,
            tiles,
            self.tiling,
            self.resolution,
            dict(self.params, scale=t),
        )

    def contrast(self):
        return self.c_upper / self.c_lower


def _constant_evaluator(mu):
    mu = np.array(mu, dtype=complex)

    def ev(x):
        return np.broadcast_to(mu, (len(x),) + mu.shape).copy()

    return ev


def _check_tiles(values, d):
    tiles = np.array(values, dtype=complex)
    if tiles.ndim == 2:
        tiles = tiles[None]
    if tiles.shape[1:] != (d, d):
        raise ValueError(f"tile matrices must be {d}x{d}, got {tiles.shape[1:]}")
    lower = hermitian_min_eig(tiles)
    if np.any(lower <= 0):
        bad = int(np.argmin(lower))
        raise ValueError(f"tile {bad} is not elliptic (min eig of Hermitian part {lower[bad]:.3g})")
    return tiles, float(lower.min()), float(operator_norm(tiles).max())


def make_constant(mu):
    """Constant field mu(x) = mu."""
    tiles, lo, hi = _check_tiles(mu, np.asarray(mu).shape[0])
    return CoefficientField(tiles.shape[1], _constant_evaluator(tiles[0]), lo, hi,
                            "constant", tiles, 1)


def make_scalar_rotation(phi, d):
    """The field e^{i phi} I, elliptic for |phi| < pi/2 with c_lower = cos(phi)."""
    if not abs(phi) < np.pi / 2:
        raise ValueError("|phi| must be below pi/2 for ellipticity")
    mu = np.exp(1j * phi) * np.eye(d)
    return CoefficientField(d, _constant_evaluator(mu), float(np.cos(phi)), 1.0,
                            "rotation", mu[None], 1, params={"phi": phi})


def _tile_index(x, tiling):
    idx = np.floor(np.asarray(x) * tiling).astype(int)
    return np.clip(idx, 0, tiling - 1)


def make_checkerboard(values, tiling, d):
    """Checkerboard of the given matrices on a ``tiling``^d partition of the box.

    Tile with integer coordinates k is assigned ``values[sum(k) % len(values)]``,
    so two values give the classical checkerboard.
    """
    tiles, lo, hi = _check_tiles(values, d)
    if tiling < 1:
        raise ValueError("tiling must be positive")
    nv = len(tiles)

    def ev(x):
        k = _tile_index(x, tiling).sum(axis=1) % nv
        return tiles[k]

    return CoefficientField(d, ev, lo, hi, "checkerboard", tiles, tiling,
                            params={"ntiles": nv})


def make_contrast_checkerboard(contrast, tiling, d):
    """Two-valued checkerboard I / contrast*I."""
    return make_checkerboard([np.eye(d), contrast * np.eye(d)], tiling, d)


def make_random_checkerboard(rng, d, tiling=4, n_values=4, spread=0.3, imag=0.0,
                             accept=None, max_tries=100):
    """Checkerboard of random tiles I + (R + R^T)/2 + i*imag*N.

    R has entries N(0, spread^2) and N standard normal entries.  Draws are
    repeated until every tile is elliptic and ``accept(field)`` holds.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    for _ in range(max_tries):
        tiles = []
        for _ in range(n_values):
            R = rng.normal(size=(d, d)) * spread
            A = np.eye(d) + 0.5 * (R + R.T)
            if imag:
                A = A + 1j * imag * rng.normal(size=(d, d))
            tiles.append(A)
        try:
            f = make_checkerboard(tiles, tiling, d)
        except ValueError:
            continue
        if accept is None or accept(f):
            return f
    raise ValueError("no admissible random field found")


def make_table(values, tiling, d):
    """Piecewise-constant field with one matrix per tile, tiles in C order."""
    tiles, lo, hi = _check_tiles(values, d)
    if len(tiles) != tiling ** d:
        raise ValueError(f"table has {len(tiles)} tiles, expected tiling^d = {tiling ** d}")

    def ev(x):
        k = np.ravel_multi_index(tuple(_tile_index(x, tiling).T), (tiling,) * d)
        return tiles[k]

    return CoefficientField(d, ev, lo, hi, "table", tiles, tiling)


def make_callable(func, d, c_lower, c_upper, resolution=16):
    """Wrap a vectorized user function; constants are the caller's claim."""
    return CoefficientField(d, func, c_lower, c_upper, "callable", resolution=resolution)


def read_table(path, d):
    """Read tile matrices from a whitespace-separated text file.

    One line per tile: the d*d real parts in row-major order followed by the
    d*d imaginary parts.  Blank lines and ``#`` comments are skipped.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            vals = [float(v) for v in line.split()]
            if len(vals) != 2 * d * d:
                raise ValueError(f"{path}:{lineno}: expected {2 * d * d} numbers, got {len(vals)}")
            re = np.array(vals[: d * d]).reshape(d, d)
            im = np.array(vals[d * d:]).reshape(d, d)
            rows.append(re + 1j * im)
    if not rows:
        raise ValueError(f"{path}: no tiles")
    return np.array(rows)


def write_table(path, tiles):
    tiles = np.asarray(tiles, dtype=complex)
    with open(path, "w") as fh:
        for t in tiles:
            vals = np.concatenate([t.real.ravel(), t.imag.ravel()])
            fh.write(" ".join(repr(float(v)) for v in vals) + "\n")


def load_table(path, d, tiling=None):
    tiles = read_table(path, d)
    if tiling is None:
        tiling = int(round(len(tiles) ** (1.0 / d)))
    return make_table(tiles, tiling, d)


@dataclass
class EllipticityReport:
    c_lower: float
    c_upper: float
    c_lower_exact: float
    c_upper_exact: float
    declared_lower: float
    declared_upper: float
    n_points: int
    n_directions: int
    violation: bool
    exact_sampling: bool


def validate_ellipticity(field, samples, tol=1e-9, seed=0):
    """Empirical ellipticity constants over sampled points and directions.

    ``c_lower``/``c_upper`` are the worst values over ``samples`` quasi-random
    unit vectors of C^d; the ``*_exact`` values use eigen/singular values of
    the sampled matrices.  Report only, never raises on violation.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    mats = field.sample_matrices()
    xi = complex_sphere_points(field.d, samples, seed=seed)
    mxi = np.einsum("sij,nj->sni", mats, xi)
    quad = np.real(np.einsum("sni,ni->sn", mxi, np.conj(xi)))
    lo = float(quad.min())
    hi = float(np.linalg.norm(mxi, axis=-1).max())
    lo_ex = float(hermitian_min_eig(mats).min())
    hi_ex = float(operator_norm(mats).max())
    violation = (min(lo, lo_ex) < field.c_lower - tol) or (max(hi, hi_ex) > field.c_upper + tol)
    return EllipticityReport(lo, hi, lo_ex, hi_ex, field.c_lower, field.c_upper,
                             len(mats), samples, bool(violation), field.sampling_exact)


BOX_FACES = lambda d: tuple(f"x{i}{s}" for i in range(d) for s in "-+")  # noqa: E731
LSHAPE_FACES = ("x0-", "x0+", "x1-", "x1+", "notch0", "notch1")


@dataclass(frozen=True)
class DomainSpec:
    """Unit box in d = 2, 3 or the L-shape [0,1]^2 minus (1/2,1]^2.

    ``dirichlet`` is a set of face labels; the Neumann part is the rest.  Box
    faces are ``x{i}-`` / ``x{i}+``.  The L-shape has ``x0-``, ``x1-``, the
    short outer faces ``x0+`` (x0 = 1) and ``x1+`` (x1 = 1), and the two
    re-entrant faces ``notch0`` (x0 = 1/2) and ``notch1`` (x1 = 1/2).
    """

    shape: str = "box"
    d: int = 2
    dirichlet: frozenset = frozenset()
    M: float = 1.0
    metadata: dict = dc_field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.shape not in ("box", "lshape"):
            raise ValueError(f"unsupported shape {self.shape!r}")
        if self.shape == "box" and self.d not in (2, 3):
            raise ValueError("box domains are supported in d = 2, 3")
        if self.shape == "lshape" and self.d != 2:
            raise ValueError("the L-shape is two-dimensional")
        if self.M <= 0:
            raise ValueError("chart constant M must be positive")
        object.__setattr__(self, "dirichlet", frozenset(self.dirichlet))
        unknown = self.dirichlet - set(self.faces)
        if unknown:
            raise ValueError(f"unknown boundary faces {sorted(unknown)}")

    @property
    def faces(self):
        return LSHAPE_FACES if self.shape == "lshape" else BOX_FACES(self.d)

    @property
    def neumann(self):
        return frozenset(self.faces) - self.dirichlet

    @property
    def volume(self):
        return 0.75 if self.shape == "lshape" else 1.0

    @property
    def alpha(self):
        return self.M ** 2 * np.sqrt(self.d)

    @property
    def beta(self):
        return 4 * self.M ** 2 * np.sqrt(self.d)

    @classmethod
    def box(cls, d, dirichlet="all", M=1.0):
        return cls("box", d, _faces_arg(dirichlet, BOX_FACES(d)), M)

    @classmethod
    def lshape(cls, dirichlet="all", M=1.0):
        return cls("lshape", 2, _faces_arg(dirichlet, LSHAPE_FACES), M)


def _faces_arg(dirichlet, faces):
    if dirichlet == "all":
        return frozenset(faces)
    if dirichlet in ("none", None):
        return frozenset()
    if isinstance(dirichlet, str):
        return frozenset(dirichlet.split())
    return frozenset(dirichlet)


@dataclass(frozen=True)
class Perturbation:
    """A base field plus a complex perturbation nu with ``nu_norm`` >= sup |nu|."""

    base: CoefficientField
    nu: np.ndarray
    nu_norm: float

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=complex)
        if nu.shape != (self.base.d, self.base.d):
            raise ValueError("nu must be a constant d x d matrix")
        if self.nu_norm < 0:
            raise ValueError("nu_norm must be nonnegative")
        if operator_norm(nu) > self.nu_norm * (1 + 1e-12) + 1e-15:
            raise ValueError("nu_norm is below the operator norm of nu")

    def field(self):
        """mu + nu as a field; constants recomputed from the sampled matrices."""
        base, nu = self.base, np.asarray(self.nu, dtype=complex)
        mats = base.sample_matrices() + nu
        lo = float(hermitian_min_eig(mats).min())
        if lo <= 0:
            raise ValueError("perturbed field is not elliptic")
        hi = float(operator_norm(mats).max())
        ev = base.evaluator
        tiles = mats if base.tiles is not None else None
        return CoefficientField(base.d, lambda x: ev(x) + nu, lo, hi, base.kind, tiles,
                                base.tiling, base.resolution, dict(base.params, perturbed=True))
