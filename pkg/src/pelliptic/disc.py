"""Q1 finite elements on structured grids of the unit box and the L-shape.

Vertex functions are plain complex numpy arrays over all grid vertices;
Dirichlet vertices are eliminated from the system matrices and carry zeros.
Cell-wise fields (gradients, divergence data) are arrays of shape
``(n_cells, d)`` at cell midpoints or ``(n_cells, 2**d, d)`` at the tensor
Gauss points.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .coeff import DomainSpec, make_constant

GAUSS_1D = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def _corner_bits(d):
    return np.array([[(k >> a) & 1 for a in range(d)] for k in range(2 ** d)])


def reference_gradients(d, points):
    """Gradients of the 2**d bilinear/trilinear shape functions on [0,1]^d.

    Returns an array ``(n_points, 2**d, d)``.
    """
    bits = _corner_bits(d)
    pts = np.atleast_2d(points)
    # one-dimensional factors: value and derivative of (1 - s) or s
    val = np.where(bits[None, :, :] == 1, pts[:, None, :], 1 - pts[:, None, :])
    der = np.where(bits == 1, 1.0, -1.0)[None].repeat(len(pts), axis=0)
    out = np.empty((len(pts), 2 ** d, d))
    for a in range(d):
        prod = der[:, :, a].copy()
        for b in range(d):
            if b != a:
                prod = prod * val[:, :, b]
        out[:, :, a] = prod
    return out


def gauss_points(d):
    return np.array(list(itertools.product(GAUSS_1D, repeat=d)))[:, ::-1]


def gradient_integrals(d):
    """I[a, b, k, l] = integral over the unit reference cell of d_a phi_k d_b phi_l.

    Products of Q1 derivatives have degree <= 2 per variable, so the
    two-point Gauss rule is exact.
    """
    g = reference_gradients(d, gauss_points(d))
    I = np.einsum("qka,qlb->abkl", g, g) / len(g)
    # enforce I[a, b, k, l] == I[b, a, l, k] bitwise
    return 0.5 * (I + I.transpose(1, 0, 3, 2))


@dataclass
class Patch:
    """Cells of Omega(x0, r) (centroid rule) and their lumped vertex weights."""

    x0: np.ndarray
    r: float
    cells: np.ndarray
    vertices: np.ndarray
    weights: np.ndarray

    @property
    def volume(self):
        return float(self.weights.sum())

    def __len__(self):
        return len(self.cells)


@dataclass
class Grid:
    """Uniform Q1 grid with ``n`` cells per unit edge."""

    spec: DomainSpec
    n: int
    index: np.ndarray  # integer vertex multi-indices, (Nv, d)
    cells: np.ndarray  # (Nc, 2**d) vertex numbers, corner k has offsets bits(k)
    labels: dict = dc_field(repr=False)  # face label -> boolean vertex mask

    @property
    def d(self):
        return self.spec.d

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def n_vertices(self):
        return len(self.index)

    @property
    def n_cells(self):
        return len(self.cells)

    @cached_property
    def coords(self):
        return self.index * self.h

    @cached_property
    def centroids(self):
        return self.coords[self.cells].mean(axis=1)

    @cached_property
    def cell_volumes(self):
        return np.full(self.n_cells, self.h ** self.d)

    @cached_property
    def mass(self):
        """Lumped vertex weights m_v."""
        share = np.repeat(self.cell_volumes / 2 ** self.d, 2 ** self.d)
        return np.bincount(self.cells.ravel(), weights=share, minlength=self.n_vertices)

    @cached_property
    def dirichlet_mask(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        for lab in self.spec.dirichlet:
            mask |= self.labels[lab]
        return mask

    @cached_property
    def free(self):
        return np.flatnonzero(~self.dirichlet_mask)

    @cached_property
    def boundary_mask(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        for m in self.labels.values():
            mask |= m
        return mask

    def gauss_coords(self):
        """Physical Gauss points, ``(Nc, 2**d, d)``."""
        ref = gauss_points(self.d) * self.h
        return self.coords[self.cells[:, 0]][:, None, :] + ref[None]

    def _grad_matrix(self, ref):
        nq = len(ref)
        d, nc = self.d, self.n_cells
        rows = (np.arange(nc)[:, None, None, None] * nq * d
                + np.arange(nq)[None, :, None, None] * d
                + np.arange(d)[None, None, None, :])
        rows = np.broadcast_to(rows, (nc, nq, 2 ** d, d))
        cols = np.broadcast_to(self.cells[:, None, :, None], rows.shape)
        vals = np.broadcast_to(ref[None] / self.h, rows.shape)
        return sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                             shape=(nc * nq * d, self.n_vertices))

    @cached_property
    def grad_mid(self):
        """Sparse map from vertex values to midpoint gradients, flattened (Nc*d)."""
        return self._grad_matrix(reference_gradients(self.d, np.full((1, self.d), 0.5)))

    @cached_property
    def grad_gauss(self):
        """Sparse map to Gauss-point gradients, flattened (Nc*2**d*d)."""
        return self._grad_matrix(reference_gradients(self.d, gauss_points(self.d)))

    def patch(self, x0, r):
        x0 = np.asarray(x0, dtype=float)
        dist = np.linalg.norm(self.centroids - x0, axis=1)
        cells = np.flatnonzero(dist <= r)
        share = np.repeat(self.cell_volumes[cells] / 2 ** self.d, 2 ** self.d)
        w = np.bincount(self.cells[cells].ravel(), weights=share, minlength=self.n_vertices)
        verts = np.flatnonzero(w)
        return Patch(x0, float(r), cells, verts, w[verts])

    def interpolate(self, func):
        """Vertex values of ``func`` evaluated on an (N, d) coordinate array."""
        return np.asarray(func(self.coords), dtype=complex)


def build_grid(spec: DomainSpec, n: int) -> Grid:
    """Uniform grid of the domain with ``n`` cells per unit edge.

    The L-shape needs even ``n`` so the notch is resolved by cell faces.
    """
    if n < 4:
        raise ValueError("n must be at least 4")
    d = spec.d
    if spec.shape == "lshape" and n % 2:
        raise ValueError("the L-shape needs an even number of cells per edge")
    if spec.shape not in ("box", "lshape"):
        raise ValueError(f"unsupported shape {spec.shape!r}")
    shape = (n + 1,) * d
    index = np.stack(np.unravel_index(np.arange((n + 1) ** d), shape), axis=1)
    base = np.stack(np.unravel_index(np.arange(n ** d), (n,) * d), axis=1)
    bits = _corner_bits(d)
    cells = np.ravel_multi_index(
        tuple((base[:, None, :] + bits[None]).transpose(2, 0, 1)), shape)
    if spec.shape == "lshape":
        half = n // 2
        keep = ~((base[:, 0] >= half) & (base[:, 1] >= half))
        cells = cells[keep]
        used = np.unique(cells)
        remap = np.full((n + 1) ** d, -1)
        remap[used] = np.arange(len(used))
        cells = remap[cells]
        index = index[used]
    labels = _face_labels(spec, index, n)
    return Grid(spec, n, index, cells, labels)


def _face_labels(spec, index, n):
    if spec.shape == "box":
        labels = {}
        for a in range(spec.d):
            labels[f"x{a}-"] = index[:, a] == 0
            labels[f"x{a}+"] = index[:, a] == n
        return labels
    half = n // 2
    i, j = index[:, 0], index[:, 1]
    return {
        "x0-": i == 0,
        "x1-": j == 0,
        "x0+": (i == n) & (j <= half),
        "x1+": (j == n) & (i <= half),
        "notch0": (i == half) & (j >= half),
        "notch1": (j == half) & (i >= half),
    }


@dataclass
class DiscreteOperator:
    """Galerkin matrices of the form t[u, v] = int <mu grad u, grad v>.

    ``K_full`` acts on all vertices with v^H K u = t[u, v]; ``K`` and ``M``
    are restricted to the free (non-Dirichlet) vertices.
    """

    grid: Grid
    field: object
    K_full: sp.csr_matrix
    cell_mu: np.ndarray

    @cached_property
    def K(self):
        f = self.grid.free
        return self.K_full[f][:, f].tocsc()

    @cached_property
    def m(self):
        return self.grid.mass[self.grid.free]

    @cached_property
    def M(self):
        return sp.diags(self.m).tocsc()

    @property
    def free(self):
        return self.grid.free

    @property
    def n_free(self):
        return len(self.grid.free)

    def extend(self, u_free):
        """Vertex vector with zeros on Dirichlet vertices."""
        u_free = np.asarray(u_free)
        out = np.zeros((self.grid.n_vertices,) + u_free.shape[1:], dtype=complex)
        out[self.grid.free] = u_free
        return out

    def restrict(self, u):
        return np.asarray(u)[self.grid.free]

    def form(self, u, v):
        """t[u, v] for full vertex vectors."""
        return complex(np.vdot(v, self.K_full @ u))


def local_stiffness(cell_mu, d, h):
    """Per-cell element matrices sum_ab mu_ab I_ab.

    Diagonal terms are added first, then the pairs (a, b), (b, a) together;
    this ordering makes the assembled adjoint field reproduce K^H exactly.
    """
    ref = gradient_integrals(d) * h ** (d - 2)
    out = np.zeros((len(cell_mu), 2 ** d, 2 ** d), dtype=complex)
    for a in range(d):
        out += cell_mu[:, a, a, None, None] * ref[a, a]
    for a in range(d):
        for b in range(a + 1, d):
            out += (cell_mu[:, a, b, None, None] * ref[a, b]
                    + cell_mu[:, b, a, None, None] * ref[b, a])
    return out


def assemble(field, grid: Grid) -> DiscreteOperator:
    """Assemble the stiffness matrix with mu frozen at cell midpoints."""
    if field.d != grid.d:
        raise ValueError("field and grid dimensions differ")
    cell_mu = field(grid.centroids)
    loc = local_stiffness(cell_mu, grid.d, grid.h)
    nl = 2 ** grid.d
    rows = np.repeat(grid.cells, nl, axis=1).ravel()
    cols = np.tile(grid.cells, (1, nl)).ravel()
    # duplicates summed in cell order for every entry, so that (k, l) and
    # (l, k) see the same sequence of contributions
    nv = grid.n_vertices
    keys = rows.astype(np.int64) * nv + cols
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    data = np.add.reduceat(loc.ravel()[order], starts)
    uk = keys[starts]
    K = sp.csr_matrix((data, (uk // nv, uk % nv)), shape=(nv, nv))
    return DiscreteOperator(grid, field, K, cell_mu)


def identity_operator(grid):
    return assemble(make_constant(np.eye(grid.d)), grid)


def _weights(grid, patch):
    if patch is None:
        return np.arange(grid.n_vertices), grid.mass
    return patch.vertices, patch.weights


def lp_norm(u, p, grid, patch=None):
    """(sum_v m_v |u_v|^p)^(1/p) with lumped weights, optionally on a patch.

    Vector-valued vertex data ``(Nv, k)`` uses the Euclidean magnitude.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    idx, w = _weights(grid, patch)
    a = np.abs(np.asarray(u)[idx])
    if a.ndim > 1:
        a = np.linalg.norm(a.reshape(len(a), -1), axis=1)
    return _weighted_norm(a, w, p)


def _weighted_norm(a, w, p):
    if np.isinf(p):
        return float(a.max(initial=0.0))
    top = a.max(initial=0.0)
    if top == 0:
        return 0.0
    return float(top * (np.sum(w * (a / top) ** p)) ** (1.0 / p))


def gradient(u, grid, at="mid"):
    """Q1 gradient of vertex data: ``(Nc, d)`` at midpoints or ``(Nc, 2**d, d)`` at Gauss points."""
    u = np.asarray(u)
    if at == "mid":
        return (grid.grad_mid @ u).reshape(grid.n_cells, grid.d)
    if at == "gauss":
        return (grid.grad_gauss @ u).reshape(grid.n_cells, 2 ** grid.d, grid.d)
    raise ValueError("at must be 'mid' or 'gauss'")


def cell_lp_norm(g, p, grid, cells=None):
    """L^p norm of a cell field (midpoint or Gauss-point layout)."""
    if p < 1:
        raise ValueError("p must be at least 1")
    g = np.asarray(g)
    vol = grid.cell_volumes
    if cells is not None:
        g, vol = g[cells], vol[cells]
    if g.ndim == 3:
        nq = g.shape[1]
        a = np.linalg.norm(g, axis=2).ravel()
        w = np.repeat(vol / nq, nq)
    else:
        a = np.linalg.norm(g.reshape(len(g), -1), axis=1)
        w = vol
    return _weighted_norm(a, w, p)


@dataclass
class ManufacturedReport:
    ns: list
    errors: list
    orders: list
    solve_seconds: list


def manufactured_check(ns=(16, 32, 64), spec=None):
    """Solve K u = M f with f = 2 pi^2 sin(pi x) sin(pi y) on the unit square.

    Reports the discrete L^2 error against sin(pi x) sin(pi y) and the
    observed orders between consecutive grids.
    """
    import time

    from scipy.sparse.linalg import spsolve

    spec = spec or DomainSpec.box(2, "all")
    if spec.shape != "box" or spec.d != 2 or spec.dirichlet != frozenset(spec.faces):
        raise ValueError("manufactured check needs the fully Dirichlet unit square")
    errs, times = [], []
    for n in ns:
        grid = build_grid(spec, n)
        op = identity_operator(grid)
        x, y = grid.coords[:, 0], grid.coords[:, 1]
        exact = np.sin(np.pi * x) * np.sin(np.pi * y)
        f = 2 * np.pi ** 2 * exact
        t0 = time.perf_counter()
        u = spsolve(op.K, op.m * f[grid.free])
        times.append(time.perf_counter() - t0)
        errs.append(lp_norm(op.extend(u) - exact, 2, grid))
    orders = [float(np.log2(errs[i] / errs[i + 1]) / np.log2(ns[i + 1] / ns[i]))
              for i in range(len(ns) - 1)]
    return ManufacturedReport(list(ns), errs, orders, times)


def export_csv(path, grid, **values):
    """Vertex coordinates and named vertex arrays (real and imaginary parts) as CSV."""
    names = [f"x{a}" for a in range(grid.d)]
    cols = [grid.coords[:, a] for a in range(grid.d)]
    for key, v in values.items():
        v = np.asarray(v)
        names += [f"{key}_re", f"{key}_im"]
        cols += [v.real, v.imag]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols):
            w.writerow(["%.17g" % c for c in row])


def _cell_multi_index(grid, n):
    return np.floor(grid.centroids * n + 1e-9).astype(int)


def transfer_cell_field(g, src: Grid, dst: Grid):
    """Move a cell field between nested grids of the same domain.

    Refinement copies each coarse value to its children; coarsening averages
    the children.  Both grids must have cell counts per edge that divide one
    another.
    """
    if src.spec != dst.spec:
        raise ValueError("grids belong to different domains")
    g = np.asarray(g)
    if src.n == dst.n:
        return g.copy()
    if dst.n % src.n == 0:
        lookup = np.full((src.n,) * src.d, -1)
        lookup[tuple(_cell_multi_index(src, src.n).T)] = np.arange(src.n_cells)
        parent = lookup[tuple(_cell_multi_index(dst, src.n).T)]
        return g[parent]
    if src.n % dst.n == 0:
        lookup = np.full((dst.n,) * dst.d, -1)
        lookup[tuple(_cell_multi_index(dst, dst.n).T)] = np.arange(dst.n_cells)
        parent = lookup[tuple(_cell_multi_index(src, dst.n).T)]
        out = np.zeros((dst.n_cells,) + g.shape[1:], dtype=g.dtype)
        np.add.at(out, parent, g)
        return out / (src.n // dst.n) ** src.d
    raise ValueError("grids are not nested")
