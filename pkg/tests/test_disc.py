import math

import numpy as np
import pytest

from pelliptic import coeff, disc


def _complex_field(d, seed=0):
    return coeff.make_random_checkerboard(seed, d, tiling=2, imag=0.3)


@pytest.mark.parametrize("d", [2, 3])
def test_adjoint_assembly_is_exact(d):
    grid = disc.build_grid(coeff.DomainSpec.box(d, "x0-"), 4)
    f = _complex_field(d)
    K = disc.assemble(f, grid).K_full
    KH = disc.assemble(f.adjoint(), grid).K_full
    diff = (KH - K.conj().T).tocoo()
    assert diff.nnz == 0 or np.all(diff.data == 0)


def test_constants_in_kernel_without_dirichlet():
    grid = disc.build_grid(coeff.DomainSpec.box(2, "none"), 6)
    K = disc.assemble(_complex_field(2), grid).K_full
    assert np.abs(K @ np.ones(grid.n_vertices)).max() < 1e-12


@pytest.mark.parametrize("spec,vol", [(coeff.DomainSpec.box(2), 1.0),
                                      (coeff.DomainSpec.box(3), 1.0),
                                      (coeff.DomainSpec.lshape(), 0.75)])
def test_lumped_mass_volume(spec, vol):
    grid = disc.build_grid(spec, 8)
    assert grid.mass.sum() == pytest.approx(vol, abs=1e-14)
    assert disc.lp_norm(np.ones(grid.n_vertices), 3.0, grid) == pytest.approx(vol ** (1 / 3))


def test_lshape_requires_even_n():
    with pytest.raises(ValueError):
        disc.build_grid(coeff.DomainSpec.lshape(), 7)


def test_dirichlet_mask_mixed():
    grid = disc.build_grid(coeff.DomainSpec.box(2, "x0-"), 4)
    assert np.array_equal(grid.dirichlet_mask, grid.coords[:, 0] == 0)


def test_manufactured_order():
    rep = disc.manufactured_check((8, 16, 32))
    assert all(abs(o - 2) < 0.2 for o in rep.orders)


def test_form_sector():
    f = _complex_field(2, 4)
    grid = disc.build_grid(coeff.DomainSpec.box(2, "x0-"), 8)
    op = disc.assemble(f, grid)
    theta0 = math.atan(2 * f.c_upper / f.c_lower)
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.normal(size=op.n_free) + 1j * rng.normal(size=op.n_free)
        z = np.vdot(u, op.K @ u)
        assert abs(np.angle(z)) <= theta0


def test_gradient_of_linear_function():
    grid = disc.build_grid(coeff.DomainSpec.box(3), 4)
    u = 2 * grid.coords[:, 0] - grid.coords[:, 2]
    for at in ("mid", "gauss"):
        g = disc.gradient(u, grid, at=at).reshape(-1, 3)
        assert np.allclose(g, [2, 0, -1])


def test_patch_weights():
    grid = disc.build_grid(coeff.DomainSpec.box(2), 16)
    patch = grid.patch(np.array([0.5, 0.5]), 0.25)
    assert len(patch) > 0
    # centroid rule: cells whose midpoint lies in the ball
    assert abs(patch.volume - math.pi * 0.25 ** 2) <= 2 * math.pi * 0.25 * grid.h
    assert np.all(np.linalg.norm(grid.centroids[patch.cells] - 0.5, axis=1) <= 0.25)


def test_transfer_roundtrip():
    spec = coeff.DomainSpec.lshape()
    a, b = disc.build_grid(spec, 8), disc.build_grid(spec, 16)
    g = np.random.default_rng(0).normal(size=(a.n_cells, 2))
    up = disc.transfer_cell_field(g, a, b)
    assert np.allclose(disc.transfer_cell_field(up, b, a), g)


def test_export_csv(tmp_path):
    grid = disc.build_grid(coeff.DomainSpec.box(2), 4)
    path = tmp_path / "u.csv"
    disc.export_csv(path, grid, u=np.arange(grid.n_vertices) * (1 + 1j))
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1,u_re,u_im"
    assert len(lines) == grid.n_vertices + 1
