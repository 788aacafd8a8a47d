import math

import numpy as np
import pytest

from pelliptic import coeff, disc, resolvent as R
from pelliptic.growth import classify_growth, variation


@pytest.fixture(scope="module")
def op2():
    f = coeff.make_random_checkerboard(7, 2, tiling=2, imag=0.3)
    return disc.assemble(f, disc.build_grid(coeff.DomainSpec.box(2, "x0-"), 12))


def _pair(op, u, v):
    return np.vdot(v, op.grid.mass * u)


def test_resolvent_identity(op2):
    lam, nu = 0.7 + 1.3j, 2.0 - 0.4j
    f = np.random.default_rng(0).normal(size=op2.grid.n_vertices) + 0j
    f[op2.grid.dirichlet_mask] = 0
    rl, rn = R.resolve(op2, lam, f), R.resolve(op2, nu, f)
    rhs = (nu - lam) * R.resolve(op2, lam, rn)
    assert np.linalg.norm(rl - rn - rhs) <= 1e-8 * np.linalg.norm(rl)


def test_adjoint_consistency(op2):
    lam = 1.5 + 0.8j
    rng = np.random.default_rng(1)
    f = rng.normal(size=op2.grid.n_vertices) + 1j * rng.normal(size=op2.grid.n_vertices)
    g = rng.normal(size=op2.grid.n_vertices) + 1j * rng.normal(size=op2.grid.n_vertices)
    f[op2.grid.dirichlet_mask] = 0
    g[op2.grid.dirichlet_mask] = 0
    adj = disc.assemble(op2.field.adjoint(), op2.grid)
    a = _pair(op2, R.resolve(op2, lam, f), g)
    b = _pair(op2, f, R.resolve(adj, np.conj(lam), g))
    assert abs(a - b) <= 1e-8 * abs(a)


def test_probe_operator_adjoints(op2):
    ops = R.probe_operators(op2, 2.0 + 1.0j)
    rng = np.random.default_rng(2)
    for T in ops.values():
        x = rng.normal(size=T.space_in.size * T.space_in.comps) + 0j
        y = rng.normal(size=T.space_out.size * T.space_out.comps) + 0j
        wi = np.repeat(T.space_in.weights, T.space_in.comps)
        wo = np.repeat(T.space_out.weights, T.space_out.comps)
        lhs = np.vdot(y, wo * T.apply(x))
        rhs = np.vdot(T.adjoint(y), wi * x)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_resolve_div_of_gradient():
    grid = disc.build_grid(coeff.DomainSpec.box(2, "all"), 8)
    op = disc.identity_operator(grid)
    w = np.sin(np.pi * grid.coords[:, 0]) * grid.coords[:, 1] * (1 - grid.coords[:, 1])
    w[grid.dirichlet_mask] = 0
    g = disc.gradient(w, grid, at="gauss")
    # lam (u, v) + (grad u, grad v) = -(grad w, grad v) has u = -w only when lam = 0
    u = R.resolve_div(op, 1e-14, g)
    assert np.abs(u + w).max() < 1e-9


def test_amg_matches_direct():
    f = coeff.make_scalar_rotation(0.5, 3)
    op = disc.assemble(f, disc.build_grid(coeff.DomainSpec.box(3, "x0-"), 6))
    b = np.random.default_rng(0).normal(size=op.n_free) + 0j
    x1 = R.ShiftedSolver(op, 1 + 1j, "direct").solve(b)
    x2 = R.ShiftedSolver(op, 1 + 1j, "amg").solve(b)
    assert np.linalg.norm(x1 - x2) <= 1e-9 * np.linalg.norm(x1)


def test_opnorm_exact_for_diagonal():
    d = np.linspace(0.1, 3.0, 40)
    est = R.opnorm_lp(lambda f: d * f, 2.0, 8, weights=np.ones(40), families=("delta",))
    assert est.value <= 3.0 + 1e-12
    assert np.all(np.diff(est.history) >= 0)


def test_opnorm_refinement_reaches_norm(op2):
    T = R.probe_operators(op2, 1.0)["res"]
    est = R.opnorm_lp(T, 2.0, 4, refine=2, power_steps=30)
    s = np.sqrt(op2.m)
    A = (op2.M + op2.K).toarray()
    exact = np.linalg.norm(s[:, None] * np.linalg.solve(A, np.diag(op2.m)) / s[None], 2)
    assert exact * 0.99 <= est.value <= exact * (1 + 1e-9)
    assert np.all(np.diff(est.history) >= 0)


def test_lax_milgram_constants():
    lm = R.lax_milgram_constants(1.0, 1.0, 0.0)
    assert lm["res"] == 1.0 and lm["graddiv"] == 1.0
    lm = R.lax_milgram_constants(1.0, 2.0, 2.0)
    assert lm["psi"] == pytest.approx(math.pi / 3)
    assert lm["res"] == pytest.approx(1 / math.sin(2.0 + math.pi / 3))
    assert R.lax_milgram_constants(1.0, 2.0, 2.2)["res"] == math.inf


def test_sample_sector():
    lams = R.sample_sector(2.0, 100, seed=3)
    assert np.all(np.abs(np.angle(lams)) < 2.0 - 0.01 + 1e-15)
    assert np.all((np.abs(lams) >= 1e-2) & (np.abs(lams) <= 1e4))
    assert np.array_equal(lams, R.sample_sector(2.0, 100, seed=3))
    with pytest.raises(ValueError):
        R.sample_sector(2.0, 0)
    with pytest.raises(ValueError):
        R.sample_sector(1.0, 5)


def test_sector_scan_identity_l2():
    op = disc.identity_operator(disc.build_grid(coeff.DomainSpec.box(2), 8))
    theta = 2.0
    res = R.sector_scan(op, 2.0, theta, 6, 4, seed=0, keys=("res",), power_steps=10)
    assert not res.failed.any()
    assert res.sup("res") <= 1 / math.sin(theta) + 1e-9


def test_semigroup_decay_and_mass():
    grid = disc.build_grid(coeff.DomainSpec.box(2), 32)
    op = disc.identity_operator(grid)
    x, y = grid.coords.T
    s = np.sin(np.pi * x) * np.sin(np.pi * y)
    u = R.semigroup_apply(op, 0.05, s, m=64)
    c = np.argmin(np.abs(x - 0.5) + np.abs(y - 0.5))
    assert (u[c] / s[c]).real == pytest.approx(math.exp(-2 * math.pi ** 2 * 0.05), rel=1e-2)
    gn = disc.build_grid(coeff.DomainSpec.box(2, "none"), 16)
    cols = R.kernel_columns(disc.identity_operator(gn), [0.01, 0.1], np.array([[0.5, 0.5]]))
    for it in range(2):
        assert abs(np.sum(gn.mass * cols.columns[it, 0]) - 1) < 1e-3


def test_kernel_symmetry():
    f = coeff.make_checkerboard([np.eye(2), np.array([[2.0, 0.3], [0.3, 1.0]])], 2, 2)
    grid = disc.build_grid(coeff.DomainSpec.box(2), 16)
    op = disc.assemble(f, grid)
    src = R.nearest_vertices(grid, np.array([[0.3, 0.4], [0.6, 0.7]]))
    cols = R.kernel_columns(op, [0.01], src)
    a = cols.columns[0, 0, src[1]]
    b = cols.columns[0, 1, src[0]]
    assert abs(a - b) <= 1e-10 * abs(a)


def test_gaussian_fit_identity():
    grid = disc.build_grid(coeff.DomainSpec.box(2), 32)
    cols = R.kernel_columns(disc.identity_operator(grid), [0.005, 0.01, 0.02],
                            np.array([[0.5, 0.5]]))
    fit = R.gaussian_fit(cols)
    assert 0.1 <= fit.b <= 0.35
    assert fit.envelope_ok


def test_gaussian_fit_degenerate():
    grid = disc.build_grid(coeff.DomainSpec.box(2), 8)
    cols = R.KernelColumns([0.1, 0.2], np.array([40]), np.zeros((2, 1, grid.n_vertices)),
                           grid.coords, 2)
    with pytest.raises(ValueError, match="degenerate"):
        R.gaussian_fit(cols)


def test_meyers_eps():
    assert R.meyers_eps([2, 3, 4], [True, True, True]) == (2, True)
    assert R.meyers_eps([2, 3, 4], [True, False, True]) == (0, False)


def test_growth_rules():
    assert classify_growth([1.0, 1.05, 1.08]) == "stable"
    assert classify_growth([1.0, 1.2, 1.3]) == "growing"
    assert classify_growth([1.0, 1.0]) == "insufficient"
    assert variation([1.0, 0.9, 0.95]) == pytest.approx(0.1)
