import math
from fractions import Fraction

import numpy as np
import pytest

from pelliptic import coeff, disc, verify as V


@pytest.fixture(scope="module")
def op3():
    f = coeff.make_scalar_rotation(math.pi / 3, 3)
    return disc.assemble(f, disc.build_grid(coeff.DomainSpec.box(3, "x0-"), 8))


def test_ladder_d3():
    lad = V.moser_ladder(18, 3)
    assert lad.exponents == [2, 6, 18, 54]
    assert all(isinstance(e, Fraction) for e in lad.exponents)
    assert lad.n0 == 2
    lad = V.moser_ladder(Fraction(5), 3)
    assert lad.exponents == [2, 5, 15]
    a = math.sqrt(3)
    assert lad.c == pytest.approx(1 / (2 * a) / a)
    with pytest.raises(ValueError):
        V.moser_ladder(3, 2)


def test_local_solution_support(op3):
    sol = V.make_local_solution(op3, 1.0, [0.5, 0.5, 0.5], 0.2, seed=0)
    assert not sol.degenerate
    assert sol.residual < 1e-10
    with pytest.raises(ValueError, match="too small"):
        V.make_local_solution(op3, 1.0, [0.5, 0.5, 0.5], 0.05)


def test_rh_constant_function(op3):
    u = np.ones(op3.grid.n_vertices, dtype=complex)
    sol = V.LocalSolution(u, 1.0, np.array([0.5, 0.5, 0.5]), 0.25, u, 0.6, op3)
    e = V.rh_check(sol, 3.0, 0.5)
    assert e.mean_ratio == pytest.approx(1.0, abs=1e-14)
    assert e.q == 9.0


def test_rh_degenerate(op3):
    u = np.zeros(op3.grid.n_vertices, dtype=complex)
    sol = V.LocalSolution(u, 1.0, np.array([0.5, 0.5, 0.5]), 0.25, u, 0.6, op3)
    assert V.rh_check(sol, 3.0, 0.5).degenerate


def test_rh_d2_substitutes_exponent():
    op = disc.identity_operator(disc.build_grid(coeff.DomainSpec.box(2), 16))
    sol = V.make_local_solution(op, 1.0, [0.5, 0.5], 0.15)
    e = V.rh_check(sol, 3.0, 0.5, q=8.0)
    assert e.q_substituted and e.q == 8.0


def test_rh_centers_interleave():
    pts, bd = V.rh_centers(6, 3, seed=1)
    assert list(bd) == [False, True] * 3
    for x, b in zip(pts, bd):
        on_face = np.any((x == 0) | (x == 1))
        assert on_face == b


def test_moser_chain_product(op3):
    sol = V.make_local_solution(op3, 1.0, [0.5, 0.5, 0.5], 0.25, seed=2)
    rep = V.moser_chain(sol, 3)
    assert rep.chained == pytest.approx(rep.product, rel=1e-12)


def test_caccioppoli_identity_interior():
    op = disc.identity_operator(disc.build_grid(coeff.DomainSpec.box(3), 8))
    sol = V.make_local_solution(op, 1.0, [0.5, 0.5, 0.5], 0.15, seed=3)
    rep = V.caccioppoli_check(sol)
    assert np.isfinite(rep.empirical)
    assert rep.empirical <= rep.theory_constant


def test_grad_rh_runs(op3):
    sol = V.make_local_solution(op3, 1.0, [0.5, 0.5, 0.5], 0.2, seed=4)
    rep = V.grad_rh_check(sol)
    assert rep.degenerate or (np.isfinite(rep.empirical) and rep.empirical > 0)


def test_shen_hypothesis():
    f = coeff.make_scalar_rotation(math.pi / 3, 3)
    op = disc.assemble(f, disc.build_grid(coeff.DomainSpec.box(3, "x0-"), 16))
    rep = V.shen_hypothesis_check(op, 3.0, 1.0, trials=4, seed=0)
    assert rep.alpha2 == pytest.approx(1.5 * rep.alpha1)
    assert rep.summary()["n"] >= 1


def test_rh_study_small():
    spec = coeff.DomainSpec.box(3, "x0-")
    f = coeff.make_scalar_rotation(math.pi / 3, 3)
    study = V.rh_study(f, spec, [8, 16], 3.0, r=0.25, c=0.5, trials=3, seed=0)
    assert study.ratios().shape == (3, 2)
    assert len(study.variations()) == 3
