import math

import numpy as np
import pytest
import scipy.linalg as sla
import sympy
from scipy import special

from tcoercive.assembly import default_profile
from tcoercive.errors import AtPole, RankAmbiguity, ValidationError
from tcoercive.evp import (ContourConfig, LorentzLaw, beyn_solve, build_pencil,
                           cluster_eigenvalues, disc_reference_eigenvalues, dispersion_function,
                           expand_multiplicity, law_derivative, law_eval)
from tcoercive.fespace import FeSpace
from tcoercive.mesh import gen_disc_in_disc

LAW = LorentzLaw.single_resonance(200.0)


def test_single_resonance_embedding_symbolic():
    w = sympy.symbols("omega", positive=True)
    c2, w1 = 200, 0
    general = 1 / (1 * (1 + c2 / (w1 ** 2 - w ** 2)))
    assert sympy.simplify(general - w ** 2 / (w ** 2 - 200)) == 0
    for x in (3.5, 4.0, 4.6, 20.0):
        assert law_eval(LAW, x, "minus")[0] == pytest.approx(x * x / (x * x - 200.0), rel=1e-14)
    assert law_eval(LAW, 4.0, "plus") == (1.0, 1.0)
    assert law_eval(LAW, 4.0, "minus")[1] == 1.0


def test_law_derivative_fd():
    h = 1e-6
    for x in (3.7, 4.2):
        fd = (law_eval(LAW, x + h, "minus")[0] - law_eval(LAW, x - h, "minus")[0]) / (2 * h)
        assert law_derivative(LAW, x, "minus")[0] == pytest.approx(fd, rel=1e-7)


def test_law_poles_and_validation():
    with pytest.raises(AtPole):
        law_eval(LorentzLaw(sigma_poles=((1.0, 2.0),)), 2.0, "minus")
    with pytest.raises(AtPole):
        law_eval(LAW, math.sqrt(200.0), "minus")
    with pytest.raises(ValidationError):
        LorentzLaw(sigma0_plus=0.0)
    with pytest.raises(ValidationError):
        ContourConfig(radius=-1.0)


def test_oracle_one_sign_bessel_zeros():
    roots = disc_reference_eigenvalues(LorentzLaw(), 1.0, 2.0, modes=[0, 1], interval=(0.5, 2.5), samples=400)
    j01 = special.jn_zeros(0, 1)[0]
    j11 = special.jn_zeros(1, 1)[0]
    assert roots[0] == (0, pytest.approx(j01 / 2, abs=1e-12))
    assert (1, pytest.approx(j11 / 2, abs=1e-12)) in roots
    assert roots[0][1] == pytest.approx(1.2024, abs=1e-4)


def test_oracle_dispersive_disc_roots():
    roots = disc_reference_eigenvalues(LAW)
    ws = [w for _, w in roots]
    assert [m for m, _ in roots] == [4, 5, 0, 1]
    assert np.allclose(ws, [3.40208, 4.03427, 4.49123, 4.53873], atol=1e-5)
    for m, w in roots:
        assert abs(dispersion_function(LAW, m, w)) < 1e-9
    assert len(expand_multiplicity(roots)) == 7


def test_cluster_eigenvalues():
    means, counts = cluster_eigenvalues([4.0 + 0j, 3.0, 4.001, 3.0005])
    assert counts == [2, 2]
    assert means[0] == pytest.approx(3.00025)
    assert cluster_eigenvalues([]) == ([], [])


@pytest.fixture(scope="module")
def small_pencil():
    mesh = gen_disc_in_disc(1.0, 2.0, 0.35, 0.2)
    space = FeSpace(mesh, 1)
    assert len(space.free_dofs) <= 500
    return space, build_pencil(space, LorentzLaw(), method="standard")


def test_beyn_linear_pencil_vs_dense(small_pencil):
    space, pencil = small_pencil
    K = pencil.G[1].toarray() + pencil.G[-1].toarray()
    M = pencil.M[1].toarray() + pencil.M[-1].toarray()
    lam = np.sqrt(sla.eigh(K, M, eigvals_only=True))
    cc = ContourConfig(center=2.3, radius=0.75, nodes=64, probes=20)
    inside = lam[np.abs(lam - 2.3) < 0.75]
    assert np.min(np.abs(np.abs(lam - 2.3) - 0.75)) > 0.05
    res = beyn_solve(pencil, cc, seed=1)
    got = np.sort(res.values.real)
    assert len(got) == len(inside) > 0
    assert np.max(np.abs(got - inside)) <= 1e-8
    assert np.max(np.abs(res.values.imag)) <= 1e-8
    assert all(p.residual <= 1e-8 for p in res.pairs)


def test_beyn_empty_contour(small_pencil):
    _, pencil = small_pencil
    res = beyn_solve(pencil, ContourConfig(center=0.3, radius=0.2, nodes=32, probes=5))
    assert res.rank == 0 and res.pairs == []


def test_beyn_rank_saturation(small_pencil):
    _, pencil = small_pencil
    with pytest.raises(RankAmbiguity):
        beyn_solve(pencil, ContourConfig(center=2.3, radius=0.75, nodes=64, probes=2))


def test_beyn_seed_reproducible(small_pencil):
    _, pencil = small_pencil
    cc = ContourConfig(center=2.3, radius=0.75)
    a = beyn_solve(pencil, cc, seed=4).values
    b = beyn_solve(pencil, cc, seed=4).values
    assert np.array_equal(a, b)


def test_t_pencil_blocks_are_signed():
    mesh = gen_disc_in_disc(1.0, 2.0, 0.35, 0.2)
    space = FeSpace(mesh, 1)
    p = build_pencil(space, LAW, mesh.tubes, default_profile(0.2), "minus", "T")
    one = np.ones(len(space.free_dofs))
    # plus block is the plain positive mass on the free DOFs
    assert one @ p.M[1] @ one > 0
    with pytest.raises(ValidationError):
        build_pencil(space, LAW, method="galerkin")
