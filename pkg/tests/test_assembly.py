import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.integrate import quad

from tcoercive.assembly import (Coefficient, TParts, apply_dirichlet, assemble_load, assemble_mass,
                                assemble_reflected_load, assemble_reflection, assemble_stiffness,
                                assemble_t_parts, build_T_system, default_profile,
                                reflection_norm_estimate, side_code)
from tcoercive.errors import DimensionMismatch, ValidationError
from tcoercive.fespace import FeSpace, default_rule
from tcoercive.geometry import Segment2D, TubularNeighborhood
from tcoercive.mesh import Mesh, gen_disc_in_disc

DELTA = 0.4


def strip_mesh(nx=10, ny=20, delta=DELTA):
    """``[0, 2] x [-1, 1]`` split by the flat interface ``y = 0``; minus above.

    The grid is symmetric under ``y -> -y`` (diagonals flipped on the lower
    half), so reflected P1 functions stay in the space.
    """
    xs = np.linspace(0.0, 2.0, nx + 1)
    ys = np.linspace(-1.0, 1.0, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    vid = lambda i, j: i * (ny + 1) + j
    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if ys[j] >= 0:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    tris = np.array(tris)
    cy = verts[tris][:, :, 1].mean(1)
    region = np.where(cy > 0, -1, 1)
    patch = np.where(np.abs(cy) < delta, 0, -1)
    on_bd = (np.isclose(verts[:, 0], 0) | np.isclose(verts[:, 0], 2)
             | np.isclose(verts[:, 1], -1) | np.isclose(verts[:, 1], 1))
    tube = TubularNeighborhood(Segment2D((0.0, 0.0), (2.0, 0.0), True), delta)
    return Mesh(verts, tris, region, patch, np.flatnonzero(on_bd), 2.0 / nx, [tube])


@pytest.fixture(scope="module")
def strip():
    m = strip_mesh()
    return m, FeSpace(m, 1)


@pytest.fixture(scope="module")
def disc_space():
    m = gen_disc_in_disc(1.0, 2.0, 0.2, 0.2)
    return FeSpace(m, 1)


PROFILE = default_profile(DELTA)
INT_CHI = quad(lambda t: PROFILE.value(t), 0, DELTA, points=[DELTA / 2])[0]


def test_cutoff_integral_closed_form():
    assert INT_CHI == pytest.approx(0.75 * DELTA, abs=1e-14)


def test_area_oracles(disc_space):
    M = assemble_mass(disc_space)
    one = np.ones(disc_space.ndofs)
    assert one @ M @ one == pytest.approx(4 * math.pi, rel=1e-5)
    Mm = assemble_mass(disc_space, region_filter="minus_only")
    Mp = assemble_mass(disc_space, region_filter="plus_only")
    assert one @ Mm @ one == pytest.approx(math.pi, rel=1e-5)
    assert abs((Mm + Mp - M)).max() < 1e-14
    assert one @ assemble_load(disc_space, lambda x, r: np.ones(x.shape[:-1])) == pytest.approx(one @ M @ one)


def test_stiffness_kernel_and_symmetry(disc_space):
    K = assemble_stiffness(disc_space, Coefficient(-1.0, 3.0))
    assert abs(K - K.T).max() == 0.0
    assert np.abs(K @ np.ones(disc_space.ndofs)).max() < 1e-12
    x = disc_space.dof_coordinates()[:, 0]
    # int sigma |grad x|^2 = -pi + 3 * 3 pi; P1 on curved cells only interpolates x
    assert x @ K @ x == pytest.approx(8 * math.pi, rel=2e-3)


def test_filters_and_side_codes(disc_space):
    with pytest.raises(ValidationError):
        assemble_mass(disc_space, region_filter="neither")
    assert side_code("minus") == -1 and side_code(1) == 1
    with pytest.raises(ValidationError):
        side_code("left")


def test_strip_reflection_stiffness_oracle(strip):
    m, space = strip
    B2 = assemble_reflection(space, Coefficient(1.0, 1.0), m.tubes, PROFILE, "stiffness",
                             default_rule(1, n=1, q=4), "minus")
    x = m.vertices[:, 0]
    y = m.vertices[:, 1]
    # u = v = x: integrand chi, over [0, 2] x [0, delta]
    assert x @ B2 @ x == pytest.approx(2 * INT_CHI, abs=1e-13)
    # u = v = y: d/dy (-chi y) integrates to -[chi y] = 0
    assert y @ B2 @ y == pytest.approx(0.0, abs=1e-13)
    assert y @ B2 @ x == pytest.approx(0.0, abs=1e-13)
    # coefficient on the minus side only enters
    B2s = assemble_reflection(space, Coefficient(2.5, 7.0), m.tubes, PROFILE, "stiffness",
                              default_rule(1, n=1, q=4), "minus")
    assert abs(B2s - 2.5 * B2).max() < 1e-13


def test_strip_reflection_mass_oracle(strip):
    m, space = strip
    M2 = assemble_reflection(space, 1.0, m.tubes, PROFILE, "mass", default_rule(1, n=1, q=5), "minus")
    one = np.ones(space.ndofs)
    assert one @ M2 @ one == pytest.approx(2 * INT_CHI, abs=1e-13)
    x = m.vertices[:, 0]
    # int x * chi over the band half
    assert x @ M2 @ one == pytest.approx(2.0 * INT_CHI, abs=1e-13)


def test_strip_plus_side_is_mirror_image(strip):
    m, space = strip
    rule = default_rule(1, n=1, q=4)
    Bm = assemble_reflection(space, 1.0, m.tubes, PROFILE, "stiffness", rule, "minus")
    Bp = assemble_reflection(space, 1.0, m.tubes, PROFILE, "stiffness", rule, "plus")
    # permutation of the vertex mirror y -> -y
    ny = 20
    perm = np.array([i * (ny + 1) + (ny - j) for i in range(11) for j in range(ny + 1)])
    P = sp.csr_matrix((np.ones(len(perm)), (np.arange(len(perm)), perm)))
    assert abs(P @ Bm @ P.T - Bp).max() < 1e-12


def test_scatter_count(strip):
    m, space = strip
    rule = default_rule(1, n=3)
    _, count = assemble_reflection(space, 1.0, m.tubes, PROFILE, "stiffness", rule, "minus",
                                   return_count=True)
    src = np.count_nonzero((m.patch == 0) & (m.region == -1))
    # every band element lies inside |t| < delta_outer
    assert count == src * len(rule.weights)


def test_reflected_load_change_of_variables(strip):
    m, space = strip
    rule = default_rule(1, n=1, q=6)
    one = np.ones(space.ndofs)
    f = lambda x, r: x[..., 1] + 0.0 * r
    b = assemble_reflected_load(space, f, m.tubes, PROFILE, rule, "minus")
    exact = 2.0 * quad(lambda t: t * PROFILE.value(t), 0, DELTA, points=[DELTA / 2])[0]
    assert one @ b == pytest.approx(exact, abs=1e-13)
    # region tag handed to f is the modified side
    seen = []
    assemble_reflected_load(space, lambda x, r: seen.append(np.unique(r)) or np.ones(x.shape[:-1]),
                            m.tubes, PROFILE, rule, "minus")
    assert all(np.array_equal(s, [-1]) for s in seen)


def test_quadrature_cauchy_in_subdivision(disc_space):
    tubes = disc_space.mesh.tubes
    prof = default_profile(0.2)
    mats = {n: assemble_reflection(disc_space, Coefficient(1.0, 3.0), tubes, prof, "stiffness",
                                   default_rule(1, n=n)) for n in (1, 3, 6)}
    d63 = abs(mats[6] - mats[3]).max()
    d31 = abs(mats[3] - mats[1]).max()
    assert d63 <= d31


def test_no_tubes_gives_abs_laplacian(disc_space):
    sigma = Coefficient(-1.0, 3.0)
    f = lambda x, r: np.ones(x.shape[:-1])
    parts = assemble_t_parts(disc_space, sigma, f, [], None)
    assert parts.B2.nnz == 0 and np.all(parts.f2 == 0)
    K = assemble_stiffness(disc_space, sigma.abs())
    assert abs(parts.B1 - K).max() == 0.0


def test_t_system_sparsity_and_dimensions(disc_space):
    sigma = Coefficient(-1.0, 3.0)
    f = lambda x, r: np.ones(x.shape[:-1])
    parts = assemble_t_parts(disc_space, sigma, f, disc_space.mesh.tubes, default_profile(0.2))
    B, rhs = build_T_system(parts)
    assert B.nnz <= parts.B1.nnz + parts.B2.nnz + len(parts.dirichlet)
    d = parts.dirichlet
    assert np.all(rhs[d] == 0.0)
    assert np.all(B.diagonal()[d] == 1.0)
    bad = TParts(parts.B1, parts.B2, parts.f1[:-1], parts.f2, d)
    with pytest.raises(DimensionMismatch):
        build_T_system(bad)


def test_apply_dirichlet_lifting():
    A = sp.csr_matrix(np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]))
    B, b = apply_dirichlet(A, np.zeros(3), [0, 2], [1.0, 3.0])
    x = np.linalg.solve(B.toarray(), b)
    assert np.allclose(x, [1.0, 2.0, 3.0])


def test_reflection_norm_flat_is_one(strip):
    m, space = strip
    assert reflection_norm_estimate(space, m.tubes, "plus") == pytest.approx(1.0, abs=1e-10)


def test_reflection_norm_disc_below_bound(disc_space):
    val = reflection_norm_estimate(disc_space, disc_space.mesh.tubes, "plus")
    assert 1.0 < val <= 1.5 + 0.05
