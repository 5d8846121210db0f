from fractions import Fraction

import numpy as np
import pytest
import sympy

from tcoercive.errors import ValidationError
from tcoercive.fespace import (REF_NODES_P2, FeSpace, gauss_triangle, rule_points, shape_eval,
                               shape_grads, shape_values)
from tcoercive.mesh import gen_disc_in_disc
from tcoercive.problems import disc_u_ref

RNG = np.random.default_rng(7)


def _ref_points(n):
    y = RNG.dirichlet([1, 1, 1], n)[:, 1:]
    return y


@pytest.mark.parametrize("order,nodes", [(1, REF_NODES_P2[:3]), (2, REF_NODES_P2)])
def test_kronecker_property(order, nodes):
    assert np.allclose(shape_values(order, nodes), np.eye(len(nodes)), atol=1e-15)


def test_p1_vertex0_value():
    v, g = shape_eval(1, 0, np.array([0.0, 0.0]))
    assert v == 1.0 and np.allclose(g, [-1.0, -1.0])


@pytest.mark.parametrize("order", [1, 2])
def test_partition_of_unity(order):
    y = _ref_points(50)
    assert np.allclose(shape_values(order, y).sum(-1), 1.0, atol=1e-14)
    assert np.allclose(shape_grads(order, y).sum(-2), 0.0, atol=1e-13)


def test_p2_gradients_vs_central_differences():
    y = _ref_points(40) * 0.9 + 0.03
    h = 1e-6
    g = shape_grads(2, y)
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        fd = (shape_values(2, y + e) - shape_values(2, y - e)) / (2 * h)
        assert np.allclose(g[..., d], fd, atol=1e-8)


def _exact_monomial(a, b):
    x, y = sympy.symbols("x y")
    val = sympy.integrate(sympy.integrate(x ** a * y ** b, (y, 0, 1 - x)), (x, 0, 1))
    return Fraction(int(val.p), int(val.q))


@pytest.mark.parametrize("n", [1, 2, 3, 5])
@pytest.mark.parametrize("q", [3, 4, 6])
def test_x2y_exact(n, q):
    r = rule_points(n, q)
    exact = float(_exact_monomial(2, 1))  # 1/60
    val = np.sum(r.weights * r.points[:, 0] ** 2 * r.points[:, 1])
    assert abs(val - exact) <= 1e-15


@pytest.mark.parametrize("q", range(1, 9))
def test_gauss_exactness_all_monomials(q):
    pts, w = gauss_triangle(q)
    for a in range(q + 1):
        for b in range(q + 1 - a):
            exact = float(_exact_monomial(a, b))
            assert abs(np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b) - exact) < 1e-15


def test_subdivided_rule_counts_and_weights():
    base = rule_points(1, 5)
    r = rule_points(3, 5)
    assert len(r) == 9 * len(base)
    assert np.all(r.weights > 0)
    assert r.weights.sum() == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(rule_points(1, 5).points, gauss_triangle(5)[0])
    inside = (r.points[:, 0] > 0) & (r.points[:, 1] > 0) & (r.points.sum(1) < 1)
    assert inside.all()


def test_rule_errors():
    with pytest.raises(ValidationError):
        rule_points(0, 3)
    with pytest.raises(ValidationError):
        shape_values(3, np.zeros(2))


@pytest.fixture(scope="module")
def disc_mesh():
    return gen_disc_in_disc(1.0, 2.0, 0.2, 0.2)


@pytest.mark.parametrize("order", [1, 2])
def test_dof_numbering_bijection(disc_mesh, order):
    sp = FeSpace(disc_mesh, order)
    used = np.unique(sp.elem_dofs)
    assert np.array_equal(used, np.arange(sp.ndofs))
    expected = len(disc_mesh.vertices) + (len(disc_mesh.edges) if order == 2 else 0)
    assert sp.ndofs == expected


@pytest.mark.parametrize("order", [1, 2])
def test_dirichlet_set_is_boundary(disc_mesh, order):
    sp = FeSpace(disc_mesh, order)
    r = np.hypot(*sp.dof_coordinates()[sp.dirichlet_dofs].T)
    assert np.allclose(r, 2.0, atol=1e-12)
    r_all = np.hypot(*sp.dof_coordinates().T)
    assert np.count_nonzero(np.abs(r_all - 2.0) < 1e-9) == len(sp.dirichlet_dofs)


def test_interpolate_constant_and_linear(disc_mesh):
    for order in (1, 2):
        sp = FeSpace(disc_mesh, order)
        assert np.array_equal(sp.interpolate(lambda x: np.ones(len(x))), np.ones(sp.ndofs))
    sp = FeSpace(disc_mesh, 1)
    f = lambda x: 2.0 * x[..., 0] - 3.0 * x[..., 1] + 0.5
    u = sp.interpolate(f)
    cent = disc_mesh.centroids()
    e = np.arange(disc_mesh.n_elements)
    # centroids of affine elements are reference (1/3, 1/3)
    aff = ~disc_mesh.curved
    vals, _ = sp.evaluate(u, e[aff], np.full((aff.sum(), 2), 1 / 3))
    assert np.max(np.abs(vals - f(cent[aff]))) < 1e-13


def test_interpolate_reference_solution_at_origin(disc_mesh):
    sp = FeSpace(disc_mesh, 1)
    u = sp.interpolate(lambda x: disc_u_ref(np.hypot(x[..., 0], x[..., 1])))
    origin = np.flatnonzero(np.all(disc_mesh.vertices == 0.0, axis=1))[0]
    assert u[origin] == -2.0


def test_interpolation_error_rates():
    f = lambda x: np.sin(x[..., 0]) * np.cos(2 * x[..., 1])
    for order, expected in ((1, 2.0), (2, 3.0)):
        errs = []
        for h in (0.2, 0.1):
            m = gen_disc_in_disc(1.0, 2.0, h, 0.2)
            sp = FeSpace(m, order)
            u = sp.interpolate(f)
            r = rule_points(1, 7)
            x, _, det = m.map(np.arange(m.n_elements), r.points)
            uh = np.einsum("ek,qk->eq", u[sp.elem_dofs], shape_values(order, r.points))
            errs.append(np.sqrt(np.sum(r.weights * det * (uh - f(x)) ** 2)))
        assert np.log2(errs[0] / errs[1]) == pytest.approx(expected, abs=0.3)
