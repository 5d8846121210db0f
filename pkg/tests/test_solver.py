import numpy as np
import pytest
import scipy.sparse as sp

from tcoercive.assembly import Coefficient
from tcoercive.errors import SingularMatrix
from tcoercive.fespace import FeSpace
from tcoercive.problems import DiscProblem, RoundedTriangleProblem, auto_delta
from tcoercive.solver import (StudyReport, StudyRow, error_norms, reference_field,
                              run_convergence_study, smallest_singular_value, solve_linear,
                              solve_problem)


def test_identity_and_zero_rhs():
    b = np.arange(5.0)
    assert np.array_equal(solve_linear(sp.identity(5, format="csr"), b), b)
    A = sp.diags([2.0] * 4) - sp.diags([1.0] * 3, 1) - sp.diags([1.0] * 3, -1)
    assert np.array_equal(solve_linear(A, np.zeros(4)), np.zeros(4))


def test_singular_matrix_raises():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularMatrix):
        solve_linear(A, np.array([1.0, 0.0]))


def test_disc_residual():
    res = solve_problem(DiscProblem(), 0.1, 1)
    r = np.linalg.norm(res.matrix @ res.u - res.rhs) / np.linalg.norm(res.rhs)
    assert r <= 1e-10


def test_manufactured_source_sign():
    # -div(sigma grad u) at r = 0.5 on the minus side: -(-1)(9 * 0.5 - 6) = -1.5
    p = DiscProblem()
    assert p.f(np.array([0.5, 0.0]), -1) == pytest.approx(-1.5)
    assert p.u(np.array([2.0, 0.0])) == pytest.approx(0.0)
    # radial derivative vanishes at the interface, so the flux condition holds for any sigma
    assert np.allclose(p.grad_u(np.array([[1.0, 0.0], [0.0, 1.0]])), 0.0)


def test_error_norms_of_interpolant():
    p = DiscProblem()
    m = p.mesh(0.2)
    space = FeSpace(m, 2)
    u = space.interpolate(p.u)
    l2, h1 = error_norms(space, u, p.u, p.grad_u)
    assert l2 < 1e-3 and h1 < 1e-2
    l2z, h1z = error_norms(space, np.zeros(space.ndofs), p.u, p.grad_u)
    assert l2z == pytest.approx(1.0) and h1z == pytest.approx(1.0)


def test_one_sign_control_problem_optimal_rates():
    p = DiscProblem(sigma=Coefficient(1.0, 1.0))
    rep = run_convergence_study(p, [0.2, 0.1, 0.05], 1, method="standard")
    assert rep.rows[-1].rate_h1 == pytest.approx(1.0, abs=0.15)
    assert rep.rows[-1].rate_l2 == pytest.approx(2.0, abs=0.2)


def test_t_method_matches_standard_on_disc():
    p = DiscProblem()
    t = solve_problem(p, 0.1, 1, "T")
    s = solve_problem(p, 0.1, 1, "standard")
    l2 = error_norms(t.space, t.u, *reference_field(s.space, s.u))[0]
    assert l2 < 0.02


def test_study_report_rates_and_csv():
    rep = StudyReport([StudyRow(0.2, 10, 0.04, 0.2), StudyRow(0.1, 40, 0.01, 0.1)]).compute_rates()
    assert rep.rows[1].rate_l2 == pytest.approx(2.0)
    assert rep.rows[1].rate_h1 == pytest.approx(1.0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "h,dofs,l2_rel,h1_rel,rate_l2,rate_h1,seconds"
    assert lines[2].split(",")[4] == "2.000000"


def test_smallest_singular_value_vs_dense():
    A = sp.random(60, 60, density=0.2, random_state=1) + sp.identity(60) * 3.0
    dense = np.linalg.svd(A.toarray(), compute_uv=False)[-1]
    assert smallest_singular_value(A) == pytest.approx(dense, rel=1e-6)


def test_auto_delta_and_triangle_problem():
    p = RoundedTriangleProblem()
    mod, b2, k = p.check()
    assert mod == "minus" and b2 < k
    d = auto_delta(p.patches(), -1.0, 10.0)
    assert d == pytest.approx(0.95 * (10 ** 0.5 - 1) / (10 ** 0.5 + 1), rel=0.05)
    assert auto_delta(DiscProblem().patches(), -1.0, 3.0) == pytest.approx(
        0.95 * (3 ** 0.5 - 1) / (3 ** 0.5 + 1), rel=0.05)


def test_assembly_is_deterministic():
    p = DiscProblem()
    a = solve_problem(p, 0.2, 2)
    b = solve_problem(p, 0.2, 2)
    assert (a.matrix != b.matrix).nnz == 0
    assert np.array_equal(a.u, b.u)
