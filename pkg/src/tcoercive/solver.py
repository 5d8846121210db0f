"""Direct solves, error norms and the convergence-study driver."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_t_parts, build_T_system, default_profile, standard_system
from .errors import SingularMatrix, ValidationError
from .fespace import FeSpace, default_rule, shape_grads, shape_values
from .geometry import modified_side

RESIDUAL_TOL = 1e-10


def solve_linear(A, b, tol=RESIDUAL_TOL):
    """Sparse LU solve with a relative residual check."""
    A = sp.csc_matrix(A)
    b = np.asarray(b)
    if A.shape[0] != A.shape[1]:
        raise ValidationError("matrix must be square")
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise SingularMatrix(str(exc)) from exc
    x = lu.solve(b)
    nb = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b)
    if not np.all(np.isfinite(x)) or res > tol * max(nb, 1e-300) and nb > 0:
        raise SingularMatrix(f"relative residual {res / nb:.3e} exceeds {tol:g}")
    return x


def _element_errors(space, u_h, u_ref, grad_ref, rule):
    mesh = space.mesh
    vals = shape_values(space.order, rule.points)
    grads = shape_grads(space.order, rule.points)
    e = np.arange(mesh.n_elements)
    x, jac, det = mesh.map(e, rule.points)
    inv_t = np.linalg.inv(jac).swapaxes(-1, -2)
    g = np.einsum("eqab,qkb->eqka", inv_t, grads)
    c = u_h[space.elem_dofs]
    uh = np.einsum("ek,qk->eq", c, vals)
    guh = np.einsum("ek,eqka->eqa", c, g)
    w = rule.weights * np.abs(det)
    ur = u_ref(x)
    gr = grad_ref(x)
    return w, uh - ur, guh - gr, ur, gr


def error_norms(space, u_h, u_ref, grad_ref, rule=None):
    """Relative L2 error and relative gradient-seminorm error.

    ``u_ref(x)`` and ``grad_ref(x)`` take ``(..., 2)`` point arrays.
    """
    rule = rule or default_rule(space.order, q=2 * space.order + 3)
    w, du, dg, ur, gr = _element_errors(space, np.asarray(u_h), u_ref, grad_ref, rule)
    l2 = math.sqrt(np.sum(w * du ** 2) / np.sum(w * ur ** 2))
    h1 = math.sqrt(np.sum(w * np.sum(dg ** 2, -1)) / np.sum(w * np.sum(gr ** 2, -1)))
    return l2, h1


def reference_field(space, u_h):
    """Callables ``(u, grad u)`` for a finite element solution, for use as a reference."""

    last = [None, None]  # value and gradient are requested for the same points

    def _eval(x):
        if last[0] is not None and last[0] is x:
            return last[1]
        xa = np.asarray(x, dtype=float)
        v, g = space.evaluate_at(u_h, xa.reshape(-1, 2))
        out = v.reshape(xa.shape[:-1]), g.reshape(xa.shape)
        last[0], last[1] = x, out
        return out

    return (lambda x: _eval(x)[0]), (lambda x: _eval(x)[1])


def error_vs_fine(space, u_h, fine_space, u_fine, rule=None):
    u_ref, grad_ref = reference_field(fine_space, u_fine)
    return error_norms(space, u_h, u_ref, grad_ref, rule)


@dataclass
class SolveResult:
    space: FeSpace
    u: np.ndarray
    matrix: sp.csr_matrix
    rhs: np.ndarray
    seconds: float = 0.0


def solve_problem(problem, h, order=1, method="T", subdivisions=3, degree=None, mesh=None):
    """Mesh, assemble and solve one benchmark source problem.

    ``method="T"`` uses the reflection-corrected test functions,
    ``method="standard"`` the plain Galerkin form.
    """
    t0 = time.perf_counter()
    mesh = mesh if mesh is not None else problem.mesh(h)
    space = FeSpace(mesh, order)
    rule = default_rule(order, 1, degree)
    if method == "T":
        sm, spl = problem.sigma.minus, problem.sigma.plus
        side = modified_side(sm, spl)
        parts = assemble_t_parts(space, problem.sigma, problem.f, mesh.tubes,
                                 default_profile(problem.delta), side, rule,
                                 default_rule(order, subdivisions, degree))
        A, b = build_T_system(parts)
    elif method == "standard":
        A, b = standard_system(space, problem.sigma, problem.f, rule)
    else:
        raise ValidationError(f"unknown method {method!r}", "method")
    u = solve_linear(A, b)
    return SolveResult(space, u, A, b, time.perf_counter() - t0)


@dataclass
class StudyRow:
    h: float
    dofs: int
    l2_rel: float
    h1_rel: float
    rate_l2: float = float("nan")
    rate_h1: float = float("nan")
    seconds: float = 0.0


@dataclass
class StudyReport:
    rows: list = field(default_factory=list)

    HEADER = ("h", "dofs", "l2_rel", "h1_rel", "rate_l2", "rate_h1", "seconds")

    def compute_rates(self):
        for prev, row in zip(self.rows[:-1], self.rows[1:]):
            ratio = prev.h / row.h
            row.rate_l2 = math.log(prev.l2_rel / row.l2_rel) / math.log(ratio)
            row.rate_h1 = math.log(prev.h1_rel / row.h1_rel) / math.log(ratio)
        return self

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for r in self.rows:
            w.writerow([repr(r.h), r.dofs, f"{r.l2_rel:.10e}", f"{r.h1_rel:.10e}",
                        f"{r.rate_l2:.6f}", f"{r.rate_h1:.6f}", f"{r.seconds:.3f}"])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def run_convergence_study(problem, hs, order=1, method="T", subdivisions=3, degree=None,
                          reference=None):
    """Errors and observed rates for a sequence of mesh sizes.

    ``reference`` is ``(u, grad_u)``; when omitted the problem's exact
    ``u``/``grad_u`` are used.  Rates are ``log(e_prev / e) / log(h_prev / h)``,
    i.e. ``log2`` ratios for halved mesh sizes.
    """
    if reference is None:
        reference = (problem.u, problem.grad_u)
    report = StudyReport()
    for h in hs:
        res = solve_problem(problem, h, order, method, subdivisions, degree)
        l2, h1 = error_norms(res.space, res.u, *reference)
        report.rows.append(StudyRow(float(h), res.space.ndofs, l2, h1, seconds=res.seconds))
    return report.compute_rates()


def smallest_singular_value(A, tol=1e-8):
    """Smallest singular value of a sparse square matrix.

    Computed as ``1 / sqrt(lambda_max((A^T A)^{-1}))`` with one LU
    factorization and Lanczos iterations.
    """
    A = sp.csc_matrix(A)
    lu = spla.splu(A)
    n = A.shape[0]

    def apply(v):
        y = lu.solve(v)
        return lu.solve(y, trans="T")

    op = spla.LinearOperator((n, n), matvec=apply, dtype=float)
    v0 = np.ones(n) / math.sqrt(n)
    lam = spla.eigsh(op, k=1, which="LM", tol=tol, v0=v0, return_eigenvectors=False)
    return 1.0 / math.sqrt(float(lam[0]))
