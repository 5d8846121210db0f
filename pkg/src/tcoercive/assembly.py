"""Sparse assembly of the standard and the reflection (T-transformed) forms.

Source callables ``f(x, region)`` receive an ``(..., 2)`` point array and a
matching integer array of region tags (``-1`` or ``+1``), so piecewise data
never has to guess the side of a point from its coordinates.

Matrices use the convention ``A[test, trial]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .cutoff import CutoffProfile, chi_gradient_from_coords
from .errors import DimensionMismatch, ValidationError
from .fespace import default_rule, shape_grads, shape_values

MINUS, PLUS = -1, 1
CHUNK = 20000
POINT_CHUNK = 50000

_FILTERS = {"all": None, "plus_only": PLUS, "minus_only": MINUS}


def side_code(side):
    """Map ``"minus"``/``"plus"``/``-1``/``+1`` to the integer region tag."""
    if side in ("minus", MINUS):
        return MINUS
    if side in ("plus", PLUS):
        return PLUS
    raise ValidationError(f"unknown side {side!r}")


@dataclass(frozen=True)
class Coefficient:
    """Piecewise constant coefficient, one value per region."""

    minus: float
    plus: float

    @classmethod
    def constant(cls, value):
        return cls(value, value)

    def abs(self):
        return Coefficient(abs(self.minus), abs(self.plus))

    def sign(self):
        return Coefficient(float(np.sign(self.minus)), float(np.sign(self.plus)))

    def scaled(self, s):
        return Coefficient(s * self.minus, s * self.plus)

    def on(self, region):
        region = np.asarray(region)
        return np.where(region < 0, self.minus, self.plus)


def _as_coefficient(coeff):
    if isinstance(coeff, Coefficient):
        return coeff
    return Coefficient.constant(float(coeff))


def _filtered_elements(mesh, region_filter):
    if region_filter not in _FILTERS:
        raise ValidationError(f"unknown region filter {region_filter!r}")
    tag = _FILTERS[region_filter]
    if tag is None:
        return np.arange(mesh.n_elements)
    return np.flatnonzero(mesh.region == tag)


def _physical_grads(jac, ref_grads):
    """``J^{-T} grad_ref`` for arrays of Jacobians ``(..., 2, 2)``."""
    inv_t = np.linalg.inv(jac).swapaxes(-1, -2)
    return np.einsum("...ab,...kb->...ka", inv_t, ref_grads)


def _coo_to_csr(rows, cols, vals, n):
    return sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n))


def _standard_form(space, coeff, region_filter, rule, kind):
    mesh = space.mesh
    coeff = _as_coefficient(coeff)
    rule = rule or default_rule(space.order)
    elems = _filtered_elements(mesh, region_filter)
    n = space.ndofs
    out = sp.csr_matrix((n, n))
    vals_ref = shape_values(space.order, rule.points)  # (Q, k)
    grads_ref = shape_grads(space.order, rule.points)  # (Q, k, 2)
    for start in range(0, len(elems), CHUNK):
        e = elems[start:start + CHUNK]
        _, jac, det = mesh.map(e, rule.points)
        wd = rule.weights * np.abs(det) * coeff.on(mesh.region[e])[:, None]
        if kind == "stiffness":
            g = _physical_grads(jac, grads_ref[None])
            local = np.einsum("eq,eqid,eqjd->eij", wd, g, g)
        else:
            local = np.einsum("eq,qi,qj->eij", wd, vals_ref, vals_ref)
        dofs = space.elem_dofs[e]
        rows = np.repeat(dofs[:, :, None], space.nloc, axis=2)
        cols = np.repeat(dofs[:, None, :], space.nloc, axis=1)
        out = out + _coo_to_csr(rows, cols, local, n)
    out = 0.5 * (out + out.T)
    out = out.tocsr()
    out.sort_indices()
    return out


def assemble_stiffness(space, coeff=1.0, region_filter="all", rule=None):
    """Weighted stiffness matrix ``int coeff grad(trial) . grad(test)``."""
    return _standard_form(space, coeff, region_filter, rule, "stiffness")


def assemble_mass(space, coeff=1.0, region_filter="all", rule=None):
    """Weighted mass matrix ``int coeff trial * test``."""
    return _standard_form(space, coeff, region_filter, rule, "mass")


def assemble_load(space, f, rule=None):
    """Load vector ``int f(x, region) * test``."""
    mesh = space.mesh
    rule = rule or default_rule(space.order)
    vals_ref = shape_values(space.order, rule.points)
    b = np.zeros(space.ndofs)
    for start in range(0, mesh.n_elements, CHUNK):
        e = np.arange(start, min(start + CHUNK, mesh.n_elements))
        x, _, det = mesh.map(e, rule.points)
        reg = np.broadcast_to(mesh.region[e][:, None], det.shape)
        fx = np.asarray(f(x, reg), dtype=float) * np.ones(det.shape)
        local = np.einsum("eq,qi->ei", rule.weights * np.abs(det) * fx, vals_ref)
        b += np.bincount(space.elem_dofs[e].ravel(), local.ravel(), minlength=space.ndofs)
    return b


def _tube_elements(mesh, tubes, region):
    if len(tubes) and np.any(mesh.patch >= len(tubes)):
        raise ValidationError("mesh carries more band patches than tubes were given")
    return np.flatnonzero((mesh.patch >= 0) & (mesh.region == region))


def assemble_reflected_load(space, f, tubes, profile, rule=None, side="minus"):
    """Pulled-back load ``int_{band, side} f chi (test o phi)``.

    Evaluated by the change of variables ``x = phi(y)`` over the band
    elements of the opposite side, so the integrand is
    ``f(phi(y), side) * chi(y) * |det D phi(y)| * test(y)``; no point
    location is needed.  ``side`` is the modified side.
    """
    mesh = space.mesh
    m = side_code(side)
    rule = rule or default_rule(space.order)
    vals_ref = shape_values(space.order, rule.points)
    b = np.zeros(space.ndofs)
    elems = _tube_elements(mesh, tubes, -m)
    for l, tube in enumerate(tubes):
        el = elems[mesh.patch[elems] == l]
        for start in range(0, len(el), CHUNK):
            e = el[start:start + CHUNK]
            y, _, det = mesh.map(e, rule.points)
            foot, t, n, _ = tube.patch.project(y)
            z = foot - t[..., None] * n
            dphi = tube.jacobian(y)
            jdet = np.abs(np.linalg.det(dphi))
            fz = np.asarray(f(z, np.full(t.shape, m)), dtype=float) * np.ones(t.shape)
            dens = fz * profile.value(t) * jdet
            local = np.einsum("eq,qi->ei", rule.weights * np.abs(det) * dens, vals_ref)
            b += np.bincount(space.elem_dofs[e].ravel(), local.ravel(), minlength=space.ndofs)
    return b


def assemble_reflection(space, coeff, tubes, profile, kind="stiffness", rule=None,
                        side="minus", return_count=False):
    """Reflection part ``int_{band, side} coeff grad(trial) . grad(chi * test o phi)``.

    For ``kind="mass"`` the integrand is ``coeff * trial * chi * test o phi``.
    Source elements are the band elements on the modified ``side``; each
    quadrature point with ``|t| < delta_outer`` (where the cut-off or its
    gradient can be non-zero) is reflected, located and scattered once.

    Returns the CSR matrix, plus the number of contributing quadrature
    points when ``return_count`` is true.
    """
    if kind not in ("stiffness", "mass"):
        raise ValidationError(f"unknown reflection kind {kind!r}")
    mesh = space.mesh
    coeff = _as_coefficient(coeff)
    m = side_code(side)
    rule = rule or default_rule(space.order, n=3)
    n = space.ndofs
    k = space.nloc
    vals_ref = shape_values(space.order, rule.points)
    grads_ref = shape_grads(space.order, rule.points)
    elems = _tube_elements(mesh, tubes, m)
    out = sp.csr_matrix((n, n))
    count = 0
    for l, tube in enumerate(tubes):
        el = elems[mesh.patch[elems] == l]
        step = max(1, POINT_CHUNK // len(rule.weights))
        for start in range(0, len(el), step):
            e = el[start:start + step]
            x, jac, det = mesh.map(e, rule.points)
            foot, t, nrm, _ = tube.patch.project(x)
            active = np.abs(t) < profile.delta_outer
            ei, qi = np.nonzero(active)
            count += len(ei)
            if not len(ei):
                continue
            xa, ta, na, fa = x[ei, qi], t[ei, qi], nrm[ei, qi], foot[ei, qi]
            w = rule.weights[qi] * np.abs(det[ei, qi]) * coeff.on(mesh.region[e[ei]])
            chi = profile.value(ta)
            z = fa - ta[:, None] * na
            en, yn = mesh.locate_points(z)
            test_vals = shape_values(space.order, yn)  # (P, k)
            if kind == "stiffness":
                dchi = chi_gradient_from_coords(profile, ta, na)
                dphi = tube.jacobian(xa)
                _, jn, _ = mesh.map_pointwise(en, yn)
                gv = _physical_grads(jn, shape_grads(space.order, yn))  # (P, k, 2)
                gv = np.einsum("pba,pkb->pka", dphi, gv)  # D phi^T grad
                gu = _physical_grads(jac[ei, qi], grads_ref[qi])
                test_term = chi[:, None, None] * gv + test_vals[:, :, None] * dchi[:, None, :]
                local = np.einsum("p,pid,pjd->pij", w, test_term, gu)
            else:
                local = np.einsum("p,pi,pj->pij", w * chi, test_vals, vals_ref[qi])
            rows = np.repeat(space.elem_dofs[en][:, :, None], k, axis=2)
            cols = np.repeat(space.elem_dofs[e[ei]][:, None, :], k, axis=1)
            out = out + _coo_to_csr(rows, cols, local, n)
    out = out.tocsr()
    out.sort_indices()
    return (out, count) if return_count else out


def apply_dirichlet(A, b, dofs, values=None):
    """Row/column elimination with unit diagonal.

    Non-zero boundary ``values`` are lifted into the right-hand side.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    dofs = np.asarray(dofs, dtype=np.int64)
    free = np.ones(n, dtype=bool)
    free[dofs] = False
    g = np.zeros(n, dtype=np.result_type(A.dtype, float))
    if values is not None:
        g[dofs] = values
    if b is not None:
        b = np.asarray(b, dtype=np.result_type(b, A.dtype)).copy()
        if values is not None:
            b -= A @ g
        b[dofs] = g[dofs]
    d = sp.diags(free.astype(float))
    out = (d @ A @ d + sp.diags((~free).astype(float))).tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    return out, b


@dataclass
class TParts:
    """Pieces of the T-transformed system before Dirichlet elimination."""

    B1: sp.spmatrix
    B2: sp.spmatrix
    f1: np.ndarray
    f2: np.ndarray
    dirichlet: np.ndarray


def build_T_system(parts):
    """``B = B1 - 2 B2`` and ``f = f1 - 2 f2`` with Dirichlet elimination last."""
    n = parts.B1.shape[0]
    shapes = {parts.B1.shape, parts.B2.shape, (n, n)}
    if len(shapes) != 1 or len(parts.f1) != n or len(parts.f2) != n:
        raise DimensionMismatch("T-system parts have inconsistent dimensions")
    B = (parts.B1 - 2.0 * parts.B2).tocsr()
    f = np.asarray(parts.f1) - 2.0 * np.asarray(parts.f2)
    return apply_dirichlet(B, f, parts.dirichlet)


def assemble_t_parts(space, sigma, f, tubes, profile, side="minus", rule=None, reflection_rule=None):
    """Assemble all four parts for ``-div(sigma grad u) = f`` with the T operator.

    ``side`` is the modified side (the one whose test functions receive the
    reflection correction); ``f1`` is weighted by the sign of ``sigma``
    because the test function changes sign with the region.
    """
    sigma = _as_coefficient(sigma)
    m = side_code(side)
    rule = rule or default_rule(space.order)
    reflection_rule = reflection_rule or default_rule(space.order, n=3)
    sgn = sigma.sign()
    absc = sigma.abs()
    B1 = assemble_stiffness(space, absc, "all", rule)
    if tubes:
        B2 = assemble_reflection(space, absc, tubes, profile, "stiffness", reflection_rule, side)
    else:
        B2 = sp.csr_matrix(B1.shape)
    f1 = assemble_load(space, lambda x, r: sgn.on(r) * f(x, r), rule)
    if tubes:
        f2 = float(m) * assemble_reflected_load(space, f, tubes, profile, reflection_rule, side)
    else:
        f2 = np.zeros(space.ndofs)
    return TParts(B1, B2, f1, f2, space.dirichlet_dofs)


def standard_system(space, sigma, f, rule=None):
    """Plain Galerkin system ``(sigma grad u, grad v) = (f, v)``."""
    rule = rule or default_rule(space.order)
    K = assemble_stiffness(space, _as_coefficient(sigma), "all", rule)
    b = assemble_load(space, f, rule)
    return apply_dirichlet(K, b, space.dirichlet_dofs)


def reflection_norm_estimate(space, tube_list, side="plus", rule=None):
    """Discrete estimate of the H1 norm of ``w -> w o phi`` from ``side``.

    Uses the change of variables ``x = phi(y)``:
    ``|w o phi|^2_{H1(band, -side)} = int_{band, side} (|D phi^{-T} grad w|^2 + w^2) |det D phi|``,
    and returns the square root of the largest generalized eigenvalue of
    that form against the H1 norm on the band half, over all finite element
    functions supported there.
    """
    import scipy.linalg as sla

    mesh = space.mesh
    s = side_code(side)
    rule = rule or default_rule(space.order)
    vals_ref = shape_values(space.order, rule.points)
    grads_ref = shape_grads(space.order, rule.points)
    n = space.ndofs
    S = sp.csr_matrix((n, n))
    N = sp.csr_matrix((n, n))
    elems = _tube_elements(mesh, tube_list, s)
    for l, tube in enumerate(tube_list):
        e = elems[mesh.patch[elems] == l]
        y, jac, det = mesh.map(e, rule.points)
        g = _physical_grads(jac, grads_ref[None])
        dphi = tube.jacobian(y)
        jd = np.abs(np.linalg.det(dphi))
        inv_t = np.linalg.inv(dphi).swapaxes(-1, -2)
        gp = np.einsum("eqab,eqkb->eqka", inv_t, g)
        wd = rule.weights * np.abs(det)
        s_loc = (np.einsum("eq,eqid,eqjd->eij", wd * jd, gp, gp)
                 + np.einsum("eq,qi,qj->eij", wd * jd, vals_ref, vals_ref))
        n_loc = (np.einsum("eq,eqid,eqjd->eij", wd, g, g)
                 + np.einsum("eq,qi,qj->eij", wd, vals_ref, vals_ref))
        dofs = space.elem_dofs[e]
        rows = np.repeat(dofs[:, :, None], space.nloc, axis=2)
        cols = np.repeat(dofs[:, None, :], space.nloc, axis=1)
        S = S + _coo_to_csr(rows, cols, s_loc, n)
        N = N + _coo_to_csr(rows, cols, n_loc, n)
    act = np.unique(space.elem_dofs[elems])
    Sd = S[act][:, act].toarray()
    Nd = N[act][:, act].toarray()
    Sd = 0.5 * (Sd + Sd.T)
    Nd = 0.5 * (Nd + Nd.T)
    lam = sla.eigh(Sd, Nd, eigvals_only=True, subset_by_index=[len(act) - 1, len(act) - 1])
    return float(np.sqrt(lam[-1]))


def default_profile(delta):
    return CutoffProfile.for_delta(delta)
