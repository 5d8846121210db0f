"""Lagrange P1/P2 spaces and quadrature on the reference triangle.

Reference triangle: vertices ``(0,0), (1,0), (0,1)``.  Local node order for
six-node triangles is the three vertices followed by the midpoints of the
edges (0,1), (1,2), (2,0).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import ValidationError

REF_NODES_P2 = np.array(
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]
)
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def shape_values(order, y):
    """Values of all local shape functions, shape ``(..., nloc)``."""
    y = np.asarray(y, dtype=float)
    x, z = y[..., 0], y[..., 1]
    l0, l1, l2 = 1.0 - x - z, x, z
    if order == 1:
        return np.stack([l0, l1, l2], axis=-1)
    if order == 2:
        return np.stack(
            [
                l0 * (2 * l0 - 1),
                l1 * (2 * l1 - 1),
                l2 * (2 * l2 - 1),
                4 * l0 * l1,
                4 * l1 * l2,
                4 * l2 * l0,
            ],
            axis=-1,
        )
    raise ValidationError(f"unsupported order {order}")


def shape_grads(order, y):
    """Reference gradients, shape ``(..., nloc, 2)``."""
    y = np.asarray(y, dtype=float)
    x, z = y[..., 0], y[..., 1]
    if order == 1:
        g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return np.broadcast_to(g, y.shape[:-1] + (3, 2)).copy()
    if order == 2:
        l0 = 1.0 - x - z
        zero = np.zeros_like(x)
        gx = [
            -(4 * l0 - 1),
            4 * x - 1,
            zero,
            4 * (l0 - x),
            4 * z,
            -4 * z,
        ]
        gz = [
            -(4 * l0 - 1),
            zero,
            4 * z - 1,
            -4 * x,
            4 * x,
            4 * (l0 - z),
        ]
        return np.stack([np.stack(gx, axis=-1), np.stack(gz, axis=-1)], axis=-1)
    raise ValidationError(f"unsupported order {order}")


def shape_eval(order, j, y):
    """Value and reference gradient of local basis function ``j`` at ``y``."""
    return shape_values(order, y)[..., j], shape_grads(order, y)[..., j, :]


@lru_cache(maxsize=None)
def gauss_triangle(degree):
    """Collapsed Gauss-Jacobi x Gauss-Legendre rule exact for ``degree``.

    Returns ``(points, weights)``; weights are positive and sum to 1/2.
    """
    if degree < 1:
        raise ValidationError("quadrature degree must be >= 1")
    k = (degree + 2) // 2
    xa, wa = roots_jacobi(k, 1.0, 0.0)
    xb, wb = roots_legendre(k)
    u = 0.5 * (1.0 + xa)
    v = 0.5 * (1.0 + xb)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    pts = np.stack([uu.ravel(), ((1.0 - uu) * vv).ravel()], axis=-1)
    w = (np.outer(wa, wb) / 8.0).ravel()
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def _subtriangles(n):
    out = []
    h = 1.0 / n
    for i in range(n):
        for j in range(n - i):
            out.append(((i * h, j * h), ((i + 1) * h, j * h), (i * h, (j + 1) * h)))
            if j < n - i - 1:
                out.append((((i + 1) * h, j * h), ((i + 1) * h, (j + 1) * h), (i * h, (j + 1) * h)))
    return np.array(out)


@dataclass(frozen=True)
class SubdividedRule:
    """Base Gauss rule of exactness ``q`` repeated on ``n*n`` congruent sub-triangles."""

    n: int
    q: int
    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def rule_points(n=1, q=3):
    if n < 1 or q < 1:
        raise ValidationError("subdivision count and degree must be >= 1")
    base_pts, base_w = gauss_triangle(q)
    if n == 1:
        return SubdividedRule(1, q, base_pts, base_w)
    tris = _subtriangles(n)
    v0 = tris[:, 0, :]
    e1 = tris[:, 1, :] - v0
    e2 = tris[:, 2, :] - v0
    pts = v0[:, None, :] + base_pts[None, :, 0:1] * e1[:, None, :] + base_pts[None, :, 1:2] * e2[:, None, :]
    w = np.broadcast_to(base_w / (n * n), (len(tris), len(base_w)))
    pts = pts.reshape(-1, 2)
    w = np.ascontiguousarray(w).reshape(-1)
    pts.setflags(write=False)
    w.setflags(write=False)
    return SubdividedRule(n, q, pts, w)


def default_rule(order, n=1, q=None):
    return rule_points(n, 2 * order + 1 if q is None else q)


class FeSpace:
    """Continuous Lagrange space of order 1 or 2 on a :class:`~tcoercive.mesh.Mesh`.

    Global numbering: vertices first, then (for ``order == 2``) edges in the
    order of ``mesh.edges``.
    """

    def __init__(self, mesh, order=1):
        if order not in (1, 2):
            raise ValidationError(f"order must be 1 or 2, got {order}")
        self.mesh = mesh
        self.order = order
        nv = len(mesh.vertices)
        if order == 1:
            self.elem_dofs = mesh.triangles.copy()
            self.ndofs = nv
        else:
            self.elem_dofs = np.hstack([mesh.triangles, nv + mesh.elem_edges])
            self.ndofs = nv + len(mesh.edges)
        self.nloc = self.elem_dofs.shape[1]
        self.dirichlet_dofs = self._boundary_dofs()

    def _boundary_dofs(self):
        mesh = self.mesh
        dofs = [np.asarray(mesh.boundary_vertices, dtype=np.int64)]
        if self.order == 2:
            dofs.append(len(mesh.vertices) + np.flatnonzero(mesh.boundary_edge_mask))
        return np.unique(np.concatenate(dofs))

    @property
    def free_dofs(self):
        mask = np.ones(self.ndofs, dtype=bool)
        mask[self.dirichlet_dofs] = False
        return np.flatnonzero(mask)

    def dof_coordinates(self):
        """Physical location of every nodal degree of freedom."""
        mesh = self.mesh
        if self.order == 1:
            return mesh.vertices.copy()
        coords = np.empty((self.ndofs, 2))
        coords[: len(mesh.vertices)] = mesh.vertices
        ctrl = mesh.control_points()
        coords[self.elem_dofs[:, 3:].ravel()] = ctrl[:, 3:, :].reshape(-1, 2)
        return coords

    def interpolate(self, f):
        """Nodal interpolant of ``f`` (a callable on ``(P, 2)`` point arrays)."""
        return np.asarray(f(self.dof_coordinates()), dtype=float)

    def evaluate(self, coeffs, elems, y):
        """Value and physical gradient of a finite element function.

        ``elems`` and ``y`` give per-point element indices and reference
        coordinates, e.g. from :meth:`Mesh.locate_points`.
        """
        coeffs = np.asarray(coeffs)
        vals = shape_values(self.order, y)
        grads_ref = shape_grads(self.order, y)
        _, jac, _ = self.mesh.map_pointwise(elems, y)
        inv_t = np.linalg.inv(jac).transpose(0, 2, 1)
        grads = np.einsum("pkd,pid->pik", inv_t, grads_ref)
        c = coeffs[self.elem_dofs[elems]]
        value = np.einsum("pi,pi->p", c, vals)
        grad = np.einsum("pi,pid->pd", c, grads)
        return value, grad

    def evaluate_at(self, coeffs, points):
        elems, y = self.mesh.locate_points(points)
        return self.evaluate(coeffs, elems, y)
