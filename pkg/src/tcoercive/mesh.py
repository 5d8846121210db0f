"""Triangle meshes with region / band tags and quadratic boundary elements.

Every element stores six geometric control points (vertices followed by the
edge midpoints in the order (0,1), (1,2), (2,0)).  Straight elements keep the
true edge midpoints and are evaluated with the affine map; elements with an
edge on the interface or on a curved outer boundary carry the arc midpoint
and use the quadratic isoparametric map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParameters, LocateFailure, ParseError
from .fespace import shape_grads, shape_values
from .geometry import Arc2D, Segment2D, TubularNeighborhood

MINUS, PLUS = -1, 1
REGION_NAMES = {MINUS: "minus", PLUS: "plus"}


class Mesh:
    """Conforming triangle mesh.

    Attributes
    ----------
    vertices : (N, 2) float array
    triangles : (E, 3) int array, counter-clockwise
    region : (E,) int array, ``-1`` (negative coefficient) or ``+1``
    patch : (E,) int array, index into ``tubes`` or ``-1`` outside the band
    curved : (E,) bool array
    mid_ctrl : (E, 3, 2) edge control points
    boundary_vertices : sorted int array of vertices on the outer boundary
    h : nominal mesh size
    tubes : list of :class:`~tcoercive.geometry.TubularNeighborhood`
    """

    def __init__(self, vertices, triangles, region, patch, boundary_vertices, h,
                 tubes=(), mid_ctrl=None, curved=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.region = np.asarray(region, dtype=np.int8)
        self.patch = np.asarray(patch, dtype=np.int64)
        self.boundary_vertices = np.unique(np.asarray(boundary_vertices, dtype=np.int64))
        self.h = float(h)
        self.tubes = list(tubes)
        corners = self.vertices[self.triangles]
        straight_mid = 0.5 * (corners + corners[:, [1, 2, 0], :])
        if mid_ctrl is None:
            mid_ctrl = straight_mid
        self.mid_ctrl = np.ascontiguousarray(mid_ctrl, dtype=float)
        if curved is None:
            curved = np.any(np.abs(self.mid_ctrl - straight_mid) > 0.0, axis=(1, 2))
        self.curved = np.asarray(curved, dtype=bool)
        self._build_edges()
        self._locator = None

    # -- topology -------------------------------------------------------
    def _build_edges(self):
        tri = self.triangles
        local = np.stack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=1)
        keys = np.sort(local.reshape(-1, 2), axis=1)
        self.edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        self.elem_edges = inverse.reshape(-1, 3)
        self.boundary_edge_mask = counts == 1

    @property
    def n_elements(self):
        return len(self.triangles)

    def side(self):
        """Per-element band side: region for band elements, 0 elsewhere."""
        return np.where(self.patch >= 0, self.region, 0).astype(np.int8)

    def control_points(self, elems=None):
        sel = slice(None) if elems is None else elems
        return np.concatenate([self.vertices[self.triangles[sel]], self.mid_ctrl[sel]], axis=1)

    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    # -- element maps ---------------------------------------------------
    def map(self, elems, y):
        """Map shared reference points ``y`` (Q, 2) into elements ``elems``.

        Returns ``x`` (E, Q, 2), ``jac`` (E, Q, 2, 2) and ``det`` (E, Q).
        """
        elems = np.asarray(elems, dtype=np.int64)
        y = np.asarray(y, dtype=float)
        v = self.vertices[self.triangles[elems]]
        a = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)  # (E, 2, 2)
        x = v[:, None, 0, :] + np.einsum("eab,qb->eqa", a, y)
        jac = np.broadcast_to(a[:, None], (len(elems), len(y), 2, 2)).copy()
        cur = np.flatnonzero(self.curved[elems])
        if len(cur):
            ctrl = self.control_points(elems[cur])
            n = shape_values(2, y)
            g = shape_grads(2, y)
            x[cur] = np.einsum("qk,eka->eqa", n, ctrl)
            jac[cur] = np.einsum("eka,qkb->eqab", ctrl, g)
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        return x, jac, det

    def map_pointwise(self, elems, y):
        """Map per-point reference coordinates ``y`` (P, 2) in ``elems`` (P,)."""
        elems = np.asarray(elems, dtype=np.int64)
        y = np.asarray(y, dtype=float)
        v = self.vertices[self.triangles[elems]]
        a = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
        x = v[:, 0, :] + np.einsum("pab,pb->pa", a, y)
        jac = a.copy()
        cur = np.flatnonzero(self.curved[elems])
        if len(cur):
            ctrl = self.control_points(elems[cur])
            n = shape_values(2, y[cur])
            g = shape_grads(2, y[cur])
            x[cur] = np.einsum("pk,pka->pa", n, ctrl)
            jac[cur] = np.einsum("pka,pkb->pab", ctrl, g)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        return x, jac, det

    # -- point location -------------------------------------------------
    @property
    def locator(self):
        if self._locator is None:
            self._locator = Locator(self)
        return self._locator

    def locate_points(self, points, tol=1e-9):
        return self.locator.locate(points, tol=tol)


@dataclass(frozen=True)
class ElementMap:
    element: int
    kind: str
    control_points: np.ndarray


def element_map(mesh, element):
    kind = "quadratic" if mesh.curved[element] else "affine"
    return ElementMap(int(element), kind, mesh.control_points([element])[0])


def element_map_eval(emap, y):
    """``(x, J, detJ)`` of a single element map at reference point ``y``."""
    y = np.asarray(y, dtype=float)
    c = emap.control_points
    if emap.kind == "affine":
        a = np.column_stack([c[1] - c[0], c[2] - c[0]])
        x = c[0] + a @ y
        jac = a
    else:
        x = shape_values(2, y) @ c
        jac = c.T @ shape_grads(2, y)
    return x, jac, float(np.linalg.det(jac))


def _inverse_affine(v, x):
    a = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
    det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    r = x - v[:, 0]
    y0 = (a[:, 1, 1] * r[:, 0] - a[:, 0, 1] * r[:, 1]) / det
    y1 = (-a[:, 1, 0] * r[:, 0] + a[:, 0, 0] * r[:, 1]) / det
    return np.stack([y0, y1], axis=-1)


class Locator:
    """Uniform bucket grid over element bounding boxes.

    Candidates in each bucket are kept in increasing element order, so the
    lowest-index element containing a point wins ties on shared edges.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        ctrl = mesh.control_points()
        lo = ctrl.min(axis=1)
        hi = ctrl.max(axis=1)
        diam = np.max(hi - lo, axis=1)
        pad = 1e-9 * max(mesh.h, 1e-300) + np.where(mesh.curved, 0.1 * diam, 0.0)
        lo = lo - pad[:, None]
        hi = hi + pad[:, None]
        self.origin = lo.min(axis=0)
        extent = hi.max(axis=0) - self.origin
        cell = max(float(np.median(diam)), 1e-12)
        self.shape = np.maximum(1, np.ceil(extent / cell).astype(np.int64))
        self.cell = extent / self.shape
        i0 = self._cell_index(lo)
        i1 = self._cell_index(hi)
        nx = i1[:, 0] - i0[:, 0] + 1
        ny = i1[:, 1] - i0[:, 1] + 1
        counts = nx * ny
        elem = np.repeat(np.arange(len(ctrl)), counts)
        offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        cx = i0[elem, 0] + offs % nx[elem]
        cy = i0[elem, 1] + offs // nx[elem]
        cid = cx * self.shape[1] + cy
        order = np.lexsort((elem, cid))
        self.cell_elems = elem[order]
        ncell = int(self.shape[0] * self.shape[1])
        self.cell_start = np.zeros(ncell + 1, dtype=np.int64)
        np.add.at(self.cell_start, cid + 1, 1)
        self.cell_start = np.cumsum(self.cell_start)

    def _cell_index(self, pts):
        idx = np.floor((pts - self.origin) / self.cell).astype(np.int64)
        return np.clip(idx, 0, self.shape - 1)

    def _reference_coords(self, elems, x):
        mesh = self.mesh
        y = _inverse_affine(mesh.vertices[mesh.triangles[elems]], x)
        cur = np.flatnonzero(mesh.curved[elems])
        if len(cur):
            ec, xc, yc = elems[cur], x[cur], y[cur]
            for _ in range(12):
                xm, jac, _ = mesh.map_pointwise(ec, yc)
                step = np.linalg.solve(jac, (xm - xc)[..., None])[..., 0]
                yc = yc - step
                if np.max(np.abs(step), initial=0.0) < 1e-15:
                    break
            y[cur] = yc
        return y

    def locate(self, points, tol=1e-9):
        """Return ``(elements, reference_coords)`` for an array of points."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        n = len(pts)
        found = np.full(n, -1, dtype=np.int64)
        yref = np.zeros((n, 2))
        ci = self._cell_index(pts)
        cid = ci[:, 0] * self.shape[1] + ci[:, 1]
        start = self.cell_start[cid]
        count = self.cell_start[cid + 1] - start
        # only points inside the grid's box can be located
        inbox = np.all((pts >= self.origin - 1e-12) & (pts <= self.origin + self.cell * self.shape + 1e-12), axis=1)
        pending = np.flatnonzero(inbox & (count > 0))
        k = 0
        while len(pending):
            pending = pending[count[pending] > k]
            if not len(pending):
                break
            cand = self.cell_elems[start[pending] + k]
            y = self._reference_coords(cand, pts[pending])
            ok = (y[:, 0] >= -tol) & (y[:, 1] >= -tol) & (1.0 - y[:, 0] - y[:, 1] >= -tol)
            hit = pending[ok]
            found[hit] = cand[ok]
            yref[hit] = y[ok]
            pending = pending[~ok]
            k += 1
        missing = np.flatnonzero(found < 0)
        if len(missing):
            raise LocateFailure(
                f"{len(missing)} point(s) not inside any element, e.g. {tuple(pts[missing[0]])}"
            )
        return found, yref


def locate(mesh, x, hint=None, tol=1e-9):
    """Element containing ``x`` and the reference coordinates of ``x`` in it.

    ``hint`` is tried first; if it contains the point it is returned.
    """
    x = np.asarray(x, dtype=float).reshape(1, 2)
    if hint is not None:
        y = mesh.locator._reference_coords(np.array([hint]), x)[0]
        if y[0] >= -tol and y[1] >= -tol and 1 - y[0] - y[1] >= -tol:
            return int(hint), y
    e, y = mesh.locate_points(x, tol=tol)
    return int(e[0]), y[0]


# ---------------------------------------------------------------------------
# generators


def _ring_steps(a, b, h):
    return max(1, int(math.ceil((b - a) / h - 1e-9)))


def gen_disc_in_disc(r_in=1.0, r_out=2.0, h=0.1, delta=0.2, center=(0.0, 0.0), mirror_band=False):
    """Polar-structured mesh of the disc of radius ``r_out``.

    Node rings sit exactly at ``r_in - delta``, ``r_in``, ``r_in + delta`` and
    ``r_out``.  The inner disc is the negative region; the annulus
    ``|r - r_in| < delta`` is band patch 0.

    With ``mirror_band`` every ring in the band gets the same node count and
    the diagonals on the outer half are flipped, so the band triangulation
    is symmetric under ``r -> 2 r_in - r`` up to the curvature of the edges.
    """
    if not (0 < delta < r_in < r_out) or not h > 0 or not r_in + delta < r_out:
        raise BadParameters("need 0 < delta < r_in, r_in + delta < r_out and h > 0")
    c = np.asarray(center, dtype=float)
    a, b = r_in - delta, r_in + delta
    radii = [0.0]
    for lo, hi in ((0.0, a), (a, r_in), (r_in, b), (b, r_out)):
        m = _ring_steps(lo, hi, h)
        radii.extend(lo + (hi - lo) * np.arange(1, m + 1) / m)
    radii = np.array(radii)
    radii[-1] = r_out
    counts = [1] + [max(6, int(math.ceil(2 * math.pi * r / h - 1e-9))) for r in radii[1:]]
    eps = 1e-12 * r_out
    in_band = (radii >= a - eps) & (radii <= b + eps)
    if mirror_band:
        nb_ = max(6, int(math.ceil(2 * math.pi * b / h - 1e-9)))
        counts = [nb_ if flag else c_ for c_, flag in zip(counts, in_band)]
        counts[0] = 1
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])

    verts = [c[None, :]]
    for r, n in zip(radii[1:], counts[1:]):
        th = 2 * math.pi * np.arange(n) / n
        verts.append(c + r * np.column_stack([np.cos(th), np.sin(th)]))
    verts = np.vstack(verts)
    # snap exact radii for interface and boundary rings
    tris, ring_lvl, ring_edge = [], [], []
    n1 = counts[1]
    for j in range(n1):
        tris.append((0, starts[1] + j, starts[1] + (j + 1) % n1))
        ring_lvl.append(0)
        ring_edge.append((1, 1, j))  # (local control index, ring, position)
    for k in range(1, len(radii) - 1):
        na, nb = counts[k], counts[k + 1]
        sa, sb = starts[k], starts[k + 1]
        flip = mirror_band and in_band[k] and in_band[k + 1] and radii[k] >= r_in - eps
        i = j = 0
        while i < na or j < nb:
            inner_first = (i + 1) * nb < (j + 1) * na if flip else (i + 1) * nb <= (j + 1) * na
            if j >= nb or (i < na and inner_first):
                tris.append((sa + i, sb + j % nb, sa + (i + 1) % na))
                ring_edge.append((5, k, i))
                i += 1
            else:
                tris.append((sa + i % na, sb + j, sb + (j + 1) % nb))
                ring_edge.append((4, k + 1, j))
                j += 1
            ring_lvl.append(k)
    tris = np.array(tris, dtype=np.int64)
    ring_lvl = np.array(ring_lvl)
    r_lo = radii[ring_lvl]
    r_hi = radii[ring_lvl + 1]
    region = np.where(r_hi <= r_in + eps, MINUS, PLUS)
    patch = np.where((r_lo >= a - eps) & (r_hi <= b + eps), 0, -1)

    corners = verts[tris]
    mid = 0.5 * (corners + corners[:, [1, 2, 0], :])
    curved = np.zeros(len(tris), dtype=bool)
    i_in = int(np.argmin(np.abs(radii - r_in)))
    i_out = len(radii) - 1
    for e, (ctrl_idx, ring, pos) in enumerate(ring_edge):
        if ring in (i_in, i_out):
            n = counts[ring]
            th = 2 * math.pi * (pos + 0.5) / n
            mid[e, ctrl_idx - 3] = c + radii[ring] * np.array([math.cos(th), math.sin(th)])
            curved[e] = True
    boundary = np.arange(starts[i_out], starts[i_out] + counts[i_out])
    tube = TubularNeighborhood(Arc2D(tuple(c), r_in, -math.pi, math.pi, True), delta)
    return Mesh(verts, tris, region, patch, boundary, h, [tube], mid, curved)


def rounded_triangle_patches(corners, radius):
    """Arc and segment patches of the boundary of ``{dist(x, triangle) < radius}``.

    Patches alternate arc, segment, arc, ... starting at the first corner.
    """
    p = np.asarray(corners, dtype=float)
    u, v = p[1] - p[0], p[2] - p[0]
    if u[0] * v[1] - u[1] * v[0] < 0:
        p = p[::-1]
    normals = []
    for i in range(3):
        d = p[(i + 1) % 3] - p[i]
        d = d / np.hypot(*d)
        normals.append(np.array([d[1], -d[0]]))  # outward
    patches = []
    for i in range(3):
        nprev, nnext = normals[i - 1], normals[i]
        t0 = math.atan2(nprev[1], nprev[0])
        t1 = math.atan2(nnext[1], nnext[0])
        while t1 <= t0:
            t1 += 2 * math.pi
        patches.append(Arc2D(tuple(p[i]), radius, t0, t1, True))
        patches.append(Segment2D(tuple(p[i] + radius * nnext), tuple(p[(i + 1) % 3] + radius * nnext), True))
    return p, normals, patches


def gen_rounded_triangle_in_square(square=(0.0, 0.0, 10.0, 10.0),
                                   corners=((2.0, 2.0), (8.0, 2.0), (5.0, 2.0 + 3.0 * math.sqrt(3.0))),
                                   radius=1.0, h=0.1, delta=0.5, min_angle=28.0):
    """Unstructured mesh of a square containing a triangle with rounded corners.

    The band of half width ``delta`` around the interface is split into six
    patches (three annular sectors, three rectangles) by the normals at the
    arc/segment junctions; each patch half is its own meshing region.
    """
    import triangle as tr

    x0, y0, x1, y1 = map(float, square)
    if not (radius > delta > 0 and h > 0 and x1 > x0 and y1 > y0):
        raise BadParameters("need radius > delta > 0, h > 0 and a non-degenerate square")
    p, normals, patches = rounded_triangle_patches(corners, radius)
    reach = radius + delta
    margin = min(np.min(p[:, 0] - x0), np.min(x1 - p[:, 0]), np.min(p[:, 1] - y0), np.min(y1 - p[:, 1]))
    if not margin > reach:
        raise BadParameters("the band around the inclusion must stay inside the square")

    verts, index = [], {}

    def vid(pt):
        key = (round(pt[0], 9), round(pt[1], 9))
        if key not in index:
            index[key] = len(verts)
            verts.append((float(pt[0]), float(pt[1])))
        return index[key]

    segments = []
    arc_edges = {}

    def polyline(pts, arc_patch=None):
        ids = [vid(q) for q in pts]
        for a_, b_ in zip(ids[:-1], ids[1:]):
            segments.append((a_, b_))
            if arc_patch is not None:
                arc_edges[(min(a_, b_), max(a_, b_))] = arc_patch

    def line_pts(a_, b_):
        a_, b_ = np.asarray(a_), np.asarray(b_)
        m = _ring_steps(0.0, float(np.hypot(*(b_ - a_))), h)
        s = np.arange(m + 1) / m
        return a_ + s[:, None] * (b_ - a_)

    # offset curves at distances radius - delta, radius, radius + delta
    for rho in (radius - delta, radius, radius + delta):
        for i in range(3):
            arc = patches[2 * i]
            m = _ring_steps(0.0, rho * (arc.theta1 - arc.theta0), h)
            th = arc.theta0 + (arc.theta1 - arc.theta0) * np.arange(m + 1) / m
            pts = p[i] + rho * np.column_stack([np.cos(th), np.sin(th)])
            polyline(pts, 2 * i if rho == radius else None)
            nn = normals[i]
            polyline(line_pts(p[i] + rho * nn, p[(i + 1) % 3] + rho * nn))
    # patch separators along the normals at the junctions
    for i in range(3):
        for nn in (normals[i - 1], normals[i]):
            polyline(line_pts(p[i] + (radius - delta) * nn, p[i] + radius * nn))
            polyline(line_pts(p[i] + radius * nn, p[i] + (radius + delta) * nn))
    sq = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    for a_, b_ in zip(sq[:-1], sq[1:]):
        polyline(line_pts(a_, b_))

    area = math.sqrt(3.0) / 4.0 * h * h
    regions = [[*p.mean(axis=0), 1000.0, area]]
    inset = np.array([x0, y0]) + 0.5 * (margin - reach) * np.array([1.0, 1.0])
    regions.append([*inset, 2000.0, area])
    for l, pat in enumerate(patches):
        if isinstance(pat, Arc2D):
            foot = pat.point(0.5 * (pat.theta0 + pat.theta1))
        else:
            foot = 0.5 * (np.asarray(pat.a) + np.asarray(pat.b))
        n = pat.project(foot)[2]
        for side, t in ((MINUS, 0.5 * delta), (PLUS, -0.5 * delta)):
            q = foot + t * n
            regions.append([q[0], q[1], float(2 * l + (0 if side == MINUS else 1)), area])
    data = dict(vertices=np.array(verts), segments=np.array(segments), regions=np.array(regions))
    out = tr.triangulate(data, f"pq{min_angle}YYAaQ")
    V = out["vertices"]
    T = out["triangles"].astype(np.int64)
    attr = out["triangle_attributes"][:, 0].round().astype(np.int64)
    # Triangle emits counter-clockwise triangles; make sure
    e1 = V[T[:, 1]] - V[T[:, 0]]
    e2 = V[T[:, 2]] - V[T[:, 0]]
    flip = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    T[flip] = T[flip][:, [0, 2, 1]]

    region = np.where(attr == 2000, PLUS, MINUS)
    patch = np.full(len(T), -1, dtype=np.int64)
    band = attr < 1000
    patch[band] = attr[band] // 2
    region[band] = np.where(attr[band] % 2 == 0, MINUS, PLUS)

    corners_xy = V[T]
    mid = 0.5 * (corners_xy + corners_xy[:, [1, 2, 0], :])
    curved = np.zeros(len(T), dtype=bool)
    for e in range(len(T)):
        for k, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
            a_, b_ = T[e, i], T[e, j]
            pid = arc_edges.get((min(a_, b_), max(a_, b_)))
            if pid is None:
                continue
            arc = patches[pid]
            c = np.asarray(arc.center)
            ang = [math.atan2(*(V[v] - c)[::-1]) for v in (a_, b_)]
            d = (ang[1] - ang[0] + math.pi) % (2 * math.pi) - math.pi
            mid[e, k] = arc.point(ang[0] + 0.5 * d)
            curved[e] = True
    on_bdry = (
        (np.abs(V[:, 0] - x0) < 1e-9) | (np.abs(V[:, 0] - x1) < 1e-9)
        | (np.abs(V[:, 1] - y0) < 1e-9) | (np.abs(V[:, 1] - y1) < 1e-9)
    )
    tubes = [TubularNeighborhood(pt, delta) for pt in patches]
    return Mesh(V, T, region, patch, np.flatnonzero(on_bdry), h, tubes, mid, curved)


# ---------------------------------------------------------------------------
# ASCII mesh files


def _fmt(v):
    return repr(float(v))


def _patch_line(pt):
    if isinstance(pt, Arc2D):
        return "arc " + " ".join(map(_fmt, (*pt.center, pt.radius, pt.theta0, pt.theta1))) + f" {int(pt.center_in_minus)}"
    return "segment " + " ".join(map(_fmt, (*pt.a, *pt.b))) + f" {int(pt.minus_on_left)}"


def write_mesh(mesh, path):
    side_name = {-1: "minus", 0: "none", 1: "plus"}
    lines = ["$MeshFormat", "tcoercive-mesh 1", "$EndMeshFormat", "$Parameters", f"h {_fmt(mesh.h)}"]
    delta = mesh.tubes[0].delta if mesh.tubes else None
    lines.append(f"delta {_fmt(delta) if delta is not None else 'none'}")
    lines += ["$EndParameters", "$Patches", str(len(mesh.tubes))]
    lines += [_patch_line(t.patch) for t in mesh.tubes]
    lines += ["$EndPatches", "$Nodes", str(len(mesh.vertices))]
    lines += [f"{_fmt(x)} {_fmt(y)}" for x, y in mesh.vertices]
    lines += ["$EndNodes", "$Elements", str(mesh.n_elements)]
    sides = mesh.side()
    for e in range(mesh.n_elements):
        v = " ".join(map(str, mesh.triangles[e]))
        tags = f"{REGION_NAMES[int(mesh.region[e])]} {int(mesh.patch[e])} {side_name[int(sides[e])]}"
        if mesh.curved[e]:
            ctrl = " ".join(_fmt(c) for c in mesh.mid_ctrl[e].ravel())
            lines.append(f"tri6 {v} {tags} {ctrl}")
        else:
            lines.append(f"tri3 {v} {tags}")
    lines += ["$EndElements", "$BoundaryVertices", str(len(mesh.boundary_vertices))]
    lines += [" ".join(map(str, mesh.boundary_vertices))]
    lines += ["$EndBoundaryVertices", ""]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))


def _sections(text):
    out, name, body = {}, None, []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("$End"):
            out[name] = body
            name, body = None, []
        elif line.startswith("$"):
            name = line[1:]
        elif name is not None:
            body.append(line)
    return out


def read_mesh(path):
    with open(path, encoding="ascii") as fh:
        sec = _sections(fh.read())
    try:
        params = dict(line.split() for line in sec["Parameters"])
        h = float(params["h"])
        delta = None if params.get("delta", "none") == "none" else float(params["delta"])
        patches = []
        for line in sec["Patches"][1:]:
            kind, *vals = line.split()
            if kind == "arc":
                cx, cy, r, t0, t1 = map(float, vals[:5])
                patches.append(Arc2D((cx, cy), r, t0, t1, bool(int(vals[5]))))
            elif kind == "segment":
                ax, ay, bx, by = map(float, vals[:4])
                patches.append(Segment2D((ax, ay), (bx, by), bool(int(vals[4]))))
            else:
                raise ParseError(f"unknown patch kind {kind!r}")
        nodes = np.array([[float(v) for v in line.split()] for line in sec["Nodes"][1:]])
        tris, region, patch, mid, curved = [], [], [], [], []
        names = {"minus": MINUS, "plus": PLUS}
        for line in sec["Elements"][1:]:
            f = line.split()
            v = [int(i) for i in f[1:4]]
            tris.append(v)
            region.append(names[f[4]])
            patch.append(int(f[5]))
            if f[0] == "tri6":
                mid.append(np.array([float(c) for c in f[7:13]]).reshape(3, 2))
                curved.append(True)
            else:
                c = nodes[v]
                mid.append(0.5 * (c + c[[1, 2, 0]]))
                curved.append(False)
        bl = sec["BoundaryVertices"]
        boundary = [int(i) for line in bl[1:] for i in line.split()]
    except (KeyError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed mesh file {path}: {exc}") from exc
    tubes = [TubularNeighborhood(p_, delta) for p_ in patches] if delta is not None else []
    return Mesh(nodes, np.array(tris), region, patch, boundary, h, tubes, np.array(mid), np.array(curved))
