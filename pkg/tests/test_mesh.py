import math

import numpy as np
import pytest

from tcoercive.errors import BadParameters, LocateFailure, ParseError
from tcoercive.fespace import rule_points
from tcoercive.mesh import (gen_disc_in_disc, gen_rounded_triangle_in_square, locate, read_mesh,
                            rounded_triangle_patches, write_mesh)

RNG = np.random.default_rng(3)


@pytest.fixture(scope="module")
def disc():
    return gen_disc_in_disc(1.0, 2.0, 0.1, 0.2)


@pytest.fixture(scope="module")
def tri():
    return gen_rounded_triangle_in_square(h=0.4, delta=0.5)


def _area(m, elems=None):
    r = rule_points(1, 4)
    e = np.arange(m.n_elements) if elems is None else elems
    _, _, det = m.map(e, r.points)
    return float(np.sum(r.weights * det))


def test_disc_orientation_and_area(disc):
    r = rule_points(1, 4)
    _, _, det = disc.map(np.arange(disc.n_elements), r.points)
    assert det.min() > 0
    # quadratic boundary interpolation: area error of order h^4
    assert _area(disc) == pytest.approx(4 * math.pi, rel=1e-6)
    assert _area(disc, np.flatnonzero(disc.region < 0)) == pytest.approx(math.pi, rel=1e-6)


def test_disc_regions_and_band(disc):
    rc = np.hypot(*disc.centroids().T)
    assert np.all((rc < 1.0) == (disc.region < 0))
    band = disc.patch == 0
    assert np.all(np.abs(rc[band] - 1.0) < 0.2)
    assert np.all(np.abs(rc[~band] - 1.0) > 0.2 - 0.1)
    assert set(np.unique(disc.side())) == {-1, 0, 1}


def test_disc_boundary_vertices(disc):
    r = np.hypot(*disc.vertices[disc.boundary_vertices].T)
    assert np.allclose(r, 2.0)
    be = disc.edges[disc.boundary_edge_mask]
    assert set(np.unique(be)) == set(disc.boundary_vertices.tolist())


def test_curved_control_points_on_circles(disc):
    mids = disc.mid_ctrl[disc.curved].reshape(-1, 2)
    r = np.hypot(*mids.T)
    on = np.isclose(r, 1.0, atol=1e-12) | np.isclose(r, 2.0, atol=1e-12)
    assert on.sum() >= disc.curved.sum()


def test_locate_round_trip(disc):
    e = RNG.integers(0, disc.n_elements, 2000)
    y = RNG.dirichlet([1, 1, 1], len(e))[:, 1:]
    x, _, _ = disc.map_pointwise(e, y)
    e2, y2 = disc.locate_points(x)
    x2, _, _ = disc.map_pointwise(e2, y2)
    assert np.max(np.abs(x2 - x)) < 1e-12


def test_locate_outside_raises(disc):
    with pytest.raises(LocateFailure):
        disc.locate_points(np.array([[3.0, 0.0]]))
    e, y = locate(disc, np.array([0.3, 0.2]))
    assert np.all(y >= -1e-9) and y.sum() <= 1 + 1e-9


def test_bad_parameters():
    with pytest.raises(BadParameters):
        gen_disc_in_disc(1.0, 2.0, 0.1, 1.2)
    with pytest.raises(BadParameters):
        gen_rounded_triangle_in_square(h=0.5, delta=1.5)


def test_rounded_triangle_patches_alternate():
    _, _, patches = rounded_triangle_patches(((2, 2), (8, 2), (5, 2 + 3 * math.sqrt(3))), 1.0)
    kinds = [type(p).__name__ for p in patches]
    assert kinds == ["Arc2D", "Segment2D"] * 3


def test_rounded_triangle_mesh(tri):
    # Steiner formula for the offset triangle: A + perimeter * r + pi r^2
    side = 6.0
    exact = math.sqrt(3) / 4 * side ** 2 + 3 * side * 1.0 + math.pi
    area_minus = _area(tri, np.flatnonzero(tri.region < 0))
    assert area_minus == pytest.approx(exact, rel=1e-5)  # h = 0.4 on unit arcs
    assert _area(tri) == pytest.approx(100.0, rel=1e-12)
    assert sorted(np.unique(tri.patch[tri.patch >= 0])) == list(range(6))
    r = rule_points(1, 3)
    _, _, det = tri.map(np.arange(tri.n_elements), r.points)
    assert det.min() > 0


def test_mesh_io_round_trip(tmp_path, disc):
    path = tmp_path / "disc.msh"
    write_mesh(disc, path)
    m = read_mesh(path)
    assert np.array_equal(m.triangles, disc.triangles)
    assert np.allclose(m.vertices, disc.vertices, rtol=0, atol=1e-15)
    assert np.allclose(m.mid_ctrl, disc.mid_ctrl, rtol=0, atol=1e-15)
    assert np.array_equal(m.region, disc.region)
    assert np.array_equal(m.patch, disc.patch)
    assert np.array_equal(m.curved, disc.curved)
    assert np.array_equal(m.boundary_vertices, disc.boundary_vertices)
    assert len(m.tubes) == 1 and m.tubes[0].delta == disc.tubes[0].delta


def test_mesh_io_triangle(tmp_path, tri):
    path = tmp_path / "tri.msh"
    write_mesh(tri, path)
    m = read_mesh(path)
    assert len(m.tubes) == 6
    assert _area(m) == pytest.approx(_area(tri), rel=1e-14)


def test_read_mesh_rejects_garbage(tmp_path):
    path = tmp_path / "bad.msh"
    path.write_text("$MeshFormat\nnot a mesh\n")
    with pytest.raises(ParseError):
        read_mesh(path)
