"""CSV and legacy-VTK writers (and a VTK reader for round trips)."""
from __future__ import annotations

import csv

import numpy as np

from .errors import IoError

# P2 triangle split into four linear triangles (local node numbers)
P2_SPLIT = ((0, 3, 5), (3, 1, 4), (5, 4, 2), (3, 4, 5))


def _fmt(v):
    return repr(float(v))


def write_solution_vtk(mesh, space, u_h, path, name="u"):
    """Legacy ASCII unstructured grid with the nodal field as POINT_DATA.

    P1 fields are written on the mesh vertices; P2 fields on the vertices
    and edge nodes, each element split into four linear triangles.
    """
    u_h = np.asarray(u_h, dtype=float)
    if len(u_h) != space.ndofs:
        raise IoError(f"field has {len(u_h)} values, space has {space.ndofs} DOFs")
    pts = space.dof_coordinates()
    if space.order == 1:
        cells = space.elem_dofs
        region = mesh.region
    else:
        d = space.elem_dofs
        cells = np.concatenate([d[:, list(s)] for s in P2_SPLIT], axis=0)
        region = np.tile(mesh.region, len(P2_SPLIT))
    lines = ["# vtk DataFile Version 3.0", f"{name} field", "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(pts)} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0.0" for x, y in pts]
    lines.append(f"CELLS {len(cells)} {4 * len(cells)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += ["5"] * len(cells)
    lines += [f"POINT_DATA {len(pts)}", f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines += [_fmt(v) for v in u_h]
    lines += [f"CELL_DATA {len(cells)}", "SCALARS region int 1", "LOOKUP_TABLE default"]
    lines += [str(int(r)) for r in region]
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_vtk(path):
    """Read a file written by :func:`write_solution_vtk`.

    Returns ``(points, cells, point_data)`` where ``point_data`` maps field
    names to arrays.
    """
    try:
        with open(path, encoding="ascii") as fh:
            tokens = fh.read().split("\n")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    i = 0
    points = cells = None
    data = {}
    while i < len(tokens):
        line = tokens[i].split()
        if not line:
            i += 1
            continue
        if line[0] == "POINTS":
            n = int(line[1])
            points = np.array([[float(v) for v in tokens[i + 1 + k].split()] for k in range(n)])
            i += n + 1
        elif line[0] == "CELLS":
            n = int(line[1])
            cells = np.array([[int(v) for v in tokens[i + 1 + k].split()[1:]] for k in range(n)])
            i += n + 1
        elif line[0] == "POINT_DATA":
            n = int(line[1])
            name = tokens[i + 1].split()[1]
            data[name] = np.array([float(tokens[i + 3 + k]) for k in range(n)])
            i += n + 3
        else:
            i += 1
    if points is None or cells is None:
        raise IoError(f"{path} is not a legacy unstructured-grid file")
    return points, cells, data


def write_rows(path, header, rows):
    """CSV with a fixed header; floats are written with ``repr`` for exactness."""
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_eigenvalues_csv(path, pairs):
    write_rows(path, ("re", "im", "residual"),
               [(p.value.real, p.value.imag, p.residual) for p in pairs])


def write_oracle_csv(path, roots):
    write_rows(path, ("mode_m", "omega"), [(m, w) for m, w in roots])
