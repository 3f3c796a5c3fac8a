"""Writers for experiment output: CSV tables and legacy-ASCII VTK snapshots.

Floats in CSV are written with 17 significant digits so a round trip through
the file reproduces the binary value. Snapshots go out either as x,y,u rows
over the solution nodes or as a VTK STRUCTURED_POINTS field resampled on the
uniform lattice with (nx*p+1) x (ny*p+1) points, which renders directly in
ParaView.
"""

import csv
import os

import numpy as np

from .mesh import DofMap, MeshQ
from .quadrature import BasisQp, lagrange_values_at


def format_float(x) -> str:
    return f"{float(x):.17g}"


def _format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def write_csv(path, header, rows) -> None:
    """Write rows of mixed values; floats get the full-precision format."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def uniform_lattice_values(u: np.ndarray, mesh: MeshQ, basis: BasisQp,
                           dofmap: DofMap) -> np.ndarray:
    """Evaluate the FE field on the uniform (nx*p+1) x (ny*p+1) lattice.

    The lattice subdivides every element into p equal intervals per axis, so
    lattice points on element boundaries are shared; continuity makes the
    value there unambiguous. Returned array is indexed [jy, ix].
    """
    p = basis.p
    nxp, nyp = mesh.nx * p + 1, mesh.ny * p + 1
    # 1D evaluation of the nodal basis at p+1 equispaced reference points
    ref = np.linspace(-1.0, 1.0, p + 1)
    E1 = lagrange_values_at(basis.gll_nodes, ref)      # [basis j, point k]
    E2 = np.kron(E1, E1)                               # [local n, point (ky*(p+1)+kx)]
    vals = np.zeros((nyp, nxp))
    for e in range(mesh.n_elem):
        loc = u[dofmap.cell_dofs[e]] @ E2              # values at (p+1)^2 lattice pts
        ex, ey = e % mesh.nx, e // mesh.nx
        sl = np.s_[ey * p:ey * p + p + 1, ex * p:ex * p + p + 1]
        vals[sl] = loc.reshape(p + 1, p + 1)
    return vals


def export_snapshot_csv(u: np.ndarray, dofmap: DofMap, path) -> None:
    """x,y,u rows over all solution nodes in global dof order."""
    rows = zip(dofmap.node_coords[:, 0], dofmap.node_coords[:, 1], u)
    write_csv(path, ["x", "y", "u"], rows)


def export_snapshot_vtk(u: np.ndarray, mesh: MeshQ, basis: BasisQp,
                        dofmap: DofMap, path, field: str = "u") -> None:
    """Legacy-ASCII VTK STRUCTURED_POINTS snapshot on the uniform lattice."""
    p = basis.p
    vals = uniform_lattice_values(u, mesh, basis, dofmap)
    nyp, nxp = vals.shape
    sx = (mesh.x1 - mesh.x0) / (nxp - 1)
    sy = (mesh.y1 - mesh.y0) / (nyp - 1)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("wave field snapshot\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nxp} {nyp} 1\n")
        fh.write(f"ORIGIN {format_float(mesh.x0)} {format_float(mesh.y0)} 0\n")
        fh.write(f"SPACING {format_float(sx)} {format_float(sy)} 1\n")
        fh.write(f"POINT_DATA {nxp * nyp}\n")
        fh.write(f"SCALARS {field} double 1\n")
        fh.write("LOOKUP_TABLE default\n")
        for row in vals:  # x fastest, matching VTK point order
            fh.write(" ".join(format_float(v) for v in row) + "\n")


def export_snapshot(u: np.ndarray, mesh: MeshQ, basis: BasisQp, dofmap: DofMap,
                    path, fmt: str = "csv") -> None:
    if fmt == "csv":
        export_snapshot_csv(u, dofmap, path)
    elif fmt == "vtk":
        export_snapshot_vtk(u, mesh, basis, dofmap, path)
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}; use 'csv' or 'vtk'")
