"""CSV and legacy VTK writers."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .fespace import DgSpace


def fmt(v) -> str:
    """Round-trip exact decimal for a double (17 significant digits)."""
    return format(float(v), ".17g")


class CsvStream:
    """Append rows to a CSV file, flushing each one so partial runs stay readable."""

    def __init__(self, path, header):
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh, lineterminator="\n")
        self.writer.writerow(header)
        self.fh.flush()

    def row(self, values):
        self.writer.writerow([v if isinstance(v, str) else fmt(v) for v in values])
        self.fh.flush()

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, header, rows) -> None:
    with CsvStream(path, header) as out:
        for r in rows:
            out.row(r)


def write_vtk(path, space: DgSpace, coeffs: np.ndarray, name: str, t: float) -> None:
    """Field sampled at the corners of every subtriangle (discontinuous, points not shared)."""
    mesh = space.mesh
    pts, vals = [], []
    for k in space.elements:
        tri = mesh.elements[k].subtriangle_coords.reshape(-1, 2)
        v, _ = space.evaluate(coeffs, k, tri)
        pts.append(tri)
        vals.append(v)
    P = np.vstack(pts) if pts else np.zeros((0, 2))
    V = np.concatenate(vals) if vals else np.zeros((0,) if space.ncomp == 1 else (0, 2))
    ntri = len(P) // 3
    lines = ["# vtk DataFile Version 3.0", f"{name} t={fmt(t)}", "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(P)} double"]
    lines += [f"{fmt(x)} {fmt(y)} 0" for x, y in P]
    lines.append(f"CELLS {ntri} {4 * ntri}")
    lines += [f"3 {3 * i} {3 * i + 1} {3 * i + 2}" for i in range(ntri)]
    lines.append(f"CELL_TYPES {ntri}")
    lines += ["5"] * ntri
    lines.append(f"POINT_DATA {len(P)}")
    if space.ncomp == 2:
        lines.append(f"VECTORS {name} double")
        lines += [f"{fmt(a)} {fmt(b)} 0" for a, b in V]
    else:
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [fmt(a) for a in V]
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk_points(path) -> tuple[int, int]:
    """(number of points, number of cells) of a legacy VTK file written by :func:`write_vtk`."""
    npts = ncells = -1
    with open(path) as fh:
        head = fh.readline()
        if not head.startswith("# vtk DataFile"):
            raise ValueError(f"{path}: not a legacy VTK file")
        for line in fh:
            if line.startswith("POINTS"):
                npts = int(line.split()[1])
            elif line.startswith("CELLS"):
                ncells = int(line.split()[1])
    return npts, ncells
