"""Polygonal meshes of a rectangular elastic/acoustic bi-domain.

The elastic subdomain sits to the left of the vertical line ``x = interface_x``
and the acoustic subdomain to the right. Elements never cross that line.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Voronoi, cKDTree

Box = tuple[float, float, float, float]  # (x_min, x_max, y_min, y_max)


class MeshError(ValueError):
    """Raised for invalid geometry, topology or mesh files."""


class Region(str, enum.Enum):
    ELASTIC = "e"
    ACOUSTIC = "a"


class FaceKind(str, enum.Enum):
    INTERIOR_ELASTIC = "interior_elastic"
    INTERIOR_ACOUSTIC = "interior_acoustic"
    BOUNDARY_ELASTIC = "boundary_elastic_dirichlet"
    BOUNDARY_ACOUSTIC = "boundary_acoustic_dirichlet"
    INTERFACE = "interface"

    @property
    def is_boundary(self) -> bool:
        return self in (FaceKind.BOUNDARY_ELASTIC, FaceKind.BOUNDARY_ACOUSTIC)

    @property
    def region(self) -> Region | None:
        if self in (FaceKind.INTERIOR_ELASTIC, FaceKind.BOUNDARY_ELASTIC):
            return Region.ELASTIC
        if self in (FaceKind.INTERIOR_ACOUSTIC, FaceKind.BOUNDARY_ACOUSTIC):
            return Region.ACOUSTIC
        return None


@dataclass
class PolyElement:
    vertex_ids: tuple[int, ...]
    region: Region
    degree: int
    area: float
    diameter: float
    centroid: np.ndarray
    bbox: Box
    subtriangles: list[tuple[int, int, int]]
    # coordinates of the subtriangles; the fan apex (centroid) is not a mesh vertex
    subtriangle_coords: np.ndarray = field(repr=False)


@dataclass
class Face:
    endpoints: tuple[int, int]
    kind: FaceKind
    left: int
    right: int | None
    normal: np.ndarray  # unit, outward from ``left``
    length: float


@dataclass
class PolyMesh:
    vertices: np.ndarray
    elements: list[PolyElement]
    faces: list[Face]
    box: Box
    interface_x: float

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_ids(self, region: Region) -> list[int]:
        return [k for k, el in enumerate(self.elements) if el.region == region]

    def faces_of_kind(self, *kinds: FaceKind) -> list[int]:
        return [i for i, f in enumerate(self.faces) if f.kind in kinds]

    def kind_histogram(self) -> dict[str, int]:
        counts = {k.value: 0 for k in FaceKind}
        for f in self.faces:
            counts[f.kind.value] += 1
        return counts

    @property
    def h(self) -> float:
        return max(el.diameter for el in self.elements)

    def element_coords(self, k: int) -> np.ndarray:
        return self.vertices[list(self.elements[k].vertex_ids)]

    def with_degrees(self, degrees) -> PolyMesh:
        """Copy of the mesh with new per-element degrees (int or sequence)."""
        if np.isscalar(degrees):
            degrees = [int(degrees)] * self.n_elements
        polys = [el.vertex_ids for el in self.elements]
        regions = [el.region for el in self.elements]
        return build_mesh(self.vertices, polys, regions, list(degrees), self.box, self.interface_x)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Index of an element containing each point (-1 when outside)."""
        points = np.atleast_2d(points)
        out = np.full(len(points), -1, dtype=int)
        for k, el in enumerate(self.elements):
            x0, x1, y0, y1 = el.bbox
            cand = np.flatnonzero((out < 0) & (points[:, 0] >= x0 - 1e-12) & (points[:, 0] <= x1 + 1e-12)
                                  & (points[:, 1] >= y0 - 1e-12) & (points[:, 1] <= y1 + 1e-12))
            if cand.size == 0:
                continue
            xy = self.element_coords(k)
            e = np.roll(xy, -1, axis=0) - xy
            rel = points[cand, None, :] - xy[None, :, :]
            cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
            scale = 1e-12 * el.diameter ** 2
            inside = np.all(cross >= -scale, axis=1)
            out[cand[inside]] = k
        return out


# --------------------------------------------------------------------------- geometry helpers

def polygon_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(xy: np.ndarray) -> np.ndarray:
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def _diameter(xy: np.ndarray) -> float:
    d = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def _tri_area(a, b, c) -> float:
    return 0.5 * float((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _ear_clip(xy: np.ndarray) -> list[tuple[int, int, int]]:
    idx = list(range(len(xy)))
    tris = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(xy) ** 2:
            raise MeshError("ear clipping failed")
        n = len(idx)
        for m in range(n):
            i0, i1, i2 = idx[m - 1], idx[m], idx[(m + 1) % n]
            a, b, c = xy[i0], xy[i1], xy[i2]
            if _tri_area(a, b, c) <= 0:
                continue
            others = [xy[j] for j in idx if j not in (i0, i1, i2)]
            if any(_tri_area(a, b, p) >= 0 and _tri_area(b, c, p) >= 0 and _tri_area(c, a, p) >= 0
                   for p in others):
                continue
            tris.append((i0, i1, i2))
            idx.pop(m)
            break
        else:
            raise MeshError("ear clipping failed: no ear found")
    tris.append(tuple(idx))
    return tris


def subtriangulate(xy: np.ndarray, element_id: int = -1):
    """Split a polygon into non-overlapping triangles.

    Returns ``(local_triples, coords)`` where ``coords`` has shape (nt, 3, 2).
    Local index ``-1`` stands for the centroid apex of the fan. Polygons that
    are not star-shaped w.r.t. their centroid fall back to ear clipping.
    """
    area = polygon_area(xy)
    c = polygon_centroid(xy)
    n = len(xy)
    fan = [(-1, i, (i + 1) % n) for i in range(n)]
    areas = np.array([_tri_area(c, xy[i], xy[j]) for _, i, j in fan])
    if np.all(areas > 1e-14 * abs(area)) or (np.all(areas >= 0) and abs(areas.sum() - area) <= 1e-12 * area):
        keep = [t for t, a in zip(fan, areas) if a > 0]
        coords = np.array([[c, xy[i], xy[j]] for _, i, j in keep])
        return keep, coords
    try:
        tris = _ear_clip(xy)
    except MeshError as exc:
        raise MeshError(f"cannot subtriangulate element {element_id}: {exc}") from None
    coords = np.array([[xy[i], xy[j], xy[k]] for i, j, k in tris])
    return tris, coords


# --------------------------------------------------------------------------- construction

def _make_element(vertices: np.ndarray, vids, region, degree, k) -> PolyElement:
    xy = vertices[list(vids)]
    area = polygon_area(xy)
    if not area > 0:
        raise MeshError(f"element {k} has non-positive area {area}")
    tris, coords = subtriangulate(xy, k)
    tri_area = sum(_tri_area(*t) for t in coords)
    if abs(tri_area - area) > 1e-12 * area:
        raise MeshError(f"subtriangles of element {k} do not cover it")
    el = PolyElement(
        vertex_ids=tuple(int(v) for v in vids),
        region=Region(region),
        degree=int(degree),
        area=area,
        diameter=_diameter(xy),
        centroid=polygon_centroid(xy),
        bbox=(float(xy[:, 0].min()), float(xy[:, 0].max()), float(xy[:, 1].min()), float(xy[:, 1].max())),
        subtriangles=tris,
        subtriangle_coords=coords,
    )
    return el


def _insert_hanging_vertices(vertices: np.ndarray, polygons: list[list[int]]) -> list[list[int]]:
    """Insert every mesh vertex lying strictly inside a polygon edge into that edge."""
    scale = float(np.ptp(vertices, axis=0).max()) or 1.0
    tol = 1e-12 * scale
    tree = cKDTree(vertices)
    out = []
    for poly in polygons:
        new = []
        n = len(poly)
        for m in range(n):
            a, b = poly[m], poly[(m + 1) % n]
            new.append(a)
            pa, pb = vertices[a], vertices[b]
            d = pb - pa
            length = math.hypot(*d)
            cand = tree.query_ball_point(0.5 * (pa + pb), 0.5 * length + tol)
            on_edge = []
            for v in cand:
                if v in (a, b):
                    continue
                r = vertices[v] - pa
                s = float(np.dot(r, d)) / length ** 2
                dist = abs(d[0] * r[1] - d[1] * r[0]) / length
                if dist <= tol and tol / length < s < 1 - tol / length:
                    on_edge.append((s, v))
            new.extend(v for _, v in sorted(on_edge))
        out.append(new)
    return out


def build_mesh(vertices, polygons, regions, degrees, box: Box, interface_x: float) -> PolyMesh:
    """Assemble a classified mesh from raw vertex/polygon data.

    Polygons are reoriented counter-clockwise and hanging vertices are inserted
    into the edges they split, so every face is shared by at most two elements.
    """
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2 or not np.all(np.isfinite(vertices)):
        raise MeshError("vertices must be a finite (N, 2) array")
    polys = []
    for k, poly in enumerate(polygons):
        poly = [int(v) for v in poly]
        if len(poly) < 3:
            raise MeshError(f"element {k} has fewer than 3 vertices")
        if polygon_area(vertices[poly]) < 0:
            poly = poly[::-1]
        polys.append(poly)
    polys = _insert_hanging_vertices(vertices, polys)
    if np.isscalar(degrees):
        degrees = [int(degrees)] * len(polys)
    elements = [_make_element(vertices, p, r, d, k) for k, (p, r, d) in enumerate(zip(polys, regions, degrees))]
    mesh = PolyMesh(vertices=vertices, elements=elements, faces=[], box=tuple(float(b) for b in box),
                    interface_x=float(interface_x))
    return classify_faces(mesh)


def classify_faces(mesh: PolyMesh) -> PolyMesh:
    """Populate ``mesh.faces``: one face per distinct element edge, each with a kind."""
    x0, x1, y0, y1 = mesh.box
    scale = max(x1 - x0, y1 - y0)
    tol = 1e-12 * scale
    owners: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for k, el in enumerate(mesh.elements):
        vids = el.vertex_ids
        for m in range(len(vids)):
            a, b = vids[m], vids[(m + 1) % len(vids)]
            if a == b:
                raise MeshError(f"element {k} has a repeated vertex {a}")
            owners.setdefault((min(a, b), max(a, b)), []).append((k, a, b))

    def on_interface(a, b):
        return (abs(mesh.vertices[a, 0] - mesh.interface_x) <= tol
                and abs(mesh.vertices[b, 0] - mesh.interface_x) <= tol)

    def on_box(a, b):
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        return any(abs(pa[i] - v) <= tol and abs(pb[i] - v) <= tol
                   for i, v in ((0, x0), (0, x1), (1, y0), (1, y1)))

    faces = []
    for key in sorted(owners):
        own = sorted(owners[key])
        if len(own) > 2:
            raise MeshError(f"edge {key} shared by {len(own)} elements")
        regions = [mesh.elements[k].region for k, _, _ in own]
        if len(own) == 2:
            if regions[0] == regions[1]:
                kind = FaceKind.INTERIOR_ELASTIC if regions[0] == Region.ELASTIC else FaceKind.INTERIOR_ACOUSTIC
                (left, a, b), (right, _, _) = own
            else:
                if not on_interface(*key):
                    raise MeshError(f"edge {key} separates elements of different regions off the interface")
                kind = FaceKind.INTERFACE
                el_side = own[0] if regions[0] == Region.ELASTIC else own[1]
                ac_side = own[1] if regions[0] == Region.ELASTIC else own[0]
                left, a, b = el_side
                right = ac_side[0]
        else:
            (left, a, b), = own
            right = None
            if not on_box(a, b):
                raise MeshError(f"edge {key} of element {left} has a single neighbour but is not on the boundary")
            kind = FaceKind.BOUNDARY_ELASTIC if regions[0] == Region.ELASTIC else FaceKind.BOUNDARY_ACOUSTIC
        d = mesh.vertices[b] - mesh.vertices[a]
        length = math.hypot(d[0], d[1])
        normal = np.array([d[1], -d[0]]) / length
        faces.append(Face(endpoints=(a, b), kind=kind, left=left, right=right, normal=normal, length=length))
    mesh.faces = faces
    return mesh


# --------------------------------------------------------------------------- generation

def _clipped_voronoi(seeds: np.ndarray, rect: Box) -> list[np.ndarray]:
    """Voronoi cells of ``seeds`` clipped to an axis-aligned rectangle.

    Uses reflection of the seeds across the four sides, so each cell of an
    original seed is bounded and exactly clipped by the rectangle.
    """
    x0, x1, y0, y1 = rect
    sx, sy = seeds[:, 0], seeds[:, 1]
    pts = np.vstack([
        seeds,
        np.column_stack([2 * x0 - sx, sy]),
        np.column_stack([2 * x1 - sx, sy]),
        np.column_stack([sx, 2 * y0 - sy]),
        np.column_stack([sx, 2 * y1 - sy]),
    ])
    if len(seeds) == 1:
        # qhull needs a non-degenerate cloud; add far corner reflections
        pts = np.vstack([pts, [[2 * x0 - sx[0], 2 * y0 - sy[0]], [2 * x1 - sx[0], 2 * y1 - sy[0]]]])
    vor = Voronoi(pts)
    tol = 1e-9 * max(x1 - x0, y1 - y0)
    cells = []
    for i, s in enumerate(seeds):
        region = vor.regions[vor.point_region[i]]
        xy = vor.vertices[region].copy()
        xy[np.abs(xy[:, 0] - x0) < tol, 0] = x0
        xy[np.abs(xy[:, 0] - x1) < tol, 0] = x1
        xy[np.abs(xy[:, 1] - y0) < tol, 1] = y0
        xy[np.abs(xy[:, 1] - y1) < tol, 1] = y1
        xy[:, 0] = np.clip(xy[:, 0], x0, x1)
        xy[:, 1] = np.clip(xy[:, 1], y0, y1)
        ang = np.arctan2(xy[:, 1] - s[1], xy[:, 0] - s[0])
        xy = xy[np.argsort(ang)]
        # collapse near-duplicate vertices (degenerate Voronoi edges)
        keep = [0]
        for j in range(1, len(xy)):
            if np.hypot(*(xy[j] - xy[keep[-1]])) > tol:
                keep.append(j)
        if len(keep) > 1 and np.hypot(*(xy[keep[-1]] - xy[keep[0]])) <= tol:
            keep.pop()
        cells.append(xy[keep])
    return cells


def _lloyd_cells(seeds: np.ndarray, rect: Box, iterations: int) -> list[np.ndarray]:
    for _ in range(iterations):
        cells = _clipped_voronoi(seeds, rect)
        seeds = np.array([polygon_centroid(c) for c in cells])
    return _clipped_voronoi(seeds, rect)


def _check_cells(cells: list[np.ndarray], offset: int = 0) -> None:
    areas = np.array([polygon_area(c) for c in cells])
    mean = areas.mean()
    for i, a in enumerate(areas):
        if len(cells[i]) < 3 or a < 1e-12 * mean:
            raise MeshError(f"degenerate Voronoi cell {offset + i} (area {a:.3e})")


def _merge_cells(cell_groups, regions_per_group, tol) -> tuple[np.ndarray, list[list[int]], list[Region]]:
    coords = np.vstack([c for group in cell_groups for c in group])
    tree = cKDTree(coords)
    parent = np.arange(len(coords))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(tree.query_pairs(tol)):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(coords))])
    uniq, inverse = np.unique(roots, return_inverse=True)
    vertices = coords[uniq]
    polygons, regions = [], []
    pos = 0
    for group, region in zip(cell_groups, regions_per_group):
        for cell in group:
            ids = inverse[pos:pos + len(cell)].tolist()
            pos += len(cell)
            dedup = [v for m, v in enumerate(ids) if v != ids[m - 1]] if len(ids) > 1 else ids
            polygons.append(dedup)
            regions.append(region)
    return vertices, polygons, regions


def generate_mesh(box: Box = (-1.0, 1.0, 0.0, 1.0), interface_x: float = 0.0, n_elastic: int = 60,
                  n_acoustic: int = 60, lloyd_iterations: int = 100, rng_seed: int = 0, degree: int = 2,
                  mirror_y: bool = False, seeds: tuple[np.ndarray, np.ndarray] | None = None) -> PolyMesh:
    """Clipped-Voronoi mesh with Lloyd relaxation, generated per subdomain.

    When both subdomains have equal width and cell count, the acoustic cells
    are the mirror images of the elastic ones, so the two traces on the
    interface share vertices exactly; otherwise interface edges are split at
    the union of both traces. ``mirror_y`` builds the lower half and reflects
    it across the horizontal midline, giving a mesh symmetric in y.
    """
    x0, x1, y0, y1 = box
    if n_elastic < 1 or n_acoustic < 1:
        raise MeshError("n_elastic and n_acoustic must be >= 1")
    if not x0 < interface_x < x1:
        raise MeshError("interface_x must lie strictly inside the box")
    if mirror_y and (n_elastic % 2 or n_acoustic % 2):
        raise MeshError("mirror_y needs even cell counts")
    rng = np.random.default_rng(rng_seed)
    ym = 0.5 * (y0 + y1)
    y_top = ym if mirror_y else y1
    rect_e = (x0, interface_x, y0, y_top)
    rect_a = (interface_x, x1, y0, y_top)
    ne = n_elastic // 2 if mirror_y else n_elastic
    na = n_acoustic // 2 if mirror_y else n_acoustic

    def random_seeds(rect, n):
        lo = np.array([rect[0], rect[2]])
        hi = np.array([rect[1], rect[3]])
        return lo + (hi - lo) * rng.random((n, 2))

    if seeds is not None:
        seeds_e, seeds_a = (np.asarray(s, dtype=float) for s in seeds)
        cells_e = _lloyd_cells(seeds_e, rect_e, lloyd_iterations)
        cells_a = _lloyd_cells(seeds_a, rect_a, lloyd_iterations)
    else:
        cells_e = _lloyd_cells(random_seeds(rect_e, ne), rect_e, lloyd_iterations)
        mirrored = ne == na and math.isclose(interface_x - x0, x1 - interface_x)
        if mirrored:
            cells_a = []
            for c in cells_e:
                r = c[::-1].copy()
                r[:, 0] = 2 * interface_x - r[:, 0]
                r[np.abs(r[:, 0] - x1) < 1e-12 * (x1 - x0), 0] = x1
                cells_a.append(r)
        else:
            cells_a = _lloyd_cells(random_seeds(rect_a, na), rect_a, lloyd_iterations)
    _check_cells(cells_e)
    _check_cells(cells_a, offset=len(cells_e))
    if mirror_y:
        def reflect(cells):
            out = []
            for c in cells:
                r = c[::-1].copy()
                r[:, 1] = (y0 + y1) - r[:, 1]
                out.append(r)
            return out
        cells_e = cells_e + reflect(cells_e)
        cells_a = cells_a + reflect(cells_a)
    tol = 1e-10 * max(x1 - x0, y1 - y0)
    vertices, polygons, regions = _merge_cells([cells_e, cells_a], [Region.ELASTIC, Region.ACOUSTIC], tol)
    return build_mesh(vertices, polygons, regions, degree, box, interface_x)


def two_rectangle_mesh(box: Box = (-1.0, 1.0, 0.0, 1.0), interface_x: float = 0.0, degree: int = 1) -> PolyMesh:
    """The minimal compliant partition: one rectangle per subdomain."""
    x0, x1, y0, y1 = box
    v = np.array([[x0, y0], [interface_x, y0], [x1, y0], [x1, y1], [interface_x, y1], [x0, y1]])
    return build_mesh(v, [[0, 1, 4, 5], [1, 2, 3, 4]], [Region.ELASTIC, Region.ACOUSTIC], degree, box,
                      interface_x)


def mirror_x(mesh: PolyMesh) -> PolyMesh:
    """Reflect x -> (x_min + x_max) - x and swap region labels."""
    x0, x1, y0, y1 = mesh.box
    v = mesh.vertices.copy()
    v[:, 0] = (x0 + x1) - v[:, 0]
    swap = {Region.ELASTIC: Region.ACOUSTIC, Region.ACOUSTIC: Region.ELASTIC}
    polys = [el.vertex_ids[::-1] for el in mesh.elements]
    return build_mesh(v, polys, [swap[el.region] for el in mesh.elements], [el.degree for el in mesh.elements],
                      mesh.box, (x0 + x1) - mesh.interface_x)


# --------------------------------------------------------------------------- diagnostics

@dataclass
class QualityReport:
    n_elements: int
    face_counts: dict[str, int]
    h_min: float
    h_max: float
    max_h_ratio: float | None
    max_p_ratio: float | None
    # per element, max over its faces of h_k |F| / (d |fan triangle on F|)
    height_ratio: np.ndarray
    flags: list[str]

    def lines(self) -> list[str]:
        out = [f"elements {self.n_elements}"]
        out += [f"faces.{k} {v}" for k, v in self.face_counts.items()]
        out.append(f"h_min {self.h_min!r}")
        out.append(f"h_max {self.h_max!r}")
        if self.max_h_ratio is None:
            out.append("neighbor_ratios no interior pairs")
        else:
            out.append(f"max_h_ratio {self.max_h_ratio!r}")
            out.append(f"max_p_ratio {self.max_p_ratio!r}")
        out.append(f"max_height_ratio {float(self.height_ratio.max())!r}")
        out += [f"flag {f}" for f in self.flags]
        return out


def quality_report(mesh: PolyMesh, h_ratio_limit: float = 4.0, height_ratio_limit: float = 50.0) -> QualityReport:
    """Bounded-variation and simplex-height diagnostics; flags, never rejects."""
    h_ratios, p_ratios = [], []
    for f in mesh.faces:
        if f.right is None:
            continue
        a, b = mesh.elements[f.left], mesh.elements[f.right]
        h_ratios.append(max(a.diameter / b.diameter, b.diameter / a.diameter))
        p_ratios.append(max(a.degree / b.degree, b.degree / a.degree))
    height = np.zeros(mesh.n_elements)
    for k, el in enumerate(mesh.elements):
        xy = mesh.element_coords(k)
        n = len(xy)
        worst = 0.0
        for m in range(n):
            a, b = xy[m], xy[(m + 1) % n]
            flen = math.hypot(*(b - a))
            tri = _tri_area(el.centroid, a, b)
            worst = max(worst, el.diameter * flen / (2 * tri) if tri > 0 else math.inf)
        height[k] = worst
    flags = []
    max_h = max(h_ratios) if h_ratios else None
    max_p = max(p_ratios) if p_ratios else None
    if max_h is not None and max_h > h_ratio_limit:
        flags.append(f"h ratio {max_h:.3g} exceeds {h_ratio_limit}")
    bad = np.flatnonzero(height > height_ratio_limit)
    if bad.size:
        flags.append(f"{bad.size} elements exceed simplex-height ratio {height_ratio_limit}")
    return QualityReport(
        n_elements=mesh.n_elements,
        face_counts=mesh.kind_histogram(),
        h_min=min(el.diameter for el in mesh.elements),
        h_max=mesh.h,
        max_h_ratio=max_h,
        max_p_ratio=max_p,
        height_ratio=height,
        flags=flags,
    )


# --------------------------------------------------------------------------- file IO

HEADER = "polymesh 2d v1"


def write_mesh(mesh: PolyMesh, path) -> None:
    lines = [HEADER, f"vertices {len(mesh.vertices)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"elements {mesh.n_elements}")
    for el in mesh.elements:
        ids = " ".join(str(v) for v in el.vertex_ids)
        lines.append(f"{el.region.value} {el.degree} {len(el.vertex_ids)} {ids}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path, box: Box | None = None, interface_x: float | None = None) -> PolyMesh:
    """Parse a ``polymesh 2d v1`` file.

    The box defaults to the vertex bounding box and the interface abscissa to
    the largest x over elastic-element vertices (elastic side on the left).
    """
    raw = Path(path).read_text().splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw) if ln.strip() and not ln.strip().startswith("#")]
    it = iter(lines)

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise MeshError(f"unexpected end of file while reading {what}") from None

    lineno, text = take("header")
    if text != HEADER:
        raise MeshError(f"line {lineno}: expected header {HEADER!r}")
    lineno, text = take("vertex count")
    parts = text.split()
    if len(parts) != 2 or parts[0] != "vertices":
        raise MeshError(f"line {lineno}: expected 'vertices N'")
    try:
        nv = int(parts[1])
    except ValueError:
        raise MeshError(f"line {lineno}: bad vertex count") from None
    verts = np.empty((nv, 2))
    for i in range(nv):
        lineno, text = take("vertices")
        parts = text.split()
        try:
            if len(parts) != 2:
                raise ValueError
            verts[i] = [float(parts[0]), float(parts[1])]
        except ValueError:
            raise MeshError(f"line {lineno}: expected 'x y'") from None
    lineno, text = take("element count")
    parts = text.split()
    if len(parts) != 2 or parts[0] != "elements":
        raise MeshError(f"line {lineno}: expected 'elements M'")
    try:
        ne = int(parts[1])
    except ValueError:
        raise MeshError(f"line {lineno}: bad element count") from None
    polys, regions, degrees = [], [], []
    for _ in range(ne):
        lineno, text = take("elements")
        parts = text.split()
        if len(parts) < 3 or parts[0] not in ("e", "a"):
            raise MeshError(f"line {lineno}: expected 'region(e|a) degree k ids...'")
        try:
            deg, k = int(parts[1]), int(parts[2])
            ids = [int(p) for p in parts[3:]]
        except ValueError:
            raise MeshError(f"line {lineno}: non-integer entry") from None
        if len(ids) != k or k < 3:
            raise MeshError(f"line {lineno}: expected {k} vertex ids, got {len(ids)}")
        if deg < 1:
            raise MeshError(f"line {lineno}: degree must be >= 1")
        if any(v < 0 or v >= nv for v in ids):
            raise MeshError(f"line {lineno}: vertex id out of range [0, {nv})")
        polys.append(ids)
        regions.append(Region(parts[0]))
        degrees.append(deg)
    for lineno, _ in it:
        raise MeshError(f"line {lineno}: trailing content")
    if box is None:
        box = (float(verts[:, 0].min()), float(verts[:, 0].max()), float(verts[:, 1].min()),
               float(verts[:, 1].max()))
    if interface_x is None:
        el_ids = sorted({v for p, r in zip(polys, regions) if r == Region.ELASTIC for v in p})
        interface_x = float(verts[el_ids, 0].max()) if el_ids else float(box[0])
    return build_mesh(verts, polys, regions, degrees, box, interface_x)
