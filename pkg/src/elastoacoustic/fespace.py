"""Modal discontinuous polynomial spaces on polygons.

Each element carries tensor-product Legendre modes of its bounding box,
normalized in L2(bbox) and filtered to total degree <= p. Integrals use a
composite collapsed-Gauss rule over the element's subtriangles.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .mesh import Face, PolyElement, PolyMesh, Region

MAX_QUADRATURE_ORDER = 40


class QuadratureError(ValueError):
    pass


def n_modes(p: int) -> int:
    return (p + 1) * (p + 2) // 2


@lru_cache(maxsize=None)
def mode_indices(p: int) -> tuple[tuple[int, int], ...]:
    """(i, j) Legendre index pairs ordered by total degree."""
    return tuple((k - j, j) for k in range(p + 1) for j in range(k + 1))


def legendre(t: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of P_0..P_p at ``t``; shapes (p+1, n)."""
    t = np.asarray(t, dtype=float)
    val = np.empty((p + 1,) + t.shape)
    der = np.empty_like(val)
    val[0] = 1.0
    der[0] = 0.0
    if p >= 1:
        val[1] = t
        der[1] = 1.0
    for n in range(1, p):
        val[n + 1] = ((2 * n + 1) * t * val[n] - n * val[n - 1]) / (n + 1)
        der[n + 1] = der[n - 1] + (2 * n + 1) * val[n]
    return val, der


@dataclass(frozen=True)
class Basis:
    element: int
    degree: int
    bbox: tuple[float, float, float, float]

    @property
    def n(self) -> int:
        return n_modes(self.degree)

    def _maps(self, points):
        x0, x1, y0, y1 = self.bbox
        sx, sy = 2.0 / (x1 - x0), 2.0 / (y1 - y0)
        tx = sx * (points[..., 0] - x0) - 1.0
        ty = sy * (points[..., 1] - y0) - 1.0
        return tx, ty, sx, sy

    def _scale(self):
        x0, x1, y0, y1 = self.bbox
        area = (x1 - x0) * (y1 - y0)
        return np.array([math.sqrt((2 * i + 1) * (2 * j + 1) / area) for i, j in mode_indices(self.degree)])

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Mode values, shape (..., n)."""
        points = np.asarray(points, dtype=float)
        tx, ty, _, _ = self._maps(points)
        px, _ = legendre(tx, self.degree)
        py, _ = legendre(ty, self.degree)
        ij = mode_indices(self.degree)
        vals = np.stack([px[i] * py[j] for i, j in ij], axis=-1)
        return vals * self._scale()

    def eval_grad(self, points: np.ndarray) -> np.ndarray:
        """Mode gradients, shape (..., n, 2)."""
        points = np.asarray(points, dtype=float)
        tx, ty, sx, sy = self._maps(points)
        px, dpx = legendre(tx, self.degree)
        py, dpy = legendre(ty, self.degree)
        ij = mode_indices(self.degree)
        gx = np.stack([sx * dpx[i] * py[j] for i, j in ij], axis=-1)
        gy = np.stack([sy * px[i] * dpy[j] for i, j in ij], axis=-1)
        s = self._scale()
        return np.stack([gx * s, gy * s], axis=-1)


def eval_basis(basis: Basis, point) -> np.ndarray:
    return basis.eval(np.asarray(point, dtype=float))


def eval_basis_grad(basis: Basis, point) -> np.ndarray:
    return basis.eval_grad(np.asarray(point, dtype=float))


# --------------------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray


def _check_order(order: int) -> None:
    if order < 0 or order > MAX_QUADRATURE_ORDER:
        raise QuadratureError(f"quadrature order {order} unsupported (max supported order {MAX_QUADRATURE_ORDER})")


@lru_cache(maxsize=None)
def gauss_segment(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [0, 1] exact to degree ``order``."""
    _check_order(order)
    n = max(1, math.ceil((order + 1) / 2))
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def reference_triangle_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed tensor Gauss rule on the unit triangle, exact to total degree ``order``.

    The Duffy map (a, b) -> (a (1 - b), b) turns a degree-``order`` integrand
    into degree ``order`` in a and ``order + 1`` in b (Jacobian 1 - b).
    """
    _check_order(order)
    a, wa = gauss_segment(order)
    b, wb = gauss_segment(order + 1)
    A, B = np.meshgrid(a, b, indexing="ij")
    W = np.outer(wa, wb) * (1.0 - B)
    pts = np.column_stack([(A * (1.0 - B)).ravel(), B.ravel()])
    return pts, W.ravel()


def triangle_quadrature(tri: np.ndarray, order: int) -> QuadratureRule:
    ref, w = reference_triangle_rule(order)
    v0, v1, v2 = tri
    jac = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0])
    pts = v0 + ref[:, :1] * (v1 - v0) + ref[:, 1:] * (v2 - v0)
    return QuadratureRule(pts, w * jac)


def volume_quadrature(element: PolyElement, order: int) -> QuadratureRule:
    """Composite rule over the element's subtriangles."""
    ref, w = reference_triangle_rule(order)
    tris = element.subtriangle_coords
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    e1, e2 = v1 - v0, v2 - v0
    jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    pts = v0[:, None, :] + ref[None, :, :1] * e1[:, None, :] + ref[None, :, 1:] * e2[:, None, :]
    weights = jac[:, None] * w[None, :]
    return QuadratureRule(pts.reshape(-1, 2), weights.ravel())


def face_quadrature(mesh: PolyMesh, face: Face, order: int) -> QuadratureRule:
    s, w = gauss_segment(order)
    a = mesh.vertices[face.endpoints[0]]
    b = mesh.vertices[face.endpoints[1]]
    return QuadratureRule(a + s[:, None] * (b - a), w * face.length)


def segment_quadrature(a, b, order: int) -> QuadratureRule:
    a, b = np.asarray(a, float), np.asarray(b, float)
    s, w = gauss_segment(order)
    return QuadratureRule(a + s[:, None] * (b - a), w * float(np.hypot(*(b - a))))


# --------------------------------------------------------------------------- spaces

class SpaceKind(str, enum.Enum):
    VECTOR_ELASTIC = "vector_elastic"
    SCALAR_ACOUSTIC = "scalar_acoustic"


@dataclass
class DgSpace:
    """Discontinuous space over one subdomain of a mesh.

    Vector dofs of an element are laid out as ``[x modes..., y modes...]``.
    """
    mesh: PolyMesh
    kind: SpaceKind
    elements: list[int]
    degrees: dict[int, int]
    offsets: dict[int, int]
    ndof: int
    bases: dict[int, Basis] = field(repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def ncomp(self) -> int:
        return 2 if self.kind == SpaceKind.VECTOR_ELASTIC else 1

    def local_size(self, k: int) -> int:
        return self.ncomp * self.bases[k].n

    def dofs(self, k: int) -> np.ndarray:
        return np.arange(self.offsets[k], self.offsets[k] + self.local_size(k))

    def __contains__(self, k: int) -> bool:
        return k in self.offsets

    def volume_data(self, k: int, order: int | None = None):
        """Cached (points, weights, values, gradients) on element ``k``."""
        if order is None:
            order = 2 * self.degrees[k] + 2
        key = ("vol", k, order)
        if key not in self._cache:
            q = volume_quadrature(self.mesh.elements[k], order)
            b = self.bases[k]
            self._cache[key] = (q.points, q.weights, b.eval(q.points), b.eval_grad(q.points))
        return self._cache[key]

    def evaluate(self, coeffs: np.ndarray, k: int, points: np.ndarray):
        """Field values and gradients on element ``k``.

        Scalar: (n,), (n, 2). Vector: (n, 2), (n, 2, 2) with grad[..., i, j] = d u_i / d x_j.
        """
        b = self.bases[k]
        c = coeffs[self.dofs(k)]
        B, G = b.eval(points), b.eval_grad(points)
        if self.ncomp == 1:
            return B @ c, np.einsum("qnd,n->qd", G, c)
        nb = b.n
        cx, cy = c[:nb], c[nb:]
        val = np.stack([B @ cx, B @ cy], axis=-1)
        grad = np.stack([np.einsum("qnd,n->qd", G, cx), np.einsum("qnd,n->qd", G, cy)], axis=1)
        return val, grad


def make_space(mesh: PolyMesh, kind: SpaceKind | str, degrees=None) -> DgSpace:
    """Build the elastic (vector) or acoustic (scalar) space on ``mesh``.

    ``degrees`` overrides the element degrees: an int or a mapping element -> degree.
    """
    kind = SpaceKind(kind)
    region = Region.ELASTIC if kind == SpaceKind.VECTOR_ELASTIC else Region.ACOUSTIC
    elements = mesh.element_ids(region)
    if degrees is None:
        deg = {k: mesh.elements[k].degree for k in elements}
    elif np.isscalar(degrees):
        deg = {k: int(degrees) for k in elements}
    else:
        deg = {k: int(degrees[k]) for k in elements}
    ncomp = 2 if kind == SpaceKind.VECTOR_ELASTIC else 1
    offsets, pos, bases = {}, 0, {}
    for k in elements:
        if deg[k] < 0:
            raise ValueError(f"negative degree on element {k}")
        offsets[k] = pos
        bases[k] = Basis(k, deg[k], mesh.elements[k].bbox)
        pos += ncomp * n_modes(deg[k])
    return DgSpace(mesh=mesh, kind=kind, elements=elements, degrees=deg, offsets=offsets, ndof=pos, bases=bases)


def make_spaces(mesh: PolyMesh, degrees=None) -> tuple[DgSpace, DgSpace]:
    return make_space(mesh, SpaceKind.VECTOR_ELASTIC, degrees), make_space(mesh, SpaceKind.SCALAR_ACOUSTIC, degrees)


def local_mass(space: DgSpace, k: int, order: int | None = None) -> np.ndarray:
    """Unweighted scalar mass matrix of the modes on element ``k``."""
    _, w, B, _ = space.volume_data(k, order)
    return B.T @ (w[:, None] * B)


def l2_project(space: DgSpace, field, order: int | None = None) -> np.ndarray:
    """Element-wise L2 projection of ``field(x, y)``.

    ``field`` takes coordinate arrays and returns an array of their shape
    (scalar) or a pair of such arrays (vector).
    """
    out = np.zeros(space.ndof)
    for k in space.elements:
        p = space.degrees[k]
        pts, w, B, _ = space.volume_data(k, order if order is not None else 2 * p + 4)
        M = B.T @ (w[:, None] * B)
        try:
            fac = cho_factor(M)
        except np.linalg.LinAlgError:
            raise np.linalg.LinAlgError(f"singular local mass matrix on element {k}") from None
        vals = np.asarray(field(pts[:, 0], pts[:, 1]), dtype=float)
        if space.ncomp == 1:
            out[space.dofs(k)] = cho_solve(fac, B.T @ (w * np.broadcast_to(vals, w.shape)))
        else:
            vx = np.broadcast_to(vals[0], w.shape)
            vy = np.broadcast_to(vals[1], w.shape)
            out[space.dofs(k)] = np.concatenate([cho_solve(fac, B.T @ (w * vx)), cho_solve(fac, B.T @ (w * vy))])
    return out


def mass_condition_numbers(space: DgSpace) -> dict[int, float]:
    return {k: float(np.linalg.cond(local_mass(space, k))) for k in space.elements}
