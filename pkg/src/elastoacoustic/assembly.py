"""Sparse matrices and load vectors of the semi-discrete elasto-acoustic system.

Elastic fields use Voigt strain rows ``(e_xx, e_yy, 2 e_xy)``; the jump of a
vector field across a face with normal ``n`` (taken from the left element) is
``(v_L - v_R) (x) n`` so ``[u]:[v] = (u_L - u_R).(v_L - v_R)``.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fespace import DgSpace, face_quadrature, volume_quadrature
from .mesh import Face, FaceKind, PolyMesh

log = logging.getLogger(__name__)


class AssemblyError(RuntimeError):
    pass


@dataclass
class Material:
    """Element-wise constant coefficients (scalars, or arrays indexed by element id)."""
    rho_e: float | np.ndarray = 1.0
    lam: float | np.ndarray = 1.0
    mu: float | np.ndarray = 1.0
    zeta: float | np.ndarray = 0.0
    rho_a: float | np.ndarray = 1.0
    c: float | np.ndarray = 1.0

    def __post_init__(self):
        for name, lo, strict in (("rho_e", 0, True), ("mu", 0, True), ("rho_a", 0, True), ("c", 0, True),
                                 ("lam", 0, False), ("zeta", 0, False)):
            v = np.asarray(getattr(self, name), dtype=float)
            if np.any(v <= lo) if strict else np.any(v < lo):
                raise ValueError(f"material parameter {name} out of range")

    def at(self, name: str, k: int) -> float:
        v = getattr(self, name)
        return float(v) if np.isscalar(v) else float(np.asarray(v)[k])

    def voigt(self, k: int) -> np.ndarray:
        lam, mu = self.at("lam", k), self.at("mu", k)
        return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])

    def c_bar(self, k: int) -> float:
        """Operator norm of the elasticity tensor on symmetric tensors.

        Mandel form (shear entry 2 mu) so the 3x3 matrix acts isometrically;
        for isotropic 2D media with lam >= 0 this is 2 mu + 2 lam.
        """
        lam, mu = self.at("lam", k), self.at("mu", k)
        mandel = np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, 2 * mu]])
        return float(np.linalg.eigvalsh(mandel).max())


@dataclass(frozen=True)
class StabilizationParams:
    alpha: float = 10.0
    beta: float = 10.0
    # multiply boundary-face penalties by alpha/beta as well as interior ones
    scale_boundary: bool = True

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")


def stabilization_eta(mesh: PolyMesh, face: Face, material: Material, params: StabilizationParams,
                      degrees=None) -> float:
    """Elastic penalty on a face: alpha * max_k Cbar_k p_k^2 / h_k."""
    if face.kind == FaceKind.INTERFACE or face.kind.region is None:
        raise AssemblyError("eta is not defined on interface faces")
    return _penalty(mesh, face, lambda k: material.c_bar(k), params.alpha, params.scale_boundary, degrees)


def stabilization_chi(mesh: PolyMesh, face: Face, material: Material, params: StabilizationParams,
                      degrees=None) -> float:
    """Acoustic penalty on a face: beta * max_k rho_a,k p_k^2 / h_k."""
    if face.kind == FaceKind.INTERFACE or face.kind.region is None:
        raise AssemblyError("chi is not defined on interface faces")
    return _penalty(mesh, face, lambda k: material.at("rho_a", k), params.beta, params.scale_boundary, degrees)


def _penalty(mesh, face, coef, scale, scale_boundary, degrees) -> float:
    def local(k):
        p = mesh.elements[k].degree if degrees is None else degrees[k]
        return coef(k) * p ** 2 / mesh.elements[k].diameter

    if face.right is None:
        return (scale if scale_boundary else 1.0) * local(face.left)
    return scale * max(local(face.left), local(face.right))


# --------------------------------------------------------------------------- sparse plumbing

class _Triplets:
    """Coordinate buffer compressed with a canonical (row, col) sort."""

    def __init__(self, shape):
        self.shape = shape
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rows, cols, block):
        R, C = np.meshgrid(rows, cols, indexing="ij")
        self.rows.append(R.ravel())
        self.cols.append(C.ravel())
        self.vals.append(np.asarray(block, dtype=float).ravel())

    def tocsr(self) -> sp.csr_matrix:
        if not self.vals:
            return sp.csr_matrix(self.shape)
        r = np.concatenate(self.rows)
        c = np.concatenate(self.cols)
        v = np.concatenate(self.vals)
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        key = r.astype(np.int64) * self.shape[1] + c
        start = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
        v = np.add.reduceat(v, start)
        r, c = r[start], c[start]
        indptr = np.zeros(self.shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        return sp.csr_matrix((v, c, np.cumsum(indptr)), shape=self.shape)


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def _sym(a):
    return 0.5 * (a + a.T)


# --------------------------------------------------------------------------- local operators

def strain_operator(G: np.ndarray) -> np.ndarray:
    """Voigt strain operator (nq, 3, 2 nb) from scalar mode gradients (nq, nb, 2)."""
    nq, nb, _ = G.shape
    B = np.zeros((nq, 3, 2 * nb))
    B[:, 0, :nb] = G[:, :, 0]
    B[:, 1, nb:] = G[:, :, 1]
    B[:, 2, :nb] = G[:, :, 1]
    B[:, 2, nb:] = G[:, :, 0]
    return B


def value_operator(Bv: np.ndarray) -> np.ndarray:
    """Vector value operator (nq, 2, 2 nb) from scalar mode values (nq, nb)."""
    nq, nb = Bv.shape
    V = np.zeros((nq, 2, 2 * nb))
    V[:, 0, :nb] = Bv
    V[:, 1, nb:] = Bv
    return V


def traction_operator(G: np.ndarray, D: np.ndarray, n: np.ndarray) -> np.ndarray:
    """sigma(v) n for each vector mode, shape (nq, 2, 2 nb)."""
    S = np.einsum("ij,qjb->qib", D, strain_operator(G))
    N = np.array([[n[0], 0.0, n[1]], [0.0, n[1], n[0]]])
    return np.einsum("ij,qjb->qib", N, S)


def face_order(space: DgSpace, face: Face) -> int:
    p = space.degrees[face.left]
    if face.right is not None and face.right in space:
        p = max(p, space.degrees[face.right])
    return 2 * p + 2


def _face_sides(space: DgSpace, face: Face, order: int):
    q = face_quadrature(space.mesh, face, order)
    sides = [face.left] if face.right is None else [face.left, face.right]
    data = [(k, space.bases[k].eval(q.points), space.bases[k].eval_grad(q.points)) for k in sides]
    return q, data


# --------------------------------------------------------------------------- elastic / acoustic forms

@dataclass
class FormPieces:
    """Separately assembled parts of an SIPG form.

    ``consistency`` holds <{flux(u)}, [v]> (rows = test); the SIPG matrix is
    ``volume - consistency - consistency.T + penalty`` and the dG-norm matrix
    ``volume + penalty``. ``avg_flux`` is the Gram matrix of
    ``eta^-1/2 {flux}`` over the faces.
    """
    volume: sp.csr_matrix
    consistency: sp.csr_matrix
    penalty: sp.csr_matrix
    avg_flux: sp.csr_matrix

    @property
    def stiffness(self) -> sp.csr_matrix:
        return (self.volume + self.penalty - (self.consistency + self.consistency.T)).tocsr()

    @property
    def norm(self) -> sp.csr_matrix:
        return (self.volume + self.penalty).tocsr()


def elastic_pieces(space: DgSpace, material: Material, params: StabilizationParams,
                   threads: int = 1, include_boundary: bool = True) -> FormPieces:
    mesh = space.mesh
    n = space.ndof
    vol, cons, pen, avg = (_Triplets((n, n)) for _ in range(4))
    mandel = np.diag([1.0, 1.0, 2.0])

    def element(k):
        _, w, _, G = space.volume_data(k)
        B = strain_operator(G)
        K = np.einsum("q,qia,ij,qjb->ab", w, B, material.voigt(k), B)
        return space.dofs(k), _sym(K)

    for dofs, K in _map(element, space.elements, threads):
        vol.add(dofs, dofs, K)

    kinds = [FaceKind.INTERIOR_ELASTIC] + ([FaceKind.BOUNDARY_ELASTIC] if include_boundary else [])
    face_ids = mesh.faces_of_kind(*kinds)

    def face_terms(fi):
        f = mesh.faces[fi]
        eta = stabilization_eta(mesh, f, material, params, space.degrees)
        q, sides = _face_sides(space, f, face_order(space, f))
        half = 0.5 if len(sides) == 2 else 1.0
        J, T, S, dofs = [], [], [], []
        for s, (k, Bv, G) in enumerate(sides):
            sign = 1.0 if s == 0 else -1.0
            D = material.voigt(k)
            J.append(sign * value_operator(Bv))
            T.append(half * traction_operator(G, D, f.normal))
            S.append(half * np.einsum("ij,qjb->qib", D, strain_operator(G)))
            dofs.append(space.dofs(k))
        J, T, S = (np.concatenate(x, axis=2) for x in (J, T, S))
        w = q.weights
        C = np.einsum("q,qia,qib->ab", w, J, T)
        P = eta * np.einsum("q,qia,qib->ab", w, J, J)
        A = np.einsum("q,qia,ij,qjb->ab", w / eta, S, mandel, S)
        return np.concatenate(dofs), C, _sym(P), _sym(A)

    for dofs, C, P, A in _map(face_terms, face_ids, threads):
        cons.add(dofs, dofs, C)
        pen.add(dofs, dofs, P)
        avg.add(dofs, dofs, A)
    return FormPieces(vol.tocsr(), cons.tocsr(), pen.tocsr(), avg.tocsr())


def acoustic_pieces(space: DgSpace, material: Material, params: StabilizationParams,
                    threads: int = 1, include_boundary: bool = True) -> FormPieces:
    mesh = space.mesh
    n = space.ndof
    vol, cons, pen, avg = (_Triplets((n, n)) for _ in range(4))

    def element(k):
        _, w, _, G = space.volume_data(k)
        K = material.at("rho_a", k) * np.einsum("q,qad,qbd->ab", w, G, G)
        return space.dofs(k), _sym(K)

    for dofs, K in _map(element, space.elements, threads):
        vol.add(dofs, dofs, K)

    kinds = [FaceKind.INTERIOR_ACOUSTIC] + ([FaceKind.BOUNDARY_ACOUSTIC] if include_boundary else [])
    face_ids = mesh.faces_of_kind(*kinds)

    def face_terms(fi):
        f = mesh.faces[fi]
        chi = stabilization_chi(mesh, f, material, params, space.degrees)
        q, sides = _face_sides(space, f, face_order(space, f))
        half = 0.5 if len(sides) == 2 else 1.0
        J, F, dofs = [], [], []
        for s, (k, Bv, G) in enumerate(sides):
            sign = 1.0 if s == 0 else -1.0
            rho = material.at("rho_a", k)
            J.append(sign * Bv)
            F.append(half * rho * G)  # (nq, nb, 2)
            dofs.append(space.dofs(k))
        J = np.concatenate(J, axis=1)
        F = np.concatenate(F, axis=1)
        Fn = F @ f.normal
        w = q.weights
        C = np.einsum("q,qa,qb->ab", w, J, Fn)
        P = chi * np.einsum("q,qa,qb->ab", w, J, J)
        A = np.einsum("q,qad,qbd->ab", w / chi, F, F)
        return np.concatenate(dofs), C, _sym(P), _sym(A)

    for dofs, C, P, A in _map(face_terms, face_ids, threads):
        cons.add(dofs, dofs, C)
        pen.add(dofs, dofs, P)
        avg.add(dofs, dofs, A)
    return FormPieces(vol.tocsr(), cons.tocsr(), pen.tocsr(), avg.tocsr())


def assemble_elastic_stiffness(space_e: DgSpace, material: Material, params: StabilizationParams,
                               threads: int = 1) -> sp.csr_matrix:
    return elastic_pieces(space_e, material, params, threads).stiffness


def assemble_acoustic_stiffness(space_a: DgSpace, material: Material, params: StabilizationParams,
                                threads: int = 1) -> sp.csr_matrix:
    return acoustic_pieces(space_a, material, params, threads).stiffness


def assemble_coupling(space_e: DgSpace, space_a: DgSpace, material: Material) -> sp.csr_matrix:
    """C_e[i, j] = int_{Gamma_I} rho_a psi_j (n_e . v_i) ds."""
    mesh = space_e.mesh
    trip = _Triplets((space_e.ndof, space_a.ndof))
    faces = mesh.faces_of_kind(FaceKind.INTERFACE)
    if not faces:
        warnings.warn("mesh has no interface faces; coupling matrix is zero", stacklevel=2)
    for fi in faces:
        f = mesh.faces[fi]
        ke, ka = f.left, f.right
        order = 2 * max(space_e.degrees[ke], space_a.degrees[ka]) + 2
        q = face_quadrature(mesh, f, order)
        Ve = value_operator(space_e.bases[ke].eval(q.points))
        vn = np.einsum("qia,i->qa", Ve, f.normal)
        psi = space_a.bases[ka].eval(q.points)
        block = material.at("rho_a", ka) * np.einsum("q,qa,qb->ab", q.weights, vn, psi)
        trip.add(space_e.dofs(ke), space_a.dofs(ka), block)
    return trip.tocsr()


def assemble_mass(space: DgSpace, material: Material, which: str) -> sp.csr_matrix:
    """Block-diagonal mass matrices.

    ``which`` is one of ``"rho_e"`` (M_e1), ``"damping"`` (2 rho_e zeta,
    M_e2), ``"damping2"`` (rho_e zeta^2, M_e3) or ``"acoustic"`` (rho_a / c^2).
    """
    coef = {
        "rho_e": lambda k: material.at("rho_e", k),
        "damping": lambda k: 2 * material.at("rho_e", k) * material.at("zeta", k),
        "damping2": lambda k: material.at("rho_e", k) * material.at("zeta", k) ** 2,
        "acoustic": lambda k: material.at("rho_a", k) / material.at("c", k) ** 2,
    }[which]
    trip = _Triplets((space.ndof, space.ndof))
    for k in space.elements:
        a = coef(k)
        if a == 0.0:
            continue
        _, w, B, _ = space.volume_data(k)
        M = _sym(a * B.T @ (w[:, None] * B))
        if space.ncomp == 2:
            M = np.kron(np.eye(2), M)
        trip.add(space.dofs(k), space.dofs(k), M)
    return trip.tocsr()


@dataclass
class SystemMatrices:
    M_e1: sp.csr_matrix
    M_e2: sp.csr_matrix
    M_e3: sp.csr_matrix
    A_e: sp.csr_matrix
    C_e: sp.csr_matrix
    M_a: sp.csr_matrix
    A_a: sp.csr_matrix
    # dG-norm matrices (volume + penalty), used for energies
    N_e: sp.csr_matrix = field(repr=False, default=None)
    N_a: sp.csr_matrix = field(repr=False, default=None)

    @property
    def C_a(self) -> sp.csr_matrix:
        return (-self.C_e.T).tocsr()

    @property
    def n_e(self) -> int:
        return self.M_e1.shape[0]

    @property
    def n_a(self) -> int:
        return self.M_a.shape[0]

    def named(self) -> dict[str, sp.csr_matrix]:
        return {"M_e1": self.M_e1, "M_e2": self.M_e2, "M_e3": self.M_e3, "A_e": self.A_e, "C_e": self.C_e,
                "M_a": self.M_a, "A_a": self.A_a}


def assemble_system(space_e: DgSpace, space_a: DgSpace, material: Material,
                    params: StabilizationParams = StabilizationParams(), threads: int = 1) -> SystemMatrices:
    pe = elastic_pieces(space_e, material, params, threads)
    pa = acoustic_pieces(space_a, material, params, threads)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        C = assemble_coupling(space_e, space_a, material)
    return SystemMatrices(
        M_e1=assemble_mass(space_e, material, "rho_e"),
        M_e2=assemble_mass(space_e, material, "damping"),
        M_e3=assemble_mass(space_e, material, "damping2"),
        A_e=pe.stiffness,
        C_e=C,
        M_a=assemble_mass(space_a, material, "acoustic"),
        A_a=pa.stiffness,
        N_e=pe.norm,
        N_a=pa.norm,
    )


def dump_matrix(matrix: sp.spmatrix, path) -> None:
    """Coordinate text dump: ``row col value`` per line, 17 significant digits."""
    m = matrix.tocoo()
    order = np.lexsort((m.col, m.row))
    with open(path, "w") as fh:
        fh.write(f"% {m.shape[0]} {m.shape[1]} {m.nnz}\n")
        for i in order:
            fh.write(f"{m.row[i]} {m.col[i]} {m.data[i]:.17g}\n")


# --------------------------------------------------------------------------- loads

class LoadAssembler:
    """Right-hand sides (f_e, v) + (rho_a f_a, psi) plus weak Dirichlet lifts.

    Quadrature points and weighted test-function tables are precomputed once,
    so each time level costs closure evaluations and sparse products.
    """

    def __init__(self, space_e: DgSpace, space_a: DgSpace, scenario, params: StabilizationParams,
                 source_order: int = 24):
        self.space_e, self.space_a, self.scenario = space_e, space_a, scenario
        material = scenario.material
        mesh = space_e.mesh
        # elastic volume
        pts, rows_x, rows_y, vals = [], [], [], []
        npt = 0
        for k in space_e.elements:
            P, w, B, _ = space_e.volume_data(k)
            nb = space_e.bases[k].n
            d = space_e.dofs(k)
            idx = npt + np.arange(len(w))
            R, Q = np.meshgrid(d[:nb], idx, indexing="ij")
            rows_x.append((R.ravel(), Q.ravel(), (B * w[:, None]).T.ravel()))
            R, Q = np.meshgrid(d[nb:], idx, indexing="ij")
            rows_y.append((R.ravel(), Q.ravel(), (B * w[:, None]).T.ravel()))
            pts.append(P)
            npt += len(w)
        self.xe = np.vstack(pts) if pts else np.zeros((0, 2))
        self.Pe = [self._csr(rows_x, space_e.ndof, npt), self._csr(rows_y, space_e.ndof, npt)]
        # acoustic volume
        pts, rows = [], []
        npt = 0
        for k in space_a.elements:
            P, w, B, _ = space_a.volume_data(k)
            idx = npt + np.arange(len(w))
            R, Q = np.meshgrid(space_a.dofs(k), idx, indexing="ij")
            rows.append((R.ravel(), Q.ravel(), (material.at("rho_a", k) * B * w[:, None]).T.ravel()))
            pts.append(P)
            npt += len(w)
        self.xa = np.vstack(pts) if pts else np.zeros((0, 2))
        self.Pa = self._csr(rows, space_a.ndof, npt)
        # elastic Dirichlet lift: sum_q w (eta V_i - sigma(v_i) n) . g
        pts, rx, ry = [], [], []
        npt = 0
        for fi in mesh.faces_of_kind(FaceKind.BOUNDARY_ELASTIC):
            f = mesh.faces[fi]
            k = f.left
            eta = stabilization_eta(mesh, f, material, params, space_e.degrees)
            q, [(_, Bv, G)] = _face_sides(space_e, f, face_order(space_e, f))
            op = eta * value_operator(Bv) - traction_operator(G, material.voigt(k), f.normal)
            op *= q.weights[:, None, None]
            idx = npt + np.arange(len(q.weights))
            R, Q = np.meshgrid(space_e.dofs(k), idx, indexing="ij")
            rx.append((R.ravel(), Q.ravel(), op[:, 0, :].T.ravel()))
            ry.append((R.ravel(), Q.ravel(), op[:, 1, :].T.ravel()))
            pts.append(q.points)
            npt += len(q.weights)
        self.xbe = np.vstack(pts) if pts else np.zeros((0, 2))
        self.Qe = [self._csr(rx, space_e.ndof, npt), self._csr(ry, space_e.ndof, npt)]
        # acoustic Dirichlet lift: sum_q w (chi psi_j - rho_a grad psi_j . n) g
        pts, rows = [], []
        npt = 0
        for fi in mesh.faces_of_kind(FaceKind.BOUNDARY_ACOUSTIC):
            f = mesh.faces[fi]
            k = f.left
            chi = stabilization_chi(mesh, f, material, params, space_a.degrees)
            q, [(_, Bv, G)] = _face_sides(space_a, f, face_order(space_a, f))
            op = (chi * Bv - material.at("rho_a", k) * (G @ f.normal)) * q.weights[:, None]
            idx = npt + np.arange(len(q.weights))
            R, Q = np.meshgrid(space_a.dofs(k), idx, indexing="ij")
            rows.append((R.ravel(), Q.ravel(), op.T.ravel()))
            pts.append(q.points)
            npt += len(q.weights)
        self.xba = np.vstack(pts) if pts else np.zeros((0, 2))
        self.Qa = self._csr(rows, space_a.ndof, npt)
        # point sources: spatial part integrated once with a fine rule
        self.source_vectors = []
        for src in getattr(scenario, "point_sources", []) or []:
            vec = np.zeros(space_a.ndof)
            for k in space_a.elements:
                q = volume_quadrature(mesh.elements[k], source_order)
                vals = src.spatial(q.points[:, 0], q.points[:, 1])
                if np.max(np.abs(vals)) == 0.0:
                    continue
                B = space_a.bases[k].eval(q.points)
                vec[space_a.dofs(k)] = material.at("rho_a", k) * B.T @ (q.weights * vals)
            self.source_vectors.append((src, vec))

    @staticmethod
    def _csr(parts, nrows, ncols):
        if not parts:
            return sp.csr_matrix((nrows, ncols))
        r = np.concatenate([p[0] for p in parts])
        c = np.concatenate([p[1] for p in parts])
        v = np.concatenate([p[2] for p in parts])
        return sp.csr_matrix((v, (r, c)), shape=(nrows, ncols))

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        sc = self.scenario
        Fe = np.zeros(self.space_e.ndof)
        Fa = np.zeros(self.space_a.ndof)
        if sc.f_e is not None and len(self.xe):
            fx, fy = sc.f_e(self.xe[:, 0], self.xe[:, 1], t)
            Fe += self.Pe[0] @ np.broadcast_to(fx, len(self.xe)) + self.Pe[1] @ np.broadcast_to(fy, len(self.xe))
        if sc.g_e is not None and len(self.xbe):
            gx, gy = sc.g_e(self.xbe[:, 0], self.xbe[:, 1], t)
            Fe += self.Qe[0] @ np.broadcast_to(gx, len(self.xbe)) + self.Qe[1] @ np.broadcast_to(gy, len(self.xbe))
        if sc.f_a is not None and len(self.xa):
            Fa += self.Pa @ np.broadcast_to(sc.f_a(self.xa[:, 0], self.xa[:, 1], t), len(self.xa))
        if sc.g_a is not None and len(self.xba):
            Fa += self.Qa @ np.broadcast_to(sc.g_a(self.xba[:, 0], self.xba[:, 1], t), len(self.xba))
        for src, vec in self.source_vectors:
            Fa += src.time(t) * vec
        return Fe, Fa


def assemble_load(space_e: DgSpace, space_a: DgSpace, scenario, t: float,
                  params: StabilizationParams = StabilizationParams()) -> tuple[np.ndarray, np.ndarray]:
    """One-shot load assembly; use :class:`LoadAssembler` inside time loops."""
    return LoadAssembler(space_e, space_a, scenario, params)(t)
