"""Dense quadrature-loop evaluation of the bilinear forms.

Slow and deliberately plain: full 2x2 stress tensors, tensor jumps
``v_L (x) n_L + v_R (x) n_R`` and penalties recomputed from their
definition. Used to cross-check the sparse assembly on small meshes.
"""
from __future__ import annotations

import numpy as np

from .assembly import Material, StabilizationParams
from .fespace import DgSpace, face_quadrature, volume_quadrature
from .mesh import FaceKind


def _vector_basis(space: DgSpace, k: int, x: np.ndarray):
    """Values (n, 2) and gradients (n, 2, 2) of the vector modes at one point."""
    b = space.bases[k]
    phi = b.eval(x[None, :])[0]
    dphi = b.eval_grad(x[None, :])[0]
    nb = b.n
    vals = np.zeros((2 * nb, 2))
    grads = np.zeros((2 * nb, 2, 2))
    for comp in range(2):
        vals[comp * nb:(comp + 1) * nb, comp] = phi
        grads[comp * nb:(comp + 1) * nb, comp, :] = dphi
    return vals, grads


def _stress(grad, lam, mu):
    eps = 0.5 * (grad + np.swapaxes(grad, -1, -2))
    tr = eps[..., 0, 0] + eps[..., 1, 1]
    return 2 * mu * eps + lam * tr[..., None, None] * np.eye(2)


def _local_h(space, k):
    return space.mesh.elements[k].diameter


def _eta(space, material, params, face):
    def loc(k):
        lam, mu = material.at("lam", k), material.at("mu", k)
        return (2 * mu + 2 * lam) * space.degrees[k] ** 2 / _local_h(space, k)
    if face.right is None:
        return (params.alpha if params.scale_boundary else 1.0) * loc(face.left)
    return params.alpha * max(loc(face.left), loc(face.right))


def _chi(space, material, params, face):
    def loc(k):
        return material.at("rho_a", k) * space.degrees[k] ** 2 / _local_h(space, k)
    if face.right is None:
        return (params.beta if params.scale_boundary else 1.0) * loc(face.left)
    return params.beta * max(loc(face.left), loc(face.right))


def elastic_forms(space: DgSpace, material: Material, params: StabilizationParams):
    """Dense (M_e1, M_e2, M_e3, A_e)."""
    n = space.ndof
    M1, M2, M3, A = (np.zeros((n, n)) for _ in range(4))
    for k in space.elements:
        d = space.dofs(k)
        rho, zeta = material.at("rho_e", k), material.at("zeta", k)
        lam, mu = material.at("lam", k), material.at("mu", k)
        q = volume_quadrature(space.mesh.elements[k], 2 * space.degrees[k] + 2)
        for x, w in zip(q.points, q.weights):
            v, g = _vector_basis(space, k, x)
            s = _stress(g, lam, mu)
            mass = w * v @ v.T
            M1[np.ix_(d, d)] += rho * mass
            M2[np.ix_(d, d)] += 2 * rho * zeta * mass
            M3[np.ix_(d, d)] += rho * zeta ** 2 * mass
            A[np.ix_(d, d)] += w * np.einsum("iab,jab->ij", 0.5 * (g + np.swapaxes(g, 1, 2)), s)
    mesh = space.mesh
    for fi in mesh.faces_of_kind(FaceKind.INTERIOR_ELASTIC, FaceKind.BOUNDARY_ELASTIC):
        f = mesh.faces[fi]
        eta = _eta(space, material, params, f)
        sides = [(f.left, f.normal)] + ([(f.right, -f.normal)] if f.right is not None else [])
        p = max(space.degrees[k] for k, _ in sides)
        q = face_quadrature(mesh, f, 2 * p + 2)
        dofs = np.concatenate([space.dofs(k) for k, _ in sides])
        avg_w = 1.0 / len(sides)
        for x, w in zip(q.points, q.weights):
            jumps, avgs = [], []
            for k, nk in sides:
                v, g = _vector_basis(space, k, x)
                jumps.append(np.einsum("ia,b->iab", v, nk))
                avgs.append(avg_w * _stress(g, material.at("lam", k), material.at("mu", k)))
            J = np.concatenate(jumps)
            S = np.concatenate(avgs)
            cons = np.einsum("iab,jab->ij", J, S)  # {sigma(phi_j)} : [phi_i]
            blk = eta * np.einsum("iab,jab->ij", J, J) - cons - cons.T
            A[np.ix_(dofs, dofs)] += w * blk
    return M1, M2, M3, A


def acoustic_forms(space: DgSpace, material: Material, params: StabilizationParams):
    """Dense (M_a, A_a)."""
    n = space.ndof
    M, A = np.zeros((n, n)), np.zeros((n, n))
    for k in space.elements:
        d = space.dofs(k)
        rho, c = material.at("rho_a", k), material.at("c", k)
        q = volume_quadrature(space.mesh.elements[k], 2 * space.degrees[k] + 2)
        b = space.bases[k]
        for x, w in zip(q.points, q.weights):
            v = b.eval(x[None, :])[0]
            g = b.eval_grad(x[None, :])[0]
            M[np.ix_(d, d)] += w * rho / c ** 2 * np.outer(v, v)
            A[np.ix_(d, d)] += w * rho * g @ g.T
    mesh = space.mesh
    for fi in mesh.faces_of_kind(FaceKind.INTERIOR_ACOUSTIC, FaceKind.BOUNDARY_ACOUSTIC):
        f = mesh.faces[fi]
        chi = _chi(space, material, params, f)
        sides = [(f.left, f.normal)] + ([(f.right, -f.normal)] if f.right is not None else [])
        p = max(space.degrees[k] for k, _ in sides)
        q = face_quadrature(mesh, f, 2 * p + 2)
        dofs = np.concatenate([space.dofs(k) for k, _ in sides])
        avg_w = 1.0 / len(sides)
        for x, w in zip(q.points, q.weights):
            jumps, avgs = [], []
            for k, nk in sides:
                b = space.bases[k]
                jumps.append(np.outer(b.eval(x[None, :])[0], nk))
                avgs.append(avg_w * material.at("rho_a", k) * b.eval_grad(x[None, :])[0])
            J = np.concatenate(jumps)
            F = np.concatenate(avgs)
            cons = J @ F.T
            A[np.ix_(dofs, dofs)] += w * (chi * J @ J.T - cons - cons.T)
    return M, A


def coupling_form(space_e: DgSpace, space_a: DgSpace, material: Material) -> np.ndarray:
    """Dense C_e[i, j] = int rho_a psi_j (v_i . n_e) over the interface."""
    mesh = space_e.mesh
    C = np.zeros((space_e.ndof, space_a.ndof))
    for fi in mesh.faces_of_kind(FaceKind.INTERFACE):
        f = mesh.faces[fi]
        ke, ka = f.left, f.right
        q = face_quadrature(mesh, f, 2 * max(space_e.degrees[ke], space_a.degrees[ka]) + 2)
        for x, w in zip(q.points, q.weights):
            v, _ = _vector_basis(space_e, ke, x)
            psi = space_a.bases[ka].eval(x[None, :])[0]
            C[np.ix_(space_e.dofs(ke), space_a.dofs(ka))] += w * material.at("rho_a", ka) * np.outer(v @ f.normal, psi)
    return C


def reference_system(space_e: DgSpace, space_a: DgSpace, material: Material,
                     params: StabilizationParams = StabilizationParams()) -> dict[str, np.ndarray]:
    M1, M2, M3, Ae = elastic_forms(space_e, material, params)
    Ma, Aa = acoustic_forms(space_a, material, params)
    return {"M_e1": M1, "M_e2": M2, "M_e3": M3, "A_e": Ae, "C_e": coupling_form(space_e, space_a, material),
            "M_a": Ma, "A_a": Aa}
