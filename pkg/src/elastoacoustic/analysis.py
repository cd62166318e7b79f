"""Norms, energies, errors against exact solutions and convergence rates."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import (Material, StabilizationParams, acoustic_pieces, elastic_pieces, stabilization_chi,
                       stabilization_eta)
from .fespace import DgSpace, face_quadrature
from .mesh import FaceKind
from .timestepper import RunResult, State


@dataclass
class NormReport:
    dg_e: float
    dg_a: float
    l2_e: float
    l2_a: float
    energy: float | None = None
    t: float = 0.0

    def as_row(self) -> dict[str, float]:
        return {"err_dG_u": self.dg_e, "err_dG_phi": self.dg_a, "err_L2_u": self.l2_e, "err_L2_phi": self.l2_a}


# --------------------------------------------------------------------------- energy

def energy_split(state: State, mats, dt: float) -> tuple[float, float]:
    """Elastic and acoustic energies with backward-difference velocities."""
    with np.errstate(over="ignore", invalid="ignore"):  # blow-ups are reported by the stepper
        ve, va = state.velocity(dt)
        u, p = state.U_curr, state.P_curr
        ee = ve @ (mats.M_e1 @ ve) + u @ (mats.M_e3 @ u) + u @ (mats.N_e @ u)
        ea = va @ (mats.M_a @ va) + p @ (mats.N_a @ p)
    if not (math.isfinite(ee) and math.isfinite(ea)):
        return math.inf, math.inf
    return math.sqrt(max(ee, 0.0)), math.sqrt(max(ea, 0.0))


def energy_norm(state: State, mats, dt: float) -> float:
    ee, ea = energy_split(state, mats, dt)
    return math.hypot(ee, ea)


def energy_trace(result: RunResult) -> list[tuple[float, float, float, float]]:
    """Rows (t, E_elastic, E_acoustic, E_total) from a run's energy probe."""
    return [(t, ee, ea, math.hypot(ee, ea)) for t, ee, ea in result.energy]


# --------------------------------------------------------------------------- quadrature-loop norms

def _strain_energy_density(G, lam, mu):
    """sigma(e):eps(e) for gradients G[..., i, j] = d e_i / d x_j."""
    exx, eyy = G[..., 0, 0], G[..., 1, 1]
    exy = 0.5 * (G[..., 0, 1] + G[..., 1, 0])
    return 2 * mu * (exx ** 2 + eyy ** 2 + 2 * exy ** 2) + lam * (exx + eyy) ** 2


def _elastic_parts(space, material, params, coeffs, exact, grad, t, extra):
    """(volume, penalty, L2) squared norms of ``exact - discrete``.

    Either side may be absent. Exact closures are continuous, so only the
    discrete field contributes to interior jumps.
    """
    mesh = space.mesh
    vol = l2 = 0.0
    for k in space.elements:
        order = 2 * space.degrees[k] + extra
        P, w, _, _ = space.volume_data(k, order)
        e = np.zeros((len(w), 2))
        ge = np.zeros((len(w), 2, 2))
        if exact is not None:
            e += np.asarray(exact(P[:, 0], P[:, 1], t)).T
            ge += np.moveaxis(np.asarray(grad(P[:, 0], P[:, 1], t)), -1, 0)
        if coeffs is not None:
            v, g = space.evaluate(coeffs, k, P)
            e -= v
            ge -= g
        vol += w @ _strain_energy_density(ge, material.at("lam", k), material.at("mu", k))
        l2 += w @ (e ** 2).sum(axis=1)
    pen = 0.0
    for fi in mesh.faces_of_kind(FaceKind.INTERIOR_ELASTIC, FaceKind.BOUNDARY_ELASTIC):
        f = mesh.faces[fi]
        eta = stabilization_eta(mesh, f, material, params, space.degrees)
        p = max(space.degrees[f.left], space.degrees[f.right] if f.right is not None else 0)
        q = face_quadrature(mesh, f, 2 * p + extra)
        jump = np.zeros((len(q.weights), 2))
        if f.right is None:
            if exact is not None:
                jump += np.asarray(exact(q.points[:, 0], q.points[:, 1], t)).T
            if coeffs is not None:
                jump -= space.evaluate(coeffs, f.left, q.points)[0]
        elif coeffs is not None:
            jump = space.evaluate(coeffs, f.left, q.points)[0] - space.evaluate(coeffs, f.right, q.points)[0]
        pen += eta * (q.weights @ (jump ** 2).sum(axis=1))
    return vol, pen, l2


def _acoustic_parts(space, material, params, coeffs, exact, grad, t, extra):
    mesh = space.mesh
    vol = l2 = 0.0
    for k in space.elements:
        order = 2 * space.degrees[k] + extra
        P, w, _, _ = space.volume_data(k, order)
        e = np.zeros(len(w))
        ge = np.zeros((len(w), 2))
        if exact is not None:
            e += np.asarray(exact(P[:, 0], P[:, 1], t))
            ge += np.asarray(grad(P[:, 0], P[:, 1], t)).T
        if coeffs is not None:
            v, g = space.evaluate(coeffs, k, P)
            e -= v
            ge -= g
        vol += material.at("rho_a", k) * (w @ (ge ** 2).sum(axis=1))
        l2 += w @ e ** 2
    pen = 0.0
    for fi in mesh.faces_of_kind(FaceKind.INTERIOR_ACOUSTIC, FaceKind.BOUNDARY_ACOUSTIC):
        f = mesh.faces[fi]
        chi = stabilization_chi(mesh, f, material, params, space.degrees)
        p = max(space.degrees[f.left], space.degrees[f.right] if f.right is not None else 0)
        q = face_quadrature(mesh, f, 2 * p + extra)
        jump = np.zeros(len(q.weights))
        if f.right is None:
            if exact is not None:
                jump += np.asarray(exact(q.points[:, 0], q.points[:, 1], t))
            if coeffs is not None:
                jump -= space.evaluate(coeffs, f.left, q.points)[0]
        elif coeffs is not None:
            jump = space.evaluate(coeffs, f.left, q.points)[0] - space.evaluate(coeffs, f.right, q.points)[0]
        pen += chi * (q.weights @ jump ** 2)
    return vol, pen, l2


def dg_norms(space_e: DgSpace, space_a: DgSpace, material: Material,
             params: StabilizationParams = StabilizationParams(), u=None, phi=None, grad_u=None,
             grad_phi=None, t: float = 0.0, extra_order: int = 4) -> NormReport:
    """dG and L2 norms of discrete fields (coefficient vectors) or closures.

    For closures pass the gradient closure as well; closures are treated as
    continuous, so their interior jumps vanish and only boundary traces count.
    """
    def split(f):
        return (f, None) if isinstance(f, np.ndarray) else (None, f)

    cu, xu = split(u)
    cp, xp = split(phi)
    ve, pe, le = _elastic_parts(space_e, material, params, cu, xu, grad_u, t, extra_order)
    va, pa, la = _acoustic_parts(space_a, material, params, cp, xp, grad_phi, t, extra_order)
    return NormReport(math.sqrt(ve + pe), math.sqrt(va + pa), math.sqrt(le), math.sqrt(la), t=t)


def errors_vs_exact(U: np.ndarray, P: np.ndarray, scenario, t: float, space_e: DgSpace, space_a: DgSpace,
                    params: StabilizationParams = StabilizationParams(), extra_order: int = 4) -> NormReport:
    """Norms of ``exact - discrete``; quadrature order 2p + ``extra_order``."""
    ve, pe, le = _elastic_parts(space_e, scenario.material, params, U, scenario.exact_u, scenario.exact_grad_u,
                                t, extra_order)
    va, pa, la = _acoustic_parts(space_a, scenario.material, params, P, scenario.exact_phi,
                                 scenario.exact_grad_phi, t, extra_order)
    return NormReport(math.sqrt(ve + pe), math.sqrt(va + pa), math.sqrt(le), math.sqrt(la), t=t)


# --------------------------------------------------------------------------- rates

@dataclass
class RateTable:
    key: str  # "h" or "p"
    rows: list[dict]
    slopes: dict[str, float]
    non_monotone: dict[str, bool] = field(default_factory=dict)

    def summary(self) -> str:
        parts = [f"{name}={s:.3f}{' (non-monotone)' if self.non_monotone.get(name) else ''}"
                 for name, s in self.slopes.items()]
        return "slopes: " + ", ".join(parts)


ERROR_COLUMNS = ("err_dG_u", "err_dG_phi", "err_L2_u", "err_L2_phi")


def fit_slope(x, err) -> float:
    """Least-squares slope of log(err) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(err, float)), 1)[0])


def rate_table(rows: list[dict], key: str = "h", columns=ERROR_COLUMNS) -> RateTable:
    """Fit log-log slopes; each row holds ``key``, ``dofs`` and error columns.

    Rows are ordered coarse to fine (h decreasing). For ``key="p"`` the slope
    is against p itself on a log scale of the error (log10 decay per degree).
    """
    if len(rows) < 2:
        raise ValueError("insufficient levels: need at least 2 for a rate fit")
    if len(rows) < 3:
        warnings.warn("rate fitted from only two levels", stacklevel=2)
    rows = sorted(rows, key=lambda r: -r[key] if key == "h" else r[key])
    xs = np.array([r[key] for r in rows], float)
    if np.any(np.diff(xs) == 0):
        raise ValueError(f"repeated {key} values in rate table")
    slopes, flags = {}, {}
    for c in columns:
        e = np.array([r[c] for r in rows], float)
        if key == "h":
            slopes[c] = fit_slope(xs, e)
        else:
            slopes[c] = float(np.polyfit(xs, np.log10(e), 1)[0])
        flags[c] = bool(np.any(np.diff(e) >= 0))
    return RateTable(key, rows, slopes, flags)


# --------------------------------------------------------------------------- inequality checks

def rayleigh_quotients(A: sp.spmatrix, N: sp.spmatrix, samples: int = 50, seed: int = 0) -> np.ndarray:
    """v^T A v / v^T N v for random Gaussian coefficient vectors."""
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    for i in range(samples):
        v = rng.standard_normal(A.shape[0])
        out[i] = (v @ (A @ v)) / (v @ (N @ v))
    return out


@dataclass
class FluxRatioReport:
    elastic: dict[float, float]
    acoustic: dict[float, float]

    def halving_ratios(self) -> tuple[list[float], list[float]]:
        def succ(d):
            vals = [d[k] for k in sorted(d)]
            return [b / a if a > 0 else 0.0 for a, b in zip(vals, vals[1:])]
        return succ(self.elastic), succ(self.acoustic)


def _ratio(avg, vol, v) -> float:
    num, den = v @ (avg @ v), v @ (vol @ v)
    if den <= 0.0:
        return 0.0 if num <= 1e-300 else math.inf
    return math.sqrt(max(num, 0.0) / den)


def flux_penalty_ratios(space_e: DgSpace, space_a: DgSpace, material: Material, alphas=(1.0, 4.0, 16.0),
                    betas=(1.0, 4.0, 16.0), samples: int = 50, seed: int = 0,
                    scale_boundary: bool = True) -> FluxRatioReport:
    """Max over random fields of ||eta^-1/2 {sigma(v)}|| / ||C^1/2 eps(v)|| (and the acoustic analogue)."""
    rng = np.random.default_rng(seed)
    ve = [rng.standard_normal(space_e.ndof) for _ in range(samples)]
    va = [rng.standard_normal(space_a.ndof) for _ in range(samples)]
    el, ac = {}, {}
    for a in alphas:
        pc = elastic_pieces(space_e, material, StabilizationParams(alpha=a, scale_boundary=scale_boundary))
        el[a] = max(_ratio(pc.avg_flux, pc.volume, v) for v in ve)
    for b in betas:
        pc = acoustic_pieces(space_a, material, StabilizationParams(beta=b, scale_boundary=scale_boundary))
        ac[b] = max(_ratio(pc.avg_flux, pc.volume, v) for v in va)
    return FluxRatioReport(el, ac)


def coercivity_margin(mats, samples: int = 50, seed: int = 0) -> float:
    """min over random W of (||W||_dG^2 - 2 consistency terms) / ||W||_dG^2."""
    qe = rayleigh_quotients(mats.A_e, mats.N_e, samples, seed)
    qa = rayleigh_quotients(mats.A_a, mats.N_a, samples, seed + 1)
    return float(min(qe.min(), qa.min()))


# --------------------------------------------------------------------------- forced stability bound

def source_norms(scenario, space_e: DgSpace, space_a: DgSpace, times) -> np.ndarray:
    """||f_e(t)||_L2(Omega_e) + ||f_a(t)||_L2(Omega_a) at each time."""
    out = []
    for t in times:
        s = 0.0
        if scenario.f_e is not None:
            acc = 0.0
            for k in space_e.elements:
                P, w, _, _ = space_e.volume_data(k)
                f = np.asarray(scenario.f_e(P[:, 0], P[:, 1], t))
                acc += w @ (f ** 2).sum(axis=0)
            s += math.sqrt(acc)
        if scenario.f_a is not None:
            acc = 0.0
            for k in space_a.elements:
                P, w, _, _ = space_a.volume_data(k)
                acc += w @ np.asarray(scenario.f_a(P[:, 0], P[:, 1], t)) ** 2
            s += math.sqrt(acc)
        out.append(s)
    return np.array(out)


def stability_constant(times, energies, src_norms) -> float:
    """Smallest C with E(t) <= E(t0) + C int_{t0}^t ||f|| (trapezoidal)."""
    times, energies = np.asarray(times, float), np.asarray(energies, float)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (src_norms[1:] + src_norms[:-1]))])
    excess = energies - energies[0]
    mask = cum > 0
    if not np.any(mask):
        return 0.0
    return float(max(0.0, np.max(excess[mask] / cum[mask])))


# --------------------------------------------------------------------------- sampling

def sampling_matrix(space: DgSpace, points=None) -> tuple[np.ndarray, sp.csr_matrix]:
    """Sparse map from coefficients to point values of a scalar space.

    Without ``points`` the volume quadrature nodes of every element are used.
    """
    if space.ncomp != 1:
        raise ValueError("sampling_matrix expects a scalar space")
    mesh = space.mesh
    if points is None:
        blocks = [(k, space.volume_data(k)[0]) for k in space.elements]
    else:
        points = np.asarray(points, float).reshape(-1, 2)
        owner = mesh.locate(points)
        if np.any([k not in space for k in owner]):
            raise ValueError("sampling point outside the space's subdomain")
        blocks = [(k, points[owner == k]) for k in space.elements if np.any(owner == k)]
        order = np.concatenate([np.flatnonzero(owner == k) for k, _ in blocks])
    rows, cols, vals, pts = [], [], [], []
    pos = 0
    for k, P in blocks:
        B = space.bases[k].eval(P)
        r, c = np.meshgrid(pos + np.arange(len(P)), space.dofs(k), indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(B.ravel())
        pts.append(P)
        pos += len(P)
    S = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(pos, space.ndof))
    P = np.vstack(pts)
    if points is not None:  # restore caller's ordering
        inv = np.empty_like(order)
        inv[order] = np.arange(len(order))
        S, P = S[inv], P[inv]
    return P, S


def mirror_asymmetry(space: DgSpace, coeffs: np.ndarray, y_mid: float) -> float:
    """max |phi(x, y) - phi(x, 2 y_mid - y)| / max |phi| over quadrature nodes."""
    P, S = sampling_matrix(space)
    Q = P.copy()
    Q[:, 1] = 2 * y_mid - Q[:, 1]
    _, Sm = sampling_matrix(space, Q)
    v, vm = S @ coeffs, Sm @ coeffs
    scale = np.abs(v).max()
    return 0.0 if scale == 0 else float(np.abs(v - vm).max() / scale)
