"""Leap-frog integration of the coupled elasto-acoustic block system.

With ``X`` the elastic and ``P`` the acoustic coefficient vectors, one step is

    [[M1 + dt/2 M2,  dt/2 C ], [X+]   [[-M1 + dt/2 M2,  dt/2 C], [X-]
     [ -dt/2 C^T,     Ma    ]] [P+] =  [ -dt/2 C^T,      -Ma   ]] [P-]
                                     + blockdiag(2 M1 - dt^2 (A_e + M3), 2 Ma - dt^2 A_a) [X; P]
                                     + dt^2 [F_e; F_a]

The left block is factorized once.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import LoadAssembler, StabilizationParams, SystemMatrices, assemble_system
from .fespace import DgSpace, l2_project, make_spaces
from .mesh import PolyMesh

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite solution at step {step} (t = {t:.6g}); time step likely above the CFL limit")
        self.step = step
        self.t = t


class PowerIterationError(RuntimeError):
    pass


@dataclass
class State:
    U_prev: np.ndarray
    U_curr: np.ndarray
    P_prev: np.ndarray
    P_curr: np.ndarray
    n: int
    t: float

    def velocity(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        """Backward-difference velocities at the current level."""
        return (self.U_curr - self.U_prev) / dt, (self.P_curr - self.P_prev) / dt


@dataclass
class LeapfrogOperator:
    dt: float
    n_e: int
    n_a: int
    left: sp.csc_matrix
    R_prev: sp.csr_matrix
    R_curr: sp.csr_matrix
    lu: object = field(repr=False)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.lu.solve(rhs)

    def apply(self, b_e: np.ndarray, b_a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Left-block inverse applied to ``(b_e, b_a)``."""
        x = self.solve(np.concatenate([b_e, b_a]))
        return x[:self.n_e], x[self.n_e:]

    def residual(self, rhs: np.ndarray, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.left @ x - rhs) / max(np.linalg.norm(rhs), 1e-300))


def build_operator(mats: SystemMatrices, dt: float) -> LeapfrogOperator:
    if not dt > 0:
        raise ValueError("time step must be positive")
    h = 0.5 * dt
    C = mats.C_e
    Ct = mats.C_e.T
    left = sp.bmat([[mats.M_e1 + h * mats.M_e2, h * C], [-h * Ct, mats.M_a]], format="csc")
    R_prev = sp.bmat([[-mats.M_e1 + h * mats.M_e2, h * C], [-h * Ct, -mats.M_a]], format="csr")
    R_curr = sp.block_diag([2 * mats.M_e1 - dt ** 2 * (mats.A_e + mats.M_e3),
                            2 * mats.M_a - dt ** 2 * mats.A_a], format="csr")
    try:
        lu = spla.splu(left)
    except RuntimeError as exc:  # scipy reports exactly singular factors this way
        raise np.linalg.LinAlgError(f"left block is singular: {exc}") from exc
    if not np.all(np.isfinite(lu.U.diagonal())) or np.any(lu.U.diagonal() == 0):
        raise np.linalg.LinAlgError("left block factorization has a zero pivot")
    return LeapfrogOperator(dt, mats.n_e, mats.n_a, left, R_prev, R_curr, lu)


def step(op: LeapfrogOperator, state: State, F_e: np.ndarray, F_a: np.ndarray) -> State:
    """Advance from levels (n-1, n) to (n, n+1) with the load at t_n."""
    prev = np.concatenate([state.U_prev, state.P_prev])
    curr = np.concatenate([state.U_curr, state.P_curr])
    rhs = op.R_prev @ prev + op.R_curr @ curr
    rhs[:op.n_e] += op.dt ** 2 * F_e
    rhs[op.n_e:] += op.dt ** 2 * F_a
    nxt = op.solve(rhs)
    n = state.n + 1
    if not np.all(np.isfinite(nxt)):
        raise DivergenceError(n, n * op.dt)
    return State(state.U_curr, nxt[:op.n_e], state.P_curr, nxt[op.n_e:], n, n * op.dt)


def _mass_solver(mats: SystemMatrices):
    lu_e = spla.splu(mats.M_e1.tocsc()) if mats.n_e else None
    lu_a = spla.splu(mats.M_a.tocsc()) if mats.n_a else None
    return (lambda b: lu_e.solve(b) if lu_e else b), (lambda b: lu_a.solve(b) if lu_a else b)


def initial_state(scenario, space_e: DgSpace, space_a: DgSpace, dt: float, startup: str = "taylor1",
                  mats: SystemMatrices | None = None, loads: Callable | None = None) -> State:
    """Levels 0 and 1 from the initial data.

    ``taylor1`` is U1 = U0 + dt V0. ``taylor2`` adds dt^2/2 times the
    acceleration of the semi-discrete system and needs ``mats`` and ``loads``.
    """
    def vec(f):
        return None if f is None else (lambda x, y: f(x, y))

    U0 = l2_project(space_e, vec(scenario.u0)) if scenario.u0 else np.zeros(space_e.ndof)
    V0 = l2_project(space_e, vec(scenario.u1)) if scenario.u1 else np.zeros(space_e.ndof)
    P0 = l2_project(space_a, vec(scenario.phi0)) if scenario.phi0 else np.zeros(space_a.ndof)
    W0 = l2_project(space_a, vec(scenario.phi1)) if scenario.phi1 else np.zeros(space_a.ndof)
    U1 = U0 + dt * V0
    P1 = P0 + dt * W0
    if startup == "taylor2":
        if mats is None or loads is None:
            raise ValueError("taylor2 startup needs the system matrices and a load callable")
        Fe, Fa = loads(0.0)
        inv_e, inv_a = _mass_solver(mats)
        acc_e = inv_e(Fe - (mats.A_e + mats.M_e3) @ U0 - mats.M_e2 @ V0 - mats.C_e @ W0)
        acc_a = inv_a(Fa - mats.A_a @ P0 + mats.C_e.T @ V0)
        U1 = U1 + 0.5 * dt ** 2 * acc_e
        P1 = P1 + 0.5 * dt ** 2 * acc_a
    elif startup != "taylor1":
        raise ValueError(f"unknown startup {startup!r}")
    return State(U0, U1, P0, P1, 1, dt)


def estimate_stable_dt(mats: SystemMatrices, safety: float = 0.5, tol: float = 1e-6, max_iter: int = 10_000,
                       seed: int = 0) -> float:
    """Heuristic CFL step ``safety * 2 / sqrt(lambda_max)``.

    ``lambda_max`` is the largest eigenvalue of blockdiag(M1, Ma)^-1 blockdiag(A_e + M3, A_a)
    found by power iteration; the interface coupling is ignored.
    """
    K = sp.block_diag([mats.A_e + mats.M_e3, mats.A_a], format="csr")
    M = sp.block_diag([mats.M_e1, mats.M_a], format="csc")
    lu = spla.splu(M)
    x = np.random.default_rng(seed).standard_normal(K.shape[0])
    lam_old = 0.0
    for it in range(max_iter):
        y = lu.solve(K @ x)
        x = y / np.sqrt(y @ (M @ y))
        lam = float(x @ (K @ x))
        if it > 2 and abs(lam - lam_old) <= tol * abs(lam):
            log.debug("power iteration converged in %d iterations, lambda_max=%.6g", it, lam)
            return safety * 2.0 / math.sqrt(lam)
        lam_old = lam
    raise PowerIterationError(f"power iteration did not converge in {max_iter} iterations")


def scalar_system(m: float, k: float) -> SystemMatrices:
    """One elastic dof with mass ``m`` and stiffness ``k``; no acoustic dofs."""
    one = sp.csr_matrix([[m]])
    z = sp.csr_matrix((1, 1))
    empty = sp.csr_matrix((0, 0))
    return SystemMatrices(M_e1=one, M_e2=z, M_e3=z, A_e=sp.csr_matrix([[k]]), C_e=sp.csr_matrix((1, 0)),
                          M_a=empty, A_a=empty)


def scalar_oscillator(dt: float, T: float, m: float = 1.0, k: float = 1.0, u0: float = 1.0,
                      v0: float = 0.0, startup: str = "taylor1") -> np.ndarray:
    """Leap-frog trajectory of m u'' + k u = 0 (levels 0..round(T/dt)).

    ``taylor1`` starts with u1 = u0 + dt v0, which limits the global error to
    first order; ``taylor2`` adds -dt^2/2 (k/m) u0 and exposes the second-order
    accuracy of the recurrence.
    """
    op = build_operator(scalar_system(m, k), dt)
    e = np.zeros(0)
    u1 = u0 + dt * v0
    if startup == "taylor2":
        u1 -= 0.5 * dt ** 2 * k / m * u0
    elif startup != "taylor1":
        raise ValueError(f"unknown startup {startup!r}")
    state = State(np.array([u0]), np.array([u1]), e, e, 1, dt)
    out = [u0, state.U_curr[0]]
    zero = np.zeros(1)
    for _ in range(int(round(T / dt)) - 1):
        state = step(op, state, zero, e)
        out.append(state.U_curr[0])
    return np.array(out)


# --------------------------------------------------------------------------- driver

@dataclass
class Probes:
    """What to record during a run; cadences are in steps (0 disables)."""
    energy_every: int = 0
    points: list[tuple[float, float]] = field(default_factory=list)
    points_every: int = 0
    snapshot_every: int = 0
    on_snapshot: Callable | None = None  # (state, space_e, space_a)
    # streaming sinks, called as records are produced
    on_energy: Callable | None = None  # (t, E_e, E_a)
    on_points: Callable | None = None  # (t, values)


@dataclass
class RunResult:
    state: State
    dt: float
    n_steps: int
    space_e: DgSpace
    space_a: DgSpace
    mats: SystemMatrices
    energy: list[tuple[float, float, float]] = field(default_factory=list)  # (t, E_e, E_a)
    samples: list[tuple[float, np.ndarray]] = field(default_factory=list)


class PointSampler:
    """Evaluates u (elastic points) or phi (acoustic points) at fixed locations."""

    def __init__(self, space_e: DgSpace, space_a: DgSpace, points):
        self.space_e, self.space_a = space_e, space_a
        self.points = np.asarray(points, float).reshape(-1, 2)
        self.owner = space_e.mesh.locate(self.points) if len(self.points) else np.zeros(0, int)
        self.columns = []
        for i, k in enumerate(self.owner):
            if k < 0:
                self.columns += [f"p{i}_nan"]
            elif k in space_e:
                self.columns += [f"p{i}_ux", f"p{i}_uy"]
            else:
                self.columns += [f"p{i}_phi"]

    def __call__(self, state: State) -> np.ndarray:
        vals = []
        for p, k in zip(self.points, self.owner):
            if k < 0:
                vals.append(np.nan)
            elif k in self.space_e:
                v, _ = self.space_e.evaluate(state.U_curr, k, p[None, :])
                vals += [v[0, 0], v[0, 1]]
            else:
                v, _ = self.space_a.evaluate(state.P_curr, k, p[None, :])
                vals.append(v[0])
        return np.array(vals, float)


def run(scenario, mesh: PolyMesh, degrees, dt: float, T: float, probes: Probes | None = None,
        params: StabilizationParams = StabilizationParams(), startup: str = "taylor1", threads: int = 1,
        mats: SystemMatrices | None = None) -> RunResult:
    """Assemble, start up and integrate to ``T`` (``round(T/dt)`` levels)."""
    from .analysis import energy_split  # local import: analysis depends on this module

    probes = probes or Probes()
    n_total = int(round(T / dt))
    if n_total < 1:
        raise ValueError("final time shorter than one step")
    if abs(n_total * dt - T) > 1e-9 * max(T, 1.0):
        log.warning("T = %g is not a multiple of dt = %g; running %d steps", T, dt, n_total)
    space_e, space_a = make_spaces(mesh, degrees)
    if mats is None:
        mats = assemble_system(space_e, space_a, scenario.material, params, threads)
    loads = LoadAssembler(space_e, space_a, scenario, params)
    op = build_operator(mats, dt)
    state = initial_state(scenario, space_e, space_a, dt, startup, mats, loads)
    result = RunResult(state, dt, n_total, space_e, space_a, mats)
    sampler = PointSampler(space_e, space_a, probes.points) if probes.points else None

    def observe(s: State):
        if probes.energy_every and s.n % probes.energy_every == 0:
            ee, ea = energy_split(s, mats, dt)
            result.energy.append((s.t, ee, ea))
            if probes.on_energy is not None:
                probes.on_energy(s.t, ee, ea)
        if sampler is not None and probes.points_every and s.n % probes.points_every == 0:
            record_points(s.t, sampler(s))
        if probes.on_snapshot is not None and probes.snapshot_every and s.n % probes.snapshot_every == 0:
            probes.on_snapshot(s, space_e, space_a)

    def record_points(t, vals):
        result.samples.append((t, vals))
        if probes.on_points is not None:
            probes.on_points(t, vals)

    if sampler is not None and probes.points_every:
        record_points(0.0, sampler(replace(state, U_curr=state.U_prev, P_curr=state.P_prev, n=0, t=0.0)))
    observe(state)
    for _ in range(n_total - 1):
        Fe, Fa = loads(state.t)
        state = step(op, state, Fe, Fa)
        observe(state)
    result.state = state
    return result
