"""h- and p-convergence drivers shared by the CLI, scripts and acceptance tests."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .analysis import RateTable, errors_vs_exact, rate_table
from .assembly import StabilizationParams, assemble_system
from .fespace import make_spaces
from .mesh import PolyMesh, generate_mesh
from .timestepper import estimate_stable_dt, run

log = logging.getLogger(__name__)


def mean_diameter(mesh: PolyMesh) -> float:
    return float(np.mean([el.diameter for el in mesh.elements]))


@dataclass
class Level:
    mesh: PolyMesh
    degree: int


def cfl_dt(mesh: PolyMesh, scenario, degree: int, T: float, safety: float,
           params: StabilizationParams) -> float:
    """Stable step ``safety * estimate`` shrunk so that it divides ``T``."""
    se, sa = make_spaces(mesh, degree)
    est = estimate_stable_dt(assemble_system(se, sa, scenario.material, params), safety)
    return T / math.ceil(T / est - 1e-9)


def measure(scenario, level: Level, dt: float, T: float, params: StabilizationParams, startup: str = "taylor1",
            threads: int = 1) -> dict:
    res = run(scenario, level.mesh, level.degree, dt, T, params=params, startup=startup, threads=threads)
    err = errors_vs_exact(res.state.U_curr, res.state.P_curr, scenario, res.state.t, res.space_e, res.space_a,
                          params)
    row = {"h": mean_diameter(level.mesh), "p": level.degree, "dofs": res.space_e.ndof + res.space_a.ndof,
           "dt": dt, **err.as_row()}
    log.info("p=%d h=%.4f dofs=%d errors %s", level.degree, row["h"], row["dofs"], err.as_row())
    return row


def h_study(scenario, element_counts, degree: int = 2, dt: float | None = 1e-4, T: float = 0.2, seed: int = 0,
            params: StabilizationParams = StabilizationParams(), safety: float = 0.5, lloyd_iterations: int = 100,
            startup: str = "taylor1", threads: int = 1) -> RateTable:
    """Errors at ``T`` on Voronoi meshes with the given total cell counts.

    ``dt=None`` picks ``safety`` times the CFL estimate on each mesh.
    """
    rows = []
    for n in element_counts:
        mesh = generate_mesh(n_elastic=n // 2, n_acoustic=n - n // 2, degree=degree, rng_seed=seed,
                             lloyd_iterations=lloyd_iterations)
        step = dt if dt is not None else cfl_dt(mesh, scenario, degree, T, safety, params)
        rows.append(measure(scenario, Level(mesh, degree), step, T, params, startup, threads))
    return rate_table(rows, "h")


def p_study(scenario, degrees, n_elements: int = 300, dt: float | None = 1e-4, T: float = 0.2, seed: int = 0,
            params: StabilizationParams = StabilizationParams(), safety: float = 0.5, lloyd_iterations: int = 100,
            startup: str = "taylor1", threads: int = 1) -> RateTable:
    mesh = generate_mesh(n_elastic=n_elements // 2, n_acoustic=n_elements - n_elements // 2, degree=1,
                         rng_seed=seed, lloyd_iterations=lloyd_iterations)
    rows = []
    for p in degrees:
        step = dt if dt is not None else cfl_dt(mesh, scenario, p, T, safety, params)
        rows.append(measure(scenario, Level(mesh, p), step, T, params, startup, threads))
    return rate_table(rows, "p")
