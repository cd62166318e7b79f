"""INI run/convergence configuration.

Schema (all sections optional except where noted)::

    [run]
    scenario = test1            ; test1 | test2 | test3 | custom
    T = 0.2
    dt = 1e-4                   ; number or "auto"
    safety = 0.5                ; used when dt = auto
    startup = taylor1           ; taylor1 | taylor2
    threads = 0                 ; 0 = all cores
    seed = 0
    energy_every = 10           ; steps, 0 disables
    points_every = 10
    snapshot_every = 0
    probes = 0.5 0.5; -0.5 0.5  ; sample points, ';'-separated

    [mesh]
    file = mesh.txt             ; read this mesh, or generate with:
    n_elastic = 50
    n_acoustic = 50
    lloyd_iterations = 100
    mirror_y = false
    degree = 2
    degree_elastic = 2          ; optional per-region override
    degree_acoustic = 2

    [stabilization]
    alpha = 10
    beta = 10
    scale_boundary = true

    [source]                    ; test3 only
    sigma = 0.025

    [material]                  ; overrides, required for custom
    rho_e = 2.7
    lam = 51.2
    mu = 26.29
    zeta = 0
    rho_a = 1
    c = 1

    [custom]                    ; term lists, see scenarios.custom_scenario
    u_x = 1.0 x:pow2 t:cos1.0
    u_y = 0
    phi = 0

    [converge]
    study = h                   ; h | p | hp
    elements = 50, 100, 200, 400
    degree = 2
    p_elements = 300
    degrees = 1, 2, 3, 4
    dt_policy = fixed           ; fixed (uses [run] dt) | cfl (safety * estimate per level)
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


SCENARIOS = ("test1", "test2", "test3", "custom")


@dataclass
class MeshConfig:
    file: str | None = None
    n_elastic: int = 50
    n_acoustic: int = 50
    lloyd_iterations: int = 100
    mirror_y: bool = False
    degree: int = 2
    degree_elastic: int | None = None
    degree_acoustic: int | None = None


@dataclass
class RunConfig:
    scenario: str = "test1"
    T: float | None = None
    dt: float | str | None = None  # float or "auto"
    safety: float = 0.5
    startup: str = "taylor1"
    threads: int = 0
    seed: int = 0
    energy_every: int = 10
    points_every: int = 10
    snapshot_every: int = 0
    probes: list[tuple[float, float]] = field(default_factory=list)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    alpha: float = 10.0
    beta: float = 10.0
    scale_boundary: bool = True
    sigma: float = 0.025
    material: dict[str, float] = field(default_factory=dict)
    custom: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        for p in (self.mesh.degree, self.mesh.degree_elastic, self.mesh.degree_acoustic):
            if p is not None and p < 1:
                raise ConfigError("polynomial degree must be >= 1")
        if isinstance(self.dt, str) and self.dt != "auto":
            raise ConfigError("dt must be a positive number or 'auto'")
        if isinstance(self.dt, float) and not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.T is not None and not self.T > 0:
            raise ConfigError("T must be positive")
        if self.mesh.file is not None and not Path(self.mesh.file).is_file():
            raise ConfigError(f"mesh file {self.mesh.file} does not exist")
        if self.scenario == "custom" and not {"u_x", "u_y", "phi"} <= set(self.custom):
            raise ConfigError("custom scenario needs u_x, u_y and phi in [custom]")
        if self.startup not in ("taylor1", "taylor2"):
            raise ConfigError(f"unknown startup {self.startup!r}")

    def has_exact_solution(self) -> bool:
        return self.scenario != "test3"

    @property
    def n_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


@dataclass
class ConvergenceConfig:
    run: RunConfig
    study: str = "h"
    elements: list[int] = field(default_factory=lambda: [50, 100, 200, 400])
    degree: int = 2
    p_elements: int = 300
    degrees: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    dt_policy: str = "fixed"

    def __post_init__(self):
        if self.study not in ("h", "p", "hp"):
            raise ConfigError("study must be h, p or hp")
        if "h" in self.study and len(self.elements) < 2:
            raise ConfigError("insufficient levels: an h-study needs at least 2 meshes")
        if "p" in self.study and len(self.degrees) < 2:
            raise ConfigError("insufficient levels: a p-study needs at least 2 degrees")
        if self.dt_policy not in ("fixed", "cfl"):
            raise ConfigError("dt_policy must be fixed or cfl")
        if not self.run.has_exact_solution():
            raise ConfigError("convergence studies need a scenario with an exact solution")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _parse_points(text: str) -> list[tuple[float, float]]:
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        v = _floats(chunk)
        if len(v) != 2:
            raise ConfigError(f"probe point {chunk.strip()!r} must have two coordinates")
        pts.append((v[0], v[1]))
    return pts


def _read(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keep key case (T, dt)
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
    return cp


def _get(cp, section, key, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        if conv is bool:
            return cp.getboolean(section, key)
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {conv.__name__}") from None


def run_config_from(cp: configparser.ConfigParser, base_dir: Path | None = None) -> RunConfig:
    known = {"run", "mesh", "stabilization", "source", "material", "custom", "converge"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    dt_raw = cp.get("run", "dt", fallback=None)
    dt: float | str | None
    if dt_raw is None:
        dt = None
    elif dt_raw.strip() == "auto":
        dt = "auto"
    else:
        try:
            dt = float(dt_raw)
        except ValueError:
            raise ConfigError(f"[run] dt = {dt_raw!r} is neither a number nor 'auto'") from None
    mesh_file = cp.get("mesh", "file", fallback=None)
    if mesh_file and base_dir is not None and not Path(mesh_file).is_absolute():
        mesh_file = str(base_dir / mesh_file)
    mesh = MeshConfig(
        file=mesh_file or None,
        n_elastic=_get(cp, "mesh", "n_elastic", int, 50),
        n_acoustic=_get(cp, "mesh", "n_acoustic", int, 50),
        lloyd_iterations=_get(cp, "mesh", "lloyd_iterations", int, 100),
        mirror_y=_get(cp, "mesh", "mirror_y", bool, False),
        degree=_get(cp, "mesh", "degree", int, 2),
        degree_elastic=_get(cp, "mesh", "degree_elastic", int, None),
        degree_acoustic=_get(cp, "mesh", "degree_acoustic", int, None),
    )
    material = {}
    if cp.has_section("material"):
        for key, raw in cp.items("material"):
            if key not in ("rho_e", "lam", "mu", "zeta", "rho_a", "c"):
                raise ConfigError(f"unknown material parameter {key!r}")
            try:
                material[key] = float(raw)
            except ValueError:
                raise ConfigError(f"[material] {key} = {raw!r} is not a number") from None
    return RunConfig(
        scenario=cp.get("run", "scenario", fallback="test1").strip(),
        T=_get(cp, "run", "T", float, None),
        dt=dt,
        safety=_get(cp, "run", "safety", float, 0.5),
        startup=cp.get("run", "startup", fallback="taylor1").strip(),
        threads=_get(cp, "run", "threads", int, 0),
        seed=_get(cp, "run", "seed", int, 0),
        energy_every=_get(cp, "run", "energy_every", int, 10),
        points_every=_get(cp, "run", "points_every", int, 10),
        snapshot_every=_get(cp, "run", "snapshot_every", int, 0),
        probes=_parse_points(cp.get("run", "probes", fallback="")),
        mesh=mesh,
        alpha=_get(cp, "stabilization", "alpha", float, 10.0),
        beta=_get(cp, "stabilization", "beta", float, 10.0),
        scale_boundary=_get(cp, "stabilization", "scale_boundary", bool, True),
        sigma=_get(cp, "source", "sigma", float, 0.025),
        material=material,
        custom=dict(cp.items("custom")) if cp.has_section("custom") else {},
    )


def load_run_config(path=None) -> RunConfig:
    return run_config_from(_read(path), Path(path).parent if path else None)


def load_convergence_config(path=None) -> ConvergenceConfig:
    cp = _read(path)
    run = run_config_from(cp, Path(path).parent if path else None)

    def ints(key, default):
        if not cp.has_option("converge", key):
            return default
        try:
            return [int(v) for v in _floats(cp.get("converge", key))]
        except ValueError:
            raise ConfigError(f"[converge] {key} must be a list of integers") from None

    return ConvergenceConfig(
        run=run,
        study=cp.get("converge", "study", fallback="h").strip(),
        elements=ints("elements", [50, 100, 200, 400]),
        degree=_get(cp, "converge", "degree", int, 2),
        p_elements=_get(cp, "converge", "p_elements", int, 300),
        degrees=ints("degrees", [1, 2, 3, 4]),
        dt_policy=cp.get("converge", "dt_policy", fallback="fixed").strip(),
    )
