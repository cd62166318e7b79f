"""Command-line entry point: ``mesh gen``, ``mesh info``, ``run``, ``converge``.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence, 4 IO error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .analysis import errors_vs_exact
from .assembly import Material, StabilizationParams, assemble_system, dump_matrix
from .config import ConfigError, RunConfig, load_convergence_config, load_run_config
from .fespace import make_spaces
from .mesh import MeshError, Region, generate_mesh, quality_report, read_mesh, write_mesh
from .output import CsvStream, write_csv, write_vtk
from .scenarios import custom_scenario, get_scenario
from .studies import h_study, p_study
from .timestepper import DivergenceError, Probes, PointSampler, estimate_stable_dt, run

log = logging.getLogger("elastoacoustic")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4
RATE_COLUMNS = ("dofs", "err_dG_u", "err_dG_phi", "err_L2_u", "err_L2_phi")


def build_scenario(cfg: RunConfig):
    if cfg.scenario == "custom":
        defaults = dict(rho_e=1.0, lam=1.0, mu=1.0, zeta=0.0, rho_a=1.0, c=1.0)
        mat = Material(**{**defaults, **cfg.material})
        try:
            return custom_scenario(cfg.custom["u_x"], cfg.custom["u_y"], cfg.custom["phi"], mat,
                                   T=cfg.T or 1.0, dt=cfg.dt if isinstance(cfg.dt, float) else 1e-4)
        except ValueError as exc:
            raise ConfigError(f"custom scenario: {exc}") from None
    if cfg.scenario == "test3":
        sc = get_scenario("test3", sigma=cfg.sigma)
        if cfg.material:
            base = {n: getattr(sc.material, n) for n in ("rho_e", "lam", "mu", "zeta", "rho_a", "c")}
            sc.material = Material(**{**base, **cfg.material})
        return sc
    if cfg.material:
        raise ConfigError(f"[material] overrides would invalidate the exact solution of {cfg.scenario}")
    return get_scenario(cfg.scenario)


def build_mesh(cfg: RunConfig):
    m = cfg.mesh
    if m.file:
        return read_mesh(m.file)
    return _generate(n_elastic=m.n_elastic, n_acoustic=m.n_acoustic, lloyd_iterations=m.lloyd_iterations,
                     rng_seed=cfg.seed, degree=m.degree, mirror_y=m.mirror_y)


def _generate(**kw):
    try:
        return generate_mesh(**kw)
    except MeshError as exc:  # bad generator parameters are a configuration problem
        raise ConfigError(f"mesh generation: {exc}") from None


def degree_map(cfg: RunConfig, mesh):
    m = cfg.mesh
    if m.degree_elastic is None and m.degree_acoustic is None:
        return m.degree
    pe = m.degree_elastic or m.degree
    pa = m.degree_acoustic or m.degree
    return {k: (pe if el.region == Region.ELASTIC else pa) for k, el in enumerate(mesh.elements)}


def params_of(cfg: RunConfig) -> StabilizationParams:
    try:
        return StabilizationParams(cfg.alpha, cfg.beta, cfg.scale_boundary)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# --------------------------------------------------------------------------- commands

def cmd_mesh_gen(args) -> int:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    m = cfg.mesh
    seed = args.seed if args.seed is not None else cfg.seed
    mesh = _generate(
        n_elastic=args.n_elastic if args.n_elastic is not None else m.n_elastic,
        n_acoustic=args.n_acoustic if args.n_acoustic is not None else m.n_acoustic,
        lloyd_iterations=args.lloyd if args.lloyd is not None else m.lloyd_iterations,
        rng_seed=seed, degree=args.degree if args.degree is not None else m.degree,
        mirror_y=args.mirror_y or m.mirror_y)
    out = Path(args.out)
    if out.is_dir():
        out = out / "mesh.txt"
    write_mesh(mesh, out)
    print(f"wrote {out}: {mesh.n_elements} elements")
    return EXIT_OK


def cmd_mesh_info(args) -> int:
    mesh = read_mesh(args.path)
    print("\n".join(quality_report(mesh).lines()))
    return EXIT_OK


def _prepare(args, cfg: RunConfig):
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    out = _prepare(args, cfg)
    sc = build_scenario(cfg)
    mesh = build_mesh(cfg)
    degrees = degree_map(cfg, mesh)
    params = params_of(cfg)
    T = cfg.T or sc.T
    se, sa = make_spaces(mesh, degrees)
    mats = assemble_system(se, sa, sc.material, params, cfg.n_threads)
    if cfg.dt == "auto":
        dt = T / math.ceil(T / estimate_stable_dt(mats, cfg.safety) - 1e-9)
    else:
        dt = cfg.dt or sc.dt
    log.info("scenario %s: %d elements, %d dofs, dt=%g, T=%g", sc.name, mesh.n_elements, se.ndof + sa.ndof, dt, T)
    if args.dump_matrices:
        for name, A in mats.named().items():
            dump_matrix(A, out / f"{name}.txt")
    for stale in ("DIVERGED", "errors.csv"):
        (out / stale).unlink(missing_ok=True)

    energy = CsvStream(out / "energy.csv", ["t", "E_elastic", "E_acoustic", "E_total"])
    sampler_cols = PointSampler(se, sa, cfg.probes).columns if cfg.probes else []
    probes_csv = CsvStream(out / "probes.csv", ["t"] + sampler_cols)

    def snapshot(state, space_e, space_a):
        write_vtk(out / f"u_{state.n:08d}.vtk", space_e, state.U_curr, "displacement", state.t)
        write_vtk(out / f"phi_{state.n:08d}.vtk", space_a, state.P_curr, "phi", state.t)

    probes = Probes(energy_every=cfg.energy_every, points=cfg.probes, points_every=cfg.points_every,
                    snapshot_every=cfg.snapshot_every, on_snapshot=snapshot if cfg.snapshot_every else None,
                    on_energy=lambda t, ee, ea: energy.row([t, ee, ea, (ee ** 2 + ea ** 2) ** 0.5]),
                    on_points=lambda t, v: probes_csv.row([t, *v]))
    try:
        res = run(sc, mesh, degrees, dt, T, probes, params, cfg.startup, cfg.n_threads, mats=mats)
    except DivergenceError as exc:
        (out / "DIVERGED").write_text(f"{exc}\n")
        print(f"DIVERGED: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    finally:
        energy.close()
        probes_csv.close()
    if sc.has_exact:
        err = errors_vs_exact(res.state.U_curr, res.state.P_curr, sc, res.state.t, se, sa, params)
        row = err.as_row()
        write_csv(out / "errors.csv", ["t", *row], [[res.state.t, *row.values()]])
        print("errors at t=%.6g: %s" % (res.state.t, ", ".join(f"{k}={v:.6e}" for k, v in row.items())))
    print(f"run complete: {res.state.n} levels, t={res.state.t:.6g}, outputs in {out}")
    return EXIT_OK


def cmd_converge(args) -> int:
    cc = load_convergence_config(args.config)
    out = _prepare(args, cc.run)
    cfg = cc.run
    sc = build_scenario(cfg)
    params = params_of(cfg)
    T = cfg.T or sc.T
    dt = None if cc.dt_policy == "cfl" or cfg.dt == "auto" else (cfg.dt or sc.dt)
    common = dict(T=T, dt=dt, seed=cfg.seed, params=params, safety=cfg.safety,
                  lloyd_iterations=cfg.mesh.lloyd_iterations, startup=cfg.startup, threads=cfg.n_threads)
    if "h" in cc.study:
        tab = h_study(sc, cc.elements, cc.degree, **common)
        write_csv(out / "rates_h.csv", ("h",) + RATE_COLUMNS, [[r["h"]] + [r[c] for c in RATE_COLUMNS]
                                                               for r in tab.rows])
        print(f"h-study ({sc.name}, p={cc.degree}) {tab.summary()}")
    if "p" in cc.study:
        tab = p_study(sc, cc.degrees, cc.p_elements, **common)
        write_csv(out / "rates_p.csv", ("p",) + RATE_COLUMNS, [[r["p"]] + [r[c] for c in RATE_COLUMNS]
                                                               for r in tab.rows])
        print(f"p-study ({sc.name}, {cc.p_elements} elements) log10-error {tab.summary()}")
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="elastoacoustic", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="generate or inspect polygonal meshes")
    msub = mesh.add_subparsers(dest="mesh_command", required=True)
    gen = msub.add_parser("gen", help="write a clipped-Voronoi mesh")
    gen.add_argument("--config")
    gen.add_argument("--out", required=True, help="mesh file (or directory, then mesh.txt)")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--n-elastic", type=int)
    gen.add_argument("--n-acoustic", type=int)
    gen.add_argument("--lloyd", type=int)
    gen.add_argument("--degree", type=int)
    gen.add_argument("--mirror-y", action="store_true")
    gen.set_defaults(func=cmd_mesh_gen)
    info = msub.add_parser("info", help="print a mesh quality report")
    info.add_argument("path")
    info.set_defaults(func=cmd_mesh_info)

    for name, fn, hlp in (("run", cmd_run, "integrate one scenario"),
                          ("converge", cmd_converge, "h/p convergence study")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        if name == "run":
            p.add_argument("--dump-matrices", action="store_true")
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, MeshError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
