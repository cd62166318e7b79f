"""Acceptance criteria, one test per criterion with the published tolerances.

Each test records a PASS/FAIL line that is printed in the session summary.
"""
import math

import numpy as np
import pytest

from elastoacoustic import scenarios
from elastoacoustic.analysis import mirror_asymmetry, rayleigh_quotients, sampling_matrix, flux_penalty_ratios
from elastoacoustic.assembly import Material, StabilizationParams, assemble_system
from elastoacoustic.fespace import make_spaces
from elastoacoustic.mesh import generate_mesh, two_rectangle_mesh
from elastoacoustic.reference import reference_system
from elastoacoustic.studies import h_study, p_study
from elastoacoustic.timestepper import Probes, estimate_stable_dt, run, scalar_oscillator

from conftest import TEST1_MATERIAL, record_criterion

pytestmark = pytest.mark.slow

H_LEVELS = (50, 100, 200, 400)


def _fmt(d):
    return ", ".join(f"{k}={v:.3f}" for k, v in d.items())


def test_criterion_1_h_convergence_test1():
    tab = h_study(scenarios.test_case_1(), H_LEVELS, degree=2, dt=1e-4, T=0.2, seed=0)
    s = tab.slopes
    ok = all(1.6 <= s[c] <= 2.4 for c in ("err_dG_u", "err_dG_phi")) and \
        all(2.5 <= s[c] <= 3.5 for c in ("err_L2_u", "err_L2_phi"))
    assert record_criterion("1", ok, f"h-slopes test1 p=2 [dG 1.6-2.4, L2 2.5-3.5]: {_fmt(s)}")


def test_criterion_2_h_convergence_test2():
    tab = h_study(scenarios.test_case_2(), H_LEVELS, degree=2, dt=1e-4, T=0.2, seed=0)
    s = tab.slopes
    ok = all(1.6 <= s[c] <= 2.6 for c in ("err_dG_u", "err_dG_phi")) and \
        all(s[c] >= 2.5 for c in ("err_L2_u", "err_L2_phi"))
    assert record_criterion("2", ok, f"h-slopes test2 p=2 [dG 1.6-2.6, L2 >= 2.5]: {_fmt(s)}")


def test_criterion_3_p_convergence():
    tab = p_study(scenarios.test_case_1(), (1, 2, 3, 4), n_elements=300, dt=1e-4, T=0.2, seed=0)
    ok, worst = True, math.inf
    for c in ("err_dG_u", "err_dG_phi", "err_L2_u", "err_L2_phi"):
        e = np.array([r[c] for r in tab.rows])
        ok &= bool(np.all(np.diff(e) < 0))
        ratios = e[:-1] / e[1:]
        ok &= bool(np.all(ratios[:2] >= 3.0))
        worst = min(worst, ratios[:2].min())
    errs = "; ".join(f"p={r['p']}: dG_u={r['err_dG_u']:.2e} L2_u={r['err_L2_u']:.2e}" for r in tab.rows)
    assert record_criterion("3", ok, f"p-study strictly decreasing, min ratio p1->2,2->3 = {worst:.1f} (>= 3); "
                                     f"{errs}")


@pytest.fixture(scope="module")
def test_meshes():
    return {
        "two-rectangle": two_rectangle_mesh(degree=1),
        "10 cells": generate_mesh(n_elastic=4, n_acoustic=6, rng_seed=3),
        "h-study 50": generate_mesh(n_elastic=25, n_acoustic=25, rng_seed=0),
        "h-study 400": generate_mesh(n_elastic=200, n_acoustic=200, rng_seed=0),
        "test3 mirrored 100": generate_mesh(n_elastic=50, n_acoustic=50, rng_seed=0, mirror_y=True),
        "p-study 300": generate_mesh(n_elastic=150, n_acoustic=150, rng_seed=0),
    }


def test_criterion_4_coupling_skew_symmetry(test_meshes):
    worst = 0.0
    for mesh in test_meshes.values():
        for mat in (Material(**TEST1_MATERIAL), scenarios.test_case_3().material):
            se, sa = make_spaces(mesh, 2)
            mats = assemble_system(se, sa, mat)
            worst = max(worst, abs(mats.C_a + mats.C_e.T).max())
    assert record_criterion("4", worst == 0.0, f"max|C_a + C_e^T| = {worst} over {len(test_meshes)} meshes")


def test_criterion_5_symmetry_and_coercivity(test_meshes):
    mat = Material(**TEST1_MATERIAL)
    asym, qmin, qmax = 0.0, math.inf, 0.0
    for name in ("h-study 50", "test3 mirrored 100", "p-study 300"):
        se, sa = make_spaces(test_meshes[name], 2)
        mats = assemble_system(se, sa, mat, StabilizationParams(alpha=10, beta=10))
        for A in (mats.A_e, mats.A_a):
            asym = max(asym, abs(A - A.T).max() / abs(A).max())
        for A, N, seed in ((mats.A_e, mats.N_e, 0), (mats.A_a, mats.N_a, 1)):
            q = rayleigh_quotients(A, N, samples=50, seed=seed)
            qmin, qmax = min(qmin, q.min()), max(qmax, q.max())
    ok = asym <= 1e-12 and qmin >= 0.1 and qmax <= 100
    assert record_criterion("5", ok, f"relative asymmetry {asym:.1e} (<= 1e-12); Rayleigh quotients in "
                                     f"[{qmin:.3f}, {qmax:.3f}] (within [0.1, 100])")


def test_criterion_6_energy_stability(test_meshes):
    mesh = test_meshes["p-study 300"]
    sc = scenarios.random_smooth_scenario(seed=0)
    se, sa = make_spaces(mesh, 2)
    mats = assemble_system(se, sa, sc.material)
    dt = estimate_stable_dt(mats, safety=0.5)
    res = run(sc, mesh, 2, dt, 10_000 * dt, Probes(energy_every=1), mats=mats)
    e = np.array([math.hypot(a, b) for _, a, b in res.energy])
    ratio = e.max() / e[0]
    ok = res.state.n == 10_000 and ratio <= 1.01
    assert record_criterion("6", ok, f"max_n E^n / E^1 = {ratio:.5f} (<= 1.01) over {res.state.n - 1} steps, "
                                     f"dt = {dt:.3e}")


def test_criterion_7_flux_penalty_scaling(test_meshes):
    se, sa = make_spaces(test_meshes["h-study 50"], 2)
    rep = flux_penalty_ratios(se, sa, Material(**TEST1_MATERIAL), alphas=(1, 4, 16), betas=(1, 4, 16), samples=50)
    el, ac = rep.halving_ratios()
    ok = all(abs(r - 0.5) <= 0.15 * 0.5 for r in el + ac)
    assert record_criterion("7", ok, "successive max-ratio quotients (0.5 +/- 15%): elastic "
                                     f"{[round(r, 4) for r in el]}, acoustic {[round(r, 4) for r in ac]}")


def test_criterion_8_oracle_equivalence(test_meshes):
    meshes = [test_meshes["two-rectangle"], test_meshes["10 cells"]]
    meshes += [generate_mesh(n_elastic=ne, n_acoustic=na, rng_seed=s, lloyd_iterations=20)
               for ne, na, s in ((1, 1, 0), (3, 2, 1), (5, 5, 2))]
    mat = Material(rho_e=2.7, lam=51.2, mu=26.29, zeta=0.3, rho_a=1.0, c=1.5)
    rng = np.random.default_rng(0)
    worst = 0.0
    for mesh in meshes:
        for p in (1, 2):
            se, sa = make_spaces(mesh, p)
            mats = assemble_system(se, sa, mat).named()
            ref = reference_system(se, sa, mat)
            for name, A in mats.items():
                R = ref[name]
                for _ in range(5):
                    x, y = rng.standard_normal(R.shape[0]), rng.standard_normal(R.shape[1])
                    scale = np.linalg.norm(x) * np.linalg.norm(R, 2) * np.linalg.norm(y)
                    worst = max(worst, abs(x @ (A @ y) - x @ R @ y) / scale)
    assert record_criterion("8", worst <= 1e-10, f"max relative form mismatch {worst:.1e} (<= 1e-10), "
                                                 f"{len(meshes)} meshes x p=1,2 x 7 matrices")


@pytest.fixture(scope="module")
def test3_run(test_meshes):
    mesh = test_meshes["test3 mirrored 100"]
    sc = scenarios.test_case_3()
    se, sa = make_spaces(mesh, 3)
    _, S = sampling_matrix(sa)
    peak = {"early": 0.0, "all": 0.0}

    def watch(state, space_e, space_a):
        m = float(np.abs(S @ state.P_curr).max())
        peak["all"] = max(peak["all"], m)
        if state.t <= 0.03 + 1e-12:
            peak["early"] = max(peak["early"], m)

    try:
        res = run(sc, mesh, 3, 1e-5, 0.5, Probes(snapshot_every=1, on_snapshot=watch))
    except Exception as exc:  # recorded by criterion 9c
        return None, peak, exc
    return res, peak, None


def test_criterion_9a_causality(test3_run):
    res, peak, exc = test3_run
    assert exc is None
    ratio = peak["early"] / peak["all"]
    assert record_criterion("9a", ratio <= 1e-6, f"max|phi_h| t<=0.03 / max over [0,0.5] = {ratio:.2e} (<= 1e-6)")


def test_criterion_9b_mirror_symmetry(test3_run):
    res, _, exc = test3_run
    assert exc is None
    asym = mirror_asymmetry(res.space_a, res.state.P_curr, 0.5)
    assert record_criterion("9b", asym <= 1e-8, f"relative y-mirror asymmetry of phi_h at t=0.5: {asym:.1e} "
                                                "(<= 1e-8)")


def test_criterion_9c_completes(test3_run):
    res, _, exc = test3_run
    ok = exc is None and res.state.n == 50_000 and bool(np.all(np.isfinite(res.state.P_curr)))
    detail = f"{res.state.n} levels to t={res.state.t:.4f}" if exc is None else repr(exc)
    assert record_criterion("9c", ok, f"test3 p=3 dt=1e-5 T=0.5 run without divergence: {detail}")


def test_criterion_10_time_order():
    def ratio(startup):
        e = [abs(scalar_oscillator(dt, 1.0, startup=startup)[-1] - math.cos(1.0)) for dt in (0.01, 0.005)]
        return e[0] / e[1]

    r2, r1 = ratio("taylor2"), ratio("taylor1")
    ok = abs(r2 - 4.0) <= 0.4
    assert record_criterion("10", ok, f"error ratio on dt halving = {r2:.4f} (4 +/- 10%) with second-order "
                                      f"startup; first-order startup gives {r1:.4f}")
