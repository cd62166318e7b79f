import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elastoacoustic import scenarios
from elastoacoustic.analysis import (_acoustic_parts, _ratio, dg_norms, energy_norm, energy_split, errors_vs_exact,
                                     fit_slope, coercivity_margin, mirror_asymmetry, rate_table, rayleigh_quotients,
                                     sampling_matrix, source_norms, stability_constant, flux_penalty_ratios)
from elastoacoustic.assembly import Material, StabilizationParams, assemble_system, elastic_pieces
from elastoacoustic.fespace import l2_project, make_spaces
from elastoacoustic.mesh import Region, generate_mesh
from elastoacoustic.scenarios import custom_scenario
from elastoacoustic.timestepper import State

from conftest import unit_square


@pytest.fixture(scope="module")
def system10(mesh10, material):
    se, sa = make_spaces(mesh10, 2)
    return se, sa, assemble_system(se, sa, material)


def test_zero_field_norms(system10, material):
    se, sa, _ = system10
    r = dg_norms(se, sa, material, u=np.zeros(se.ndof), phi=np.zeros(sa.ndof))
    assert (r.dg_e, r.dg_a, r.l2_e, r.l2_a) == (0.0, 0.0, 0.0, 0.0)


def test_linear_acoustic_volume_part():
    _, sa = make_spaces(unit_square(Region.ACOUSTIC, 1), 1)
    v = l2_project(sa, lambda x, y: x)
    vol, _, _ = _acoustic_parts(sa, Material(rho_a=1.0), StabilizationParams(), v, None, None, 0.0, 4)
    assert vol == pytest.approx(1.0, rel=1e-13)


def test_continuous_field_has_no_interior_jumps(system10, material):
    # a globally polynomial discrete field must measure like the same closure
    se, sa, _ = system10
    f = lambda x, y, t=0.0: x * x - 0.5 * x * y + y
    gf = lambda x, y, t=0.0: np.stack([2 * x - 0.5 * y, -0.5 * x + 1 + 0 * y])
    c = l2_project(sa, f)
    a = dg_norms(se, sa, material, phi=c)
    b = dg_norms(se, sa, material, phi=f, grad_phi=gf)
    assert a.dg_a == pytest.approx(b.dg_a, rel=1e-12)


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_norm_matrices_match_quadrature_loop(system10, material, seed):
    se, sa, mats = system10
    rng = np.random.default_rng(seed)
    for _ in range(20):
        u, p = rng.standard_normal(se.ndof), rng.standard_normal(sa.ndof)
        r = dg_norms(se, sa, material, u=u, phi=p)
        assert u @ (mats.N_e @ u) == pytest.approx(r.dg_e ** 2, rel=1e-10)
        assert p @ (mats.N_a @ p) == pytest.approx(r.dg_a ** 2, rel=1e-10)


def test_energy_split_identity(system10):
    se, sa, mats = system10
    rng = np.random.default_rng(3)
    s = State(*(rng.standard_normal(n) for n in (se.ndof, se.ndof, sa.ndof, sa.ndof)), 5, 0.1)
    ee, ea = energy_split(s, mats, 1e-3)
    assert energy_norm(s, mats, 1e-3) ** 2 == pytest.approx(ee ** 2 + ea ** 2, rel=1e-12)
    z = State(*(np.zeros(n) for n in (se.ndof, se.ndof, sa.ndof, sa.ndof)), 1, 0.0)
    assert energy_norm(z, mats, 1e-3) == 0.0


def test_energy_split_non_finite_is_inf(system10):
    se, sa, mats = system10
    s = State(np.full(se.ndof, 1e300), np.full(se.ndof, -1e300), np.zeros(sa.ndof), np.zeros(sa.ndof), 1, 0.0)
    assert energy_split(s, mats, 1e-3) == (math.inf, math.inf)


def test_projection_of_polynomial_solution_has_no_error(system10, material):
    se, sa, _ = system10
    sc = custom_scenario("1 x:pow2 t:pow1", "2 x:pow1 y:pow1", "1 x:pow1 y:pow1 t:pow2", material, check=False)
    t = 0.7
    U = l2_project(se, lambda x, y: sc.exact_u(x, y, t))
    P = l2_project(sa, lambda x, y: sc.exact_phi(x, y, t))
    err = errors_vs_exact(U, P, sc, t, se, sa)
    assert max(err.as_row().values()) <= 1e-10


def test_vanishing_acoustic_factor(system10):
    se, sa, mats = system10
    sc = scenarios.test_case_1()
    t = 1 / math.sqrt(2)  # sin(sqrt2 pi t) = 0
    P = np.random.default_rng(0).standard_normal(sa.ndof)
    err = errors_vs_exact(np.zeros(se.ndof), P, sc, t, se, sa)
    assert err.l2_a == pytest.approx(math.sqrt(P @ (mats.M_a @ P)), rel=1e-12)


# -- rate tables

def test_synthetic_rates():
    hs = [0.4, 0.2, 0.1, 0.05]
    rows = [{"h": h, "dofs": 0, "err_dG_u": h ** 2, "err_dG_phi": 3.0, "err_L2_u": h ** 3, "err_L2_phi": h}
            for h in hs]
    tab = rate_table(rows)
    assert tab.slopes["err_dG_u"] == pytest.approx(2.0, abs=1e-10)
    assert tab.slopes["err_dG_phi"] == pytest.approx(0.0, abs=1e-10)
    assert tab.slopes["err_L2_u"] == pytest.approx(3.0, abs=1e-10)
    assert tab.non_monotone["err_dG_phi"] and not tab.non_monotone["err_dG_u"]
    assert "non-monotone" in tab.summary()


def test_rate_table_level_checks():
    row = {"h": 0.1, "dofs": 0, "err_dG_u": 1, "err_dG_phi": 1, "err_L2_u": 1, "err_L2_phi": 1}
    with pytest.raises(ValueError, match="insufficient levels"):
        rate_table([row])
    with pytest.warns(UserWarning):
        rate_table([row, {**row, "h": 0.05}])


def test_fit_slope_exact_power():
    x = np.array([1.0, 2.0, 4.0])
    assert fit_slope(x, 5 * x ** -1.5) == pytest.approx(-1.5, abs=1e-12)


# -- inequality checks

def test_rigid_field_ratio_is_zero(material):
    se, _ = make_spaces(unit_square(degree=1), 1)
    pc = elastic_pieces(se, material, StabilizationParams(), include_boundary=False)
    v = l2_project(se, lambda x, y: (-y, x))
    assert _ratio(pc.avg_flux, pc.volume, v) == 0.0


def test_flux_ratio_halves_when_penalty_quadruples(mesh50, material):
    se, sa = make_spaces(mesh50, 2)
    rep = flux_penalty_ratios(se, sa, material, samples=20)
    el, ac = rep.halving_ratios()
    for r in el + ac:
        assert r == pytest.approx(0.5, rel=0.15)


def test_flux_ratio_bounded_under_p_enrichment(mesh50, material):
    ratios = []
    for p in (1, 2):
        se, sa = make_spaces(mesh50, p)
        rep = flux_penalty_ratios(se, sa, material, alphas=(10.0,), betas=(10.0,), samples=20)
        ratios.append((rep.elastic[10.0], rep.acoustic[10.0]))
    assert ratios[1][0] <= 1.1 * ratios[0][0]
    assert ratios[1][1] <= 1.1 * ratios[0][1]


def test_coercivity_margin(system10):
    _, _, mats = system10
    assert coercivity_margin(mats) >= 0.1
    q = rayleigh_quotients(mats.A_e, mats.N_e, 20)
    assert np.all((q >= 0.1) & (q <= 100))


# -- forced bound

def test_stability_constant_synthetic():
    t = np.linspace(0, 1, 11)
    f = np.ones_like(t)
    E = 1 + 0.5 * t
    assert stability_constant(t, E, f) == pytest.approx(0.5, rel=1e-12)
    assert stability_constant(t, np.ones_like(t), f) == 0.0
    assert stability_constant(t, E, np.zeros_like(t)) == 0.0


def test_source_norms_zero_data(system10, material):
    se, sa, _ = system10
    sc = custom_scenario("0", "0", "0", material)
    assert not source_norms(sc, se, sa, [0.0, 0.5]).any()


# -- sampling

def test_sampling_matrix_matches_evaluate(system10):
    _, sa, _ = system10
    c = np.random.default_rng(5).standard_normal(sa.ndof)
    pts = np.array([[0.3, 0.2], [0.8, 0.9], [0.51, 0.5]])
    P, S = sampling_matrix(sa, pts)
    assert np.array_equal(P, pts)
    owner = sa.mesh.locate(pts)
    direct = [sa.evaluate(c, k, p[None])[0][0] for k, p in zip(owner, pts)]
    assert np.allclose(S @ c, direct, rtol=1e-14)
    with pytest.raises(ValueError):
        sampling_matrix(sa, [[-0.5, 0.5]])


def test_mirror_asymmetry_of_symmetric_projection():
    m = generate_mesh(n_elastic=8, n_acoustic=8, rng_seed=1, mirror_y=True, degree=2)
    _, sa = make_spaces(m, 2)
    sym = l2_project(sa, lambda x, y: x * x + (y - 0.5) ** 2)
    anti = l2_project(sa, lambda x, y: x * (y - 0.5))
    assert mirror_asymmetry(sa, sym, 0.5) < 1e-10
    assert mirror_asymmetry(sa, anti, 0.5) > 0.5
