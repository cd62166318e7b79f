import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elastoacoustic.fespace import (MAX_QUADRATURE_ORDER, Basis, QuadratureError, eval_basis, eval_basis_grad,
                                    face_quadrature, gauss_segment, l2_project, local_mass, make_space, make_spaces,
                                    mass_condition_numbers, n_modes, volume_quadrature)
from elastoacoustic.mesh import Region, generate_mesh

from conftest import unit_square

UNIT_BOX = (0.0, 1.0, 0.0, 1.0)


def hexagon_element(r=0.5):
    from elastoacoustic.mesh import _make_element
    ang = np.arange(6) * np.pi / 3
    return _make_element(np.c_[r * np.cos(ang), r * np.sin(ang)], list(range(6)), Region.ELASTIC, 2, 0)


def test_degree_zero_is_constant():
    b = Basis(0, 0, UNIT_BOX)
    pts = np.random.default_rng(0).random((5, 2))
    assert b.n == 1
    assert np.allclose(eval_basis(b, pts), eval_basis(b, pts)[0])
    assert np.all(eval_basis_grad(b, pts) == 0)


def test_linear_modes_span_three_dimensions():
    b = Basis(0, 1, UNIT_BOX)
    pts = np.random.default_rng(1).random((6, 2))
    assert np.linalg.matrix_rank(b.eval(pts)) == 3


@settings(max_examples=20, deadline=None)
@given(p=st.integers(0, 6), seed=st.integers(0, 2 ** 31))
def test_gradient_matches_central_difference(p, seed):
    rng = np.random.default_rng(seed)
    b = Basis(0, p, (-0.3, 0.7, 0.1, 0.6))
    x = np.array([-0.3, 0.1]) + rng.random(2) * [1.0, 0.5]
    d = rng.normal(size=2)
    d /= np.linalg.norm(d)
    eps = 1e-6
    fd = (b.eval(x + eps * d) - b.eval(x - eps * d)) / (2 * eps)
    an = b.eval_grad(x) @ d
    scale = max(1.0, np.abs(an).max())
    assert np.allclose(fd, an, atol=1e-6 * scale)


def test_mode_counts():
    assert [n_modes(p) for p in range(5)] == [1, 3, 6, 10, 15]


# -- quadrature

def test_volume_quadrature_unit_square():
    el = unit_square().elements[0]
    q = volume_quadrature(el, 4)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-14)
    x, y = q.points.T
    assert np.sum(q.weights * x ** 2 * y ** 2) == pytest.approx(1 / 9, abs=1e-13)


def test_hexagon_first_moment_vanishes():
    q = volume_quadrature(hexagon_element(), 3)
    assert abs(np.sum(q.weights * q.points[:, 0])) < 1e-15


def test_unsupported_order_names_maximum():
    with pytest.raises(QuadratureError, match=str(MAX_QUADRATURE_ORDER)):
        gauss_segment(MAX_QUADRATURE_ORDER + 1)


def test_face_quadrature_cubic():
    m = unit_square()
    bottom = next(f for f in m.faces if np.allclose(f.normal, [0, -1]))
    q = face_quadrature(m, bottom, 3)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.sum(q.weights * q.points[:, 0] ** 3) == pytest.approx(0.25, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(order=st.integers(0, 12), seed=st.integers(0, 2 ** 31))
def test_composite_rule_exact_on_random_polynomials(order, seed):
    # integrate a random polynomial over the square [0,1]^2; closed form via monomial moments
    rng = np.random.default_rng(seed)
    el = unit_square().elements[0]
    q = volume_quadrature(el, order)
    exact, approx = 0.0, 0.0
    x, y = q.points.T
    for i in range(order + 1):
        for j in range(order + 1 - i):
            c = rng.normal()
            exact += c / ((i + 1) * (j + 1))
            approx += c * np.sum(q.weights * x ** i * y ** j)
    assert approx == pytest.approx(exact, rel=1e-12, abs=1e-13)


def test_polygon_area_from_weights(mesh120):
    for el in mesh120.elements[:20]:
        assert volume_quadrature(el, 2).weights.sum() == pytest.approx(el.area, rel=1e-12)


# -- spaces

def test_dof_layout_partitions_range(mesh120):
    se, sa = make_spaces(mesh120, 2)
    for space, comp, region in ((se, 2, Region.ELASTIC), (sa, 1, Region.ACOUSTIC)):
        n_el = len(mesh120.element_ids(region))
        assert space.ndof == comp * 6 * n_el
        covered = np.concatenate([space.dofs(k) for k in space.elements])
        assert np.array_equal(np.sort(covered), np.arange(space.ndof))


def test_mixed_degrees_layout(mesh10):
    deg = {k: 1 + k % 3 for k in range(mesh10.n_elements)}
    se = make_space(mesh10, "vector_elastic", deg)
    assert se.ndof == sum(2 * n_modes(deg[k]) for k in se.elements)


def test_local_mass_spd(mesh50):
    se, _ = make_spaces(mesh50, 3)
    for k in se.elements[:10]:
        M = local_mass(se, k)
        assert np.allclose(M, M.T, atol=1e-13)
        assert np.linalg.eigvalsh(M).min() > 0
    conds = mass_condition_numbers(se)
    assert all(np.isfinite(c) for c in conds.values())


# -- projection

def _l2_error(space, coeffs, field):
    err = 0.0
    for k in space.elements:
        pts, w, _, _ = space.volume_data(k, 2 * space.degrees[k] + 6)
        v, _ = space.evaluate(coeffs, k, pts)
        err += np.sum(w * (v - field(pts[:, 0], pts[:, 1])) ** 2)
    return math.sqrt(err)


def test_projection_reproduces_constants_and_quadratics(mesh50):
    _, sa = make_spaces(mesh50, 2)
    one = lambda x, y: np.ones_like(x)
    xy = lambda x, y: x * y
    assert _l2_error(sa, l2_project(sa, one), one) < 1e-13
    assert _l2_error(sa, l2_project(sa, xy), xy) < 1e-12


def test_vector_projection_reproduction(mesh10):
    se, _ = make_spaces(mesh10, 2)
    c = l2_project(se, lambda x, y: (x ** 2 - y, 3 * x * y))
    for k in se.elements:
        pts = mesh10.elements[k].subtriangle_coords.reshape(-1, 2)
        v, _ = se.evaluate(c, k, pts)
        assert np.allclose(v, np.c_[pts[:, 0] ** 2 - pts[:, 1], 3 * pts[:, 0] * pts[:, 1]], atol=1e-12)


def test_projection_rate_is_cubic_for_quadratics():
    f = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    hs, errs = [], []
    for n in (12, 48, 192):
        m = generate_mesh(n_elastic=n, n_acoustic=n, rng_seed=0, lloyd_iterations=60)
        _, sa = make_spaces(m, 2)
        hs.append(np.mean([m.elements[k].diameter for k in sa.elements]))
        errs.append(_l2_error(sa, l2_project(sa, f), f))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 2.6 < slope < 3.4
