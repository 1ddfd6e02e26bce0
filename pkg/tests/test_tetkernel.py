import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperflow.tetkernel import (
    CORNER_SLOTS,
    LargeRadiusWarning,
    tet_area_jacobian,
    tet_cos_sin,
    tet_dihedral_angles,
    tet_dihedral_partials,
    tet_evaluate,
    tet_geometry,
    tet_q2,
    tet_vertex_areas,
)
from hyperflow.triangulation import EDGE_SLOTS
from oracles import central_difference, cos_beta_hexagon, fd_close, q2_scalar

radius = st.floats(min_value=0.02, max_value=12.0)
radii4 = st.tuples(radius, radius, radius, radius)


def test_q2_frozen_value():
    assert tet_q2([1, 1, 1, 1]) == pytest.approx(8.64020526708779, rel=1e-14)
    assert tet_q2([1, 1, 1, 1]) == pytest.approx(8 * math.tanh(1) ** 2 + 4, rel=1e-14)


def test_q2_limits():
    assert tet_q2(np.full(4, 1e-8)) == pytest.approx(4.0, abs=1e-12)
    # all t -> 1: 16 - 8 + 4
    assert tet_q2(np.full(4, 19.0)) == pytest.approx(12.0, rel=1e-12)


@given(radii4)
def test_q2_positive_and_matches_scalar(r):
    q = float(tet_q2(r))
    assert q > 0
    assert q == pytest.approx(q2_scalar(r), rel=1e-12)


@pytest.mark.parametrize("M", [0.1, 0.25, 1.0, 4.0])
def test_equal_radii_closed_form(M):
    t2 = math.tanh(M) ** 2
    cos, _ = tet_cos_sin(np.full(4, M))
    np.testing.assert_allclose(cos, (1 + t2) / (1 + 3 * t2), rtol=1e-14)
    beta = tet_dihedral_angles(np.full(4, M))
    np.testing.assert_allclose(tet_vertex_areas(np.full(4, M)), math.pi - 3 * beta[0], rtol=1e-14)


def test_doubled_unit_angle_frozen():
    assert tet_dihedral_angles(np.ones(4))[0] == pytest.approx(0.9561917565660712, rel=1e-14)


def test_angle_limits():
    small = tet_dihedral_angles(np.full(4, 1e-6))
    assert np.all(small < 1e-5)
    np.testing.assert_allclose(tet_vertex_areas(np.full(4, 1e-6)), math.pi, atol=1e-5)
    big = tet_dihedral_angles(np.full(4, 18.0))
    np.testing.assert_allclose(big, math.pi / 3, atol=1e-12)
    np.testing.assert_allclose(tet_vertex_areas(np.full(4, 18.0)), 0.0, atol=1e-12)


@settings(max_examples=200)
@given(radii4)
def test_trig_identities(r):
    cos, sin = tet_cos_sin(r)
    np.testing.assert_allclose(cos**2 + sin**2, 1.0, atol=1e-12)
    assert np.all(sin > 0)
    area = tet_vertex_areas(r)
    assert np.all(area > 0)
    assert np.all(area < math.pi)


@settings(max_examples=200)
@given(st.tuples(*[st.floats(0.05, 15.0)] * 4))
def test_cosh_law_cross_check(r):
    cos, _ = tet_cos_sin(r)
    np.testing.assert_allclose(cos, cos_beta_hexagon(np.array(r)), atol=1e-10)


def test_batched_shapes(rng):
    r = rng.uniform(0.1, 3, size=(3, 5, 4))
    assert tet_dihedral_angles(r).shape == (3, 5, 6)
    assert tet_vertex_areas(r).shape == (3, 5, 4)
    assert tet_dihedral_partials(r).shape == (3, 5, 6, 4)
    assert tet_area_jacobian(r).shape == (3, 5, 4, 4)
    beta, area, jac = tet_evaluate(r, jacobian=True)
    np.testing.assert_array_equal(beta, tet_dihedral_angles(r))
    np.testing.assert_array_equal(jac, tet_area_jacobian(r))


def test_partials_match_fd(rng):
    r = rng.uniform(0.1, 3, size=(50, 4))
    fd = central_difference(tet_dihedral_angles, r)
    assert np.all(fd_close(tet_dihedral_partials(r), fd))


def test_jacobian_matches_fd(rng):
    r = rng.uniform(0.1, 3, size=(50, 4))
    fd = central_difference(tet_vertex_areas, r)
    assert np.all(fd_close(tet_area_jacobian(r), fd))


def test_partial_signs(rng):
    r = rng.uniform(0.05, 5, size=(200, 4))
    t = np.tanh(r)
    d = tet_dihedral_partials(r)
    for s, (p, q) in enumerate(EDGE_SLOTS):
        u, v = (c for c in range(4) if c not in (p, q))
        assert np.all(d[:, s, p] > 0)
        assert np.all(d[:, s, q] > 0)
        for a, b in ((u, v), (v, u)):
            expected = -np.sign(t[:, p] + t[:, q] + t[:, a] - t[:, b])
            assert np.all(np.sign(d[:, s, a]) == expected)


def test_equal_radii_opposite_partial():
    # with all radii equal, the opposite partial is -s2 (2t)(2t) / (2 sqrt(Q2) (1 + 3t^2))
    M = 0.7
    t = math.tanh(M)
    s2 = 1 - t * t
    expected = -s2 * (2 * t) ** 2 / (2 * math.sqrt(8 * t * t + 4) * (1 + 3 * t * t))
    d = tet_dihedral_partials(np.full(4, M))
    assert d[0, 2] == pytest.approx(expected, rel=1e-13)
    assert d[0, 3] == pytest.approx(expected, rel=1e-13)


def test_jacobian_structure(rng):
    jac = tet_area_jacobian(rng.uniform(0.05, 6, size=(500, 4)))
    np.testing.assert_array_equal(jac, np.swapaxes(jac, -1, -2))
    assert np.all(jac < 0)
    diag = -np.diagonal(jac, axis1=-2, axis2=-1)
    off = np.abs(jac).sum(axis=-1) - diag
    assert np.all(diag > off)
    assert np.all(np.linalg.eigvalsh(jac) < 0)


def test_area_jacobian_row_sums_are_vertex_partials():
    r = np.array([0.3, 1.1, 0.6, 2.0])
    d = tet_dihedral_partials(r)
    jac = tet_area_jacobian(r)
    for a in range(4):
        for b in range(4):
            assert jac[a, b] == pytest.approx(-d[list(CORNER_SLOTS[a]), b].sum(), rel=1e-12)


def test_geometry_record():
    g = tet_geometry([0.5, 1.0, 1.5, 2.0])
    assert g.beta_at(0, 1) == g.beta[0]
    assert g.beta_at(2, 3) == g.beta[5]
    assert g.q2 > 0
    assert len(g.lam) == 4


def test_large_radius_warns():
    with pytest.warns(LargeRadiusWarning):
        tet_dihedral_angles([25.0, 1, 1, 1])


@pytest.mark.parametrize("bad", [[0, 1, 1, 1], [-1, 1, 1, 1], [np.nan, 1, 1, 1], [np.inf, 1, 1, 1]])
def test_rejects_invalid_radii(bad):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ValueError):
            tet_dihedral_angles(bad)


def test_rejects_wrong_shape():
    with pytest.raises(ValueError):
        tet_dihedral_angles([1.0, 1.0, 1.0])
