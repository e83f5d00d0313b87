import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import brentq

from tetherplan.errors import InfeasibleGeometry, InvalidCatenary, TautTether
from tetherplan.geometry import ObstacleMap, Sphere, polyline_length
from tetherplan.tether import (Diagnostic, TetherModel, catenary_point, hang_tether,
                               solve_catenary_constant, tether_feasible)

BOUNDS = ((-20.0, -20.0, -20.0), (20.0, 20.0, 0.0))


def empty_map():
    return ObstacleMap(*BOUNDS, surface_z=0.0, seabed_z=-20.0)


def oracle_a(d, l):
    return brentq(lambda a: 2 * a * math.sinh(d / (2 * a)) - l, d * 1e-3, d * 1e4,
                  xtol=1e-14, rtol=1e-14)


def shooting_oracle(p1, p2, l):
    """General catenary through both endpoints with arc length l.

    For a trial constant ``a`` the vertex abscissa is found from the endpoint
    rise; ``a`` is then shot until the arc length matches.
    """
    d = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
    dz = p2[2] - p1[2]

    def vertex(a):
        def rise(uv):
            return a * (math.cosh((d - uv) / a) - math.cosh(uv / a)) - dz
        return brentq(rise, d / 2 - 30 * a, d / 2 + 30 * a, xtol=1e-15)

    def arc(a):
        uv = vertex(a)
        return a * (math.sinh((d - uv) / a) + math.sinh(uv / a)) - l

    a = brentq(arc, 0.02, 100.0, xtol=1e-15, rtol=1e-15)
    uv = vertex(a)
    c = p1[2] - a * math.cosh(uv / a)

    def z(u):
        return a * np.cosh((u - uv) / a) + c

    return a, uv, z


def test_catenary_point_examples():
    p1, p2 = (0, 0, 0), (2, 0, 0)
    np.testing.assert_allclose(catenary_point(p1, p2, 1.0, 0.0, 0.0), (0, 0, 0), atol=1e-15)
    np.testing.assert_allclose(catenary_point(p1, p2, 1.0, 0.0, 0.5),
                               (1, 0, 1 - 1.5430806348152437), atol=1e-12)
    np.testing.assert_allclose(catenary_point(p1, p2, 1.0, 0.0, 1.0), (2, 0, 0), atol=1e-15)
    with pytest.raises(InvalidCatenary):
        catenary_point(p1, p2, 0.0, 0.0, 0.5)


def test_solve_constant_examples():
    a = solve_catenary_constant(2.0, 2 * math.sinh(1.0))
    assert a == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(TautTether):
        solve_catenary_constant(2.0, 2.0)
    a = solve_catenary_constant(1.0, 10.0)
    assert abs(2 * a * math.sinh(1 / (2 * a)) - 10.0) / 10.0 < 1e-9
    assert a == pytest.approx(oracle_a(1.0, 10.0), rel=1e-9)


@given(st.floats(0.01, 50.0), st.floats(1.0 + 1e-6, 1e4))
def test_solve_constant_residual(d, ratio):
    l = d * ratio
    a = solve_catenary_constant(d, l)
    assert abs(2 * a * math.sinh(d / (2 * a)) - l) <= 1e-9 * l


def test_hang_symmetric_example():
    teth = TetherModel(2 * math.sinh(1.0), lumped_masses=101)
    shape = hang_tether((0, 0, 0), (2, 0, 0), teth)
    assert shape.points[50, 2] == pytest.approx(1 - math.cosh(1.0), abs=1e-9)
    assert shape.a == pytest.approx(1.0, rel=1e-9)


def test_hang_vertical_example():
    teth = TetherModel(3 + 1e-9, lumped_masses=21, slack_margin=0.0)
    shape = hang_tether((0, 0, 0), (0, 0, -3), teth)
    np.testing.assert_allclose(shape.points[:, :2], 0.0, atol=1e-12)
    np.testing.assert_array_equal(shape.points[0], (0, 0, 0))
    np.testing.assert_array_equal(shape.points[-1], (0, 0, -3))
    assert np.all(np.diff(shape.points[:, 2]) <= 1e-9)


def test_hang_vertical_slack_folds_below():
    teth = TetherModel(5.0, lumped_masses=21)
    shape = hang_tether((0, 0, 0), (0, 0, -3), teth)
    assert shape.min_z == pytest.approx(-4.0)
    assert shape.points[:, 2].min() == pytest.approx(-4.0)
    assert shape.arc_length == pytest.approx(5.0)


def test_hang_asymmetric_matches_shooting():
    p1, p2 = (0.0, 0.0, 0.0), (1.0, 0.0, -1.0)
    teth = TetherModel(2.0, lumped_masses=101)
    shape = hang_tether(p1, p2, teth)
    assert 1.99 <= polyline_length(shape.points) <= 2.0
    assert shape.points[:, 2].min() < -1.0
    a, uv, z = shooting_oracle(p1, p2, 2.0)
    assert shape.a == pytest.approx(a, rel=1e-8)
    u = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(shape.points[:, 2], z(u), atol=1e-8)


def test_hang_errors():
    with pytest.raises(InfeasibleGeometry):
        hang_tether((0, 0, 0), (0, 0, -5), TetherModel(4.0))
    with pytest.raises(TautTether):
        hang_tether((0, 0, 0), (10, 0, 0), TetherModel(10.5))


def test_feasible_examples():
    world = empty_map()
    teth = TetherModel(10.0)
    check = tether_feasible((0, 0, 0), (10, 0, -1), teth, world)
    assert not check and check.diagnostic is Diagnostic.TAUT
    check = tether_feasible((0, 0, 0), (5, 0, 0), teth, world)
    assert check and check.diagnostic is Diagnostic.OK


def test_feasible_detects_sphere_at_sag():
    teth = TetherModel(10.0)
    p1, p2 = np.array([0.0, 0, 0]), np.array([6.0, 0, -2])
    shape = hang_tether(p1, p2, teth)
    low = shape.points[np.argmin(shape.points[:, 2])]
    world = ObstacleMap(*BOUNDS, obstacles=(Sphere(tuple(low), 0.3),), surface_z=0.0,
                        seabed_z=-20.0)
    assert world.distance(p1) > teth.clearance and world.distance(p2) > teth.clearance
    check = tether_feasible(p1, p2, teth, world)
    assert not check and check.diagnostic is Diagnostic.TETHER_COLLISION


def test_feasible_below_seabed():
    world = ObstacleMap(*BOUNDS, surface_z=0.0, seabed_z=-2.5)
    check = tether_feasible((0, 0, 0), (3, 0, -2), TetherModel(10.0), world)
    assert not check and check.diagnostic is Diagnostic.BELOW_SEABED


def test_model_validation():
    for kwargs in ({"length": 0.0}, {"length": 1.0, "lumped_masses": 1},
                   {"length": 1.0, "slack_margin": 1.0}, {"length": 1.0, "clearance": -1}):
        with pytest.raises(ValueError):
            TetherModel(**kwargs)


endpoint = st.tuples(st.floats(-8, 8), st.floats(-8, 8), st.floats(-8, 0))


@st.composite
def hang_config(draw):
    p1 = np.array([draw(st.floats(-8, 8)), draw(st.floats(-8, 8)), 0.0])
    p2 = np.array(draw(endpoint), dtype=float)
    chord = float(np.linalg.norm(p2 - p1))
    assume(chord > 1e-3)
    ratio = draw(st.floats(0.05, 0.98))
    return p1, p2, chord / ratio


@given(hang_config())
def test_hang_length_within_budget(cfg):
    p1, p2, l = cfg
    shape = hang_tether(p1, p2, TetherModel(l, lumped_masses=101, slack_margin=0.0))
    length = polyline_length(shape.points)
    assert l * (1 - 0.005) <= length <= l * (1 + 1e-12)
    np.testing.assert_allclose(shape.points[0], p1, atol=1e-9)
    np.testing.assert_allclose(shape.points[-1], p2, atol=1e-9)


@given(hang_config())
def test_hang_below_chord_and_in_plane(cfg):
    p1, p2, l = cfg
    shape = hang_tether(p1, p2, TetherModel(l, lumped_masses=51, slack_margin=0.0))
    pts = shape.points
    ts = np.linspace(0.0, 1.0, len(pts))
    if math.hypot(*(p2 - p1)[:2]) > 1e-6:
        chord_z = p1[2] + ts * (p2[2] - p1[2])
        assert np.all(pts[:, 2] <= chord_z + 1e-9)
        np.testing.assert_allclose(pts[:, :2], p1[:2] + ts[:, None] * (p2 - p1)[:2],
                                   atol=1e-9)


@given(st.floats(0.5, 10.0), st.floats(0.1, 0.95), st.floats(-5, 5))
def test_equal_height_reproduces_closed_form(d, ratio, z):
    p1, p2 = np.array([0.0, 0.0, z]), np.array([d, 0.0, z])
    l = d / ratio
    shape = hang_tether(p1, p2, TetherModel(l, lumped_masses=101, slack_margin=0.0))
    for i, t in enumerate(np.linspace(0.0, 1.0, 101)):
        np.testing.assert_allclose(shape.points[i], catenary_point(p1, p2, shape.a, z, t),
                                   atol=1e-6)


@given(hang_config(), st.floats(1.01, 3.0))
def test_longer_tether_hangs_lower(cfg, grow):
    p1, p2, l = cfg
    assume(math.hypot(*(p2 - p1)[:2]) > 1e-3)
    low1 = hang_tether(p1, p2, TetherModel(l, slack_margin=0.0)).min_z
    low2 = hang_tether(p1, p2, TetherModel(l * grow, slack_margin=0.0)).min_z
    assert low2 < low1


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(1.0, 8.0))
def test_feasibility_monotone_in_clearance(c1, c2, x):
    lo, hi = min(c1, c2), max(c1, c2)
    world = ObstacleMap(*BOUNDS, obstacles=(Sphere((4.0, 0.5, -3.0), 1.0),), surface_z=0.0,
                        seabed_z=-20.0)
    p1, p2 = (0.0, 0.0, 0.0), (x, 0.0, -1.0)
    if tether_feasible(p1, p2, TetherModel(9.0, clearance=hi), world):
        assert tether_feasible(p1, p2, TetherModel(9.0, clearance=lo), world)
