import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import simpson

from oracles import forward_integrate_time
from tetherplan.errors import ConstraintResidual, InternalInconsistency, InvariantViolation
from tetherplan.geometry import ObstacleMap, Sphere
from tetherplan.smoothing import (BezierSegment, bernstein_derivative_matrix, build_segments,
                                  smooth_velocity, straight_segment)
from tetherplan.sync import (KinodynamicLimits, OptimizationConfig, SyncSchedule,
                             TrajectoryObjective, assemble_trajectory, bernstein_gram,
                             make_schedule, optimize_trajectories, segment_speeds,
                             smoothness_energy, stationary_trajectory, sync_times,
                             traverse_time, waypoint_speed_knots)
from tetherplan.tether import TetherModel

LIM = KinodynamicLimits(2.0, 1.0)
WORLD = ObstacleMap((-10, -10, -10), (10, 10, 0), surface_z=0.0, seabed_z=-10.0)
limits_st = st.builds(KinodynamicLimits, st.floats(0.1, 5), st.floats(0.1, 5))


def test_traverse_time_examples():
    assert traverse_time(0.0, LIM) == 0.0
    assert math.sqrt(2 * 2.0 / 1.0) == pytest.approx(2.0)
    assert 2.0 / 1.0 + (2.0 - LIM.d_accel) / 2.0 == pytest.approx(2.0)
    assert traverse_time(2.0, LIM) == pytest.approx(2.0)
    assert traverse_time(6.0, LIM) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        traverse_time(-1.0, LIM)


@pytest.mark.parametrize("d", [0.1, 1.0, 1.999, 2.0, 2.001, 3.5, 6.0])
def test_traverse_time_forward_integration(d):
    assert traverse_time(d, LIM) == pytest.approx(forward_integrate_time(d, 2.0, 1.0),
                                                  abs=1e-6)


@given(limits_st, st.floats(0, 100), st.floats(1e-6, 10))
def test_traverse_time_monotone_and_speed_bounded(lim, d, extra):
    t1, t2 = traverse_time(d, lim), traverse_time(d + extra, lim)
    assert t2 > t1
    assert t1 * lim.v_max >= d - 1e-9


def test_sync_times_examples():
    np.testing.assert_allclose(sync_times([[2.0, 6.0]], [LIM]), [0.0, 2.0, 6.0])
    one = sync_times([[1.0, 2.0], [3.0, 0.5]], [LIM, LIM])
    two = sync_times([[3.0, 0.5], [1.0, 2.0]], [LIM, LIM])
    np.testing.assert_array_equal(one, two)
    np.testing.assert_allclose(sync_times([[2.0], [6.0]], [LIM, LIM]), [0.0, 4.0])


def test_zero_segments_get_dwell():
    times = sync_times([[0.0, 1.0], [0.0, 0.0]], [LIM, LIM], dwell=1e-3)
    assert times[1] == pytest.approx(1e-3)
    assert np.all(np.diff(times) > 0)


def test_segment_speed_examples():
    np.testing.assert_allclose(segment_speeds([1.0], [0.0, 1.0]), [1.0])
    np.testing.assert_allclose(segment_speeds([0.0], [0.0, 1e-3]), [0.0])
    times = sync_times([[2.0], [6.0]], [LIM, LIM])
    np.testing.assert_allclose(segment_speeds([2.0], times), [0.5])
    with pytest.raises(InternalInconsistency):
        segment_speeds([1.0], [0.0, 0.0])


@given(st.lists(st.tuples(st.floats(0, 20), st.floats(0, 20)), min_size=1, max_size=12),
       limits_st, limits_st)
def test_schedule_dominance_and_speed_limits(rows, la, lb):
    da = np.array([r[0] for r in rows])
    db = np.array([r[1] for r in rows])
    sched = make_schedule([da, db], [la, lb])
    for d, lim, v in zip((da, db), (la, lb), sched.speeds):
        own = np.concatenate([[0.0], np.cumsum([traverse_time(x, lim) for x in d])])
        assert np.all(sched.times >= own - 1e-9)
        assert np.all(v >= 0)
        assert np.all(v <= lim.v_max * (1 + 1e-12))
    assert np.all(np.diff(sched.times) > 0)


def test_schedule_stride():
    sched = make_schedule([np.ones(6), np.ones(6)], [LIM, LIM], stride=3)
    assert len(sched.segment_times) == 3
    with pytest.raises(ValueError):
        make_schedule([np.ones(5), np.ones(5)], [LIM, LIM], stride=3)


def test_energy_examples():
    seg = BezierSegment([(0, 0, 0), (1, 0, 0)])
    assert smoothness_energy([seg], [0.0, 1.0], 1.0, 0.0).total == pytest.approx(1.0)
    still = BezierSegment([(1, 2, 3)] * 4)
    assert smoothness_energy([still], [0.0, 2.0], 1.0, 1.0).total == 0.0
    cps = np.array([(0, 0, 0), (1, 2, 0), (3, -1, 1), (4, 0, 2)], dtype=float)
    e1 = smoothness_energy([BezierSegment(cps)], [0.0, 1.5], 1.0, 1.0)
    e2 = smoothness_energy([BezierSegment(2 * cps)], [0.0, 1.5], 1.0, 1.0)
    assert e2.velocity == pytest.approx(4 * e1.velocity)
    assert e2.acceleration == pytest.approx(4 * e1.acceleration)


def test_bernstein_gram_matches_quadrature():
    from math import comb
    s = np.linspace(0, 1, 2001)
    for m in range(4):
        basis = np.array([comb(m, i) * (1 - s) ** (m - i) * s ** i for i in range(m + 1)])
        num = simpson(basis[:, None, :] * basis[None, :, :], x=s, axis=-1)
        np.testing.assert_allclose(bernstein_gram(m), num, rtol=1e-10)


def quadrature_energy(segments, times, alpha, beta, n=1001):
    vel = acc = 0.0
    for seg, t0, t1 in zip(segments, times, times[1:]):
        dt = t1 - t0
        tau = np.linspace(t0, t1, n)
        s = (tau - t0) / dt
        d1 = bernstein_derivative_matrix(seg.degree, s, 1) @ seg.control_points / dt
        d2 = bernstein_derivative_matrix(seg.degree, s, 2) @ seg.control_points / dt ** 2
        vel += simpson(np.sum(d1 ** 2, axis=1), x=tau)
        acc += simpson(np.sum(d2 ** 2, axis=1), x=tau)
    return alpha * vel + beta * acc


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 5))
def test_energy_matches_quadrature(seed, nseg, degree):
    rng = np.random.default_rng(seed)
    segs = [BezierSegment(rng.normal(size=(degree + 1, 3))) for _ in range(nseg)]
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 3.0, size=nseg))])
    closed = smoothness_energy(segs, times, 1.0, 0.1).total
    assert closed == pytest.approx(quadrature_energy(segs, times, 1.0, 0.1), rel=1e-8)


def random_instance(rng, with_obstacles=True):
    pts = np.cumsum(rng.uniform(-1.5, 1.5, size=(4, 3)), axis=0)
    pts[:, 2] = 0.0
    asv = build_segments(pts)
    deep = pts + rng.uniform(-1, 1, size=pts.shape) + (0, 0, -3.0)
    auv = build_segments(deep)
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 2.0, size=3))])
    obstacles = ()
    if with_obstacles:
        mid = deep[1] + rng.normal(scale=0.3, size=3)
        obstacles = (Sphere(tuple(mid), 0.6),)
    world = ObstacleMap((-20, -20, -20), (20, 20, 0), obstacles, surface_z=0.0, seabed_z=-20.0)
    return asv, auv, times, world


def relative_gradient_error(objective, x, rng, h=1e-6):
    _, g = objective.value_and_grad(x)
    fd = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        fd[idx] = (objective.value(xp) - objective.value(xm)) / (2 * h)
    return np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(5):
        asv, auv, times, world = random_instance(rng)
        # tight limits so every penalty term is active somewhere
        teth = TetherModel(3.5, clearance=0.4)
        lims = (KinodynamicLimits(0.8, 0.4), KinodynamicLimits(0.8, 0.4))
        obj = TrajectoryObjective(asv, auv, times, world, teth, lims, OptimizationConfig())
        x = obj.x0 + rng.normal(scale=0.2, size=obj.x0.shape)
        assert relative_gradient_error(obj, x, rng) < 1e-5


def test_straight_segments_are_already_optimal():
    asv = [straight_segment((0, 0, 0), (2, 0, 0)), straight_segment((2, 0, 0), (4, 0, 0))]
    auv = [straight_segment((0, 1, -2), (2, 1, -2)), straight_segment((2, 1, -2), (4, 1, -2))]
    times = [0.0, 2.0, 4.0]
    res = optimize_trajectories(asv, auv, times, WORLD, TetherModel(10.0), (LIM, LIM),
                                OptimizationConfig())
    for a, b in zip(res.asv_segments + res.auv_segments, asv + auv):
        np.testing.assert_allclose(a.control_points, b.control_points, atol=1e-9)
    assert res.history[-1] == pytest.approx(res.history[0], rel=1e-6)


def test_optimizer_descends_and_keeps_endpoints():
    rng = np.random.default_rng(11)
    for _ in range(4):
        asv, auv, times, world = random_instance(rng)
        teth = TetherModel(12.0)
        try:
            res = optimize_trajectories(asv, auv, times, world, teth, (LIM, LIM),
                                        OptimizationConfig(max_iterations=60))
        except ConstraintResidual as exc:
            res = exc.result
        assert np.all(np.diff(res.history) <= 0)
        for new, old in zip(res.asv_segments + res.auv_segments, asv + auv):
            np.testing.assert_array_equal(new.control_points[0], old.control_points[0])
            np.testing.assert_array_equal(new.control_points[-1], old.control_points[-1])
        for seg in res.asv_segments:
            assert np.all(seg.control_points[:, 2] == 0.0)


def test_constraint_residual_reported():
    asv = [straight_segment((0, 0, 0), (6, 0, 0))]
    auv = [straight_segment((0, 0, -1), (0, 0, -1.5))]
    with pytest.raises(ConstraintResidual) as info:
        optimize_trajectories(asv, auv, [0.0, 6.0], WORLD, TetherModel(4.0), (LIM, LIM),
                              OptimizationConfig(max_iterations=5))
    assert info.value.residual > 0
    assert info.value.result is not None


def _schedule_for(asv, auv):
    d = [np.array([np.linalg.norm(s.control_points[-1] - s.control_points[0]) for s in segs])
         for segs in (asv, auv)]
    sched = make_schedule(d, (LIM, LIM))
    splines = {k: smooth_velocity(waypoint_speed_knots(sched.times, v))
               for k, v in zip(("asv", "auv"), sched.speeds)}
    return sched, splines


def test_assemble_synchronises_and_checks_chord():
    asv = [straight_segment((0, 0, 0), (2, 0, 0)), straight_segment((2, 0, 0), (3, 0, 0))]
    auv = [straight_segment((0, 0, -2), (1, 0, -2)), straight_segment((1, 0, -2), (4, 0, -2))]
    sched, splines = _schedule_for(asv, auv)
    teth = TetherModel(6.0)
    traj = assemble_trajectory(asv, auv, sched, splines, WORLD, teth, (LIM, LIM), ticks=200)
    assert abs(traj.times[-1] - sched.total) < 1e-9
    np.testing.assert_array_equal(traj.asv_positions[-1], (3, 0, 0))
    np.testing.assert_array_equal(traj.auv_positions[-1], (4, 0, -2))
    assert np.all(traj.chords <= teth.chord_limit)
    assert np.all((traj.asv_speeds >= 0) & (traj.asv_speeds <= LIM.v_max))
    assert traj.tether_points.shape == (201, teth.lumped_masses, 3)


def test_assemble_reports_first_taut_tick():
    asv = [straight_segment((0, 0, 0), (4, 0, 0))]
    auv = [straight_segment((0, 0, -1), (0, 0, -1.5))]
    sched, splines = _schedule_for(asv, auv)
    with pytest.raises(InvariantViolation) as info:
        assemble_trajectory(asv, auv, sched, splines, WORLD, TetherModel(3.0), (LIM, LIM),
                            ticks=100)
    assert info.value.diagnostic == "TAUT"
    assert 0 < info.value.tick < 100


def test_stationary_trajectory():
    traj = stationary_trajectory((0, 0, 0), (1, 0, -1), WORLD, TetherModel(3.0))
    assert len(traj.times) == 1 and traj.total_time == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        KinodynamicLimits(0.0, 1.0)
    with pytest.raises(ValueError):
        OptimizationConfig(alpha=-1.0)
    with pytest.raises(ValueError):
        OptimizationConfig(max_iterations=0)
    assert isinstance(SyncSchedule(np.zeros(1), [], []).total, float)
