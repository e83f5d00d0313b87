import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tetherplan.errors import NoData
from tetherplan.geometry import ObstacleMap, Sphere
from tetherplan.metrics import (COLUMNS, MetricsReport, aggregate, body_distances,
                                count_entries, evaluate_run, format_value)
from tetherplan.sync import SyncedTrajectory, arc_lengths, tick_tether
from tetherplan.tether import TetherModel

BOUNDS = ((-10, -10, -10), (10, 10, 0))


def make_traj(pa, pb, times, tether):
    pa, pb = np.asarray(pa, float), np.asarray(pb, float)
    dt = np.diff(times)
    va = np.r_[np.linalg.norm(np.diff(pa, axis=0), axis=1) / dt, 0.0][:len(times)]
    vb = np.r_[np.linalg.norm(np.diff(pb, axis=0), axis=1) / dt, 0.0][:len(times)]
    return SyncedTrajectory(times=np.asarray(times), asv_positions=pa, auv_positions=pb,
                            asv_speeds=va[:-1], auv_speeds=vb[:-1],
                            chords=np.linalg.norm(pa - pb, axis=1),
                            asv_clearance=np.zeros(len(pa)), auv_clearance=np.zeros(len(pb)),
                            tether_points=tick_tether(pa, pb, tether))


def test_straight_constant_speed_run():
    world = ObstacleMap(*BOUNDS, surface_z=0.0, seabed_z=-10.0)
    t = np.linspace(0, 1, 101)
    pb = np.column_stack([t, np.zeros_like(t), np.full_like(t, -2.0)])
    pa = pb * (1, 1, 0)
    rep = evaluate_run(None, make_traj(pa, pb, t, TetherModel(5.0)), world)
    assert rep.LAUV == pytest.approx(1.0)
    assert rep.STDU == pytest.approx(0.0, abs=1e-12)
    assert rep.NC == 0 and rep.RFRQ == 0
    assert rep.DOBS == world.empty_distance
    assert rep.CASV is None and rep.CAUV is None


def oracle_entries(d):
    count, inside = 0, False
    for x in d:
        if x < 0 and not inside:
            count += 1
        inside = x < 0
    return count


def test_crossing_sphere_once():
    world = ObstacleMap(*BOUNDS, (Sphere((0.0, 0.0, -2.0), 0.5),), surface_z=0.0,
                        seabed_z=-10.0)
    t = np.linspace(0, 1, 201)
    pb = np.column_stack([-3 + 6 * t, np.zeros_like(t), np.full_like(t, -2.0)])
    pa = pb * (1, 1, 0)
    traj = make_traj(pa, pb, t, TetherModel(2.5))
    rep = evaluate_run(None, traj, world)
    d = body_distances(traj, world)
    assert rep.NC == 1 == oracle_entries(d)
    assert rep.DOBS < 0
    assert rep.DOBS == d.min()


def test_count_entries_examples():
    assert count_entries([]) == 0
    assert count_entries([1, 2, 3]) == 0
    assert count_entries([-1, 1, -1, -1, 2]) == 2
    assert count_entries([1, -0.1, 0.0, -0.2]) == 2


@given(st.lists(st.floats(-5, 5), max_size=60))
def test_entries_match_scan(d):
    assert count_entries(d) == oracle_entries(d)
    if d:
        assert (count_entries(d) == 0) == (min(d) >= 0)


def report(**over):
    base = dict(LASV=1.0, LAUV=2.0, NC=0, CASV=0.1, CAUV=0.2, STDS=0.01, STDU=0.02,
                STDT=0.03, DOBS=0.5, RFRQ=1)
    base.update(over)
    return MetricsReport(**base)


def test_aggregate_single_and_identical():
    r = report()
    agg = aggregate([r])
    assert agg.mean == r.to_dict()
    agg2 = aggregate([r, r])
    assert agg2.mean == pytest.approx(r.to_dict())
    assert all(v == 0 for v in agg2.std.values())
    with pytest.raises(NoData):
        aggregate([])


def test_aggregate_nc_and_missing_timings():
    agg = aggregate([report(NC=2, CASV=None), report(NC=1, CASV=None)])
    assert agg.nc_total == 3 and agg.nc_max == 2
    assert agg.mean["CASV"] is None
    assert agg.mean["NC"] == 1.5


def test_report_roundtrip_and_format():
    r = report()
    assert MetricsReport.from_dict(r.to_dict()) == r
    assert tuple(r.to_dict()) == COLUMNS
    assert format_value(None) == ""
    assert format_value(3) == "3"
    assert format_value(0.1234567891234) == "0.123456789"


def test_lengths_match_curve_quadrature():
    from tetherplan.pipeline import run_pipeline
    from tetherplan.scenario import generate_scenario
    out = run_pipeline(generate_scenario("c", 4))
    exact = arc_lengths(out.trajectory.asv_segments).sum()
    assert out.metrics.LASV == pytest.approx(exact, rel=0.01)
    exact = arc_lengths(out.trajectory.auv_segments).sum()
    assert out.metrics.LAUV == pytest.approx(exact, rel=0.01)
    world, traj = out.scenario.world, out.trajectory
    for bodies in (traj.asv_positions, traj.auv_positions,
                   traj.tether_points.reshape(-1, 3)):
        assert out.metrics.DOBS <= world.distance(bodies).min()
