"""End-to-end planning pipeline and the unsmoothed ablation baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TautTether, InfeasibleGeometry
from .metrics import MetricsReport, evaluate_run
from .planner import PlanResult, plan_pair
from .smoothing import smooth_paths, smooth_velocity
from .sync import (OptimizationResult, SyncSchedule, SyncedTrajectory, sampled_distances,
                   assemble_trajectory, make_schedule, optimize_trajectories,
                   stationary_trajectory, traverse_time, waypoint_speed_knots)
from .tether import TetherModel, hang_tether


@dataclass
class RunOutput:
    scenario: object
    plan: PlanResult
    trajectory: SyncedTrajectory
    metrics: MetricsReport
    optimization: OptimizationResult | None = None
    waypoints: tuple = ()
    diagnostics: dict = field(default_factory=dict)


def paired_waypoints(plan: PlanResult):
    """Index-paired waypoints with consecutive duplicate pairs removed."""
    a, b = np.asarray(plan.asv.positions), np.asarray(plan.auv.positions)
    if len(a) != len(b):
        raise ValueError("planner returned unpaired paths")
    keep = [0]
    for k in range(1, len(a)):
        if not (np.array_equal(a[k], a[keep[-1]]) and np.array_equal(b[k], b[keep[-1]])):
            keep.append(k)
    return a[keep], b[keep]


def run_pipeline(scenario, plan: PlanResult | None = None) -> RunOutput:
    """Plan, smooth, synchronise, optimise and sample one scenario."""
    world, tether, cfg = scenario.world, scenario.tether, scenario.optimizer
    limits = scenario.limits
    if plan is None:
        plan = plan_pair(scenario)
    a, b = paired_waypoints(plan)
    if len(a) < 2:
        traj = stationary_trajectory(a[0], b[0], world, tether)
        return RunOutput(scenario, plan, traj, evaluate_run(plan, traj, world, tether),
                         waypoints=(a, b))

    pts, segs, straight = smooth_paths([a, b], world, tether.clearance)
    k = cfg.samples_per_segment
    schedule = make_schedule([sampled_distances(s, k + 1) for s in segs], limits, cfg.dwell,
                             stride=k)
    opt = optimize_trajectories(segs[0], segs[1], schedule.segment_times, world, tether, limits,
                                cfg)
    schedule = make_schedule([sampled_distances(s, k + 1)
                              for s in (opt.asv_segments, opt.auv_segments)],
                             limits, cfg.dwell, stride=k)
    splines = {key: smooth_velocity(waypoint_speed_knots(schedule.times, v))
               for key, v in zip(("asv", "auv"), schedule.speeds)}
    traj = assemble_trajectory(opt.asv_segments, opt.auv_segments, schedule, splines, world,
                               tether, limits, ticks=cfg.ticks)
    diagnostics = {"iterations": opt.iterations, "straightened_segments": opt.straightened,
                   "objective_initial": opt.history[0], "objective_final": opt.history[-1],
                   "clipped_speed_samples": traj.clipped_speeds,
                   "smoothing_straight_segments": int(sum(int(s.sum()) for s in straight))}
    return RunOutput(scenario, plan, traj, evaluate_run(plan, traj, world, tether), opt,
                     waypoints=tuple(pts), diagnostics=diagnostics)


def _hang_or_chord(p, q, tether: TetherModel) -> np.ndarray:
    try:
        return hang_tether(p, q, tether).points
    except (TautTether, InfeasibleGeometry):
        ts = np.linspace(0.0, 1.0, tether.lumped_masses)[:, None]
        return p + ts * (q - p)


def _unsynced_profile(points, limits):
    """Own-pace polyline timing: per-segment traverse times and raw speeds."""
    d = np.linalg.norm(np.diff(points, axis=0), axis=1)
    moving = d > 0
    pts = np.vstack([points[:1], points[1:][moving]])
    d = d[moving]
    t = np.array([traverse_time(float(x), limits) for x in d])
    times = np.concatenate([[0.0], np.cumsum(t)])
    return pts, times, np.where(t > 0, d / np.where(t > 0, t, 1.0), 0.0)


def _sample_profile(pts, times, speeds, t):
    if len(pts) == 1:
        return np.repeat(pts, len(t), axis=0), np.zeros(len(t))
    idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(speeds) - 1)
    frac = np.clip((t - times[idx]) / (times[idx + 1] - times[idx]), 0.0, 1.0)
    pos = pts[idx] + frac[:, None] * (pts[idx + 1] - pts[idx])
    return pos, speeds[idx]


def run_ablation(scenario, plan: PlanResult | None = None, ticks: int | None = None):
    """Baseline that skips smoothing, synchronisation and optimisation.

    Each vehicle drives its raw planned polyline at its own pace with the
    piecewise-constant segment speeds. Speeds are taken over each vehicle's
    own active interval, so an early finisher is not credited with a long
    zero-speed tail.

    Returns:
        (plan, trajectory, metrics)
    """
    world, tether = scenario.world, scenario.tether
    if plan is None:
        plan = plan_pair(scenario)
    ticks = ticks or scenario.optimizer.ticks
    profiles = [_unsynced_profile(np.asarray(p.positions, float), lim)
                for p, lim in zip((plan.asv, plan.auv), scenario.limits)]
    total = max(prof[1][-1] for prof in profiles)
    t = np.linspace(0.0, total, ticks + 1)
    sampled = [_sample_profile(*prof, t) for prof in profiles]
    active = [(t <= prof[1][-1]) for prof in profiles]
    (pa, va), (pb, vb) = sampled
    tpts = np.stack([_hang_or_chord(p, q, tether) for p, q in zip(pa, pb)])
    traj = SyncedTrajectory(times=t, asv_positions=pa, auv_positions=pb,
                            asv_speeds=va[active[0]], auv_speeds=vb[active[1]],
                            chords=np.linalg.norm(pa - pb, axis=1),
                            asv_clearance=world.distance(pa), auv_clearance=world.distance(pb),
                            tether_points=tpts,
                            schedule=SyncSchedule(t[[0, -1]], [va, vb], [np.zeros(1)] * 2))
    return plan, traj, evaluate_run(plan, traj, world, tether)
