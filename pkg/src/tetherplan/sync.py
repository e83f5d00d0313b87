"""Time synchronisation of both vehicles and smoothness optimisation.

Each vehicle follows its own chain of Bezier segments; segment ``i`` of both
vehicles is mapped affinely onto the same interval ``[T_{i-1}, T_i]`` so the
two reach every waypoint at the same instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ConstraintResidual, InternalInconsistency, InvariantViolation
from .geometry import ObstacleMap
from .smoothing import (BezierSegment, bernstein_derivative_matrix,
                        bernstein_matrix, sample_curve, straight_segment)
from .tether import TetherModel, hang_tether

DWELL = 1e-3


@dataclass(frozen=True)
class KinodynamicLimits:
    v_max: float
    a_max: float

    def __post_init__(self):
        if not (self.v_max > 0 and self.a_max > 0):
            raise ValueError("speed and acceleration limits must be positive")

    @property
    def d_accel(self) -> float:
        """Distance covered while accelerating from rest to ``v_max``."""
        return self.v_max ** 2 / (2 * self.a_max)

    def to_dict(self) -> dict:
        return {"v_max_mps": self.v_max, "a_max_mps2": self.a_max}


@dataclass(frozen=True)
class OptimizationConfig:
    alpha: float = 1.0
    beta: float = 0.1
    obstacle_weight: float = 1e3
    speed_weight: float = 1e3
    accel_weight: float = 1e3
    tether_weight: float = 1e3
    step_size: float = 1.0
    max_iterations: int = 500
    tolerance: float = 1e-6
    samples_per_segment: int = 20
    ticks: int = 1000
    dwell: float = DWELL

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta,
                "obstacle_weight": self.obstacle_weight, "speed_weight": self.speed_weight,
                "accel_weight": self.accel_weight, "tether_weight": self.tether_weight,
                "step_size": self.step_size, "max_iterations": self.max_iterations,
                "tolerance": self.tolerance, "samples_per_segment": self.samples_per_segment,
                "ticks": self.ticks, "dwell_s": self.dwell}


def traverse_time(d: float, limits: KinodynamicLimits) -> float:
    """Time to cover ``d`` from rest: accelerate at ``a_max``, then cruise.

    The branch switches where the vehicle reaches ``v_max`` (v^2 / 2a), which
    keeps the function continuous.
    """
    if d < 0:
        raise ValueError("distance must be non-negative")
    a, v = limits.a_max, limits.v_max
    d_accel = limits.d_accel
    if d <= d_accel:
        return math.sqrt(2 * d / a)
    return v / a + (d - d_accel) / v


@dataclass
class SyncSchedule:
    """Shared waypoint times with each vehicle's segment speeds.

    When the waypoints are samples of a Bezier chain, ``stride`` is the
    number of schedule intervals per curve segment.
    """

    times: np.ndarray
    speeds: list
    distances: list
    stride: int = 1

    @property
    def segment_times(self) -> np.ndarray:
        return self.times[::self.stride]

    @property
    def total(self) -> float:
        return float(self.times[-1])

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.times)


def sync_times(distances, limits, dwell: float = DWELL) -> np.ndarray:
    """Cumulative synchronised waypoint times, starting at 0.

    Each segment lasts as long as its slowest vehicle needs; segments where
    no vehicle moves last ``dwell`` seconds.
    """
    dist = [np.asarray(d, dtype=float) for d in distances]
    if len({len(d) for d in dist}) > 1:
        raise ValueError("distance lists must have equal length")
    n = len(dist[0])
    seg = np.empty(n)
    for i in range(n):
        seg[i] = max(max(traverse_time(float(d[i]), lim) for d, lim in zip(dist, limits)),
                     dwell)
    return np.concatenate([[0.0], np.cumsum(seg)])


def segment_speeds(distances, times) -> np.ndarray:
    d = np.asarray(distances, dtype=float)
    dt = np.diff(np.asarray(times, dtype=float))
    if np.any((dt <= 0) & (d > 0)):
        raise InternalInconsistency("zero interval with non-zero distance")
    return np.where(d > 0, d / np.where(dt > 0, dt, 1.0), 0.0)


def make_schedule(distances, limits, dwell: float = DWELL, stride: int = 1) -> SyncSchedule:
    times = sync_times(distances, limits, dwell)
    speeds = [segment_speeds(d, times) for d in distances]
    if (len(times) - 1) % stride:
        raise ValueError("interval count is not a multiple of the stride")
    return SyncSchedule(times=times, speeds=speeds,
                        distances=[np.asarray(d, dtype=float) for d in distances], stride=stride)


def sampled_distances(segments, samples_per_segment: int) -> np.ndarray:
    """Chord lengths between consecutive uniform-parameter samples of a chain."""
    pts = sample_curve(segments, samples_per_segment)
    return np.linalg.norm(np.diff(pts, axis=0), axis=1)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def arc_lengths(segments) -> np.ndarray:
    """Per-segment curve length by 16-point Gauss-Legendre quadrature."""
    if not segments:
        return np.zeros(0)
    ts = (_GL_NODES + 1) / 2
    out = np.empty(len(segments))
    for i, seg in enumerate(segments):
        d1 = bernstein_derivative_matrix(seg.degree, ts, 1) @ seg.control_points
        out[i] = 0.5 * float(np.dot(_GL_WEIGHTS, np.linalg.norm(d1, axis=1)))
    return out


def bernstein_gram(m: int) -> np.ndarray:
    """Exact integrals of products of degree-``m`` Bernstein polynomials on [0, 1]."""
    g = np.empty((m + 1, m + 1))
    for i in range(m + 1):
        for j in range(m + 1):
            g[i, j] = comb(m, i) * comb(m, j) / ((2 * m + 1) * comb(2 * m, i + j))
    return g


def _difference(n: int, order: int) -> np.ndarray:
    delta = np.eye(n + 1)
    scale = 1.0
    for k in range(order):
        delta = delta[1:] - delta[:-1]
        scale *= n - k
    return scale * delta


def energy_matrices(n: int):
    """Quadratic forms of the parameter-space integrals of |B'|^2 and |B''|^2."""
    m1 = np.zeros((n + 1, n + 1))
    m2 = np.zeros((n + 1, n + 1))
    if n >= 1:
        d1 = _difference(n, 1)
        m1 = d1.T @ bernstein_gram(n - 1) @ d1
    if n >= 2:
        d2 = _difference(n, 2)
        m2 = d2.T @ bernstein_gram(n - 2) @ d2
    return m1, m2


@dataclass
class Energy:
    velocity: float
    acceleration: float
    total: float


def smoothness_energy(segments, times, alpha: float, beta: float) -> Energy:
    """Closed-form alpha * sum |B'|^2 dt + beta * sum |B''|^2 dt.

    Segment ``i`` maps t in [0, 1] onto [times[i], times[i+1]], so the chain
    rule contributes 1/dT for the velocity and 1/dT^3 for the acceleration
    integral.
    """
    dts = np.diff(np.asarray(times, dtype=float))
    vel = acc = 0.0
    cache = {}
    for seg, dt in zip(segments, dts):
        n = seg.degree
        if n not in cache:
            cache[n] = [(_difference(n, r), bernstein_gram(n - r)) for r in (1, 2) if r <= n]
        p = seg.control_points
        # Work on differences so a stationary curve gives exactly zero.
        terms = [float(np.sum((d @ p) * (g @ (d @ p)))) for d, g in cache[n]]
        vel += terms[0] / dt
        if len(terms) > 1:
            acc += terms[1] / dt ** 3
    return Energy(alpha * vel, beta * acc, alpha * vel + beta * acc)


class TrajectoryObjective:
    """Penalised smoothness objective over the interior control points.

    Holds both vehicles' cubic segments (equal counts) and a fixed schedule.
    ``x`` has shape ``(2, nseg, 2, 3)``: vehicle, segment, (P1, P2), xyz.
    """

    def __init__(self, asv_segments, auv_segments, times, world: ObstacleMap,
                 tether: TetherModel, limits, config: OptimizationConfig):
        if len(asv_segments) != len(auv_segments):
            raise ValueError("both vehicles need the same number of segments")
        self.cps = np.stack([np.stack([s.control_points for s in segs])
                             for segs in (asv_segments, auv_segments)])
        if self.cps.shape[2] != 4:
            raise ValueError("optimiser works on cubic segments")
        self.dt = np.diff(np.asarray(times, dtype=float))
        self.world, self.tether, self.limits, self.config = world, tether, limits, config
        s = config.samples_per_segment
        ts = (np.arange(s) + 0.5) / s
        self.b0 = bernstein_matrix(3, ts)
        self.b1 = bernstein_derivative_matrix(3, ts, 1)
        self.b2 = bernstein_derivative_matrix(3, ts, 2)
        self.m1, self.m2 = energy_matrices(3)

    @property
    def x0(self) -> np.ndarray:
        return self.cps[:, :, 1:3, :].copy()

    def control_points(self, x) -> np.ndarray:
        cps = self.cps.copy()
        cps[:, :, 1:3, :] = x
        return cps

    def value_and_grad(self, x):
        cfg = self.config
        cps = self.control_points(x)
        grad = np.zeros_like(cps)
        dt = self.dt[None, :, None, None]

        h = (cfg.alpha / dt) * self.m1 + (cfg.beta / dt ** 3) * self.m2  # (1, n, 4, 4)
        hp = np.einsum("vnij,vnjd->vnid", np.broadcast_to(h, cps.shape[:2] + (4, 4)), cps)
        value = float(np.sum(cps * hp))
        grad += 2 * hp

        pos = np.einsum("sk,vnkd->vnsd", self.b0, cps)
        dtn = self.dt[None, :, None, None]
        vel = np.einsum("sk,vnkd->vnsd", self.b1, cps) / dtn
        acc = np.einsum("sk,vnkd->vnsd", self.b2, cps) / dtn ** 2

        dpos = np.zeros_like(pos)
        if self.world.obstacles:
            sd, sd_grad = self.world.distance_and_gradient(pos)
            hinge = np.maximum(0.0, self.tether.clearance - sd)
            value += cfg.obstacle_weight * float(np.sum(hinge ** 2))
            dpos -= 2 * cfg.obstacle_weight * hinge[..., None] * sd_grad

        vmax = np.array([lim.v_max for lim in self.limits])[:, None, None]
        amax = np.array([lim.a_max for lim in self.limits])[:, None, None]
        dvel = self._norm_penalty(vel, vmax, cfg.speed_weight)
        dacc = self._norm_penalty(acc, amax, cfg.accel_weight)
        value += dvel[0] + dacc[0]

        diff = pos[0] - pos[1]
        chord = np.linalg.norm(diff, axis=-1)
        hinge = np.maximum(0.0, chord - self.tether.chord_limit)
        value += cfg.tether_weight * float(np.sum(hinge ** 2))
        safe = np.where(chord > 0, chord, 1.0)
        g_chord = (2 * cfg.tether_weight * hinge / safe)[..., None] * diff
        dpos[0] += g_chord
        dpos[1] -= g_chord

        grad += np.einsum("sk,vnsd->vnkd", self.b0, dpos)
        grad += np.einsum("sk,vnsd->vnkd", self.b1, dvel[1] / dtn)
        grad += np.einsum("sk,vnsd->vnkd", self.b2, dacc[1] / dtn ** 2)
        return value, grad[:, :, 1:3, :]

    @staticmethod
    def _norm_penalty(vec, limit, weight):
        norm = np.linalg.norm(vec, axis=-1)
        hinge = np.maximum(0.0, norm - limit)
        safe = np.where(norm > 0, norm, 1.0)
        g = (2 * weight * hinge / safe)[..., None] * vec
        return weight * float(np.sum(hinge ** 2)), g

    def value(self, x) -> float:
        return self.value_and_grad(x)[0]


@dataclass
class OptimizationResult:
    asv_segments: list
    auv_segments: list
    history: list
    iterations: int
    straightened: int = 0
    residual: float = 0.0


def _segments_from(cps) -> list:
    return [BezierSegment(c) for c in cps]


def _dense_check(asv, auv, world, tether, samples=64):
    ts = np.linspace(0.0, 1.0, samples)
    basis = bernstein_matrix(3, ts)
    pa = np.einsum("sk,nkd->nsd", basis, np.stack([s.control_points for s in asv]))
    pb = np.einsum("sk,nkd->nsd", basis, np.stack([s.control_points for s in auv]))
    chord_excess = (np.linalg.norm(pa - pb, axis=-1) - tether.chord_limit).max(axis=1)
    sd_a = world.distance(pa).min(axis=1)
    sd_b = world.distance(pb).min(axis=1)
    # Leaving the water column counts as a clearance failure.
    z = pb[..., 2]
    outside = (z.max(axis=1) > world.surface_z) | (z.min(axis=1) < world.seabed_z)
    sd_b = np.where(outside, -np.inf, sd_b)
    return chord_excess, sd_a, sd_b


def optimize_trajectories(asv_segments, auv_segments, times, world: ObstacleMap,
                          tether: TetherModel, limits, config: OptimizationConfig
                          ) -> OptimizationResult:
    """Gradient descent on interior control points with backtracking.

    Every accepted step strictly lowers the penalised objective. Afterwards,
    segments whose dense samples break the chord limit (both vehicles) or
    come within half the clearance of an obstacle (that vehicle) are reset
    to their straight chords, which the planner already certified.

    Raises:
        ConstraintResidual: a chord violation survives the repair.
    """
    objective = TrajectoryObjective(asv_segments, auv_segments, times, world, tether,
                                    limits, config)
    x = objective.x0
    # The surface vehicle stays in its plane.
    mask = np.ones_like(x)
    mask[0, ..., 2] = 0.0
    f, g = objective.value_and_grad(x)
    g = g * mask
    history = [f]
    step = config.step_size
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        if not np.any(g):
            break
        accepted = False
        while step > 1e-14:
            cand = x - step * g
            fc, gc = objective.value_and_grad(cand)
            gc = gc * mask
            if fc < f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        improvement = (f - fc) / max(abs(f), 1e-300)
        x, f, g = cand, fc, gc
        history.append(f)
        step *= 2.0
        if improvement < config.tolerance:
            break

    cps = objective.control_points(x)
    asv, auv = _segments_from(cps[0]), _segments_from(cps[1])
    originals = (list(asv_segments), list(auv_segments))
    straightened = 0
    for _ in range(len(asv) + 1):
        chord_excess, sd_a, sd_b = _dense_check(asv, auv, world, tether)
        fix_a = (chord_excess > 0) | (sd_a < 0.5 * tether.clearance)
        fix_b = (chord_excess > 0) | (sd_b < 0.5 * tether.clearance)
        changed = False
        for segs, orig, fix in ((asv, originals[0], fix_a), (auv, originals[1], fix_b)):
            for i in np.flatnonzero(fix):
                line = straight_segment(orig[i].control_points[0], orig[i].control_points[-1])
                if not np.array_equal(segs[i].control_points, line.control_points):
                    segs[i] = line
                    straightened += 1
                    changed = True
        if not changed:
            break
    chord_excess, _, _ = _dense_check(asv, auv, world, tether)
    residual = float(max(chord_excess.max(initial=-np.inf), 0.0))
    result = OptimizationResult(asv, auv, history, iterations, straightened, residual)
    if residual > 0:
        raise ConstraintResidual(f"chord limit exceeded by {residual:.3g} m", result, residual)
    return result


@dataclass
class SyncedTrajectory:
    times: np.ndarray
    asv_positions: np.ndarray
    auv_positions: np.ndarray
    asv_speeds: np.ndarray
    auv_speeds: np.ndarray
    chords: np.ndarray
    asv_clearance: np.ndarray
    auv_clearance: np.ndarray
    tether_points: np.ndarray
    asv_segments: list = field(default_factory=list)
    auv_segments: list = field(default_factory=list)
    schedule: SyncSchedule | None = None
    splines: dict = field(default_factory=dict)
    clipped_speeds: int = 0

    @property
    def total_time(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def waypoint_speed_knots(times, speeds):
    """Knots at each waypoint: mean of the adjacent segment speeds, ends keep theirs."""
    v = np.asarray(speeds, dtype=float)
    inner = (v[:-1] + v[1:]) / 2
    values = np.concatenate([[v[0]], inner, [v[-1]]])
    return np.column_stack([np.asarray(times, dtype=float), values])


def sample_segments(segments, times, t) -> np.ndarray:
    """Positions on an affinely timed segment chain at the query times ``t``."""
    times = np.asarray(times, dtype=float)
    cps = np.stack([s.control_points for s in segments])
    idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(segments) - 1)
    local = np.clip((t - times[idx]) / (times[idx + 1] - times[idx]), 0.0, 1.0)
    n = cps.shape[1] - 1
    basis = bernstein_matrix(n, local)  # (T, n+1)
    return np.einsum("tk,tkd->td", basis, cps[idx])


def tick_tether(asv_positions, auv_positions, tether: TetherModel) -> np.ndarray:
    return np.stack([hang_tether(a, b, tether).points
                     for a, b in zip(asv_positions, auv_positions)])


def assemble_trajectory(asv_segments, auv_segments, schedule: SyncSchedule,
                        splines: dict, world: ObstacleMap, tether: TetherModel, limits,
                        ticks: int = 1000, verify: bool = True) -> SyncedTrajectory:
    """Sample both vehicles at shared ticks and verify the tether chord.

    ``splines`` maps ``"asv"``/``"auv"`` to their :class:`VelocitySpline`;
    sampled speeds are clipped into ``[0, v_max]``. ``limits`` is the
    (asv, auv) pair.

    Raises:
        InvariantViolation: a tick where the chord exceeds the slack-adjusted
            tether length.
    """
    total = schedule.total
    if not asv_segments or total == 0.0:
        raise ValueError("use stationary_trajectory for zero-motion runs")
    t = np.linspace(0.0, total, ticks + 1)
    seg_times = schedule.segment_times
    if len(seg_times) != len(asv_segments) + 1:
        raise ValueError("schedule does not match the segment count")
    pa = sample_segments(asv_segments, seg_times, t)
    pb = sample_segments(auv_segments, seg_times, t)
    pa[0], pb[0] = asv_segments[0].control_points[0], auv_segments[0].control_points[0]
    pa[-1], pb[-1] = asv_segments[-1].control_points[-1], auv_segments[-1].control_points[-1]
    clipped = 0
    speeds = {}
    for key, lim in zip(("asv", "auv"), limits):
        raw = splines[key](t)
        clipped += int(np.count_nonzero(raw > lim.v_max))
        speeds[key] = np.minimum(raw, lim.v_max)
    chords = np.linalg.norm(pa - pb, axis=1)
    if verify:
        over = np.flatnonzero(chords > tether.chord_limit)
        if len(over):
            k = int(over[0])
            raise InvariantViolation(f"chord {chords[k]:.6g} exceeds limit at tick {k}", tick=k,
                                     diagnostic="TAUT")
    tpts = tick_tether(pa, pb, tether)
    return SyncedTrajectory(times=t, asv_positions=pa, auv_positions=pb,
                            asv_speeds=speeds["asv"], auv_speeds=speeds["auv"], chords=chords,
                            asv_clearance=world.distance(pa), auv_clearance=world.distance(pb),
                            tether_points=tpts, asv_segments=list(asv_segments),
                            auv_segments=list(auv_segments), schedule=schedule,
                            splines=splines,
                            clipped_speeds=clipped + sum(s.clipped for s in splines.values()))


def stationary_trajectory(asv_point, auv_point, world: ObstacleMap,
                          tether: TetherModel) -> SyncedTrajectory:
    """Single-sample trajectory for runs where neither vehicle moves."""
    pa = np.asarray(asv_point, dtype=float)[None]
    pb = np.asarray(auv_point, dtype=float)[None]
    zero = np.zeros(1)
    return SyncedTrajectory(times=zero.copy(), asv_positions=pa, auv_positions=pb,
                            asv_speeds=zero.copy(), auv_speeds=zero.copy(),
                            chords=np.linalg.norm(pa - pb, axis=1),
                            asv_clearance=world.distance(pa), auv_clearance=world.distance(pb),
                            tether_points=tick_tether(pa, pb, tether),
                            schedule=SyncSchedule(np.zeros(1), [np.zeros(0)] * 2,
                                                  [np.zeros(0)] * 2))
