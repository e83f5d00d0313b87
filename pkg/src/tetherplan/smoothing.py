"""Bezier path smoothing and cubic-spline velocity smoothing."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegeneratePath, DomainError, InvalidKnots
from .geometry import ObstacleMap


@dataclass(frozen=True)
class BezierSegment:
    control_points: np.ndarray

    def __post_init__(self):
        cp = np.array(self.control_points, dtype=float)
        if cp.ndim != 2 or cp.shape[0] < 2 or cp.shape[1] != 3:
            raise ValueError("need at least two 3D control points")
        cp.setflags(write=False)
        object.__setattr__(self, "control_points", cp)

    @property
    def degree(self) -> int:
        return len(self.control_points) - 1


def bernstein_matrix(n: int, ts) -> np.ndarray:
    """Rows are the degree-``n`` Bernstein basis evaluated at ``ts``."""
    ts = np.asarray(ts, dtype=float)[:, None]
    i = np.arange(n + 1)[None, :]
    coeff = np.array([comb(n, k) for k in range(n + 1)], dtype=float)[None, :]
    return coeff * (1 - ts) ** (n - i) * ts ** i


def bernstein_derivative_matrix(n: int, ts, order: int) -> np.ndarray:
    """Basis matrix mapping control points to the ``order``-th derivative."""
    if order == 0:
        return bernstein_matrix(n, ts)
    if order > n:
        return np.zeros((len(np.atleast_1d(ts)), n + 1))
    # d^r/dt^r B = n!/(n-r)! * sum_j Delta^r P_j b_{n-r}^j
    lower = bernstein_matrix(n - order, ts)
    delta = np.eye(n + 1)
    for _ in range(order):
        delta = delta[1:] - delta[:-1]
    scale = 1.0
    for k in range(order):
        scale *= n - k
    return scale * lower @ delta


def bezier_point(segment: BezierSegment, t: float) -> np.ndarray:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"Bezier parameter {t} outside [0, 1]")
    n = segment.degree
    return bernstein_matrix(n, [t])[0] @ segment.control_points


def evaluate(segments, ts) -> np.ndarray:
    """Evaluate equal-degree segments at shared parameters; shape (nseg, len(ts), 3)."""
    cps = np.stack([s.control_points for s in segments])
    basis = bernstein_matrix(cps.shape[1] - 1, ts)
    return np.einsum("sk,nkd->nsd", basis, cps)


def _tangents(pts: np.ndarray) -> np.ndarray:
    n = len(pts)
    tan = np.zeros_like(pts)
    for j in range(n):
        prev_zero = j > 0 and np.array_equal(pts[j], pts[j - 1])
        next_zero = j < n - 1 and np.array_equal(pts[j], pts[j + 1])
        if prev_zero or next_zero:
            continue  # vehicle halts here; zero tangent keeps the curve from looping
        if j == 0:
            tan[j] = pts[1] - pts[0]
        elif j == n - 1:
            tan[j] = pts[-1] - pts[-2]
        else:
            tan[j] = (pts[j + 1] - pts[j - 1]) / 2
    return tan


def straight_segment(a, b) -> BezierSegment:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return BezierSegment(np.array([a, a + (b - a) / 3, a + 2 * (b - a) / 3, b]))


def build_segments(waypoints, straight=None) -> list[BezierSegment]:
    """Cubic segments through consecutive waypoints with C1 joins.

    Interior tangents are central differences (Catmull-Rom), endpoint
    tangents one-sided. ``straight[j]`` forces segment ``j`` onto the chord.
    """
    pts = np.asarray(waypoints, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise DegeneratePath("smoothing needs at least two waypoints")
    tan = _tangents(pts)
    segments = []
    for j in range(len(pts) - 1):
        a, b = pts[j], pts[j + 1]
        if straight is not None and straight[j]:
            segments.append(straight_segment(a, b))
        else:
            segments.append(BezierSegment(np.array([a, a + tan[j] / 3, b - tan[j + 1] / 3, b])))
    return segments


def sample_curve(segments, samples_per_segment: int) -> np.ndarray:
    """Sample each segment uniformly in its parameter, sharing join points."""
    if samples_per_segment < 2:
        raise ValueError("need at least two samples per segment")
    ts = np.linspace(0.0, 1.0, samples_per_segment)
    out = [bezier_point(segments[0], 0.0)[None]]
    for seg in segments:
        basis = bernstein_matrix(seg.degree, ts[1:])
        out.append(basis @ seg.control_points)
    return np.vstack(out)


def smooth_paths(paths, world: ObstacleMap, clearance: float, samples: int = 20,
                 max_subdivisions: int = 3):
    """Smooth index-paired paths while keeping every sample clear.

    A segment whose samples come closer than ``clearance`` to an obstacle is
    split at its chord midpoint (in every path, so index pairing survives) up
    to ``max_subdivisions`` times; spans still failing after that are flattened
    to the straight chord, which the planner already verified.

    Returns:
        (points, segments, straight) with one entry per path.
    """
    pts = [np.asarray(p, dtype=float) for p in paths]
    n = len(pts[0])
    if any(len(p) != n for p in pts):
        raise ValueError("paths must have equal waypoint counts")
    if n < 2:
        raise DegeneratePath("smoothing needs at least two waypoints")
    straight = [np.zeros(n - 1, dtype=bool) for _ in pts]
    ts = np.linspace(0.0, 1.0, samples)

    def failing(point_sets, flags):
        bad = np.zeros(len(point_sets[0]) - 1, dtype=bool)
        segs_all = []
        for p, f in zip(point_sets, flags):
            segs = build_segments(p, f)
            segs_all.append(segs)
            if world.obstacles:
                sd = world.distance(evaluate(segs, ts))
                bad |= sd.min(axis=1) < clearance
        return bad, segs_all

    for _ in range(max_subdivisions):
        bad, _ = failing(pts, straight)
        if not bad.any():
            break
        new_pts = []
        new_flags = []
        for p, f in zip(pts, straight):
            out, flags = [p[0]], []
            for j in range(len(p) - 1):
                if bad[j]:
                    out.append((p[j] + p[j + 1]) / 2)
                    flags.extend([f[j], f[j]])
                else:
                    flags.append(f[j])
                out.append(p[j + 1])
            new_pts.append(np.array(out))
            new_flags.append(np.array(flags, dtype=bool))
        pts, straight = new_pts, new_flags

    while True:
        bad, segs_all = failing(pts, straight)
        bad &= ~np.logical_and.reduce(straight)
        if not bad.any():
            return pts, segs_all, straight
        for f in straight:
            f |= bad


@dataclass
class VelocitySpline:
    """Natural cubic spline through (time, speed) knots; evaluation clips at 0."""

    times: np.ndarray
    speeds: np.ndarray
    _spline: CubicSpline = field(repr=False, default=None)
    clipped: int = 0

    @property
    def coefficients(self) -> np.ndarray:
        """Per-interval cubic coefficients, highest power first, shape (4, n-1)."""
        return self._spline.c

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        t = np.clip(t, self.times[0], self.times[-1])
        v = self._spline(t)
        neg = v < 0
        self.clipped += int(np.count_nonzero(neg))
        return np.where(neg, 0.0, v)


def smooth_velocity(knots) -> VelocitySpline:
    """Fit a natural cubic spline to ``(seconds, m/s)`` knots."""
    arr = np.asarray(knots, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
        raise InvalidKnots("need at least two (time, speed) knots")
    times, speeds = arr[:, 0], arr[:, 1]
    if np.any(np.diff(times) <= 0):
        raise InvalidKnots("knot times must be strictly increasing")
    if np.any(speeds < 0):
        raise InvalidKnots("knot speeds must be non-negative")
    spline = CubicSpline(times, speeds, bc_type="natural")
    return VelocitySpline(times=times.copy(), speeds=speeds.copy(), _spline=spline)
