"""Workspace, obstacle primitives and distance queries.

Points are plain ``numpy`` arrays of shape ``(3,)`` (or ``(..., 3)`` for the
vectorised helpers). Obstacles are analytic primitives so that signed
distances are exact rather than voxel approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegeneratePath


def as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"point has non-finite coordinates: {arr}")
    return arr


def polyline_length(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return math.fsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(as_point(self.center)))
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")

    @property
    def feature_size(self) -> float:
        return self.radius

    def distance(self, p: np.ndarray) -> np.ndarray:
        return np.linalg.norm(p - np.asarray(self.center), axis=-1) - self.radius

    def distance_and_gradient(self, p):
        diff = p - np.asarray(self.center)
        norm = np.linalg.norm(diff, axis=-1)
        safe = np.where(norm > 0, norm, 1.0)[..., None]
        grad = np.where(norm[..., None] > 0, diff / safe, np.array([1.0, 0.0, 0.0]))
        return norm - self.radius, grad

    def aabb(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def to_dict(self) -> dict:
        return {"type": "sphere", "center_m": list(self.center), "radius_m": self.radius}


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by its min and max corners."""

    min: tuple
    max: tuple

    def __post_init__(self):
        lo, hi = as_point(self.min), as_point(self.max)
        if not np.all(lo < hi):
            raise ValueError("box min must be < max componentwise")
        object.__setattr__(self, "min", tuple(lo))
        object.__setattr__(self, "max", tuple(hi))

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.min) + np.asarray(self.max)) / 2

    @property
    def half(self) -> np.ndarray:
        return (np.asarray(self.max) - np.asarray(self.min)) / 2

    @property
    def feature_size(self) -> float:
        return float(self.half.min())

    def distance(self, p):
        q = np.abs(p - self.center) - self.half
        return (np.linalg.norm(np.maximum(q, 0.0), axis=-1)
                + np.minimum(q.max(axis=-1), 0.0))

    def distance_and_gradient(self, p):
        rel = p - self.center
        q = np.abs(rel) - self.half
        outside = np.maximum(q, 0.0)
        out_norm = np.linalg.norm(outside, axis=-1)
        qmax = q.max(axis=-1)
        sd = out_norm + np.minimum(qmax, 0.0)
        sign = np.where(rel >= 0, 1.0, -1.0)
        safe = np.where(out_norm > 0, out_norm, 1.0)[..., None]
        grad_out = outside / safe * sign
        axis = np.argmax(q, axis=-1)
        grad_in = np.zeros(np.shape(p))
        np.put_along_axis(grad_in, axis[..., None],
                          np.take_along_axis(sign, axis[..., None], axis=-1), axis=-1)
        grad = np.where((out_norm > 0)[..., None], grad_out, grad_in)
        return sd, grad

    def aabb(self):
        return np.asarray(self.min), np.asarray(self.max)

    def to_dict(self) -> dict:
        return {"type": "box", "min_m": list(self.min), "max_m": list(self.max)}


@dataclass(frozen=True)
class Cylinder:
    """Vertical capped cylinder standing on ``foot`` (bottom-centre point)."""

    foot: tuple
    radius: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "foot", tuple(as_point(self.foot)))
        if not (self.radius > 0 and self.height > 0):
            raise ValueError("cylinder radius and height must be positive")

    @property
    def feature_size(self) -> float:
        return min(self.radius, self.height / 2)

    def distance(self, p):
        foot = np.asarray(self.foot)
        rho = np.linalg.norm(p[..., :2] - foot[:2], axis=-1)
        q0 = rho - self.radius
        q1 = np.abs(p[..., 2] - (foot[2] + self.height / 2)) - self.height / 2
        return (np.hypot(np.maximum(q0, 0.0), np.maximum(q1, 0.0))
                + np.minimum(np.maximum(q0, q1), 0.0))

    def distance_and_gradient(self, p):
        foot = np.asarray(self.foot)
        dxy = p[..., :2] - foot[:2]
        rho = np.linalg.norm(dxy, axis=-1)
        dz = p[..., 2] - (foot[2] + self.height / 2)
        q0 = rho - self.radius
        q1 = np.abs(dz) - self.height / 2
        o0, o1 = np.maximum(q0, 0.0), np.maximum(q1, 0.0)
        out_norm = np.hypot(o0, o1)
        sd = out_norm + np.minimum(np.maximum(q0, q1), 0.0)

        safe_rho = np.where(rho > 0, rho, 1.0)
        radial = np.zeros(np.shape(p))
        radial[..., 0] = np.where(rho > 0, dxy[..., 0] / safe_rho, 1.0)
        radial[..., 1] = np.where(rho > 0, dxy[..., 1] / safe_rho, 0.0)
        vertical = np.zeros(np.shape(p))
        vertical[..., 2] = np.where(dz >= 0, 1.0, -1.0)

        safe_out = np.where(out_norm > 0, out_norm, 1.0)
        grad_out = (radial * (o0 / safe_out)[..., None]
                    + vertical * (o1 / safe_out)[..., None])
        grad_in = np.where((q0 >= q1)[..., None], radial, vertical)
        grad = np.where((out_norm > 0)[..., None], grad_out, grad_in)
        return sd, grad

    def aabb(self):
        foot = np.asarray(self.foot)
        lo = foot - np.array([self.radius, self.radius, 0.0])
        hi = foot + np.array([self.radius, self.radius, self.height])
        return lo, hi

    def to_dict(self) -> dict:
        return {"type": "cylinder", "foot_m": list(self.foot),
                "radius_m": self.radius, "height_m": self.height}


Obstacle = Sphere | Box | Cylinder


def obstacle_from_dict(d: dict) -> Obstacle:
    kind = d["type"]
    if kind == "sphere":
        return Sphere(d["center_m"], float(d["radius_m"]))
    if kind == "box":
        return Box(d["min_m"], d["max_m"])
    if kind == "cylinder":
        return Cylinder(d["foot_m"], float(d["radius_m"]), float(d["height_m"]))
    raise ValueError(f"unknown obstacle type {kind!r}")


@dataclass(frozen=True)
class ObstacleMap:
    """Workspace bounds, obstacles and the two horizontal planes.

    The ASV lives on ``surface_z``; nothing may go below ``seabed_z``.
    """

    bounds_min: tuple
    bounds_max: tuple
    obstacles: tuple = ()
    surface_z: float = 0.0
    seabed_z: float = -10.0
    _sentinel: float = field(init=False, repr=False, compare=False, default=0.0)

    def __post_init__(self):
        lo, hi = as_point(self.bounds_min), as_point(self.bounds_max)
        if not np.all(lo < hi):
            raise ValueError("workspace bounds must satisfy min < max")
        if not self.seabed_z < self.surface_z:
            raise ValueError("seabed_z must lie below surface_z")
        object.__setattr__(self, "bounds_min", tuple(lo))
        object.__setattr__(self, "bounds_max", tuple(hi))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for ob in self.obstacles:
            olo, ohi = ob.aabb()
            if np.any(ohi < lo) or np.any(olo > hi):
                raise ValueError(f"obstacle {ob} does not intersect the workspace")
        object.__setattr__(self, "_sentinel", float(np.linalg.norm(hi - lo)))

    @property
    def empty_distance(self) -> float:
        """Distance reported when there is nothing to collide with."""
        return self._sentinel

    @property
    def min_feature_size(self) -> float:
        if not self.obstacles:
            return math.inf
        return min(ob.feature_size for ob in self.obstacles)

    def contains(self, p, tol=1e-9) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= np.asarray(self.bounds_min) - tol)
                    and np.all(p <= np.asarray(self.bounds_max) + tol))

    def distance(self, points) -> np.ndarray:
        """Vectorised signed distance to the union of obstacles."""
        pts = np.asarray(points, dtype=float)
        if not self.obstacles:
            return np.full(pts.shape[:-1], self._sentinel)
        return np.min([ob.distance(pts) for ob in self.obstacles], axis=0)

    def distance_and_gradient(self, points):
        pts = np.asarray(points, dtype=float)
        if not self.obstacles:
            return np.full(pts.shape[:-1], self._sentinel), np.zeros(pts.shape)
        results = [ob.distance_and_gradient(pts) for ob in self.obstacles]
        dists = np.stack([r[0] for r in results])
        grads = np.stack([r[1] for r in results])
        which = np.argmin(dists, axis=0)
        sd = np.take_along_axis(dists, which[None], axis=0)[0]
        grad = np.take_along_axis(grads, which[None, ..., None], axis=0)[0]
        return sd, grad


def signed_distance(p, world: ObstacleMap) -> float:
    """Signed distance from ``p`` to the nearest obstacle surface.

    Positive outside every obstacle, negative inside. With no obstacles the
    workspace diagonal is returned so comparisons stay finite.
    """
    return float(world.distance(as_point(p)))


def segment_step(world: ObstacleMap, resolution: float | None = None) -> float:
    step = 0.25 * world.min_feature_size
    if resolution is not None:
        step = min(step, resolution)
    return step


def segment_clear(p, q, world: ObstacleMap, clearance: float,
                  resolution: float | None = None) -> bool:
    """True when every sample along ``p -> q`` keeps ``clearance``.

    Samples are spaced at most ``min(resolution, 0.25 * smallest feature)``.
    The endpoints are ordered canonically first so the answer is symmetric
    in ``p`` and ``q`` down to the last bit.
    """
    if clearance < 0:
        raise ValueError("clearance must be non-negative")
    a, b = as_point(p), as_point(q)
    if tuple(b) < tuple(a):
        a, b = b, a
    length = float(np.linalg.norm(b - a))
    step = segment_step(world, resolution)
    n = 1 if (length == 0.0 or not math.isfinite(step)) else max(1, math.ceil(length / step))
    ts = np.linspace(0.0, 1.0, n + 1)[:, None]
    samples = a + ts * (b - a)
    return bool(np.all(world.distance(samples) >= clearance))


def resample_path(waypoints: Sequence, m: int) -> np.ndarray:
    """Return ``m`` points at equal arc-length spacing along a polyline."""
    pts = np.asarray(waypoints, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise DegeneratePath("resampling needs at least two waypoints")
    if m < 2:
        raise ValueError("m must be at least 2")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0.0:
        return np.repeat(pts[:1], m, axis=0)
    targets = np.linspace(0.0, total, m)
    out = np.column_stack([np.interp(targets, cum, pts[:, k]) for k in range(3)])
    out[0], out[-1] = pts[0], pts[-1]
    return out


def densify_path(waypoints: Sequence, max_step: float):
    """Split every polyline segment into equal pieces no longer than ``max_step``.

    Unlike :func:`resample_path` the original vertices are kept, so the
    geometry (and therefore clearance) of the polyline is unchanged.

    Returns:
        (points, source) where ``source[k]`` is the index of the original
        vertex at or before dense point ``k``.
    """
    pts = np.asarray(waypoints, dtype=float)
    if len(pts) == 1:
        return pts.copy(), np.zeros(1, dtype=int)
    out = [pts[0]]
    source = [0]
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        n = max(1, math.ceil(np.linalg.norm(b - a) / max_step - 1e-9))
        for k in range(1, n + 1):
            out.append(b if k == n else a + (b - a) * (k / n))
            source.append(i + 1 if k == n else i)
    return np.array(out), np.array(source)
