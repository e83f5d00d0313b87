"""Catenary tether model and the tether feasibility predicate.

The cable hangs in the vertical plane through its two attachment points as

    z(u) = a * cosh((u - u_v) / a) + c

with ``u`` the horizontal coordinate along the chord's planar projection.
For equal endpoint heights this is exactly the symmetric closed form in
:func:`catenary_point`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleGeometry, InvalidCatenary, TautTether
from .geometry import ObstacleMap, as_point, polyline_length

VERTICAL_EPS = 1e-6
_BISECTION_ITERS = 200


@dataclass(frozen=True)
class TetherModel:
    length: float
    lumped_masses: int = 51
    slack_margin: float = 0.1
    clearance: float = 0.2

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("tether length must be positive")
        if self.lumped_masses < 2:
            raise ValueError("need at least two lumped masses")
        if not 0.0 <= self.slack_margin < 1.0:
            raise ValueError("slack margin must lie in [0, 1)")
        if self.clearance < 0:
            raise ValueError("clearance must be non-negative")

    @property
    def chord_limit(self) -> float:
        """Largest allowed straight-line distance between the two vehicles."""
        return self.length * (1.0 - self.slack_margin)

    def to_dict(self) -> dict:
        return {"length_m": self.length, "lumped_masses": self.lumped_masses,
                "slack_margin": self.slack_margin, "clearance_m": self.clearance}


@dataclass(frozen=True)
class TetherShape:
    """Lumped-mass discretisation of a hung tether.

    ``a`` is the catenary constant and ``z0`` the additive constant ``c`` of
    the hanging curve; both are ``inf``/``nan`` for the vertical branch.
    """

    points: np.ndarray
    a: float
    z0: float
    vertex: float
    arc_length: float
    min_z: float

    @property
    def midpoint(self) -> np.ndarray:
        return self.points[len(self.points) // 2]


def catenary_point(p1, p2, a: float, z0: float, t: float) -> np.ndarray:
    """Symmetric catenary between two points at the same height.

    x and y interpolate linearly; z sags by ``a cosh`` about the middle and
    equals ``z0`` at both ends.
    """
    if not a > 0:
        raise InvalidCatenary("catenary constant must be positive")
    p1, p2 = as_point(p1), as_point(p2)
    d = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
    x = p1[0] + (p2[0] - p1[0]) * t
    y = p1[1] + (p2[1] - p1[1]) * t
    z = a * math.cosh(d * (t - 0.5) / a) + z0 - a * math.cosh(d / (2 * a))
    return np.array([x, y, z])


def _log_sinhc(x: float) -> float:
    """log(sinh(x) / x) without overflow for large x."""
    if x < 1e-4:
        x2 = x * x
        return math.log1p(x2 / 6.0 + x2 * x2 / 120.0)
    if x < 20.0:
        return math.log(math.sinh(x) / x)
    return x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0) - math.log(x)


def _dlog_sinhc(x: float) -> float:
    """Derivative of :func:`_log_sinhc`, coth(x) - 1/x."""
    if x < 1e-2:
        return x / 3.0 - x ** 3 / 45.0
    if x < 20.0:
        return 1.0 / math.tanh(x) - 1.0 / x
    return 1.0 - 1.0 / x


def solve_catenary_constant(d: float, l: float) -> float:
    """Catenary constant ``a`` with ``2 a sinh(d / (2a)) = l``.

    Solves ``log(sinh(x) / x) = log(l / d)`` for ``x = d / (2a)`` by Newton
    iteration kept inside a shrinking bisection bracket. The bracket starts
    at ``a in [1e-4 d, 1e4 d]``; its lower end is pushed further down for
    nearly taut cables (slack ratio below ``1 + 4e-10``).
    """
    if not d > 0:
        raise ValueError("planar distance must be positive; use the vertical branch")
    if l <= d:
        raise TautTether(f"tether length {l} does not exceed span {d}")
    target = math.log(l / d)
    lo, hi = 5e-5, 5e3
    while _log_sinhc(lo) > target and lo > 1e-300:
        lo *= 1e-3
    x = math.sqrt(6.0 * target) if target < 1.0 else target + math.log(2.0 * target + 2.0)
    x = min(max(x, lo), hi)
    for _ in range(_BISECTION_ITERS):
        f = _log_sinhc(x) - target
        if f < 0:
            lo = x
        else:
            hi = x
        df = _dlog_sinhc(x)
        nx = x - f / df if df > 0 else 0.5 * (lo + hi)
        if not lo < nx < hi:
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= 1e-15 * x or hi - lo <= 1e-16 * hi:
            x = nx
            break
        x = nx
    return d / (2.0 * x)


def _vertical_shape(p1, p2, tether: TetherModel) -> TetherShape:
    """Fold the cable straight down below the lower endpoint and back up.

    The fold depth ``(l - |dz|) / 2`` bounds the true sag of a near-vertical
    cable; the fold point is always one of the samples so the polyline keeps
    the full length ``l``.
    """
    n = tether.lumped_masses
    lower = p1 if p1[2] <= p2[2] else p2
    extra = max(0.0, (tether.length - abs(p2[2] - p1[2])) / 2)
    fold = np.array([lower[0], lower[1], lower[2] - extra])
    leg1 = float(np.linalg.norm(fold - p1))
    leg2 = float(np.linalg.norm(p2 - fold))
    total = leg1 + leg2
    k = 0 if total == 0 else int(round(leg1 / total * (n - 1)))
    if leg1 > 0 and leg2 > 0:
        k = min(max(k, 1), n - 2) if n > 2 else k
    t1 = np.linspace(0.0, 1.0, k + 1)[:, None] if k > 0 else np.zeros((1, 1))
    first = p1 + t1 * (fold - p1)
    t2 = np.linspace(0.0, 1.0, n - k)[:, None]
    second = fold + t2 * (p2 - fold)
    pts = np.vstack([first[:-1], second]) if k > 0 else second
    pts[0], pts[-1] = p1, p2
    return TetherShape(points=pts, a=math.inf, z0=math.nan, vertex=0.0,
                       arc_length=polyline_length(pts), min_z=float(fold[2]))


def hang_tether(p1, p2, tether: TetherModel) -> TetherShape:
    """Hang the tether between two attachment points.

    Raises:
        InfeasibleGeometry: the cable is shorter than the height difference.
        TautTether: the chord exceeds the slack-adjusted length.
    """
    p1, p2 = as_point(p1), as_point(p2)
    l = tether.length
    dz = p2[2] - p1[2]
    if l < abs(dz):
        raise InfeasibleGeometry(f"tether length {l} below height difference {abs(dz)}")
    chord = float(np.linalg.norm(p2 - p1))
    if chord > tether.chord_limit:
        raise TautTether(f"chord {chord:.6g} exceeds limit {tether.chord_limit:.6g}")
    d = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
    if d < VERTICAL_EPS:
        return _vertical_shape(p1, p2, tether)

    span = math.sqrt(l * l - dz * dz)
    a = solve_catenary_constant(d, span)
    vertex = d / 2 - a * math.atanh(dz / l)
    ts = np.linspace(0.0, 1.0, tether.lumped_masses)
    u = ts * d
    # Product form avoids cancellation between two large cosh terms.
    z = p1[2] + 2 * a * np.sinh((u - 2 * vertex) / (2 * a)) * np.sinh(u / (2 * a))
    pts = np.empty((len(ts), 3))
    pts[:, 0] = p1[0] + (p2[0] - p1[0]) * ts
    pts[:, 1] = p1[1] + (p2[1] - p1[1]) * ts
    pts[:, 2] = z
    pts[0], pts[-1] = p1, p2
    if 0.0 < vertex < d:
        min_z = p1[2] - 2 * a * math.sinh(vertex / (2 * a)) ** 2
    else:
        min_z = min(p1[2], p2[2])
    offset = p1[2] - a * math.cosh(vertex / a) if abs(vertex / a) < 700 else -math.inf
    return TetherShape(points=pts, a=a, z0=offset, vertex=vertex,
                       arc_length=polyline_length(pts), min_z=float(min_z))


class Diagnostic(str, enum.Enum):
    OK = "OK"
    TAUT = "TAUT"
    INFEASIBLE_GEOMETRY = "INFEASIBLE_GEOMETRY"
    TETHER_COLLISION = "TETHER_COLLISION"
    BELOW_SEABED = "BELOW_SEABED"


class TetherCheck(NamedTuple):
    ok: bool
    diagnostic: Diagnostic
    shape: TetherShape | None

    def __bool__(self):
        return self.ok


def tether_feasible(p1, p2, tether: TetherModel, world: ObstacleMap) -> TetherCheck:
    """Check chord length, hang shape, clearance and seabed for one pairing."""
    p1, p2 = as_point(p1), as_point(p2)
    if np.linalg.norm(p2 - p1) > tether.chord_limit:
        return TetherCheck(False, Diagnostic.TAUT, None)
    try:
        shape = hang_tether(p1, p2, tether)
    except InfeasibleGeometry:
        return TetherCheck(False, Diagnostic.INFEASIBLE_GEOMETRY, None)
    except TautTether:
        return TetherCheck(False, Diagnostic.TAUT, None)
    if world.obstacles and np.any(world.distance(shape.points) < tether.clearance):
        return TetherCheck(False, Diagnostic.TETHER_COLLISION, shape)
    if np.any(shape.points[:, 2] < world.seabed_z):
        return TetherCheck(False, Diagnostic.BELOW_SEABED, shape)
    return TetherCheck(True, Diagnostic.OK, shape)
