"""Run metrics and batch aggregation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import NoData
from .geometry import ObstacleMap, polyline_length
from .tether import TetherModel

COLUMNS = ("LASV", "LAUV", "NC", "CASV", "CAUV", "STDS", "STDU", "STDT", "DOBS", "RFRQ")


@dataclass(frozen=True)
class MetricsReport:
    """Per-run metrics; lengths in m, times in s, speed spreads in m/s.

    ``CASV``/``CAUV`` are planner wall-clock times and may be ``None`` when
    timings were not recorded.
    """

    LASV: float
    LAUV: float
    NC: int
    CASV: float | None
    CAUV: float | None
    STDS: float
    STDU: float
    STDT: float
    DOBS: float
    RFRQ: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**{f.name: d[f.name] for f in fields(cls)})


def count_entries(distances) -> int:
    """Number of times the sequence goes from non-negative to negative."""
    inside = np.asarray(distances) < 0
    if inside.size == 0:
        return 0
    return int(inside[0]) + int(np.count_nonzero(inside[1:] & ~inside[:-1]))


def body_distances(traj, world: ObstacleMap) -> np.ndarray:
    """Per-tick minimum signed distance over both vehicles and every tether point."""
    d_asv = world.distance(traj.asv_positions)
    d_auv = world.distance(traj.auv_positions)
    d_teth = world.distance(traj.tether_points).min(axis=1)
    return np.minimum(np.minimum(d_asv, d_auv), d_teth)


def midpoint_speeds(traj) -> np.ndarray:
    n = traj.tether_points.shape[1]
    mid = traj.tether_points[:, n // 2, :]
    if len(mid) < 2:
        return np.zeros(len(mid))
    dt = np.diff(traj.times)
    return np.linalg.norm(np.diff(mid, axis=0), axis=1) / dt


def evaluate_run(result, traj, world: ObstacleMap, tether: TetherModel | None = None,
                 timings: dict | None = None) -> MetricsReport:
    """Metrics of one run.

    ``result`` may be ``None`` (then RFRQ is 0); ``timings`` overrides the
    planner's recorded timings, and passing ``{}`` drops them.
    """
    dists = body_distances(traj, world)
    if timings is None:
        timings = getattr(result, "timings", None) or {}
    return MetricsReport(
        LASV=polyline_length(traj.asv_positions),
        LAUV=polyline_length(traj.auv_positions),
        NC=count_entries(dists),
        CASV=timings.get("asv"),
        CAUV=timings.get("auv"),
        STDS=float(np.std(traj.asv_speeds)),
        STDU=float(np.std(traj.auv_speeds)),
        STDT=float(np.std(midpoint_speeds(traj))) if len(traj.times) > 1 else 0.0,
        DOBS=float(dists.min()),
        RFRQ=int(getattr(result, "replan_count", 0) or 0),
    )


@dataclass(frozen=True)
class Aggregate:
    count: int
    mean: dict
    std: dict
    nc_total: int
    nc_max: int

    def to_dict(self) -> dict:
        return asdict(self)


def aggregate(reports) -> Aggregate:
    """Means and population standard deviations of every column.

    ``None`` entries (unrecorded timings) are skipped per column.
    """
    reports = list(reports)
    if not reports:
        raise NoData("no reports to aggregate")
    mean, std = {}, {}
    for col in COLUMNS:
        vals = [getattr(r, col) for r in reports if getattr(r, col) is not None]
        if vals:
            arr = np.asarray(vals, dtype=float)
            mean[col] = float(arr.mean()) if len(arr) > 1 else float(arr[0])
            std[col] = float(arr.std())
        else:
            mean[col] = std[col] = None
    ncs = [r.NC for r in reports]
    return Aggregate(len(reports), mean, std, int(sum(ncs)), int(max(ncs)))


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if not math.isfinite(v):
        return str(v)
    return repr(round(float(v), 9))
