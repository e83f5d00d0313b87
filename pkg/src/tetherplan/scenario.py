"""Scenario description, JSON (de)serialisation and seeded generators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .errors import GenerationFailed, ScenarioParseError
from .geometry import Box, Cylinder, ObstacleMap, obstacle_from_dict
from .planner import ASV, AUV, PlannerConfig, VehiclePose, wrap_angle
from .sync import KinodynamicLimits, OptimizationConfig
from .tether import TetherModel, tether_feasible

FORMAT = "tetherplan-scenario/1"
KINDS = ("a", "b", "c", "d")
DEFAULT_BOUNDS = ((0.0, 0.0, -10.0), (20.0, 20.0, 0.0))
MAX_ATTEMPTS = 1000


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("tetherplan.schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class Scenario:
    world: ObstacleMap
    tether: TetherModel
    asv_start: VehiclePose
    asv_goal: VehiclePose
    auv_start: VehiclePose
    auv_goal: VehiclePose
    asv_limits: KinodynamicLimits = KinodynamicLimits(1.0, 0.5)
    auv_limits: KinodynamicLimits = KinodynamicLimits(1.0, 0.5)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    optimizer: OptimizationConfig = field(default_factory=OptimizationConfig)
    seed: int = 0
    kind: str | None = None

    @property
    def first_robot(self) -> str:
        return self.planner.first_robot

    @property
    def limits(self):
        return (self.asv_limits, self.auv_limits)

    def with_first_robot(self, first: str) -> "Scenario":
        return replace(self, planner=replace(self.planner, first_robot=first))

    def to_dict(self) -> dict:
        def pose(p: VehiclePose):
            return {"position_m": list(p.position), "heading_rad": p.heading}

        planner = self.planner.to_dict()
        planner.pop("first_robot")
        return {
            "format": FORMAT,
            "kind": self.kind,
            "seed": self.seed,
            "first_robot": self.first_robot,
            "workspace": {"min_m": list(self.world.bounds_min),
                          "max_m": list(self.world.bounds_max)},
            "surface_z_m": self.world.surface_z,
            "seabed_z_m": self.world.seabed_z,
            "obstacles": [ob.to_dict() for ob in self.world.obstacles],
            "asv": {"start": pose(self.asv_start), "goal": pose(self.asv_goal),
                    "limits": self.asv_limits.to_dict()},
            "auv": {"start": pose(self.auv_start), "goal": pose(self.auv_goal),
                    "limits": self.auv_limits.to_dict()},
            "tether": self.tether.to_dict(),
            "planner": planner,
            "optimizer": self.optimizer.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _field_path(error: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in error.absolute_path) or "<root>"


def _line_of(text: str, path) -> int | None:
    """Best-effort line of the last key on ``path`` in the raw document."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    needle = json.dumps(keys[-1]) + ":"
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line.replace('" :', '":'):
            return lineno
    return None


def validate_document(doc, text: str | None = None) -> None:
    validator = jsonschema.Draft202012Validator(load_schema("scenario"))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = _field_path(err)
        line = _line_of(text, list(err.absolute_path)) if text else None
        prefix = f"line {line}: " if line else ""
        raise ScenarioParseError(f"{prefix}field {where}: {err.message}", diagnostic=where)


def _pose(d: dict) -> VehiclePose:
    return VehiclePose(tuple(d["position_m"]), float(d.get("heading_rad", 0.0)))


def scenario_from_dict(doc: dict, text: str | None = None) -> Scenario:
    validate_document(doc, text)
    try:
        world = ObstacleMap(tuple(doc["workspace"]["min_m"]), tuple(doc["workspace"]["max_m"]),
                            tuple(obstacle_from_dict(o) for o in doc["obstacles"]),
                            float(doc.get("surface_z_m", 0.0)),
                            float(doc.get("seabed_z_m", -10.0)))
    except ValueError as exc:
        raise ScenarioParseError(f"field workspace/obstacles: {exc}", "workspace") from exc
    t = doc["tether"]
    tether = TetherModel(float(t["length_m"]), int(t.get("lumped_masses", 51)),
                         float(t.get("slack_margin", 0.1)), float(t.get("clearance_m", 0.2)))
    p = doc.get("planner", {})
    planner = PlannerConfig(
        resolution=p.get("resolution_m", 0.5), heading_count=p.get("heading_count", 8),
        max_turn=p.get("max_turn_rad", math.pi / 4), first_robot=doc["first_robot"],
        follower_radius=p.get("follower_radius_m"),
        smoothness_weight=p.get("smoothness_weight", 0.5),
        replan_limit=p.get("replan_limit", 10),
        inflation_factor=p.get("inflation_factor", 10.0),
        inflation_radius=p.get("inflation_radius_m"),
        backtrack_limit=p.get("backtrack_limit", 200),
        approach_limit=p.get("approach_limit", 8))
    o = dict(doc.get("optimizer", {}))
    if "dwell_s" in o:
        o["dwell"] = o.pop("dwell_s")
    optimizer = OptimizationConfig(**o)
    limits = [KinodynamicLimits(doc[v]["limits"]["v_max_mps"], doc[v]["limits"]["a_max_mps2"])
              for v in (ASV, AUV)]
    sc = Scenario(world=world, tether=tether,
                  asv_start=_pose(doc["asv"]["start"]), asv_goal=_pose(doc["asv"]["goal"]),
                  auv_start=_pose(doc["auv"]["start"]), auv_goal=_pose(doc["auv"]["goal"]),
                  asv_limits=limits[0], auv_limits=limits[1], planner=planner,
                  optimizer=optimizer, seed=int(doc["seed"]), kind=doc.get("kind"))
    check_invariants(sc)
    return sc


def check_invariants(sc: Scenario) -> None:
    """Endpoint checks that do not need the planner.

    Raises:
        ScenarioParseError: an endpoint lies outside the workspace, inside
            the clearance band of an obstacle, or an ASV pose is off the surface.
    """
    world, c = sc.world, sc.tether.clearance
    for vehicle in (ASV, AUV):
        for which in ("start", "goal"):
            pose = getattr(sc, f"{vehicle}_{which}")
            where = f"{vehicle}.{which}.position_m"
            if not world.contains(pose.xyz):
                raise ScenarioParseError(f"field {where}: outside the workspace", where)
            if world.obstacles and world.distance(pose.xyz) < c:
                raise ScenarioParseError(f"field {where}: closer than {c} m to an obstacle",
                                         where)
            if vehicle == ASV and abs(pose.position[2] - world.surface_z) > 1e-9:
                raise ScenarioParseError(f"field {where}: ASV must sit on the surface", where)
            if vehicle == AUV and pose.position[2] < world.seabed_z:
                raise ScenarioParseError(f"field {where}: below the seabed", where)


def loads_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}",
                                 diagnostic=f"line {exc.lineno}") from exc
    return scenario_from_dict(doc, text)


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc.strerror}") from exc
    return loads_scenario(text)


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sc.to_json())


# Generators --------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorConfig:
    """Randomisation ranges; distances in meters."""

    tether_length: float = 12.0
    asv_travel: tuple = (8.0, 13.0)
    auv_offset: float = 2.5
    auv_depth: tuple = (3.0, 7.0)
    endpoint_margin: float = 1.0
    wall_margin: float = 2.0
    box_count: tuple = (2, 4)
    box_size: tuple = (0.8, 1.8)
    box_height: tuple = (2.0, 4.5)
    turbine_radius: tuple = (0.8, 1.4)


def _snap(value, lo, r):
    return lo + r * round((value - lo) / r)


def _snap_heading(theta, count):
    step = 2 * math.pi / count
    return wrap_angle(step * round(theta / step))


def generate_scenario(kind: str, seed: int, bounds=DEFAULT_BOUNDS,
                      config: GeneratorConfig = GeneratorConfig(),
                      first_robot: str = ASV) -> Scenario:
    """Random scenario of the given kind, fully determined by ``seed``.

    Kinds: ``a`` empty, ``b`` a seabed box cluster between the AUV start and
    goal, ``c`` one vertical turbine cylinder piercing the surface between
    the ASV start and goal, ``d`` both.

    Raises:
        GenerationFailed: no valid sample within 1000 attempts.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(bounds[0], float), np.asarray(bounds[1], float)
    surface, seabed = float(hi[2]), float(lo[2])
    planner = PlannerConfig(first_robot=first_robot)
    tether = TetherModel(config.tether_length)
    r = planner.resolution
    m = config.wall_margin

    for _ in range(MAX_ATTEMPTS):
        a = rng.uniform(lo[:2] + m, hi[:2] - m)
        ang = rng.uniform(-math.pi, math.pi)
        dist = rng.uniform(*config.asv_travel)
        b = a + dist * np.array([math.cos(ang), math.sin(ang)])
        if np.any(b < lo[:2] + m) or np.any(b > hi[:2] - m):
            continue
        a = np.array([_snap(a[0], lo[0], r), _snap(a[1], lo[1], r)])
        b = np.array([_snap(b[0], lo[0], r), _snap(b[1], lo[1], r)])
        heading = _snap_heading(math.atan2(b[1] - a[1], b[0] - a[0]), planner.heading_count)
        asv_s = VehiclePose((a[0], a[1], surface), heading)
        asv_g = VehiclePose((b[0], b[1], surface), heading)

        def auv_near(p):
            off = rng.uniform(-config.auv_offset, config.auv_offset, size=2)
            z = surface - rng.uniform(*config.auv_depth)
            return (_snap(p[0] + off[0], lo[0], r), _snap(p[1] + off[1], lo[1], r),
                    _snap(z, surface, r))

        auv_s = VehiclePose(auv_near(a), heading)
        auv_g = VehiclePose(auv_near(b), heading)

        obstacles = []
        if kind in ("b", "d"):
            mid = (np.asarray(auv_s.position) + np.asarray(auv_g.position)) / 2
            for _k in range(int(rng.integers(config.box_count[0], config.box_count[1] + 1))):
                c = mid[:2] + rng.uniform(-1.5, 1.5, size=2)
                half = rng.uniform(*config.box_size, size=2) / 2
                top = seabed + rng.uniform(*config.box_height)
                obstacles.append(Box((c[0] - half[0], c[1] - half[1], seabed),
                                     (c[0] + half[0], c[1] + half[1], top)))
        if kind in ("c", "d"):
            mid = (a + b) / 2 + rng.uniform(-1.0, 1.0, size=2)
            radius = rng.uniform(*config.turbine_radius)
            obstacles.append(Cylinder((mid[0], mid[1], seabed), radius,
                                      surface - seabed + 2.0))
        try:
            world = ObstacleMap(tuple(lo), tuple(hi), tuple(obstacles), surface, seabed)
        except ValueError:
            continue
        sc = Scenario(world=world, tether=tether, asv_start=asv_s, asv_goal=asv_g,
                      auv_start=auv_s, auv_goal=auv_g, planner=planner, seed=seed, kind=kind)
        if _acceptable(sc, config):
            return sc
    raise GenerationFailed(f"no valid scenario of kind {kind} for seed {seed}")


def _acceptable(sc: Scenario, config: GeneratorConfig) -> bool:
    world = sc.world
    margin = sc.tether.clearance + config.endpoint_margin
    for pose in (sc.asv_start, sc.asv_goal, sc.auv_start, sc.auv_goal):
        if not world.contains(pose.xyz):
            return False
        if world.obstacles and world.distance(pose.xyz) < margin:
            return False
    for p, q in ((sc.asv_start, sc.auv_start), (sc.asv_goal, sc.auv_goal)):
        if not tether_feasible(p.xyz, q.xyz, sc.tether, world).ok:
            return False
    return True
