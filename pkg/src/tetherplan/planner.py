"""Sequential tether-aware path planning.

The first vehicle ("leader") is planned with A*: a 26-connected grid for
the AUV, an (x, y, heading) state lattice on the surface plane for the ASV.
The second vehicle ("follower") is then stepped index-by-index alongside the
densified leader path, choosing grid nodes that keep the tether feasible.
When the follower gets stuck the leader is replanned with inflated costs
around the failure point.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import FollowerStuck, InfeasibleAtStart, InfeasibleGoal, InvalidEndpoint, NoPathFound
from .geometry import ObstacleMap, as_point, densify_path, polyline_length, segment_clear
from .tether import Diagnostic, TetherModel, TetherShape, tether_feasible

ASV = "asv"
AUV = "auv"
TWO_PI = 2.0 * math.pi

_HEADING_VECTORS = {
    4: [(1, 0), (0, 1), (-1, 0), (0, -1)],
    8: [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)],
    16: [(1, 0), (2, 1), (1, 1), (1, 2), (0, 1), (-1, 2), (-1, 1), (-2, 1),
         (-1, 0), (-2, -1), (-1, -1), (-1, -2), (0, -1), (1, -2), (1, -1), (2, -1)],
}

_OFFSETS_26 = [(di, dj, dk)
               for di in (-1, 0, 1) for dj in (-1, 0, 1) for dk in (-1, 0, 1)
               if (di, dj, dk) != (0, 0, 0)]


def wrap_angle(theta: float) -> float:
    return theta % TWO_PI


def angle_diff(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def other_kind(kind: str) -> str:
    return AUV if kind == ASV else ASV


@dataclass(frozen=True)
class VehiclePose:
    position: tuple
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(as_point(self.position)))
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))

    @property
    def xyz(self) -> np.ndarray:
        return np.asarray(self.position)


@dataclass(frozen=True)
class PlannerConfig:
    resolution: float = 0.5
    heading_count: int = 8
    max_turn: float = math.pi / 4
    first_robot: str = ASV
    follower_radius: float | None = None
    smoothness_weight: float = 0.5
    replan_limit: int = 10
    inflation_factor: float = 10.0
    inflation_radius: float | None = None
    backtrack_limit: int = 200
    approach_limit: int = 8

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if self.heading_count not in _HEADING_VECTORS:
            raise ValueError(f"heading count must be one of {sorted(_HEADING_VECTORS)}")
        if min(self.replan_limit, self.backtrack_limit, self.approach_limit) < 0:
            raise ValueError("replanning and backtracking limits must be non-negative")
        if self.first_robot not in (ASV, AUV):
            raise ValueError("first robot must be 'asv' or 'auv'")

    @property
    def search_radius(self) -> float:
        return self.follower_radius if self.follower_radius is not None else 3 * self.resolution

    @property
    def zone_radius(self) -> float:
        return self.inflation_radius if self.inflation_radius is not None else 2 * self.resolution

    def to_dict(self) -> dict:
        return {"resolution_m": self.resolution, "heading_count": self.heading_count,
                "max_turn_rad": self.max_turn, "first_robot": self.first_robot,
                "follower_radius_m": self.search_radius,
                "smoothness_weight": self.smoothness_weight,
                "replan_limit": self.replan_limit,
                "inflation_factor": self.inflation_factor,
                "inflation_radius_m": self.zone_radius,
                "backtrack_limit": self.backtrack_limit,
                "approach_limit": self.approach_limit}


@dataclass
class PlannedPath:
    positions: np.ndarray
    headings: np.ndarray
    kind: str
    cost: float = 0.0

    @property
    def waypoints(self) -> list[VehiclePose]:
        return [VehiclePose(p, h) for p, h in zip(self.positions, self.headings)]

    @property
    def length(self) -> float:
        return polyline_length(self.positions)

    def __len__(self):
        return len(self.positions)


class ReplanEvent(NamedTuple):
    index: int
    diagnostic: str


@dataclass
class PlanResult:
    leader_kind: str
    asv: PlannedPath
    auv: PlannedPath
    replan_count: int
    events: list = field(default_factory=list)
    tether_shapes: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def leader(self) -> PlannedPath:
        return self.asv if self.leader_kind == ASV else self.auv

    @property
    def follower(self) -> PlannedPath:
        return self.auv if self.leader_kind == ASV else self.asv


class Grid:
    """Regular node lattice over the workspace with cached clearances.

    z levels run downward from the surface so the ASV plane is level 0.
    """

    def __init__(self, world: ObstacleMap, resolution: float, clearance: float):
        self.world = world
        self.r = resolution
        self.clearance = clearance
        lo, hi = np.asarray(world.bounds_min), np.asarray(world.bounds_max)
        self.origin = lo[:2]
        self.nx = int(math.floor((hi[0] - lo[0]) / resolution + 1e-9)) + 1
        self.ny = int(math.floor((hi[1] - lo[1]) / resolution + 1e-9)) + 1
        floor_z = max(world.seabed_z, lo[2])
        self.nz = int(math.floor((world.surface_z - floor_z) / resolution + 1e-9)) + 1
        xs = self.origin[0] + resolution * np.arange(self.nx)
        ys = self.origin[1] + resolution * np.arange(self.ny)
        zs = world.surface_z - resolution * np.arange(self.nz)
        self.xs, self.ys, self.zs = xs, ys, zs
        coords = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1)
        self.sd = world.distance(coords)
        self._edge_cache: dict = {}

    def position(self, idx) -> np.ndarray:
        i, j, k = idx
        return np.array([self.xs[i], self.ys[j], self.zs[k]])

    def nearest(self, p) -> tuple:
        i = int(round((p[0] - self.origin[0]) / self.r))
        j = int(round((p[1] - self.origin[1]) / self.r))
        k = int(round((self.world.surface_z - p[2]) / self.r))
        return (min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1),
                min(max(k, 0), self.nz - 1))

    def inside(self, idx) -> bool:
        i, j, k = idx
        return 0 <= i < self.nx and 0 <= j < self.ny and 0 <= k < self.nz

    def free(self, idx, kind: str) -> bool:
        if not self.inside(idx):
            return False
        k = idx[2]
        if kind == ASV:
            if k != 0:
                return False
        elif k == 0 or self.zs[k] - self.world.seabed_z < self.clearance:
            return False
        return bool(self.sd[idx] >= self.clearance)

    def point_clear(self, p) -> float:
        return float(self.world.distance(np.asarray(p)))

    def edge_clear(self, a_idx, b_idx) -> bool:
        key = (a_idx, b_idx) if a_idx <= b_idx else (b_idx, a_idx)
        hit = self._edge_cache.get(key)
        if hit is not None:
            return hit
        pa, pb = self.position(a_idx), self.position(b_idx)
        half = 0.5 * float(np.linalg.norm(pb - pa))
        # 1-Lipschitz distance: both ends clear by c + len/2 covers the segment.
        if self.sd[a_idx] >= self.clearance + half and self.sd[b_idx] >= self.clearance + half:
            ok = True
        else:
            ok = segment_clear(pa, pb, self.world, self.clearance, self.r)
        self._edge_cache[key] = ok
        return ok

    def segment_ok(self, p, q, sd_p=None, sd_q=None) -> bool:
        half = 0.5 * float(np.linalg.norm(np.asarray(q) - np.asarray(p)))
        if sd_p is None:
            sd_p = self.point_clear(p)
        if sd_q is None:
            sd_q = self.point_clear(q)
        if sd_p >= self.clearance + half and sd_q >= self.clearance + half:
            return True
        return segment_clear(p, q, self.world, self.clearance, self.r)


class _Zones:
    def __init__(self, zones, factor):
        self.centers = np.array([c for c, _ in zones]) if zones else np.zeros((0, 3))
        self.radii = np.array([r for _, r in zones]) if zones else np.zeros(0)
        self.factor = factor

    def multiplier(self, p) -> float:
        if len(self.radii) == 0:
            return 1.0
        d = np.linalg.norm(self.centers - p, axis=1)
        # Overlapping zones compound so repeated failures push the leader away.
        return self.factor ** int(np.count_nonzero(d <= self.radii))


class LeaderGraph:
    """Search graph for :func:`plan_leader`.

    Exposed so independent searches (e.g. a Dijkstra oracle) can run on
    exactly the same nodes, edges and costs.

    States are ``(i, j, k)`` for the AUV and ``(i, j, h)`` for the ASV, where
    ``h`` indexes the lattice heading; the ASV start state uses ``h = H`` and
    carries the exact start heading.
    """

    def __init__(self, grid: Grid, kind: str, start: VehiclePose, goal: VehiclePose,
                 config: PlannerConfig, zones=(), edge_filter=None):
        self.grid = grid
        self.edge_filter = edge_filter
        self.kind = kind
        self.config = config
        self.zones = _Zones(list(zones), config.inflation_factor)
        self.start_pose, self.goal_pose = start, goal
        snode = grid.nearest(start.xyz)
        gnode = grid.nearest(goal.xyz)
        if kind == ASV:
            snode, gnode = (snode[0], snode[1], 0), (gnode[0], gnode[1], 0)
        for node, pose, name in ((snode, start, "start"), (gnode, goal, "goal")):
            if not grid.free(node, kind):
                raise InvalidEndpoint(f"{kind} {name} cell {node} is not free")
            if not grid.segment_ok(pose.xyz, grid.position(node)):
                raise InvalidEndpoint(f"{kind} {name} cannot reach its grid node")
        self.start_node, self.goal_node = snode, gnode
        self.goal_xyz = grid.position(gnode)
        self._pos_cache: dict = {}
        if kind == ASV:
            h = config.heading_count
            self.vectors = _HEADING_VECTORS[h]
            self.angles = [wrap_angle(math.atan2(dy, dx)) for dx, dy in self.vectors]
            self.turns = []
            for hi in range(h):
                allowed = [(hi + dh) % h for dh in (0, 1, -1)
                           if angle_diff(self.angles[hi], self.angles[(hi + dh) % h])
                           <= config.max_turn + 1e-12]
                self.turns.append(list(dict.fromkeys(allowed)))
            self.start_turns = [hi for hi in range(h)
                                if angle_diff(start.heading, self.angles[hi]) <= config.max_turn + 1e-12]
            self.start_state = (snode[0], snode[1], h)
        else:
            self.start_state = snode

    def position(self, state) -> np.ndarray:
        pos = self._pos_cache.get(state)
        if pos is None:
            node = (state[0], state[1], 0) if self.kind == ASV else state
            pos = self.grid.position(node)
            self._pos_cache[state] = pos
        return pos

    def heading(self, state) -> float:
        if self.kind != ASV:
            return 0.0
        if state[2] == self.config.heading_count:
            return self.start_pose.heading
        return self.angles[state[2]]

    def is_goal(self, state) -> bool:
        return state[0] == self.goal_node[0] and state[1] == self.goal_node[1] and (
            self.kind == ASV or state[2] == self.goal_node[2])

    def heuristic(self, state) -> float:
        return float(np.linalg.norm(self.position(state) - self.goal_xyz))

    def neighbors(self, state):
        grid, r = self.grid, self.grid.r
        out = []
        if self.kind == ASV:
            i, j, h = state
            here = (i, j, 0)
            options = self.start_turns if h == self.config.heading_count else self.turns[h]
            for nh in options:
                dx, dy = self.vectors[nh]
                node = (i + dx, j + dy, 0)
                if not grid.free(node, ASV) or not grid.edge_clear(here, node):
                    continue
                if self.edge_filter and not self.edge_filter(here, node):
                    continue
                nstate = (node[0], node[1], nh)
                cost = r * math.hypot(dx, dy) * self.zones.multiplier(self.position(nstate))
                out.append((nstate, cost))
        else:
            i, j, k = state
            for di, dj, dk in _OFFSETS_26:
                node = (i + di, j + dj, k + dk)
                if not grid.free(node, AUV) or not grid.edge_clear(state, node):
                    continue
                if self.edge_filter and not self.edge_filter(state, node):
                    continue
                cost = r * math.sqrt(di * di + dj * dj + dk * dk) * self.zones.multiplier(
                    self.position(node))
                out.append((node, cost))
        return out


def astar(graph: LeaderGraph):
    """A* over ``graph``; returns the state sequence from start to goal.

    Ties on f break toward lower h, then lexicographically on the state.
    """
    start = graph.start_state
    h0 = graph.heuristic(start)
    frontier = [(h0, h0, start)]
    g = {start: 0.0}
    parent = {start: None}
    closed = set()
    while frontier:
        _, _, state = heapq.heappop(frontier)
        if state in closed:
            continue
        if graph.is_goal(state):
            path = [state]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        closed.add(state)
        gs = g[state]
        for nstate, cost in graph.neighbors(state):
            if nstate in closed:
                continue
            ng = gs + cost
            if ng < g.get(nstate, math.inf):
                g[nstate] = ng
                parent[nstate] = state
                nh = graph.heuristic(nstate)
                heapq.heappush(frontier, (ng + nh, nh, nstate))
    raise NoPathFound(f"{graph.kind} open set exhausted")


def path_cost(graph: LeaderGraph, states) -> float:
    """Order-independent cost of a state sequence on ``graph``."""
    costs = []
    for a, b in zip(states, states[1:]):
        costs.append(dict(graph.neighbors(a))[b])
    return math.fsum(costs)


def plan_leader(start: VehiclePose, goal: VehiclePose, world: ObstacleMap, kind: str,
                config: PlannerConfig, clearance: float, zones=(), grid: Grid | None = None,
                edge_filter=None) -> PlannedPath:
    """Plan one vehicle from ``start`` to ``goal`` with A*.

    The exact start and goal positions are kept as first and last waypoints
    when they are off the grid. ``edge_filter(node_a, node_b)`` can veto
    individual grid edges.
    """
    if kind == ASV:
        for pose in (start, goal):
            if abs(pose.position[2] - world.surface_z) > 1e-9:
                raise InvalidEndpoint("ASV poses must lie on the surface plane")
    for pose in (start, goal):
        if not world.contains(pose.xyz):
            raise InvalidEndpoint(f"{kind} endpoint {pose.position} outside workspace")
        if world.distance(pose.xyz) < clearance:
            raise InvalidEndpoint(f"{kind} endpoint {pose.position} violates clearance")
    if grid is None:
        grid = Grid(world, config.resolution, clearance)
    graph = LeaderGraph(grid, kind, start, goal, config, zones, edge_filter)
    states = astar(graph)
    cost = path_cost(graph, states)
    positions = [graph.position(s) for s in states]
    headings = [graph.heading(s) for s in states]
    if np.linalg.norm(positions[0] - start.xyz) > 0:
        positions.insert(0, start.xyz)
        headings.insert(0, start.heading)
    if np.linalg.norm(positions[-1] - goal.xyz) > 0:
        positions.append(goal.xyz)
        headings.append(headings[-1])
    return PlannedPath(np.array(positions), np.array(headings), kind, cost)


def _candidate_offsets(radius_cells: float, planar: bool):
    n = int(math.ceil(radius_cells))
    ks = (0,) if planar else range(-n, n + 1)
    out = [(di, dj, dk) for di in range(-n, n + 1) for dj in range(-n, n + 1) for dk in ks
           if di * di + dj * dj + dk * dk <= (radius_cells + 1) ** 2]
    return out


def _point_at_fraction(points: np.ndarray, cum: np.ndarray, frac: float) -> np.ndarray:
    if cum[-1] == 0.0:
        return points[-1].copy()
    s = frac * cum[-1]
    return np.array([np.interp(s, cum, points[:, k]) for k in range(3)])


class FollowerResult(NamedTuple):
    leader: PlannedPath
    follower: PlannedPath
    events: list
    shapes: list


def compute_follower_path(leader: PlannedPath, follower_start: VehiclePose,
                          follower_goal: VehiclePose, kind: str, tether: TetherModel,
                          world: ObstacleMap, config: PlannerConfig,
                          grid: Grid | None = None) -> FollowerResult:
    """Step the follower alongside the densified leader path.

    At leader index ``k`` the follower moves to a nearby grid node, to
    ``target_k`` itself, or stays put, minimising
    ``|c - target_k| + w_s |c - f_{k-1}|`` among candidates that keep
    clearance, a clear segment and a feasible tether. ``target_k`` is
    the point at the same progress fraction along the follower's own A*
    path to its goal. Steps where the preferred candidate was rejected for
    tether reasons are reported as replan events.

    Returns the densified leader, the follower path (equal lengths), the
    events and the tether shape at every index pair.
    """
    if len(leader) == 0:
        raise ValueError("leader path is empty")
    if grid is None:
        grid = Grid(world, config.resolution, tether.clearance)
    r = config.resolution
    fstart = follower_start.xyz

    def pair(lead_pt, foll_pt):
        return (foll_pt, lead_pt) if kind == ASV else (lead_pt, foll_pt)

    check = tether_feasible(*pair(leader.positions[0], fstart), tether, world)
    if not check.ok:
        raise InfeasibleAtStart("start pair is not tether-feasible", check.diagnostic.value)

    # Steps of at most one cell, so len(dense) >= ceil(length / r) + 1.
    dense, _ = densify_path(leader.positions, r)
    lead_head = _headings_along(dense, leader.headings[0], leader.kind)

    ref = plan_leader(follower_start, follower_goal, world, kind, config, tether.clearance,
                      grid=grid)
    ref_cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(ref.positions, axis=0),
                                                               axis=1))])

    offsets = _candidate_offsets(config.search_radius / r, planar=(kind == ASV))
    ws = config.smoothness_weight
    radius = config.search_radius

    n = len(dense)

    def moves(k, cur, cur_head, cur_sd):
        """Feasible follower moves at leader index ``k``, cheapest first."""
        target = _point_at_fraction(ref.positions, ref_cum, k / (n - 1))
        base = grid.nearest(cur)
        cands = []
        for di, dj, dk in offsets:
            node = (base[0] + di, base[1] + dj, base[2] + dk)
            if not grid.free(node, kind):
                continue
            p = grid.position(node)
            step = float(np.linalg.norm(p - cur))
            if 0 < step <= radius + 1e-9:
                cost = float(np.linalg.norm(p - target)) + ws * step
                cands.append((cost, tuple(p), p, float(grid.sd[node])))
        cands.append((float(np.linalg.norm(cur - target)), tuple(cur), cur, cur_sd))
        # The reference point itself is usually best; it avoids grid
        # quantisation of the follower's step lengths.
        step = float(np.linalg.norm(target - cur))
        if 0 < step <= radius + 1e-9 and world.contains(target):
            sd_t = grid.point_clear(target)
            if sd_t >= tether.clearance:
                cands.append((ws * step, tuple(target), target, sd_t))
        cands.sort(key=lambda c: (c[0], c[1]))

        rejection = None
        for _, _, p, sd_p in cands:
            step_vec = p - cur
            step = float(np.linalg.norm(step_vec))
            head = cur_head
            if step > 0:
                if kind == ASV:
                    head = wrap_angle(math.atan2(step_vec[1], step_vec[0]))
                    if angle_diff(head, cur_head) > config.max_turn + 1e-12:
                        continue
                if not grid.segment_ok(cur, p, cur_sd, sd_p):
                    continue
            res = tether_feasible(*pair(dense[k], p), tether, world)
            if res.ok and step > 0:
                # The cable also sweeps the space between the two pairings.
                mid = tether_feasible(*pair((dense[k - 1] + dense[k]) / 2, (cur + p) / 2),
                                      tether, world)
                if not mid.ok:
                    res = mid
            if not res.ok:
                if rejection is None:
                    rejection = res.diagnostic.value
                    reasons.setdefault(k, rejection)
                continue
            yield (p, head, sd_p, res.shape, rejection)

    last = dense[-1]
    goal = follower_goal.xyz
    cache: dict = {}

    def tethered(node):
        ok = cache.get(node)
        if ok is None:
            ok = cache[node] = tether_feasible(*pair(last, grid.position(node)), tether,
                                               world).ok
        return ok

    def tether_edge(a, b):
        if not (tethered(a) and tethered(b)):
            return False
        mid = (grid.position(a) + grid.position(b)) / 2
        return tether_feasible(*pair(last, mid), tether, world).ok

    def approach(cur, cur_head):
        """Goal approach with the leader parked at its goal, or ``None``."""
        if np.linalg.norm(cur - goal) == 0:
            return []
        try:
            tail = plan_leader(VehiclePose(cur, cur_head), follower_goal, world, kind, config,
                               tether.clearance, grid=grid, edge_filter=tether_edge)
        except (NoPathFound, InvalidEndpoint):
            return None
        steps = []
        prev = cur
        for p, h in zip(tail.positions[1:], tail.headings[1:]):
            res = tether_feasible(*pair(last, p), tether, world)
            mid = tether_feasible(*pair(last, (prev + p) / 2), tether, world)
            if not (res.ok and mid.ok):
                return None
            steps.append((p, h, res.shape))
            prev = p
        return steps

    # Depth-first over steps with a bounded number of retreats, so one bad
    # early choice does not doom the whole follower path. A completed
    # sequence also needs a tether-feasible goal approach.
    chosen = [(fstart, follower_start.heading, grid.point_clear(fstart), check.shape, None)]
    stack = []
    reasons: dict = {}
    retreats = 0
    approaches = 0
    deepest = 0
    k = 1
    while True:
        if k == n:
            tail = approach(chosen[-1][0], chosen[-1][1])
            if tail is not None:
                break
            approaches += 1
            reasons.setdefault(n, Diagnostic.TETHER_COLLISION.value)
            deepest = n
            if approaches > config.approach_limit:
                raise FollowerStuck("no tether-feasible goal approach", reasons[n],
                                    index=n - 1)
            k = n - 1
            continue
        if len(stack) < k:
            cur, cur_head, cur_sd = chosen[-1][:3]
            stack.append(moves(k, cur, cur_head, cur_sd))
        nxt = next(stack[-1], None)
        if nxt is not None:
            del chosen[k:]
            chosen.append(nxt)
            k += 1
            continue
        deepest = max(deepest, k)
        stack.pop()
        k -= 1
        retreats += 1
        if k == 0 or retreats > config.backtrack_limit:
            index = min(deepest, n - 1)
            raise FollowerStuck(f"follower has no feasible move at leader index {index}",
                                reasons.get(deepest), index=index)

    positions = [c[0] for c in chosen]
    headings = [c[1] for c in chosen]
    shapes: list[TetherShape] = [c[3] for c in chosen]
    events = [ReplanEvent(i, c[4]) for i, c in enumerate(chosen) if c[4] is not None]
    lead_pos = list(dense)
    lead_hd = list(lead_head)
    for p, h, shape in tail:
        positions.append(p)
        headings.append(h)
        shapes.append(shape)
        lead_pos.append(last)
        lead_hd.append(lead_hd[-1])

    lead = PlannedPath(np.array(lead_pos), np.array(lead_hd), leader.kind, leader.cost)
    foll = PlannedPath(np.array(positions), np.array(headings), kind, 0.0)
    return FollowerResult(lead, foll, events, shapes)


def _headings_along(points, start_heading, kind):
    heads = [start_heading]
    for a, b in zip(points, points[1:]):
        v = b - a
        if kind == ASV and np.linalg.norm(v[:2]) > 0:
            heads.append(wrap_angle(math.atan2(v[1], v[0])))
        else:
            heads.append(heads[-1])
    return np.array(heads)


def plan_pair(scenario) -> PlanResult:
    """Plan both vehicles: leader by A*, follower under the tether.

    ``scenario`` supplies ``world``, ``tether``, ``planner`` and the four
    start/goal poses (``asv_start`` and so on).
    """
    world, tether, config = scenario.world, scenario.tether, scenario.planner
    leader_kind = config.first_robot
    follower_kind = other_kind(leader_kind)
    poses = {ASV: (scenario.asv_start, scenario.asv_goal),
             AUV: (scenario.auv_start, scenario.auv_goal)}
    (ls, lg), (fs, fg) = poses[leader_kind], poses[follower_kind]
    timings = {ASV: 0.0, AUV: 0.0}

    start_check = tether_feasible(scenario.asv_start.xyz, scenario.auv_start.xyz, tether, world)
    if not start_check.ok:
        raise InfeasibleAtStart("start pair is not tether-feasible",
                                start_check.diagnostic.value)
    goal_check = tether_feasible(scenario.asv_goal.xyz, scenario.auv_goal.xyz, tether, world)
    if not goal_check.ok:
        raise InfeasibleGoal("goal pair is not tether-feasible", goal_check.diagnostic.value)

    grid = Grid(world, config.resolution, tether.clearance)
    t0 = time.perf_counter()
    leader = plan_leader(ls, lg, world, leader_kind, config, tether.clearance, grid=grid)
    timings[leader_kind] += time.perf_counter() - t0

    zones: list = []
    replans = 0
    while True:
        t0 = time.perf_counter()
        try:
            result = compute_follower_path(leader, fs, fg, follower_kind, tether, world,
                                           config, grid=grid)
            timings[follower_kind] += time.perf_counter() - t0
            break
        except FollowerStuck as exc:
            timings[follower_kind] += time.perf_counter() - t0
            if replans >= config.replan_limit:
                raise
            dense, source = densify_path(leader.positions, config.resolution)
            k = min(exc.index, len(dense) - 1)
            zones.append((dense[k], config.zone_radius))
            v = int(source[max(k - 1, 0)])
            t0 = time.perf_counter()
            restart = VehiclePose(leader.positions[v], leader.headings[v])
            try:
                tail = plan_leader(restart, lg, world, leader_kind, config, tether.clearance,
                                   zones=zones, grid=grid)
            finally:
                timings[leader_kind] += time.perf_counter() - t0
            leader = PlannedPath(np.vstack([leader.positions[:v], tail.positions]),
                                 np.concatenate([leader.headings[:v], tail.headings]),
                                 leader_kind, tail.cost)
            replans += 1

    paths = {leader_kind: result.leader, follower_kind: result.follower}
    return PlanResult(leader_kind=leader_kind, asv=paths[ASV], auv=paths[AUV],
                      replan_count=replans, events=result.events,
                      tether_shapes=result.shapes, timings=timings)
