"""Core world vocabulary: poses, ego/actor states, infrastructure, routes, world snapshots.

All types are immutable value objects; every mutation produces a successor object.
Serialization round-trips bit-exactly (floats pass through json's repr encoding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import (
    dist,
    normalize_angle,
    point_in_convex,
    point_segment_distance,
)

ACTOR_KINDS = (
    "vehicle",
    "pedestrian",
    "cyclist",
    "static_obstacle",
    "emergency_vehicle",
    "police_vehicle",
)

INFRA_KINDS = (
    "traffic_light",
    "stop_sign",
    "puddle",
    "speed_bump",
    "lane_blockage",
    "roadside_open_space",
    "fog_region",
    "sensor_degradation_zone",
)

SET_TAGS = ("Basic", "Hard", "Thorny")


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    heading: float  # radians, normalized into (-pi, pi]

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "heading": self.heading}

    @classmethod
    def from_dict(cls, d: dict) -> "Pose2D":
        return cls(d["x"], d["y"], d["heading"])


@dataclass(frozen=True)
class EgoState:
    pose: Pose2D
    speed: float  # m/s, forward positive
    steer_angle: float  # radians
    half_length: float = 2.4
    half_width: float = 1.0
    fault_flags: frozenset = frozenset()

    def __post_init__(self):
        if self.half_length <= 0 or self.half_width <= 0:
            raise ValueError("ego footprint half-extents must be positive")
        object.__setattr__(self, "fault_flags", frozenset(self.fault_flags))

    def to_dict(self) -> dict:
        return {
            "pose": self.pose.to_dict(),
            "speed": self.speed,
            "steer_angle": self.steer_angle,
            "half_length": self.half_length,
            "half_width": self.half_width,
            "fault_flags": sorted(self.fault_flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EgoState":
        return cls(
            pose=Pose2D.from_dict(d["pose"]),
            speed=d["speed"],
            steer_angle=d["steer_angle"],
            half_length=d["half_length"],
            half_width=d["half_width"],
            fault_flags=frozenset(d["fault_flags"]),
        )


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def _enc(v):
    """Tuple values (scripts, cycles) become json lists."""
    if isinstance(v, tuple):
        return [_enc(e) for e in v]
    return v


def _dec(v):
    if isinstance(v, list):
        return tuple(_dec(e) for e in v)
    return v


@dataclass(frozen=True)
class ControlCommand:
    throttle: float = 0.0  # [0, 1]
    steer: float = 0.0  # [-1, 1]
    brake: float = 0.0  # [0, 1]
    hand_brake: bool = False

    def __post_init__(self):
        object.__setattr__(self, "throttle", _clamp(float(self.throttle), 0.0, 1.0))
        object.__setattr__(self, "steer", _clamp(float(self.steer), -1.0, 1.0))
        object.__setattr__(self, "brake", _clamp(float(self.brake), 0.0, 1.0))
        object.__setattr__(self, "hand_brake", bool(self.hand_brake))

    def to_dict(self) -> dict:
        return {
            "throttle": self.throttle,
            "steer": self.steer,
            "brake": self.brake,
            "hand_brake": self.hand_brake,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ControlCommand":
        return cls(d["throttle"], d["steer"], d["brake"], d["hand_brake"])


@dataclass(frozen=True)
class ActorState:
    id: str
    kind: str
    pose: Pose2D
    speed: float
    half_length: float
    half_width: float
    behavior_tag: str = "static"
    attributes: tuple = ()  # sorted tuple of (key, value) pairs

    def __post_init__(self):
        if self.kind not in ACTOR_KINDS:
            raise ValueError(f"unknown actor kind: {self.kind}")
        if self.kind == "static_obstacle" and self.speed != 0.0:
            raise ValueError("static_obstacle must have speed 0")
        if isinstance(self.attributes, dict):
            object.__setattr__(self, "attributes", tuple(sorted(self.attributes.items())))
        else:
            object.__setattr__(self, "attributes", tuple(sorted(self.attributes)))

    @property
    def attr_map(self) -> dict:
        return dict(self.attributes)

    def attr(self, key, default=None):
        return self.attr_map.get(key, default)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "pose": self.pose.to_dict(),
            "speed": self.speed,
            "half_length": self.half_length,
            "half_width": self.half_width,
            "behavior_tag": self.behavior_tag,
            "attributes": [[k, _enc(v)] for k, v in self.attributes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ActorState":
        return cls(
            id=d["id"],
            kind=d["kind"],
            pose=Pose2D.from_dict(d["pose"]),
            speed=d["speed"],
            half_length=d["half_length"],
            half_width=d["half_width"],
            behavior_tag=d["behavior_tag"],
            attributes=tuple((k, _dec(v)) for k, v in d["attributes"]),
        )


@dataclass(frozen=True)
class InfrastructureElement:
    id: str
    kind: str
    polygon: tuple  # tuple of (x, y) vertices, counter-clockwise convex
    state: tuple = ()  # sorted tuple of (key, value) pairs

    def __post_init__(self):
        if self.kind not in INFRA_KINDS:
            raise ValueError(f"unknown infrastructure kind: {self.kind}")
        object.__setattr__(self, "polygon", tuple(tuple(p) for p in self.polygon))
        if isinstance(self.state, dict):
            object.__setattr__(self, "state", tuple(sorted(self.state.items())))
        else:
            object.__setattr__(self, "state", tuple(sorted(self.state)))

    @property
    def state_map(self) -> dict:
        return dict(self.state)

    def get(self, key, default=None):
        return self.state_map.get(key, default)

    def with_state(self, **updates) -> "InfrastructureElement":
        m = self.state_map
        m.update(updates)
        return replace(self, state=tuple(sorted(m.items())))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "polygon": [list(p) for p in self.polygon],
            "state": [[k, _enc(v)] for k, v in self.state],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InfrastructureElement":
        return cls(
            id=d["id"],
            kind=d["kind"],
            polygon=tuple(tuple(p) for p in d["polygon"]),
            state=tuple((k, _dec(v)) for k, v in d["state"]),
        )


@dataclass(frozen=True)
class RouteSpec:
    route_id: str
    waypoints: tuple  # tuple of Pose2D
    lane_corridor: tuple  # tuple of convex polygons (each a tuple of (x,y))
    length: float
    ability_id: str
    set_tag: str
    scenario_bindings: tuple = ()
    timeout_ticks: int = 3000
    ethics_applicable: bool = False
    rc_shortcut_segment: tuple | None = None  # (start_index, end_index)
    speed_limit: float = 8.0

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        object.__setattr__(
            self, "lane_corridor", tuple(tuple(tuple(p) for p in poly) for poly in self.lane_corridor)
        )
        if len(self.waypoints) < 2:
            raise ValueError("route needs at least 2 waypoints")
        if self.timeout_ticks <= 0:
            raise ValueError("timeout_ticks must be positive")
        if self.set_tag not in SET_TAGS:
            raise ValueError(f"unknown set tag: {self.set_tag}")
        for i in range(1, len(self.waypoints)):
            d = dist(
                (self.waypoints[i - 1].x, self.waypoints[i - 1].y),
                (self.waypoints[i].x, self.waypoints[i].y),
            )
            if not (2.0 - 1e-9 <= d <= 10.0 + 1e-9):
                raise ValueError(f"waypoint spacing {d:.3f} outside [2, 10] m at index {i}")
        if self.rc_shortcut_segment is not None:
            a, b = self.rc_shortcut_segment
            if not (0 <= a <= b < len(self.waypoints)):
                raise ValueError("rc_shortcut_segment out of range")
            object.__setattr__(self, "rc_shortcut_segment", (a, b))

    def contains(self, p: tuple[float, float]) -> bool:
        """True if the point lies inside the route lane corridor."""
        for poly in self.lane_corridor:
            if point_in_convex(p, poly):
                return True
        return False

    def to_dict(self) -> dict:
        return {
            "route_id": self.route_id,
            "waypoints": [w.to_dict() for w in self.waypoints],
            "lane_corridor": [[list(p) for p in poly] for poly in self.lane_corridor],
            "length": self.length,
            "ability_id": self.ability_id,
            "set_tag": self.set_tag,
            "scenario_bindings": list(self.scenario_bindings),
            "timeout_ticks": self.timeout_ticks,
            "ethics_applicable": self.ethics_applicable,
            "rc_shortcut_segment": list(self.rc_shortcut_segment)
            if self.rc_shortcut_segment is not None
            else None,
            "speed_limit": self.speed_limit,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RouteSpec":
        return cls(
            route_id=d["route_id"],
            waypoints=tuple(Pose2D.from_dict(w) for w in d["waypoints"]),
            lane_corridor=tuple(tuple(tuple(p) for p in poly) for poly in d["lane_corridor"]),
            length=d["length"],
            ability_id=d["ability_id"],
            set_tag=d["set_tag"],
            scenario_bindings=tuple(d["scenario_bindings"]),
            timeout_ticks=d["timeout_ticks"],
            ethics_applicable=d["ethics_applicable"],
            rc_shortcut_segment=tuple(d["rc_shortcut_segment"])
            if d.get("rc_shortcut_segment") is not None
            else None,
            speed_limit=d["speed_limit"],
        )


@dataclass(frozen=True)
class WorldState:
    tick: int
    ego: EgoState
    actors: tuple = ()  # tuple of ActorState, stable order
    infrastructure: tuple = ()
    rng_stream_position: int = 0

    def __post_init__(self):
        object.__setattr__(self, "actors", tuple(self.actors))
        object.__setattr__(self, "infrastructure", tuple(self.infrastructure))
        ids = [a.id for a in self.actors]
        if len(ids) != len(set(ids)):
            raise ValueError("actor ids must be unique")

    def actor(self, actor_id: str) -> ActorState | None:
        for a in self.actors:
            if a.id == actor_id:
                return a
        return None

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "ego": self.ego.to_dict(),
            "actors": [a.to_dict() for a in self.actors],
            "infrastructure": [e.to_dict() for e in self.infrastructure],
            "rng_stream_position": self.rng_stream_position,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldState":
        return cls(
            tick=d["tick"],
            ego=EgoState.from_dict(d["ego"]),
            actors=tuple(ActorState.from_dict(a) for a in d["actors"]),
            infrastructure=tuple(InfrastructureElement.from_dict(e) for e in d["infrastructure"]),
            rng_stream_position=d["rng_stream_position"],
        )


PASS_RADIUS = 4.0  # floor; effective radius widens with the lane corridor


def pass_radius(route: RouteSpec) -> float:
    """Waypoint pass radius: any position inside the corridor (plus a small
    margin) abreast of a waypoint counts, so in-corridor detours still pass."""
    quad = route.lane_corridor[0]
    half_width = dist(quad[0], quad[3]) / 2.0
    return max(PASS_RADIUS, half_width + 1.0)


def lane_offset(pose: Pose2D, route: RouteSpec) -> float:
    """Signed lateral offset from the route polyline; positive left of travel direction."""
    p = (pose.x, pose.y)
    best_d = math.inf
    best_sign = 1.0
    wps = route.waypoints
    for i in range(len(wps) - 1):
        a = (wps[i].x, wps[i].y)
        b = (wps[i + 1].x, wps[i + 1].y)
        d = point_segment_distance(p, a, b)
        if d < best_d:
            best_d = d
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            best_sign = 1.0 if cross >= 0.0 else -1.0
    return best_sign * best_d


def waypoint_pass_check(ego: EgoState, route: RouteSpec, next_index: int) -> int:
    """Advance next_index through every waypoint currently within the pass radius."""
    if not (0 <= next_index <= len(route.waypoints)):
        raise ValueError("next_index out of range")
    p = (ego.pose.x, ego.pose.y)
    radius = pass_radius(route)
    while next_index < len(route.waypoints):
        w = route.waypoints[next_index]
        if dist(p, (w.x, w.y)) <= radius:
            next_index += 1
        else:
            break
    return next_index


def route_progress_distance(pose: Pose2D, route: RouteSpec) -> float:
    """Arc-length along the route of the closest polyline point to the pose."""
    p = (pose.x, pose.y)
    wps = route.waypoints
    best_d = math.inf
    best_s = 0.0
    s = 0.0
    for i in range(len(wps) - 1):
        a = (wps[i].x, wps[i].y)
        b = (wps[i + 1].x, wps[i + 1].y)
        seg = dist(a, b)
        d = point_segment_distance(p, a, b)
        if d < best_d:
            best_d = d
            if seg > 0:
                t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (seg * seg)
                t = min(1.0, max(0.0, t))
            else:
                t = 0.0
            best_s = s + t * seg
        s += seg
    return best_s
