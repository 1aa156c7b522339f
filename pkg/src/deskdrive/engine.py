"""Fixed-timestep deterministic engine: ego kinematics, actor behaviors,
traffic-light cycles, and oriented-rectangle collision detection."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field, replace

from .geometry import convex_overlap, normalize_angle, rect_corners
from .world import (
    ActorState,
    ControlCommand,
    EgoState,
    InfrastructureElement,
    Pose2D,
    WorldState,
)


@dataclass(frozen=True)
class EngineConfig:
    dt: float = 0.05  # 20 Hz fixed timestep
    max_steer: float = 0.7  # radians
    max_accel: float = 3.0  # m/s^2
    max_brake_decel: float = 8.0  # m/s^2
    wheelbase: float = 2.8  # meters
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        for name in ("max_steer", "max_accel", "max_brake_decel", "wheelbase"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def digest(self) -> str:
        raw = f"{self.dt!r}|{self.max_steer!r}|{self.max_accel!r}|{self.max_brake_decel!r}|{self.wheelbase!r}|{self.seed}"
        return hashlib.sha256(raw.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CollisionContact:
    tick: int
    ego_involved: bool
    other_id: str
    other_kind: str
    relative_speed: float


def stream_uniform(seed: int, actor_id: str, tick: int) -> float:
    """Deterministic per-actor uniform draw in [0, 1); stable across processes."""
    h = hashlib.sha256(f"{seed}:{actor_id}:{tick}".encode()).digest()
    (n,) = struct.unpack(">Q", h[:8])
    return n / 2**64


def ego_corners(ego: EgoState) -> list[tuple[float, float]]:
    return rect_corners(ego.pose.x, ego.pose.y, ego.pose.heading, ego.half_length, ego.half_width)


def actor_corners(actor: ActorState) -> list[tuple[float, float]]:
    return rect_corners(
        actor.pose.x, actor.pose.y, actor.pose.heading, actor.half_length, actor.half_width
    )


def bicycle_step(state: EgoState, cmd: ControlCommand, cfg: EngineConfig) -> EgoState:
    """Kinematic bicycle update; no reverse gear, speed clamped to >= 0."""
    brake_failed = "brake_failure" in state.fault_flags
    if cmd.hand_brake and not brake_failed:
        accel = -cfg.max_brake_decel
    else:
        brake_term = 0.0 if brake_failed else cmd.brake * cfg.max_brake_decel
        accel = cmd.throttle * cfg.max_accel - brake_term
    speed = max(0.0, state.speed + accel * cfg.dt)
    steer_angle = cmd.steer * cfg.max_steer
    yaw_rate = (speed / cfg.wheelbase) * math.tan(steer_angle)
    heading = normalize_angle(state.pose.heading + yaw_rate * cfg.dt)
    x = state.pose.x + speed * math.cos(heading) * cfg.dt
    y = state.pose.y + speed * math.sin(heading) * cfg.dt
    return replace(state, pose=Pose2D(x, y, heading), speed=speed, steer_angle=steer_angle)


def _velocity(heading: float, speed: float) -> tuple[float, float]:
    return (speed * math.cos(heading), speed * math.sin(heading))


def detect_collisions(world: WorldState) -> list[CollisionContact]:
    """Every ego-vs-actor oriented rectangle overlap at this tick."""
    ego = world.ego
    ec = None
    ego_reach = math.hypot(ego.half_length, ego.half_width)
    contacts = []
    for actor in world.actors:
        reach = ego_reach + math.hypot(actor.half_length, actor.half_width)
        dx = actor.pose.x - ego.pose.x
        dy = actor.pose.y - ego.pose.y
        if dx * dx + dy * dy > reach * reach:
            continue
        if ec is None:
            ec = ego_corners(ego)
        if convex_overlap(ec, actor_corners(actor)):
            evx, evy = _velocity(ego.pose.heading, ego.speed)
            avx, avy = _velocity(actor.pose.heading, actor.speed)
            rel = math.hypot(evx - avx, evy - avy)
            contacts.append(
                CollisionContact(
                    tick=world.tick,
                    ego_involved=True,
                    other_id=actor.id,
                    other_kind=actor.kind,
                    relative_speed=rel,
                )
            )
    return contacts


def traffic_light_update(element: InfrastructureElement, tick: int) -> InfrastructureElement:
    """Advance a traffic light along its configured phase cycle; 'failed' is absorbing."""
    if element.kind != "traffic_light":
        raise ValueError("traffic_light_update applies only to traffic lights")
    if element.get("phase") == "failed":
        return element
    cycle = element.get("cycle")  # tuple of (phase, duration_ticks)
    if not cycle:
        return element
    offset = element.get("cycle_offset", 0)
    period = sum(d for _, d in cycle)
    t = (tick + offset) % period
    for phase, duration in cycle:
        if t < duration:
            if phase != element.get("phase"):
                return element.with_state(phase=phase)
            return element
        t -= duration
    return element  # unreachable


def infrastructure_update(element: InfrastructureElement, tick: int) -> InfrastructureElement:
    if element.kind == "traffic_light":
        return traffic_light_update(element, tick)
    return element


class ScenarioCommandError(ValueError):
    """A scenario command referenced an unknown actor or carried a bad payload."""


def apply_scenario_commands(world: WorldState, commands: list[dict]) -> WorldState:
    """Stage 1 of the step: spawns, despawns, behavior/attribute/state changes."""
    actors = list(world.actors)
    infra = list(world.infrastructure)
    ego = world.ego
    by_id = {a.id: i for i, a in enumerate(actors)}

    for cmd in commands:
        op = cmd["op"]
        if op == "spawn":
            actor = cmd["actor"]
            if not isinstance(actor, ActorState):
                actor = ActorState.from_dict(actor)
            if actor.id in by_id:
                raise ScenarioCommandError(f"spawn of duplicate actor id {actor.id}")
            by_id[actor.id] = len(actors)
            actors.append(actor)
        elif op == "despawn":
            if cmd["id"] not in by_id:
                raise ScenarioCommandError(f"despawn of unknown actor id {cmd['id']}")
            idx = by_id.pop(cmd["id"])
            actors[idx] = None
        elif op == "set_behavior":
            if cmd["id"] not in by_id:
                raise ScenarioCommandError(f"set_behavior on unknown actor id {cmd['id']}")
            idx = by_id[cmd["id"]]
            actors[idx] = replace(actors[idx], behavior_tag=cmd["behavior_tag"])
        elif op == "set_attribute":
            if cmd["id"] not in by_id:
                raise ScenarioCommandError(f"set_attribute on unknown actor id {cmd['id']}")
            idx = by_id[cmd["id"]]
            m = actors[idx].attr_map
            m[cmd["key"]] = cmd["value"]
            actors[idx] = replace(actors[idx], attributes=tuple(sorted(m.items())))
        elif op == "set_infra_state":
            hit = False
            for i, e in enumerate(infra):
                if e.id == cmd["id"]:
                    infra[i] = e.with_state(**cmd["updates"])
                    hit = True
                    break
            if not hit:
                raise ScenarioCommandError(f"set_infra_state on unknown element {cmd['id']}")
        elif op == "set_ego_fault":
            flags = set(ego.fault_flags)
            if cmd.get("active", True):
                flags.add(cmd["fault"])
            else:
                flags.discard(cmd["fault"])
            ego = replace(ego, fault_flags=frozenset(flags))
        else:
            raise ScenarioCommandError(f"unknown scenario command op {op}")

    actors = [a for a in actors if a is not None]
    return replace(world, actors=tuple(actors), ego=ego)


def step(
    world: WorldState,
    cmd: ControlCommand,
    scenario_commands: list[dict],
    cfg: EngineConfig,
    route=None,
) -> tuple[WorldState, list[CollisionContact]]:
    """One deterministic tick: scenario commands, actor behaviors, ego kinematics,
    infrastructure updates, collision detection."""
    from . import behaviors  # late import: behaviors needs engine types

    world = apply_scenario_commands(world, scenario_commands)
    new_tick = world.tick + 1

    new_actors = tuple(
        behaviors.update_actor(actor, world, cfg, route) for actor in world.actors
    )
    new_ego = bicycle_step(world.ego, cmd, cfg)
    new_infra = tuple(infrastructure_update(e, new_tick) for e in world.infrastructure)

    new_world = WorldState(
        tick=new_tick,
        ego=new_ego,
        actors=new_actors,
        infrastructure=new_infra,
        rng_stream_position=new_tick,
    )
    contacts = detect_collisions(new_world)
    return new_world, contacts
