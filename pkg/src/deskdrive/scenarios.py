"""Scenario template machinery: declarative templates, deterministic
instantiation into routes + actor rosters, and the per-episode runtime
state machine that fires triggers and reports success."""

from __future__ import annotations

import copy
import hashlib
import math
from dataclasses import dataclass, field, replace

from . import SCHEMA_VERSION
from .behaviors import validate_tag
from .geometry import point_in_convex, rotate
from .path import Path
from .world import ActorState, Pose2D, RouteSpec, WorldState, route_progress_distance

ETHICS_DETECTORS = (
    "puddle",
    "door_pass",
    "weave",
    "slow_lead",
    "merge",
    "speed_bump",
    "emergency_yield",
)


class TemplateError(ValueError):
    pass


class ParameterError(TemplateError):
    """A parameter value fell outside its declared range."""


@dataclass(frozen=True)
class ScenarioTemplate:
    template_id: str
    ability_id: str
    set_tag: str
    description: str
    parameters: dict  # name -> {"min","max"} or {"choices": [...]}
    route: dict  # {"segments", "half_width", "speed_limit", "ego_start"}
    infrastructure: tuple = ()
    actors: tuple = ()
    triggers: tuple = ()
    success: dict = field(default_factory=lambda: {"kind": "reach_end"})
    ethics_bindings: dict = field(default_factory=dict)
    override_bindings: tuple = ()
    rc_shortcut_segment: tuple | None = None
    initial_flags: dict = field(default_factory=dict)
    armed_detectors_extra: dict = field(default_factory=dict)  # non-ethics (e.g. min_speed)

    def __post_init__(self):
        for name in self.ethics_bindings:
            if name not in ETHICS_DETECTORS:
                raise TemplateError(f"unknown ethics detector binding {name}")
        if self.success.get("rc_shortcut") and self.rc_shortcut_segment is None:
            raise TemplateError("rc_shortcut success requires a declared segment")

    @property
    def ethics_applicable(self) -> bool:
        return bool(self.ethics_bindings)

    def default_params(self) -> dict:
        out = {}
        for name, schema in self.parameters.items():
            if "choices" in schema:
                out[name] = schema["choices"][0]
            else:
                out[name] = schema.get("default", schema["min"])
        return out

    def validate_params(self, params: dict) -> dict:
        resolved = self.default_params()
        for name, value in params.items():
            if name not in self.parameters:
                raise ParameterError(f"unknown parameter {name!r}")
            schema = self.parameters[name]
            if "choices" in schema:
                if value not in schema["choices"]:
                    raise ParameterError(f"parameter {name!r}: {value!r} not in choices")
            else:
                if not (schema["min"] <= value <= schema["max"]):
                    raise ParameterError(
                        f"parameter {name!r}: {value!r} outside [{schema['min']}, {schema['max']}]"
                    )
            resolved[name] = value
        return resolved

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "template_id": self.template_id,
            "ability_id": self.ability_id,
            "set_tag": self.set_tag,
            "description": self.description,
            "parameters": self.parameters,
            "route": self.route,
            "infrastructure": list(self.infrastructure),
            "actors": list(self.actors),
            "triggers": list(self.triggers),
            "success": self.success,
            "ethics_bindings": self.ethics_bindings,
            "override_bindings": list(self.override_bindings),
            "rc_shortcut_segment": list(self.rc_shortcut_segment)
            if self.rc_shortcut_segment is not None
            else None,
            "initial_flags": self.initial_flags,
            "armed_detectors_extra": self.armed_detectors_extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioTemplate":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise TemplateError(f"unsupported scenario schema version {version!r}")
        return cls(
            template_id=d["template_id"],
            ability_id=d["ability_id"],
            set_tag=d["set_tag"],
            description=d["description"],
            parameters=d["parameters"],
            route=d["route"],
            infrastructure=tuple(d["infrastructure"]),
            actors=tuple(d["actors"]),
            triggers=tuple(d["triggers"]),
            success=d["success"],
            ethics_bindings=d["ethics_bindings"],
            override_bindings=tuple(d["override_bindings"]),
            rc_shortcut_segment=tuple(d["rc_shortcut_segment"])
            if d.get("rc_shortcut_segment") is not None
            else None,
            initial_flags=d["initial_flags"],
            armed_detectors_extra=d.get("armed_detectors_extra", {}),
        )


def _resolve(node, params):
    """Substitute {"$param": name[, "plus": c]} references throughout a nested structure."""
    if isinstance(node, dict):
        if "$param" in node and set(node.keys()) <= {"$param", "plus"}:
            value = params[node["$param"]]
            return value + node["plus"] if "plus" in node else value
        return {k: _resolve(v, params) for k, v in node.items()}
    if isinstance(node, (list, tuple)):
        return [_resolve(v, params) for v in node]
    return node


def _stable_int(*parts) -> int:
    h = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "big")


@dataclass(frozen=True)
class ScenarioRuntime:
    """Immutable per-tick snapshot of the scenario state machine."""

    template_id: str
    route: RouteSpec
    triggers: tuple  # resolved trigger dicts
    success: dict
    armed_detectors: dict
    override_bindings: tuple
    flags: dict
    fired: frozenset = frozenset()
    trigger_log: tuple = ()
    phase: str = "start"
    status: str = "running"
    rc_shortcut_flag: bool = False

    @property
    def spawned_actor_ids(self) -> tuple:
        ids = []
        for t in self.triggers:
            if t["id"] in self.fired:
                for a in t["actions"]:
                    if a.get("op") == "spawn":
                        ids.append(a["actor"]["id"])
        return tuple(ids)


def _eval_condition(cond: dict, world: WorldState, route: RouteSpec, flags: dict) -> bool:
    kind = cond["kind"]
    ego = world.ego
    if kind == "always":
        return True
    if kind == "ego_progress":
        return route_progress_distance(ego.pose, route) >= cond["ge"]
    if kind == "ego_near":
        return math.hypot(ego.pose.x - cond["x"], ego.pose.y - cond["y"]) <= cond["r"]
    if kind == "tick_ge":
        return world.tick >= cond["t"]
    if kind == "ego_speed_below":
        return ego.speed < cond["v"]
    if kind == "ego_stopped_in_zone":
        zone = [tuple(p) for p in cond["zone"]]
        return ego.speed < 0.1 and point_in_convex((ego.pose.x, ego.pose.y), zone)
    if kind == "actor_passed_ego":
        actor = world.actor(cond["id"])
        if actor is None:
            return False
        dx = actor.pose.x - ego.pose.x
        dy = actor.pose.y - ego.pose.y
        lon, _ = rotate(dx, dy, -ego.pose.heading)
        return lon < cond.get("behind_by", -5.0)
    if kind == "all":
        return all(_eval_condition(c, world, route, flags) for c in cond["of"])
    raise TemplateError(f"unknown trigger condition kind {kind!r}")


def scenario_tick(runtime: ScenarioRuntime, world: WorldState):
    """Evaluate triggers against the world; returns (engine commands, runtime', status)."""
    commands = []
    fired = set(runtime.fired)
    flags = runtime.flags
    flags_changed = False
    log = list(runtime.trigger_log)
    phase = runtime.phase
    status = runtime.status
    rc_shortcut = runtime.rc_shortcut_flag

    for trig in runtime.triggers:
        tid = trig["id"]
        if tid in fired and not trig.get("repeatable", False):
            continue
        if not _eval_condition(trig["condition"], world, runtime.route, flags):
            continue
        fired.add(tid)
        log.append((world.tick, tid))
        for action in trig["actions"]:
            op = action["op"]
            if op == "set_flag":
                if not flags_changed:
                    flags = dict(flags)
                    flags_changed = True
                flags[action["key"]] = action["value"]
            elif op == "arm_pullover":
                if not flags_changed:
                    flags = dict(flags)
                    flags_changed = True
                flags["police_pullover"] = {
                    "zone": action["zone"],
                    "deadline_ticks": action["deadline_ticks"],
                    "armed_tick": world.tick,
                }
            elif op == "set_phase":
                phase = action["phase"]
            else:
                commands.append(action)

    if status == "running" and runtime.success.get("kind") == "condition":
        if _eval_condition(runtime.success["condition"], world, runtime.route, flags):
            status = "success"
            rc_shortcut = bool(runtime.success.get("rc_shortcut", False))
            if not flags_changed:
                flags = dict(flags)
                flags_changed = True
            flags["success"] = True

    if status == "running" and world.tick >= runtime.route.timeout_ticks:
        status = "timeout_pending"

    new_runtime = replace(
        runtime,
        fired=frozenset(fired),
        flags=flags,
        trigger_log=tuple(log),
        phase=phase,
        status=status,
        rc_shortcut_flag=rc_shortcut,
    )
    return commands, new_runtime, status


def instantiate_scenario(template: ScenarioTemplate, params: dict, seed: int):
    """Deterministically expand a template into
    (RouteSpec, ScenarioRuntime, actors, infrastructure, ego pose)."""
    resolved = template.validate_params(params)

    route_spec = _resolve(template.route, resolved)
    path = Path(route_spec["segments"])
    if not (120.0 <= path.length <= 180.0):
        raise TemplateError(
            f"{template.template_id}: route length {path.length:.1f} m out of bounds"
        )
    half_width = route_spec["half_width"]
    wp_poses = path.waypoints(spacing=5.0)
    waypoints = tuple(Pose2D(x, y, h) for x, y, h in wp_poses)
    corridor = tuple(path.corridor(half_width))

    infra = []
    for spec in _resolve(list(template.infrastructure), resolved):
        s0, s1 = spec["s_range"]
        l0, l1 = spec.get("lateral_range", [-half_width, half_width])
        state = dict(spec.get("state", {}))
        if "cycle" in state:
            state["cycle"] = tuple(tuple(e) for e in state["cycle"])
        from .world import InfrastructureElement

        infra.append(
            InfrastructureElement(
                id=spec["id"],
                kind=spec["kind"],
                polygon=path.quad(s0, s1, l0, l1),
                state=state,
            )
        )

    def build_actor(spec: dict) -> ActorState:
        x, y, h = path.pose_at(spec["s"])
        lat = spec.get("lateral", 0.0)
        px = x - lat * math.sin(h)
        py = y + lat * math.cos(h)
        heading = h + spec.get("heading_offset", 0.0)
        validate_tag(spec.get("behavior_tag", "static"))
        return ActorState(
            id=spec["id"],
            kind=spec["kind"],
            pose=Pose2D(px, py, heading),
            speed=spec.get("speed", 0.0),
            half_length=spec.get("half_length", 2.3),
            half_width=spec.get("half_width", 1.0),
            behavior_tag=spec.get("behavior_tag", "static"),
            attributes=spec.get("attributes", {}),
        )

    actors = tuple(build_actor(a) for a in _resolve(list(template.actors), resolved))

    # triggers: resolve params and route-frame placements into world coordinates
    triggers = []
    for trig in _resolve(list(template.triggers), resolved):
        trig = copy.deepcopy(trig)
        cond = trig["condition"]
        if cond["kind"] == "ego_near" and "s" in cond:
            cond["x"], cond["y"] = path.point_at(cond.pop("s"), cond.pop("lateral", 0.0))
        if cond["kind"] == "ego_stopped_in_zone" and "zone_route" in cond:
            zr = cond.pop("zone_route")
            cond["zone"] = [list(p) for p in path.quad(*zr)]
        actions = []
        for action in trig["actions"]:
            if action.get("op") == "spawn":
                action = dict(action, actor=build_actor(action["actor"]).to_dict())
            elif action.get("op") == "arm_pullover" and "zone_route" in action:
                action = dict(action)
                zr = action.pop("zone_route")
                action["zone"] = [list(p) for p in path.quad(*zr)]
            actions.append(action)
        trig["actions"] = actions
        triggers.append(trig)

    success = _resolve(dict(template.success), resolved)
    if success.get("kind") == "condition":
        cond = success["condition"]
        if cond["kind"] == "ego_near" and "s" in cond:
            cond["x"], cond["y"] = path.point_at(cond.pop("s"), cond.pop("lateral", 0.0))
        if cond["kind"] == "ego_stopped_in_zone" and "zone_route" in cond:
            zr = cond.pop("zone_route")
            cond["zone"] = [list(p) for p in path.quad(*zr)]

    timeout_ticks = int(round(path.length / 1.0 / 0.05))  # length / 1 m/s reference / dt
    route = RouteSpec(
        route_id=f"{template.template_id}:{seed}",
        waypoints=waypoints,
        lane_corridor=corridor,
        length=path.length,
        ability_id=template.ability_id,
        set_tag=template.set_tag,
        scenario_bindings=(template.template_id,),
        timeout_ticks=timeout_ticks,
        ethics_applicable=template.ethics_applicable,
        rc_shortcut_segment=template.rc_shortcut_segment,
        speed_limit=route_spec.get("speed_limit", 8.0),
    )

    armed = {name: dict(cfg) for name, cfg in template.ethics_bindings.items()}
    for name, cfg in template.armed_detectors_extra.items():
        armed[name] = dict(cfg)
    armed = _resolve(armed, resolved)

    runtime = ScenarioRuntime(
        template_id=template.template_id,
        route=route,
        triggers=tuple(triggers),
        success=success,
        armed_detectors=armed,
        override_bindings=tuple(template.override_bindings),
        flags=dict(template.initial_flags),
    )

    # ego spawn: route frame start, optionally offset (e.g. curbside starts)
    start = route_spec.get("ego_start", {"s": 0.0, "lateral": 0.0})
    x, y, h = path.pose_at(start.get("s", 0.0))
    lat = start.get("lateral", 0.0)
    ego_pose = Pose2D(x - lat * math.sin(h), y + lat * math.cos(h), h)

    return route, runtime, actors, tuple(infra), ego_pose
