"""Built-in actor behaviors. Each behavior is a pure function of
(actor, world, config, route) and returns the actor's successor state."""

from __future__ import annotations

import math
from dataclasses import replace

from .geometry import normalize_angle, rotate
from .world import ActorState, Pose2D, WorldState

# gap-control (IDM-style) parameters shared by vehicle behaviors
IDM_ACCEL = 2.0
IDM_DECEL = 3.0
IDM_HEADWAY = 1.2
IDM_STANDSTILL = 2.5
IDM_EXPONENT = 4


def _attrs_with(actor: ActorState, **updates) -> tuple:
    m = actor.attr_map
    m.update(updates)
    return tuple(sorted(m.items()))


def _advance(actor: ActorState, speed: float, dt: float, heading: float | None = None) -> ActorState:
    h = actor.pose.heading if heading is None else heading
    x = actor.pose.x + speed * math.cos(h) * dt
    y = actor.pose.y + speed * math.sin(h) * dt
    return replace(actor, pose=Pose2D(x, y, h), speed=speed)


def _lead_gap(actor: ActorState, world: WorldState, lane_halfwidth: float = 2.0):
    """Nearest object ahead of the actor in its own lane: (gap, lead_speed) or None."""
    best = None
    candidates = [(world.ego.pose, world.ego.speed, world.ego.half_length, "ego")]
    for other in world.actors:
        if other.id == actor.id:
            continue
        candidates.append((other.pose, other.speed, other.half_length, other.id))
    c = math.cos(-actor.pose.heading)
    s = math.sin(-actor.pose.heading)
    for pose, speed, half_len, _tag in candidates:
        dx = pose.x - actor.pose.x
        dy = pose.y - actor.pose.y
        lx = c * dx - s * dy
        ly = s * dx + c * dy
        if lx <= 0.0 or lx > 60.0 or abs(ly) > lane_halfwidth:
            continue
        gap = lx - actor.half_length - half_len
        if best is None or gap < best[0]:
            best = (gap, speed)
    return best


def _idm_accel(speed: float, target_speed: float, lead) -> float:
    free = 1.0 - (speed / target_speed) ** IDM_EXPONENT if target_speed > 0 else -1.0
    if lead is None:
        return IDM_ACCEL * free
    gap, lead_speed = lead
    gap = max(gap, 0.1)
    s_star = IDM_STANDSTILL + speed * IDM_HEADWAY + speed * (speed - lead_speed) / (
        2.0 * math.sqrt(IDM_ACCEL * IDM_DECEL)
    )
    return IDM_ACCEL * (free - (max(s_star, 0.0) / gap) ** 2)


def static(actor, world, cfg, route):
    return actor


def lane_follow(actor, world, cfg, route):
    target = actor.attr("target_speed", 7.0)
    lead = _lead_gap(actor, world)
    accel = _idm_accel(actor.speed, target, lead)
    speed = max(0.0, actor.speed + accel * cfg.dt)
    return _advance(actor, speed, cfg.dt)


def scripted_trajectory(actor, world, cfg, route):
    """Plays back (tick, x, y, heading, speed) keyframes; holds the last one."""
    script = actor.attr("script", ())
    t = world.tick + 1
    chosen = None
    for entry in script:
        if entry[0] <= t:
            chosen = entry
        else:
            break
    if chosen is None:
        return actor
    _, x, y, heading, speed = chosen
    return replace(actor, pose=Pose2D(x, y, heading), speed=speed)


def cut_in(actor, world, cfg, route):
    """Drives parallel to the ego lane, then merges across when the ego closes in."""
    target = actor.attr("target_speed", 6.0)
    trigger_gap = actor.attr("cut_trigger_gap", 12.0)
    shift_total = actor.attr("shift_total", 3.5)
    shift_rate = actor.attr("shift_rate", 1.5)  # m/s lateral
    shift_dir = actor.attr("shift_dir", -1.0)  # toward ego lane
    shifted = actor.attr("shift_done", 0.0)

    c = math.cos(-actor.pose.heading)
    s = math.sin(-actor.pose.heading)
    dx = world.ego.pose.x - actor.pose.x
    dy = world.ego.pose.y - actor.pose.y
    ego_behind = c * dx - s * dy  # negative when ego is behind the actor
    triggered = actor.attr("cut_triggered", False) or (-trigger_gap <= ego_behind <= 0.0)

    speed = max(0.0, actor.speed + _idm_accel(actor.speed, target, None) * cfg.dt)
    nxt = _advance(actor, speed, cfg.dt)
    if triggered and shifted < shift_total:
        d = min(shift_rate * cfg.dt, shift_total - shifted)
        px, py = rotate(0.0, shift_dir * d, actor.pose.heading)
        nxt = replace(nxt, pose=Pose2D(nxt.pose.x + px, nxt.pose.y + py, nxt.pose.heading))
        shifted += d
    return replace(nxt, attributes=_attrs_with(nxt, cut_triggered=triggered, shift_done=shifted))


def wrong_way(actor, world, cfg, route):
    target = actor.attr("target_speed", 9.0)
    speed = max(0.0, actor.speed + _idm_accel(actor.speed, target, None) * cfg.dt)
    return _advance(actor, speed, cfg.dt)


def weaving(actor, world, cfg, route):
    """Lane following plus a sinusoidal lateral sway around the spawn heading."""
    base = actor.attr("base_heading", actor.pose.heading)
    amp = actor.attr("weave_amp", 1.2)
    period = actor.attr("weave_period", 80)  # ticks
    target = actor.attr("target_speed", 5.0)
    lead = _lead_gap(actor, world)
    speed = max(0.0, actor.speed + _idm_accel(actor.speed, target, lead) * cfg.dt)

    t = world.tick + 1
    w = 2.0 * math.pi / period
    dlat = amp * (math.sin(w * t) - math.sin(w * (t - 1)))
    x = actor.pose.x + speed * math.cos(base) * cfg.dt - dlat * math.sin(base)
    y = actor.pose.y + speed * math.sin(base) * cfg.dt + dlat * math.cos(base)
    return replace(actor, pose=Pose2D(x, y, base), speed=speed)


def pedestrian_cross(actor, world, cfg, route):
    """Stands still, then crosses at walk speed once the ego is within trigger range."""
    trigger = actor.attr("trigger_distance", 15.0)
    walk_speed = actor.attr("walk_speed", 1.6)
    cross_dist = actor.attr("cross_distance", 7.0)
    walked = actor.attr("walked", 0.0)
    armed = actor.attr("armed", False)

    if not armed:
        d = math.hypot(world.ego.pose.x - actor.pose.x, world.ego.pose.y - actor.pose.y)
        if d <= trigger:
            armed = True
    if not armed or walked >= cross_dist:
        stopped = replace(actor, speed=0.0)
        return replace(stopped, attributes=_attrs_with(stopped, armed=armed, walked=walked))
    step_d = min(walk_speed * cfg.dt, cross_dist - walked)
    nxt = _advance(actor, walk_speed, cfg.dt)
    return replace(nxt, attributes=_attrs_with(nxt, armed=armed, walked=walked + step_d))


def emergency_approach(actor, world, cfg, route):
    """Closes in behind the ego at high speed and holds a short standstill gap."""
    target = actor.attr("target_speed", 11.0)
    lead = _lead_gap(actor, world, lane_halfwidth=2.5)
    accel = _idm_accel(actor.speed, target, lead)
    speed = max(0.0, actor.speed + accel * cfg.dt)
    return _advance(actor, speed, cfg.dt)


def police_intercept(actor, world, cfg, route):
    """Parked until activated, then tails the ego like an emergency vehicle."""
    if not actor.attr("active", False):
        return replace(actor, speed=0.0)
    return emergency_approach(actor, world, cfg, route)


def door_open_when_ego_near(actor, world, cfg, route):
    """Parked vehicle whose door swings open as the ego approaches."""
    if actor.attr("door_open", False):
        return actor
    trigger = actor.attr("trigger_distance", 18.0)
    d = math.hypot(world.ego.pose.x - actor.pose.x, world.ego.pose.y - actor.pose.y)
    if d <= trigger:
        return replace(actor, attributes=_attrs_with(actor, door_open=True))
    return actor


REGISTRY = {
    "static": static,
    "lane_follow": lane_follow,
    "scripted_trajectory": scripted_trajectory,
    "cut_in": cut_in,
    "wrong_way": wrong_way,
    "weaving": weaving,
    "pedestrian_cross": pedestrian_cross,
    "emergency_approach": emergency_approach,
    "police_intercept": police_intercept,
    "door_open_when_ego_near": door_open_when_ego_near,
}


class UnknownBehaviorError(ValueError):
    pass


def validate_tag(tag: str) -> None:
    if tag not in REGISTRY:
        raise UnknownBehaviorError(f"unknown behavior tag: {tag}")


def update_actor(actor: ActorState, world: WorldState, cfg, route) -> ActorState:
    try:
        fn = REGISTRY[actor.behavior_tag]
    except KeyError:
        raise UnknownBehaviorError(f"unknown behavior tag: {actor.behavior_tag}") from None
    return fn(actor, world, cfg, route)
