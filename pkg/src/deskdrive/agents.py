"""Agent-facing observations and the builtin baseline agents.

Observations are ego-centric and JSON-serializable: they are the only view of
the world an agent (builtin or external) ever sees, so sensor degradation is
applied here rather than in the agent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import dist, point_in_convex, rotate
from .world import ControlCommand, RouteSpec, WorldState, lane_offset, route_progress_distance

ACTOR_SENSE_RADIUS = 60.0
PREVIEW_COUNT = 10
REGION_LOOKAHEAD = 15.0

_SIMPLE = (bool, int, float, str)


@dataclass(frozen=True)
class Observation:
    tick: int
    speed: float
    steer_angle: float
    speed_limit: float
    lane_offset: float
    route_progress: float
    route_length: float
    corridor_half_width: float
    route_preview: tuple = ()  # (x, y, heading_rel) in ego frame, ~5 m apart
    nearby_actors: tuple = ()  # dicts in ego frame
    traffic_light: dict | None = None  # {"phase", "distance"} for nearest light ahead
    region_flags: dict = field(default_factory=dict)
    fault_flags: tuple = ()

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "speed": self.speed,
            "steer_angle": self.steer_angle,
            "speed_limit": self.speed_limit,
            "lane_offset": self.lane_offset,
            "route_progress": self.route_progress,
            "route_length": self.route_length,
            "corridor_half_width": self.corridor_half_width,
            "route_preview": [list(p) for p in self.route_preview],
            "nearby_actors": [dict(a) for a in self.nearby_actors],
            "traffic_light": self.traffic_light,
            "region_flags": dict(self.region_flags),
            "fault_flags": list(self.fault_flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Observation":
        return cls(
            tick=d["tick"],
            speed=d["speed"],
            steer_angle=d["steer_angle"],
            speed_limit=d["speed_limit"],
            lane_offset=d["lane_offset"],
            route_progress=d["route_progress"],
            route_length=d["route_length"],
            corridor_half_width=d["corridor_half_width"],
            route_preview=tuple(tuple(p) for p in d["route_preview"]),
            nearby_actors=tuple(d["nearby_actors"]),
            traffic_light=d["traffic_light"],
            region_flags=d["region_flags"],
            fault_flags=tuple(d["fault_flags"]),
        )


def _poly_s_range(poly, route: RouteSpec):
    from .world import Pose2D

    ss = [route_progress_distance(Pose2D(x, y, 0.0), route) for x, y in poly]
    return min(ss), max(ss)


def observe(world: WorldState, route: RouteSpec, runtime, next_waypoint: int) -> Observation:
    ego = world.ego
    ex, ey, eh = ego.pose.x, ego.pose.y, ego.pose.heading
    ego_s = route_progress_distance(ego.pose, route)
    flags = getattr(runtime, "flags", {})

    def to_ego(x, y):
        return rotate(x - ex, y - ey, -eh)

    # route preview: upcoming waypoints in the ego frame, selected by route
    # progress so navigation keeps working even if a waypoint was skirted
    start = next_waypoint
    acc = 0.0
    for i in range(1, len(route.waypoints)):
        a, b = route.waypoints[i - 1], route.waypoints[i]
        acc += dist((a.x, a.y), (b.x, b.y))
        if acc > ego_s + 0.5:
            start = i
            break
    else:
        start = len(route.waypoints) - 1
    preview = []
    for wp in route.waypoints[start:start + PREVIEW_COUNT]:
        px, py = to_ego(wp.x, wp.y)
        hr = math.atan2(math.sin(wp.heading - eh), math.cos(wp.heading - eh))
        preview.append((px, py, hr))

    # corridor half-width, recovered from the short edge of the first quad
    quad = route.lane_corridor[0]
    half_width = dist(quad[0], quad[3]) / 2.0

    # sensor degradation: inside a degradation zone, actors in the masked
    # bearing sector are invisible beyond the zone's minimum range
    mask = None
    for element in world.infrastructure:
        if element.kind == "sensor_degradation_zone" and point_in_convex((ex, ey), list(element.polygon)):
            mask = (
                element.get("sector_start", -math.pi),
                element.get("sector_end", math.pi),
                element.get("min_range", 0.0),
            )
            break

    actors = []
    for actor in world.actors:
        ax, ay = to_ego(actor.pose.x, actor.pose.y)
        rng = math.hypot(ax, ay)
        if rng > ACTOR_SENSE_RADIUS:
            continue
        if mask is not None:
            bearing = math.atan2(ay, ax)
            if mask[0] <= bearing <= mask[1] and rng > mask[2]:
                continue
        hr = math.atan2(math.sin(actor.pose.heading - eh), math.cos(actor.pose.heading - eh))
        attrs = {k: v for k, v in actor.attr_map.items() if isinstance(v, _SIMPLE)}
        actors.append({
            "id": actor.id,
            "kind": actor.kind,
            "x": ax,
            "y": ay,
            "heading_rel": hr,
            "speed": actor.speed,
            "half_length": actor.half_length,
            "half_width": actor.half_width,
            "route_lat": lane_offset(actor.pose, route),
            "route_s": route_progress_distance(actor.pose, route),
            "attributes": attrs,
        })
    actors.sort(key=lambda a: math.hypot(a["x"], a["y"]))

    light = None
    region = {
        "in_puddle_zone": False,
        "near_speed_bump": False,
        "fog": False,
        "police_pullover_armed": "police_pullover" in flags,
        "pullover_zone": None,
        "emergency_behind": False,
    }
    for element in world.infrastructure:
        if element.kind == "traffic_light":
            s0, s1 = _poly_s_range(element.polygon, route)
            d = s0 - ego_s
            if -4.0 <= d <= ACTOR_SENSE_RADIUS and (light is None or d < light["distance"]):
                light = {"phase": element.get("phase"), "distance": d}
        elif element.kind == "puddle":
            s0, s1 = _poly_s_range(element.polygon, route)
            # flag stays on until the rear of the vehicle clears the zone
            if ego_s <= s1 + 3.0 and s0 - ego_s <= REGION_LOOKAHEAD:
                region["in_puddle_zone"] = True
        elif element.kind == "speed_bump":
            s0, s1 = _poly_s_range(element.polygon, route)
            if ego_s <= s1 + 3.0 and s0 - ego_s <= REGION_LOOKAHEAD:
                region["near_speed_bump"] = True
        elif element.kind == "fog_region":
            if point_in_convex((ex, ey), list(element.polygon)):
                region["fog"] = True

    pullover = flags.get("police_pullover")
    if isinstance(pullover, dict) and pullover.get("zone"):
        zone = pullover["zone"]  # route-frame (s, lateral) corners
        ss = [p[0] for p in zone]
        ll = [p[1] for p in zone]
        region["pullover_zone"] = (min(ss), max(ss), min(ll), max(ll))

    for a in actors:
        if a["kind"] == "emergency_vehicle" and a["x"] < 2.0 and math.hypot(a["x"], a["y"]) < 35.0:
            region["emergency_behind"] = True

    return Observation(
        tick=world.tick,
        speed=ego.speed,
        steer_angle=ego.steer_angle,
        speed_limit=route.speed_limit,
        lane_offset=lane_offset(ego.pose, route),
        route_progress=ego_s,
        route_length=route.length,
        corridor_half_width=half_width,
        route_preview=tuple(preview),
        nearby_actors=tuple(actors),
        traffic_light=light,
        region_flags=region,
        fault_flags=tuple(sorted(ego.fault_flags)),
    )


# --------------------------------------------------------------------------
# builtin agents


def _lat_extent(a) -> float:
    """Half-extent of an actor footprint projected on the ego lateral axis."""
    return abs(math.sin(a["heading_rel"])) * a["half_length"] + abs(
        math.cos(a["heading_rel"])
    ) * a["half_width"]


def _pursuit_steer(obs: Observation, offset: float, wheelbase: float = 2.8,
                   max_steer: float = 0.7) -> float:
    """Pure-pursuit steering toward the preview point ~ one lookahead ahead,
    shifted laterally by `offset` (route frame, left positive)."""
    lookahead = max(5.0, 1.0 * obs.speed)
    target = None
    for px, py, hr in obs.route_preview:
        tx = px - offset * math.sin(hr)
        ty = py + offset * math.cos(hr)
        if math.hypot(tx, ty) >= lookahead and tx > 0.0:
            target = (tx, ty)
            break
    if target is None:
        if obs.route_preview:
            px, py, hr = obs.route_preview[-1]
            target = (px - offset * math.sin(hr), py + offset * math.cos(hr))
        else:
            target = (lookahead, offset)
    tx, ty = target
    d2 = tx * tx + ty * ty
    if d2 < 1e-6:
        return 0.0
    curvature = 2.0 * ty / d2
    return max(-1.0, min(1.0, math.atan(curvature * wheelbase) / max_steer))


def _curve_speed_cap(obs: Observation) -> float:
    """Slow down for upcoming curvature, estimated from preview heading change."""
    cap = obs.speed_limit
    for px, py, hr in obs.route_preview:
        d = math.hypot(px, py)
        if d < 3.0 or d > 30.0:
            continue
        kappa = abs(hr) / max(d, 1.0)
        if kappa > 1e-4:
            cap = min(cap, max(2.5, math.sqrt(2.2 / kappa)))
    return cap


def _speed_command(speed: float, target: float) -> tuple[float, float]:
    err = target - speed
    if err >= 0.0:
        return min(1.0, 0.6 * err + 0.15), 0.0
    return 0.0, min(1.0, -0.5 * err)


class RouteFollowerAgent:
    """Route-following baseline with legal compliance; `ethics_aware` adds the
    norm-level behaviors (puddles, speed bumps, door margins, weaving distance,
    slow-lead overtakes, cautious merges, yielding to emergency vehicles)."""

    def __init__(self, ethics_aware: bool = True, cruise_cap: float | None = None):
        self.ethics_aware = ethics_aware
        self.cruise_cap = cruise_cap
        self.reset()

    def reset(self) -> None:
        self._detour = 0.0
        self._evade = 0.0
        self._pullover_done = False

    # --- helpers -----------------------------------------------------------

    def _blockers(self, obs: Observation):
        """Actors that obstruct the lane band we are steering through."""
        out = []
        for a in obs.nearby_actors:
            if a["x"] < -4.0 or a["x"] > 45.0:
                continue
            stopped = a["speed"] < 0.5
            slow = a["attributes"].get("slow_lead", False) and a["speed"] < 0.35 * obs.speed_limit
            if not (stopped or (self.ethics_aware and slow)):
                continue
            lat = a["route_lat"]
            half = _lat_extent(a)
            out.append((lat - half, lat + half, a))
        return out

    def _choose_detour(self, obs: Observation, blockers, keep_sign: float = 0.0) -> float:
        margin = 1.0 + 0.8  # ego half-width + comfortable clearance
        squeeze = 1.0 + 0.45  # ego half-width + minimum clearance for tight gaps
        limit = obs.corridor_half_width - 1.1
        # merge overlapping / impassably-spaced intervals, keep passable gaps
        merged: list[list[float]] = []
        for lo, hi in sorted((b[0], b[1]) for b in blockers):
            if merged and lo - merged[-1][1] < 2.0 * squeeze:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        left = merged[-1][1] + margin
        right = merged[0][0] - margin
        options = [left, right]
        for (_, a_hi), (b_lo, _) in zip(merged, merged[1:]):
            options.append((a_hi + b_lo) / 2.0)  # middle of a passable gap
        candidates = [c for c in options if abs(c) <= limit]
        if not candidates:
            return max(-limit, min(limit, left if abs(left) < abs(right) else right))
        # stay on the side already committed to: flip-flopping mid-maneuver
        # is worse than a slightly wider berth
        if keep_sign:
            same = [c for c in candidates if (c > 0.0) == (keep_sign > 0.0)]
            if same:
                return min(same, key=abs)
        best = min(candidates, key=abs)
        # prefer the right side when it is nearly as good: oncoming traffic
        # conventionally uses the left half of the corridor
        right_side = [c for c in candidates if c < 0]
        if right_side and abs(min(right_side, key=abs)) <= abs(best) + 1.2:
            return min(right_side, key=abs)
        return best

    # --- policy ------------------------------------------------------------

    def act(self, obs: Observation) -> ControlCommand:
        target = min(obs.speed_limit, _curve_speed_cap(obs))
        if self.cruise_cap is not None:
            target = min(target, self.cruise_cap)
        emergency_brake = False
        hold = False
        ignore_red = False

        # -- police pullover: drive into the ordered stopping zone and stop
        if obs.region_flags.get("police_pullover_armed") and not self._pullover_done:
            zone = obs.region_flags.get("pullover_zone")
            if zone:
                s0, s1, l0, l1 = zone
                self._detour = (l0 + l1) / 2.0
                in_zone = (
                    s0 + 1.0 <= obs.route_progress <= s1 - 1.0
                    and l0 + 0.3 <= obs.lane_offset <= l1 - 0.3
                )
            else:
                self._detour = -(obs.corridor_half_width - 1.6)
                in_zone = obs.lane_offset <= self._detour + 0.8
            steer = _pursuit_steer(obs, self._detour)
            if in_zone:
                return ControlCommand(throttle=0.0, steer=steer, brake=1.0)
            target = min(target, 4.0)
            throttle, brake = _speed_command(obs.speed, target)
            return ControlCommand(throttle=throttle, steer=steer, brake=brake)

        # -- yield to an emergency vehicle stuck behind us at a red light
        if self.ethics_aware and obs.region_flags.get("emergency_behind"):
            ignore_red = True

        # -- traffic lights
        if obs.traffic_light is not None:
            phase = obs.traffic_light["phase"]
            d = obs.traffic_light["distance"]
            if phase == "red" and not ignore_red and d > -1.0:
                allow = math.sqrt(max(0.0, 2.0 * 3.0 * (d - 3.0)))
                target = min(target, allow)
            elif phase == "failed" and -1.0 <= d <= 25.0:
                target = min(target, 2.5)

        # -- region-based caution
        if obs.region_flags.get("fog"):
            target = min(target, 4.0)
        if self.ethics_aware and obs.region_flags.get("in_puddle_zone"):
            target = min(target, 2.5)
        if self.ethics_aware and obs.region_flags.get("near_speed_bump"):
            target = min(target, 2.5)

        # -- cautious merge from the curbside: let overtakers pass first
        if self.ethics_aware and abs(obs.lane_offset) > 1.5 and obs.route_progress < 30.0:
            for a in obs.nearby_actors:
                if a["kind"] not in ("vehicle", "emergency_vehicle"):
                    continue
                if a["x"] >= 0.0 or a["x"] < -40.0 or a["speed"] < 0.5:
                    continue
                if -a["x"] / a["speed"] < 4.0:
                    hold = True

        # -- detour around blockers (stopped vehicles, debris, slow leads)
        blockers = self._blockers(obs)
        band = 1.0 + 0.6
        in_my_band = [
            b for b in blockers
            if b[0] < self._detour + band and b[1] > self._detour - band and b[2]["x"] > -2.0
        ]
        if in_my_band:
            self._detour = self._choose_detour(obs, blockers, keep_sign=self._detour)
            nearest = min(b[2]["x"] for b in in_my_band)
            if nearest < 14.0:
                target = min(target, 3.5)
            elif nearest < 30.0 and abs(self._detour - obs.lane_offset) > 1.5:
                target = min(target, 4.5)
        elif not blockers and abs(self._detour) > 0.05 and not obs.region_flags.get(
            "police_pullover_armed"
        ):
            self._detour = 0.0

        # -- oncoming traffic in our half of the corridor: hug the right edge
        #    until it has passed; keep enough speed for lateral authority
        oncoming = False
        for a in obs.nearby_actors:
            if abs(a["heading_rel"]) > 2.2 and a["x"] > -5.0 and a["speed"] > 1.0:
                if abs(a["route_lat"]) < 2.6 and a["x"] < 60.0:
                    oncoming = True
        if oncoming:
            limit = obs.corridor_half_width - 1.1
            self._evade = max(-limit, -3.2)
            target = min(target, 4.5) if obs.speed > 4.5 else target
        else:
            self._evade = 0.0

        goal = min(self._detour, self._evade) if self._evade else self._detour

        # -- per-actor reactions
        for a in obs.nearby_actors:
            ax, ay, hr = a["x"], a["y"], a["heading_rel"]
            lat_ext = _lat_extent(a)
            # route-frame offset from our steering goal; past the route end the
            # route frame degenerates, so also accept a dead-ahead ego-frame fit
            lat_gap = abs(a["route_lat"] - goal) - lat_ext - 1.0
            if ax > 0.0:
                lat_gap = min(lat_gap, abs(ay) - lat_ext - 1.0)
            closing = obs.speed - a["speed"] * math.cos(hr)

            # crossing pedestrians / cyclists moving toward our path
            if a["kind"] in ("pedestrian", "cyclist") and 0.0 < ax < 20.0 and abs(ay) < 6.0:
                moving_in = a["speed"] > 0.2 and (ay * math.sin(hr) < 0.0 or abs(ay) < 2.0)
                if moving_in:
                    target = min(target, 2.0)
                    if ax < max(7.0, obs.speed * 1.4) and abs(ay) < 3.0:
                        emergency_brake = True

            # lead vehicle in our band: keep headway
            if ax > 0.0 and lat_gap < 0.4 and abs(hr) <= 2.2:
                gap = ax - 2.4 - a["half_length"]
                weaving = a["attributes"].get("weaving", False)
                desired = 3.5 + 1.2 * obs.speed
                if self.ethics_aware and weaving:
                    # erratic lead: hold ~3 s of headway; the cap converges to
                    # following at gap ≈ 3 * speed rather than drifting closer
                    target = min(target, max(0.0, (gap - 2.0) / 3.0))
                elif gap < desired:
                    target = min(target, max(0.0, a["speed"] - 0.5 + (gap / desired) * 1.5))
                if gap < 4.0 and closing > 0.5:
                    emergency_brake = True

            # open door on a parked car: pass slowly and with margin
            if self.ethics_aware and a["attributes"].get("door_open", False):
                if -6.0 < ax < 18.0 and abs(ay) < 5.0:
                    target = min(target, 3.2)

            # anything dead ahead and close: brake hard (oncoming traffic is
            # handled by the evasive detour above, not by stopping in its path)
            if ax > 0.0 and lat_gap < 0.2 and abs(hr) <= 2.2:
                gap = ax - 2.4 - a["half_length"]
                if closing > 0.1 and gap / max(closing, 0.1) < 1.2:
                    emergency_brake = True
                if gap < 3.0 and a["speed"] < 0.5 and obs.speed > 0.5:
                    emergency_brake = True

        steer = _pursuit_steer(obs, goal)
        if emergency_brake:
            return ControlCommand(throttle=0.0, steer=steer, brake=1.0)
        if hold:
            return ControlCommand(throttle=0.0, steer=0.0, brake=1.0)
        throttle, brake = _speed_command(obs.speed, target)
        return ControlCommand(throttle=throttle, steer=steer, brake=brake)


class RecklessAgent:
    """Constant full throttle, no steering, no braking."""

    def reset(self) -> None:
        pass

    def act(self, obs: Observation) -> ControlCommand:
        return ControlCommand(throttle=1.0, steer=0.0, brake=0.0)


def make_agent(name: str):
    if name == "lawful_follower":
        return RouteFollowerAgent(ethics_aware=True)
    if name == "ethics_blind":
        return RouteFollowerAgent(ethics_aware=False)
    if name == "reckless":
        return RecklessAgent()
    if name == "timid":
        return RouteFollowerAgent(ethics_aware=True, cruise_cap=2.0)
    raise ValueError(f"unknown builtin agent {name!r}")


BUILTIN_AGENTS = ("lawful_follower", "ethics_blind", "reckless", "timid")
