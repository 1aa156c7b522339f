"""Sample policies for the wire protocol.

`LawfulFollowerPolicy` mirrors the server's built-in lawful route follower
operation-for-operation so that an evaluation over the wire reproduces the
in-process baseline bit-exactly; `full_throttle_policy` mirrors the built-in
constant-full-throttle baseline. Both consume raw observation dicts as they
arrive from the server and return action dicts.
"""

from __future__ import annotations

import math


class ObservationView:
    """Attribute view over a wire observation dict."""

    __slots__ = ("tick", "speed", "steer_angle", "speed_limit", "lane_offset",
                 "route_progress", "route_length", "corridor_half_width",
                 "route_preview", "nearby_actors", "traffic_light",
                 "region_flags", "fault_flags")

    def __init__(self, d: dict):
        self.tick = d["tick"]
        self.speed = d["speed"]
        self.steer_angle = d["steer_angle"]
        self.speed_limit = d["speed_limit"]
        self.lane_offset = d["lane_offset"]
        self.route_progress = d["route_progress"]
        self.route_length = d["route_length"]
        self.corridor_half_width = d["corridor_half_width"]
        self.route_preview = tuple(tuple(p) for p in d["route_preview"])
        self.nearby_actors = tuple(d["nearby_actors"])
        self.traffic_light = d["traffic_light"]
        self.region_flags = d["region_flags"]
        self.fault_flags = tuple(d["fault_flags"])


def _lat_extent(a) -> float:
    """Half-extent of an actor footprint projected on the ego lateral axis."""
    return abs(math.sin(a["heading_rel"])) * a["half_length"] + abs(
        math.cos(a["heading_rel"])
    ) * a["half_width"]


def _pursuit_steer(obs, offset: float, wheelbase: float = 2.8,
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


def _curve_speed_cap(obs) -> float:
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


class LawfulFollowerPolicy:
    """Route follower with legal compliance and norm-level behaviors, matching
    the server's built-in baseline of the same character."""

    def __init__(self):
        self.ethics_aware = True
        self.cruise_cap = None
        self.reset()

    def reset(self) -> None:
        self._detour = 0.0
        self._evade = 0.0
        self._pullover_done = False

    # --- helpers -----------------------------------------------------------

    def _blockers(self, obs):
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

    def _choose_detour(self, obs, blockers, keep_sign: float = 0.0) -> float:
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

    def act(self, obs) -> dict:
        target = min(obs.speed_limit, _curve_speed_cap(obs))
        if self.cruise_cap is not None:
            target = min(target, self.cruise_cap)
        emergency_brake = False
        hold = False
        ignore_red = False

        def command(throttle, steer, brake, hand_brake=False):
            return {"throttle": throttle, "steer": steer, "brake": brake,
                    "hand_brake": hand_brake}

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
                return command(0.0, steer, 1.0)
            target = min(target, 4.0)
            throttle, brake = _speed_command(obs.speed, target)
            return command(throttle, steer, brake)

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
            return command(0.0, steer, 1.0)
        if hold:
            return command(0.0, 0.0, 1.0)
        throttle, brake = _speed_command(obs.speed, target)
        return command(throttle, steer, brake)

    def __call__(self, observation: dict) -> dict:
        return self.act(ObservationView(observation))


def lawful_follower_policy():
    """Fresh stateful lawful-follower callable for one episode."""
    return LawfulFollowerPolicy()


def full_throttle_policy(observation: dict) -> dict:
    """Constant full throttle, no steering, no braking."""
    return {"throttle": 1.0, "steer": 0.0, "brake": 0.0, "hand_brake": False}
