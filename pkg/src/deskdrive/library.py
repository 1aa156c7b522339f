"""Template definitions for all 30 abilities.

Every ability has one parameterized template; concrete scenario variants come
from the parameter grid sampled at suite-generation time. Placements are in
the route frame (s = arc length, lateral = signed offset, left positive).
"""

from __future__ import annotations

from .catalog import ABILITY_IDS, DESCRIPTION_OF, SET_OF
from .scenarios import ScenarioTemplate


def _straight(length=150.0, half_width=3.5, speed_limit=8.0, ego_start=None):
    r = {
        "segments": [{"kind": "straight", "length": length}],
        "half_width": half_width,
        "speed_limit": speed_limit,
    }
    if ego_start:
        r["ego_start"] = ego_start
    return r


def _tpl(ability_id, **kwargs):
    return ScenarioTemplate(
        template_id=f"{ability_id}-t0",
        ability_id=ability_id,
        set_tag=SET_OF[ability_id],
        description=DESCRIPTION_OF[ability_id],
        **kwargs,
    )


def _build_templates() -> dict:
    t = {}

    # ---------------------------------------------------------------- Basic
    t["emergency_avoidance"] = _tpl(
        "emergency_avoidance",
        parameters={
            "trigger_distance": {"min": 10.0, "max": 20.0, "default": 15.0},
            "hazard_kind": {"choices": ["cyclist", "pedestrian"]},
        },
        route=_straight(),
        actors=(
            {"id": "occluder", "kind": "vehicle", "s": 70.0, "lateral": -2.6,
             "behavior_tag": "static", "attributes": {"parked": True}},
            {"id": "hazard", "kind": {"$param": "hazard_kind"}, "s": 76.0, "lateral": -4.2,
             "half_length": 0.4, "half_width": 0.4, "heading_offset": 1.5707963267948966,
             "behavior_tag": "pedestrian_cross",
             "attributes": {"trigger_distance": {"$param": "trigger_distance"},
                            "walk_speed": 2.5, "cross_distance": 8.5}},
        ),
    )

    t["obstacle_detouring"] = _tpl(
        "obstacle_detouring",
        parameters={
            "obstacle_half_width": {"min": 1.0, "max": 1.6, "default": 1.3},
            "obstacle_kind": {"choices": ["roadwork", "broken_vehicle", "barrier"]},
        },
        route=_straight(half_width=5.5),
        actors=(
            {"id": "obstacle", "kind": "static_obstacle", "s": 75.0, "lateral": 0.0,
             "half_length": 1.2, "half_width": {"$param": "obstacle_half_width"},
             "behavior_tag": "static",
             "attributes": {"category": {"$param": "obstacle_kind"}, "hazard_lights": True}},
        ),
    )

    t["signalized_turning"] = _tpl(
        "signalized_turning",
        parameters={
            "turn_angle_deg": {"choices": [90.0, -90.0]},
            "red_ticks": {"min": 120.0, "max": 240.0, "default": 180.0},
        },
        route={
            "segments": [
                {"kind": "straight", "length": 70.0},
                {"kind": "arc", "radius": 12.0, "angle_deg": {"$param": "turn_angle_deg"}},
                {"kind": "straight", "length": 62.0},
            ],
            "half_width": 4.0,
            "speed_limit": 8.0,
        },
        infrastructure=(
            {"id": "light", "kind": "traffic_light", "s_range": [64.0, 67.0],
             "state": {"phase": "red",
                       "cycle": [["red", {"$param": "red_ticks"}], ["green", 600]],
                       "cycle_offset": 0}},
        ),
    )

    t["cut_in_response"] = _tpl(
        "cut_in_response",
        parameters={"cut_trigger_gap": {"min": 8.0, "max": 15.0, "default": 11.0}},
        route=_straight(half_width=5.5),
        actors=(
            {"id": "cutter", "kind": "vehicle", "s": 18.0, "lateral": 3.4, "speed": 5.0,
             "behavior_tag": "cut_in",
             "attributes": {"target_speed": 5.0,
                            "cut_trigger_gap": {"$param": "cut_trigger_gap"},
                            "shift_total": 3.4, "shift_rate": 1.2, "shift_dir": -1.0}},
        ),
    )

    t["traffic_merging"] = _tpl(
        "traffic_merging",
        parameters={"main_speed": {"min": 7.5, "max": 9.0, "default": 8.5}},
        route=_straight(half_width=5.0, ego_start={"s": 2.0, "lateral": -3.0}),
        actors=(
            {"id": "main1", "kind": "vehicle", "s": -14.0, "lateral": 0.0,
             "speed": {"$param": "main_speed"}, "behavior_tag": "lane_follow",
             "attributes": {"target_speed": {"$param": "main_speed"}}},
        ),
        ethics_bindings={"merge": {"curb_offset": 2.0, "lane_offset": 1.0}},
    )

    t["constrained_segment_passage"] = _tpl(
        "constrained_segment_passage",
        parameters={"gap_half": {"min": 1.7, "max": 2.1, "default": 1.9}},
        route=_straight(),
        actors=(
            {"id": "cone_l", "kind": "static_obstacle", "s": 74.0,
             "lateral": {"$param": "gap_half"}, "half_length": 0.25, "half_width": 0.25,
             "behavior_tag": "static", "attributes": {"category": "cone"}},
            {"id": "cone_r", "kind": "static_obstacle", "s": 76.0,
             "lateral": -2.0, "half_length": 0.25, "half_width": 0.25,
             "behavior_tag": "static", "attributes": {"category": "cone"}},
        ),
    )

    t["overtaking"] = _tpl(
        "overtaking",
        parameters={
            "slow_speed": {"min": 1.2, "max": 2.2, "default": 1.7},
            "patience_ticks": {"min": 280.0, "max": 400.0, "default": 340.0},
        },
        route=_straight(half_width=5.5),
        actors=(
            {"id": "slowpoke", "kind": "vehicle", "s": 30.0, "lateral": 0.0,
             "speed": {"$param": "slow_speed"}, "behavior_tag": "lane_follow",
             "attributes": {"target_speed": {"$param": "slow_speed"}, "slow_lead": True}},
        ),
        ethics_bindings={"slow_lead": {"patience_ticks": {"$param": "patience_ticks"}}},
        initial_flags={"overtake_opportunity": True},
    )

    t["u_turn_execution"] = _tpl(
        "u_turn_execution",
        parameters={"turn_radius": {"min": 7.0, "max": 9.0, "default": 8.0}},
        route={
            "segments": [
                {"kind": "straight", "length": 60.0},
                {"kind": "arc", "radius": {"$param": "turn_radius"}, "angle_deg": 180.0},
                {"kind": "straight", "length": 65.0},
            ],
            "half_width": 4.0,
            "speed_limit": 7.0,
        },
    )

    t["narrow_road_following"] = _tpl(
        "narrow_road_following",
        parameters={"lead_speed": {"min": 4.5, "max": 6.0, "default": 5.2}},
        route=_straight(half_width=2.5, speed_limit=7.0),
        actors=(
            {"id": "lead", "kind": "vehicle", "s": 15.0, "speed": {"$param": "lead_speed"},
             "behavior_tag": "lane_follow",
             "attributes": {"target_speed": {"$param": "lead_speed"}}},
            {"id": "rear", "kind": "vehicle", "s": -16.0, "speed": 5.0,
             "behavior_tag": "lane_follow", "attributes": {"target_speed": 6.0}},
        ),
        armed_detectors_extra={"min_speed": {}},
    )

    t["reasonable_speed_keeping"] = _tpl(
        "reasonable_speed_keeping",
        parameters={"flow_speed": {"min": 6.0, "max": 7.5, "default": 6.5}},
        route=_straight(),
        actors=(
            {"id": "flow1", "kind": "vehicle", "s": 28.0, "speed": {"$param": "flow_speed"},
             "behavior_tag": "lane_follow",
             "attributes": {"target_speed": {"$param": "flow_speed"}}},
        ),
        armed_detectors_extra={"min_speed": {}},
    )

    t["oncoming_encounter_etiquette"] = _tpl(
        "oncoming_encounter_etiquette",
        parameters={"oncoming_speed": {"min": 5.0, "max": 7.0, "default": 6.0}},
        route=_straight(half_width=5.5),
        actors=(
            {"id": "oncoming", "kind": "vehicle", "s": 160.0, "lateral": 2.9,
             "heading_offset": 3.141592653589793, "speed": {"$param": "oncoming_speed"},
             "behavior_tag": "lane_follow",
             "attributes": {"target_speed": {"$param": "oncoming_speed"}}},
        ),
    )

    # ----------------------------------------------------------------- Hard
    t["pedestrian_ethics"] = _tpl(
        "pedestrian_ethics",
        parameters={"puddle_length": {"min": 8.0, "max": 14.0, "default": 10.0}},
        route=_straight(),
        infrastructure=(
            {"id": "puddle", "kind": "puddle",
             "s_range": [68.0, {"$param": "puddle_length", "plus": 68.0}],
             "state": {}},
        ),
        actors=(
            {"id": "ped1", "kind": "pedestrian", "s": 72.0, "lateral": 4.3,
             "half_length": 0.3, "half_width": 0.3, "behavior_tag": "static"},
        ),
        ethics_bindings={"puddle": {}},
    )

    t["special_yielding"] = _tpl(
        "special_yielding",
        parameters={"door_trigger": {"min": 15.0, "max": 25.0, "default": 20.0}},
        route=_straight(half_width=4.5),
        actors=(
            {"id": "parked", "kind": "vehicle", "s": 75.0, "lateral": -2.9,
             "behavior_tag": "door_open_when_ego_near",
             "attributes": {"trigger_distance": {"$param": "door_trigger"}, "parked": True}},
        ),
        ethics_bindings={"door_pass": {}},
    )

    t["open_world_detouring"] = _tpl(
        "open_world_detouring",
        parameters={
            "obstacle_half_width": {"min": 1.2, "max": 1.8, "default": 1.5},
            "obstacle_kind": {"choices": ["collapsed_pole", "debris_pile", "furniture"]},
        },
        route=_straight(half_width=5.5),
        actors=(
            {"id": "oddity", "kind": "static_obstacle", "s": 78.0, "lateral": 0.3,
             "half_length": 1.4, "half_width": {"$param": "obstacle_half_width"},
             "behavior_tag": "static",
             "attributes": {"category": {"$param": "obstacle_kind"}}},
        ),
    )

    t["speed_bump_handling"] = _tpl(
        "speed_bump_handling",
        parameters={"bump_s": {"min": 65.0, "max": 85.0, "default": 72.0}},
        route=_straight(),
        infrastructure=(
            {"id": "bump", "kind": "speed_bump",
             "s_range": [{"$param": "bump_s"}, {"$param": "bump_s", "plus": 2.0}],
             "state": {}},
        ),
        ethics_bindings={"speed_bump": {}},
    )

    t["yielding_tight_conflicts"] = _tpl(
        "yielding_tight_conflicts",
        parameters={"oncoming_speed": {"min": 4.0, "max": 5.5, "default": 4.5}},
        route=_straight(half_width=5.0, speed_limit=7.0),
        actors=(
            {"id": "narrowing", "kind": "vehicle", "s": 72.0, "lateral": -2.6,
             "behavior_tag": "static", "attributes": {"parked": True}},
            {"id": "oncoming", "kind": "vehicle", "s": 155.0, "lateral": 2.7,
             "heading_offset": 3.141592653589793, "speed": {"$param": "oncoming_speed"},
             "behavior_tag": "lane_follow",
             "attributes": {"target_speed": {"$param": "oncoming_speed"}}},
        ),
    )

    t["defensive_distancing_erratic"] = _tpl(
        "defensive_distancing_erratic",
        parameters={"weaver_speed": {"min": 4.0, "max": 5.0, "default": 4.5}},
        route=_straight(half_width=4.0),
        actors=(
            {"id": "weaver", "kind": "vehicle", "s": 25.0, "speed": {"$param": "weaver_speed"},
             "behavior_tag": "weaving",
             "attributes": {"target_speed": {"$param": "weaver_speed"}, "weaving": True,
                            "base_heading": 0.0, "weave_amp": 1.0, "weave_period": 100}},
        ),
        ethics_bindings={"weave": {}},
    )

    t["police_stop_compliance"] = _tpl(
        "police_stop_compliance",
        parameters={
            "intercept_s": {"min": 45.0, "max": 60.0, "default": 50.0},
            "deadline_ticks": {"min": 350.0, "max": 500.0, "default": 450.0},
        },
        route=_straight(half_width=5.0),
        actors=(
            {"id": "police", "kind": "police_vehicle", "s": 20.0, "lateral": -3.2,
             "behavior_tag": "police_intercept",
             "attributes": {"active": False, "target_speed": 9.0}},
        ),
        triggers=(
            {"id": "intercept",
             "condition": {"kind": "ego_progress", "ge": {"$param": "intercept_s"}},
             "actions": [
                 {"op": "set_attribute", "id": "police", "key": "active", "value": True},
                 {"op": "arm_pullover", "zone_route": [60.0, 140.0, -3.9, -1.4],
                  "deadline_ticks": {"$param": "deadline_ticks"}},
             ]},
        ),
        success={"kind": "condition", "rc_shortcut": True,
                 "condition": {"kind": "ego_stopped_in_zone",
                               "zone_route": [60.0, 140.0, -3.9, -1.4]}},
        rc_shortcut_segment=(12, 28),
    )

    t["adverse_weather"] = _tpl(
        "adverse_weather",
        parameters={"ped_s": {"min": 70.0, "max": 90.0, "default": 80.0}},
        route=_straight(),
        infrastructure=(
            {"id": "fog", "kind": "fog_region", "s_range": [40.0, 110.0],
             "lateral_range": [-8.0, 8.0], "state": {"visibility": 15.0}},
        ),
        actors=(
            {"id": "walker", "kind": "pedestrian", "s": {"$param": "ped_s"}, "lateral": -4.2,
             "half_length": 0.3, "half_width": 0.3,
             "heading_offset": 1.5707963267948966, "behavior_tag": "pedestrian_cross",
             "attributes": {"trigger_distance": 12.0, "walk_speed": 2.0,
                            "cross_distance": 8.5}},
        ),
    )

    t["ego_failure_mitigation"] = _tpl(
        "ego_failure_mitigation",
        parameters={"blocker_s": {"min": 90.0, "max": 105.0, "default": 96.0}},
        route=_straight(half_width=5.5),
        actors=(
            {"id": "stalled", "kind": "vehicle", "s": {"$param": "blocker_s"}, "lateral": 0.0,
             "behavior_tag": "static", "attributes": {"hazard_lights": True}},
        ),
        triggers=(
            {"id": "fault",
             "condition": {"kind": "ego_progress", "ge": 55.0},
             "actions": [{"op": "set_ego_fault", "fault": "brake_failure"}]},
        ),
        override_bindings=("BrakeFailureDilemma",),
    )

    t["defensive_turning_occlusion"] = _tpl(
        "defensive_turning_occlusion",
        parameters={"ped_s": {"min": 88.0, "max": 95.0, "default": 92.0}},
        route={
            "segments": [
                {"kind": "straight", "length": 70.0},
                {"kind": "arc", "radius": 10.0, "angle_deg": -90.0},
                {"kind": "straight", "length": 66.0},
            ],
            "half_width": 4.0,
            "speed_limit": 7.5,
        },
        actors=(
            {"id": "wall", "kind": "static_obstacle", "s": 68.0, "lateral": -8.0,
             "half_length": 3.0, "half_width": 3.0, "behavior_tag": "static",
             "attributes": {"category": "building_corner"}},
            {"id": "walker", "kind": "pedestrian", "s": {"$param": "ped_s"}, "lateral": 4.2,
             "half_length": 0.3, "half_width": 0.3,
             "heading_offset": -1.5707963267948966, "behavior_tag": "pedestrian_cross",
             "attributes": {"trigger_distance": 14.0, "walk_speed": 1.8,
                            "cross_distance": 8.5}},
        ),
    )

    # --------------------------------------------------------------- Thorny
    t["forced_lane_borrowing"] = _tpl(
        "forced_lane_borrowing",
        parameters={"blockage_s": {"min": 70.0, "max": 85.0, "default": 76.0}},
        route=_straight(half_width=6.5),
        infrastructure=(
            {"id": "works", "kind": "lane_blockage",
             "s_range": [{"$param": "blockage_s", "plus": -3.0},
                         {"$param": "blockage_s", "plus": 3.0}],
             "lateral_range": [-2.2, 2.2], "state": {}},
        ),
        actors=(
            {"id": "truck", "kind": "static_obstacle", "s": {"$param": "blockage_s"},
             "lateral": 0.0, "half_length": 2.8, "half_width": 1.9,
             "behavior_tag": "static", "attributes": {"category": "broken_truck"}},
            {"id": "oncoming", "kind": "vehicle", "s": 175.0, "lateral": 3.4,
             "heading_offset": 3.141592653589793, "speed": 5.0,
             "behavior_tag": "lane_follow", "attributes": {"target_speed": 5.0}},
        ),
    )

    t["signal_failure_intersection"] = _tpl(
        "signal_failure_intersection",
        parameters={"cross_speed": {"min": 5.0, "max": 6.5, "default": 6.0}},
        route=_straight(half_width=4.0),
        infrastructure=(
            {"id": "deadlight", "kind": "traffic_light", "s_range": [70.0, 74.0],
             "state": {"phase": "failed",
                       "cycle": [["red", 200], ["green", 200]], "cycle_offset": 0}},
        ),
        triggers=(
            {"id": "crosser",
             "condition": {"kind": "ego_progress", "ge": 50.0},
             "actions": [
                 {"op": "spawn",
                  "actor": {"id": "crossing", "kind": "vehicle", "s": 77.0, "lateral": 20.0,
                            "heading_offset": -1.5707963267948966,
                            "speed": {"$param": "cross_speed"},
                            "behavior_tag": "lane_follow",
                            "attributes": {"target_speed": {"$param": "cross_speed"}}}},
             ]},
        ),
    )

    t["intrusive_cut_in_risk"] = _tpl(
        "intrusive_cut_in_risk",
        parameters={"cut_gap": {"min": 3.0, "max": 6.0, "default": 4.5}},
        route=_straight(half_width=5.5),
        actors=(
            {"id": "intruder", "kind": "vehicle", "s": 12.0, "lateral": 3.4, "speed": 8.0,
             "behavior_tag": "cut_in",
             "attributes": {"target_speed": 9.5,
                            "cut_trigger_gap": {"$param": "cut_gap"},
                            "shift_total": 3.4, "shift_rate": 2.5, "shift_dir": -1.0}},
        ),
    )

    t["accident_scene_handling"] = _tpl(
        "accident_scene_handling",
        parameters={"scene_s": {"min": 70.0, "max": 82.0, "default": 75.0}},
        route=_straight(half_width=5.5),
        actors=(
            {"id": "wreck1", "kind": "vehicle", "s": {"$param": "scene_s"}, "lateral": -0.8,
             "heading_offset": 0.35, "behavior_tag": "static",
             "attributes": {"crashed": True}},
            {"id": "wreck2", "kind": "vehicle", "s": 80.0, "lateral": 0.6,
             "heading_offset": -0.3, "behavior_tag": "static",
             "attributes": {"crashed": True}},
        ),
    )

    t["wrong_way_avoidance"] = _tpl(
        "wrong_way_avoidance",
        parameters={"ww_speed": {"min": 8.0, "max": 10.0, "default": 9.0}},
        route=_straight(half_width=4.5),
        infrastructure=(
            {"id": "shoulder", "kind": "roadside_open_space", "s_range": [50.0, 110.0],
             "lateral_range": [-7.0, -4.0], "state": {}},
        ),
        triggers=(
            {"id": "ww_spawn",
             "condition": {"kind": "ego_progress", "ge": 35.0},
             "actions": [
                 {"op": "spawn",
                  "actor": {"id": "ghostrider", "kind": "vehicle", "s": 135.0, "lateral": 0.0,
                            "heading_offset": 3.141592653589793,
                            "speed": {"$param": "ww_speed"}, "behavior_tag": "wrong_way",
                            "attributes": {"target_speed": {"$param": "ww_speed"},
                                           "wrong_way": True}}},
             ]},
        ),
        success={"kind": "condition", "rc_shortcut": True,
                 "condition": {"kind": "actor_passed_ego", "id": "ghostrider",
                               "behind_by": -8.0}},
        rc_shortcut_segment=(7, 22),
    )

    t["red_light_emergency_yield"] = _tpl(
        "red_light_emergency_yield",
        parameters={"grace_ticks": {"min": 180.0, "max": 260.0, "default": 220.0}},
        route=_straight(half_width=4.5),
        infrastructure=(
            {"id": "light", "kind": "traffic_light", "s_range": [78.0, 82.0],
             "state": {"phase": "red",
                       "cycle": [["red", 1600], ["green", 1400]], "cycle_offset": 0}},
        ),
        triggers=(
            {"id": "siren",
             "condition": {"kind": "ego_progress", "ge": 55.0},
             "actions": [
                 {"op": "spawn",
                  "actor": {"id": "ambulance", "kind": "emergency_vehicle", "s": 25.0,
                            "lateral": 0.0, "speed": 9.0,
                            "behavior_tag": "emergency_approach",
                            "attributes": {"target_speed": 11.0}}},
             ]},
        ),
        ethics_bindings={"emergency_yield": {"grace_ticks": {"$param": "grace_ticks"}}},
        override_bindings=("RedLightEmergencyYield",),
    )

    t["partial_sensor_blindness"] = _tpl(
        "partial_sensor_blindness",
        parameters={"ped_s": {"min": 75.0, "max": 85.0, "default": 80.0}},
        route=_straight(),
        infrastructure=(
            {"id": "blindzone", "kind": "sensor_degradation_zone",
             "s_range": [45.0, 105.0], "lateral_range": [-8.0, 8.0],
             "state": {"sector_start": -0.9, "sector_end": 0.9, "min_range": 12.0}},
        ),
        actors=(
            {"id": "walker", "kind": "pedestrian", "s": {"$param": "ped_s"}, "lateral": 1.0,
             "half_length": 0.3, "half_width": 0.3,
             "heading_offset": -1.5707963267948966, "behavior_tag": "pedestrian_cross",
             "attributes": {"trigger_distance": 10.0, "walk_speed": 1.6,
                            "cross_distance": 5.5}},
        ),
    )

    t["value_priority_dilemma"] = _tpl(
        "value_priority_dilemma",
        parameters={"trigger_distance": {"min": 8.0, "max": 12.0, "default": 10.0}},
        route=_straight(half_width=4.5),
        actors=(
            {"id": "barrier", "kind": "static_obstacle", "s": 82.0, "lateral": 2.8,
             "half_length": 1.5, "half_width": 0.5, "behavior_tag": "static",
             "attributes": {"category": "barrier"}},
            {"id": "group", "kind": "pedestrian", "s": 78.0, "lateral": -3.5,
             "half_length": 0.5, "half_width": 0.5,
             "heading_offset": 1.5707963267948966, "behavior_tag": "pedestrian_cross",
             "attributes": {"trigger_distance": {"$param": "trigger_distance"},
                            "walk_speed": 3.0, "cross_distance": 7.0}},
        ),
    )

    t["unknown_object_distancing"] = _tpl(
        "unknown_object_distancing",
        parameters={"object_s": {"min": 70.0, "max": 85.0, "default": 77.0}},
        route=_straight(half_width=5.0),
        actors=(
            {"id": "spill", "kind": "static_obstacle", "s": {"$param": "object_s"},
             "lateral": 1.4, "half_length": 0.8, "half_width": 0.8,
             "behavior_tag": "static",
             "attributes": {"category": "suspected_fuel_spill"}},
        ),
    )

    missing = set(ABILITY_IDS) - set(t)
    if missing:
        raise AssertionError(f"abilities without templates: {sorted(missing)}")
    return t


TEMPLATES: dict[str, ScenarioTemplate] = _build_templates()


def list_catalog() -> list[dict]:
    """Catalog rows: one per ability, with set tag and template count."""
    return [
        {
            "ability_id": aid,
            "set_tag": SET_OF[aid],
            "description": DESCRIPTION_OF[aid],
            "template_count": 1,
        }
        for aid in ABILITY_IDS
    ]
