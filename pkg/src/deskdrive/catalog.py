"""The 30-ability catalog, partitioned into Basic (11), Hard (10), and Thorny (9) sets."""

from __future__ import annotations

ABILITIES: tuple[tuple[str, str, str], ...] = (
    # Basic: foundational operational skills
    ("emergency_avoidance", "Basic",
     "Decelerate or change lanes when pedestrians or cyclists emerge from blind spots."),
    ("obstacle_detouring", "Basic",
     "Handle static obstacles such as roadwork zones or broken-down vehicles."),
    ("signalized_turning", "Basic",
     "Complete turns at signalized intersections while coordinating with traffic."),
    ("cut_in_response", "Basic",
     "Respond safely to overtakes, lane changes, and vehicles merging into the lane."),
    ("traffic_merging", "Basic",
     "Start from curbside or merge into moving traffic."),
    ("constrained_segment_passage", "Basic",
     "Pass narrow or partially blocked segments such as cone-lined lanes."),
    ("overtaking", "Basic",
     "Overtake very slow lead vehicles when conditions and right-of-way permit."),
    ("u_turn_execution", "Basic",
     "Perform compliant U-turns at permitted locations."),
    ("narrow_road_following", "Basic",
     "Maintain safe headway with front and rear vehicles on narrow sections."),
    ("reasonable_speed_keeping", "Basic",
     "Keep appropriate speed for road context, avoiding under- and overspeeding."),
    ("oncoming_encounter_etiquette", "Basic",
     "During opposite-direction encounters, keep clear of the centerline and slow down."),
    # Hard: rule- and norm-aware judgment
    ("pedestrian_ethics", "Hard",
     "Respect nearby pedestrians, e.g. avoid high-speed passage through puddles."),
    ("special_yielding", "Hard",
     "Yield beyond collision-only logic, e.g. door-opening risks near parked cars."),
    ("open_world_detouring", "Hard",
     "Handle uncommon non-standard obstacles such as collapsed facilities or debris."),
    ("speed_bump_handling", "Hard",
     "Cross speed bumps at appropriately low speed."),
    ("yielding_tight_conflicts", "Hard",
     "Yield reasonably at narrow segments with opposing traffic instead of forcing passage."),
    ("defensive_distancing_erratic", "Hard",
     "Keep larger safety margins from weaving or erratically driven vehicles."),
    ("police_stop_compliance", "Hard",
     "Pull over and stop when intercepted by police."),
    ("adverse_weather", "Hard",
     "Drive cautiously at lower speed under low-visibility weather such as fog."),
    ("ego_failure_mitigation", "Hard",
     "Choose loss-minimizing actions under sudden ego faults such as brake failure."),
    ("defensive_turning_occlusion", "Hard",
     "Reduce speed when turning through corners with severe blind zones."),
    # Thorny: dilemma-level decisions
    ("forced_lane_borrowing", "Thorny",
     "Cross lane markings when the current lane is blocked and borrowing is necessary."),
    ("signal_failure_intersection", "Thorny",
     "Negotiate intersections with failed traffic lights based on surrounding traffic."),
    ("intrusive_cut_in_risk", "Thorny",
     "Emergency-brake for very close high-speed cut-ins; minimize harm if unavoidable."),
    ("accident_scene_handling", "Thorny",
     "React appropriately to crashes ahead and re-plan passage."),
    ("wrong_way_avoidance", "Thorny",
     "Anticipate high-speed wrong-way vehicles and evade via lane change or roadside space."),
    ("red_light_emergency_yield", "Thorny",
     "Under red light with emergency-vehicle pressure, decide whether to cross to clear a path."),
    ("partial_sensor_blindness", "Thorny",
     "Continue safe driving when sensor regions are degraded."),
    ("value_priority_dilemma", "Thorny",
     "In unavoidable-collision dilemmas, prioritize human safety."),
    ("unknown_object_distancing", "Thorny",
     "Keep distance from uncertain road objects that may indicate risk."),
)

ABILITY_IDS = tuple(a for a, _, _ in ABILITIES)
SET_OF = {a: s for a, s, _ in ABILITIES}
DESCRIPTION_OF = {a: d for a, _, d in ABILITIES}


def abilities_in_set(set_tag: str) -> tuple[str, ...]:
    return tuple(a for a, s, _ in ABILITIES if s == set_tag)
