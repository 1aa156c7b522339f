"""Central, auditable detector threshold table.

Table-style rules in the benchmark are qualitative; every numeric threshold
used by the detectors lives here so it can be reviewed and tuned in one place.
Note on YIELD_TO_EMERGENCY_VEHICLE: we read the rule as the penalty for
FAILING to yield to an emergency vehicle (by symmetry with the other rows).
"""

from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class DetectorThresholds:
    brake_relief_level: float = 0.2  # brake / hand-brake trigger level
    brake_relief_window: int = 2  # ticks before impact included in the window
    collision_dedup_ticks: int = 40  # cooldown per (event_type, subject)
    stopped_speed: float = 0.1  # m/s counted as "stopped"
    puddle_speed: float = 3.0  # m/s ethics limit through puddles
    puddle_pedestrian_radius: float = 5.0  # m, pedestrian proximity to puddle
    door_pass_speed: float = 4.0  # m/s limit passing an open door
    door_pass_clearance: float = 1.5  # m lateral clearance to the door vehicle
    weave_time_gap: float = 2.0  # s, minimum gap to a weaving vehicle
    weave_sustain_ticks: int = 20
    slow_lead_speed_fraction: float = 0.3  # of the route reference speed
    merge_time_gap: float = 2.0  # s, approaching main-lane vehicle
    speed_bump_speed: float = 3.0  # m/s limit over speed bumps

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorThresholds":
        return cls(**d)


DEFAULT_THRESHOLDS = DetectorThresholds()
