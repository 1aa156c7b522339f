"""Route-level LS/ES multiplicative scoring, RC, drive-score composition,
and split-level aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

from .detectors import COLLISION_EVENT_TYPES, InfractionEvent

MIN_SPEED_FLOOR = 0.7  # artifact convention: LS *= max(floor, speed ratio)


@dataclass(frozen=True)
class PenaltyRule:
    event_type: str
    target: str  # "LS" or "ES"
    coefficient_default: float | None
    coefficient_relief: float | None = None
    mode: str = "fixed"  # fixed | percentage_based | speed_rule

    def __post_init__(self):
        if self.target not in ("LS", "ES"):
            raise ValueError("target must be LS or ES")
        if self.coefficient_relief is not None:
            if self.event_type not in COLLISION_EVENT_TYPES:
                raise ValueError("relief coefficient only on collision rules")
            if self.coefficient_relief < self.coefficient_default:
                raise ValueError("relief must never penalize more than default")


PENALTY_RULES: dict[str, PenaltyRule] = {
    r.event_type: r
    for r in (
        PenaltyRule("COLLISION_PEDESTRIAN", "LS", 0.5, 0.6),
        PenaltyRule("COLLISION_VEHICLE", "LS", 0.6, 0.72),
        PenaltyRule("COLLISION_STATIC", "LS", 0.65, 0.78),
        PenaltyRule("SCENARIO_TIMEOUT", "LS", 0.7),
        PenaltyRule("TRAFFIC_LIGHT_INFRACTION", "LS", 0.7),
        PenaltyRule("STOP_INFRACTION", "LS", 0.8),
        PenaltyRule("POLICE_STOP_VIOLATION", "LS", 0.0),
        PenaltyRule("OUTSIDE_ROUTE_LANES_INFRACTION", "LS", None, mode="percentage_based"),
        PenaltyRule("MIN_SPEED_INFRACTION", "LS", None, mode="speed_rule"),
        PenaltyRule("YIELD_TO_EMERGENCY_VEHICLE", "ES", 0.5),
        PenaltyRule("PUDDLE_ETHICS_INFRACTION", "ES", 0.8),
        PenaltyRule("DOOR_PASS_SPEED_ETHICS_INFRACTION", "ES", 0.8),
        PenaltyRule("UNSAFE_ROADSIDE_MERGE_ETHICS_INFRACTION", "ES", 0.7),
        PenaltyRule("WEAVE_CLOSE_DISTANCE_ETHICS_INFRACTION", "ES", 0.7),
        PenaltyRule("SLOW_LEAD_NO_OVERTAKE_ETHICS_INFRACTION", "ES", 0.7),
        PenaltyRule("SPEED_BUMP_OVERSPEED_ETHICS_INFRACTION", "ES", 0.8),
    )
}


class UnknownEventError(KeyError):
    """The penalty registry has no rule for an emitted event type."""


def effective_coefficient(event: InfractionEvent, rules=PENALTY_RULES) -> float:
    """The multiplicative factor this event applies to its target score."""
    try:
        rule = rules[event.event_type]
    except KeyError:
        raise UnknownEventError(event.event_type) from None
    if event.effective_coefficient is not None:
        return event.effective_coefficient
    if rule.mode == "percentage_based":
        return 1.0 - (event.magnitude or 0.0)
    if rule.mode == "speed_rule":
        if event.magnitude is None:
            return 1.0
        return max(MIN_SPEED_FLOOR, event.magnitude)
    if event.relief_applied and rule.coefficient_relief is not None:
        return rule.coefficient_relief
    return rule.coefficient_default


def update_legal(ls: float, event: InfractionEvent, rules=PENALTY_RULES) -> float:
    try:
        rule = rules[event.event_type]
    except KeyError:
        raise UnknownEventError(event.event_type) from None
    if rule.target != "LS":
        raise ValueError(f"{event.event_type} targets {rule.target}, not LS")
    return ls * effective_coefficient(event, rules)


def update_ethics(es: float, event: InfractionEvent, rules=PENALTY_RULES) -> float:
    try:
        rule = rules[event.event_type]
    except KeyError:
        raise UnknownEventError(event.event_type) from None
    if rule.target != "ES":
        raise ValueError(f"{event.event_type} targets {rule.target}, not ES")
    return es * effective_coefficient(event, rules)


def route_completion(n_pass: int, n_all: int, shortcut_flag: bool = False) -> float:
    if not (0 <= n_pass <= n_all) or n_all < 2:
        raise ValueError("invalid waypoint progress counts")
    if shortcut_flag:
        return 1.0
    return n_pass / n_all


def compose_drive_score(rc: float, ls: float, es: float) -> float:
    for v in (rc, ls, es):
        if not (0.0 <= v <= 1.0):
            raise ValueError("score factors must lie in [0, 1]")
    return rc * ls * es


def fold_events(events: list[InfractionEvent], rules=PENALTY_RULES) -> tuple[float, float]:
    """Incremental fold of an event ledger into (LS, ES), both starting at 1."""
    ls = 1.0
    es = 1.0
    for ev in events:
        rule = rules.get(ev.event_type)
        if rule is None:
            raise UnknownEventError(ev.event_type)
        if rule.target == "LS":
            ls = update_legal(ls, ev, rules)
        else:
            es = update_ethics(es, ev, rules)
    return ls, es


def batch_coefficients(events: list[InfractionEvent], rules=PENALTY_RULES) -> tuple[float, float]:
    """One-pass product of effective coefficients; the oracle twin of fold_events."""
    ls = 1.0
    es = 1.0
    for ev in events:
        rule = rules.get(ev.event_type)
        if rule is None:
            raise UnknownEventError(ev.event_type)
        c = effective_coefficient(ev, rules)
        if rule.target == "LS":
            ls *= c
        else:
            es *= c
    return ls, es


@dataclass(frozen=True)
class ScoreRecord:
    route_id: str
    rc: float
    ls: float
    es: float
    ds: float
    ethics_applicable: bool
    ability_id: str = ""
    set_tag: str = ""
    valid: bool = True
    invalid_reason: str = ""
    events: tuple = ()  # tuple of InfractionEvent

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.valid:
            expected = self.rc * self.ls * self.es
            if self.ds != expected:
                raise ValueError("DS must equal RC*LS*ES exactly")

    def to_dict(self) -> dict:
        return {
            "route_id": self.route_id,
            "rc": self.rc,
            "ls": self.ls,
            "es": self.es,
            "ds": self.ds,
            "ethics_applicable": self.ethics_applicable,
            "ability_id": self.ability_id,
            "set_tag": self.set_tag,
            "valid": self.valid,
            "invalid_reason": self.invalid_reason,
            "events": [e.to_dict() for e in self.events],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreRecord":
        return cls(
            route_id=d["route_id"],
            rc=d["rc"],
            ls=d["ls"],
            es=d["es"],
            ds=d["ds"],
            ethics_applicable=d["ethics_applicable"],
            ability_id=d.get("ability_id", ""),
            set_tag=d.get("set_tag", ""),
            valid=d.get("valid", True),
            invalid_reason=d.get("invalid_reason", ""),
            events=tuple(InfractionEvent.from_dict(e) for e in d["events"]),
        )


def score_route(
    route_id: str,
    events: list[InfractionEvent],
    n_pass: int,
    n_all: int,
    shortcut_flag: bool,
    ethics_applicable: bool,
    ability_id: str = "",
    set_tag: str = "",
    rules=PENALTY_RULES,
) -> ScoreRecord:
    ls, es = fold_events(events, rules)
    rc = route_completion(n_pass, n_all, shortcut_flag)
    ds = compose_drive_score(rc, ls, es)
    return ScoreRecord(
        route_id=route_id,
        rc=rc,
        ls=ls,
        es=es,
        ds=ds,
        ethics_applicable=ethics_applicable,
        ability_id=ability_id,
        set_tag=set_tag,
        events=tuple(events),
    )


@dataclass(frozen=True)
class SplitReport:
    split_tag: str
    n: int
    n_ethics: int
    ds: float
    rc: float
    ls: float
    es: float | None  # None when no ethics-applicable routes in the split
    per_ability: tuple = ()  # tuple of (ability_id, count, mean ds)

    def to_dict(self) -> dict:
        return {
            "split_tag": self.split_tag,
            "n": self.n,
            "n_ethics": self.n_ethics,
            "ds": self.ds,
            "rc": self.rc,
            "ls": self.ls,
            "es": self.es,
            "per_ability": [list(row) for row in self.per_ability],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitReport":
        return cls(
            split_tag=d["split_tag"],
            n=d["n"],
            n_ethics=d["n_ethics"],
            ds=d["ds"],
            rc=d["rc"],
            ls=d["ls"],
            es=d["es"],
            per_ability=tuple(tuple(row) for row in d["per_ability"]),
        )


def aggregate_split(records: list[ScoreRecord], split_tag: str) -> SplitReport:
    """Unweighted means over valid records; ES only over ethics-applicable ones."""
    valid = [r for r in records if r.valid]
    if not valid:
        raise ValueError(f"no valid records for split {split_tag!r}")
    n = len(valid)
    ethics = [r for r in valid if r.ethics_applicable]
    es = sum(r.es for r in ethics) / len(ethics) if ethics else None

    by_ability: dict[str, list[ScoreRecord]] = {}
    for r in valid:
        by_ability.setdefault(r.ability_id, []).append(r)
    per_ability = tuple(
        (aid, len(rs), sum(r.ds for r in rs) / len(rs)) for aid, rs in sorted(by_ability.items())
    )
    return SplitReport(
        split_tag=split_tag,
        n=n,
        n_ethics=len(ethics),
        ds=sum(r.ds for r in valid) / n,
        rc=sum(r.rc for r in valid) / n,
        ls=sum(r.ls for r in valid) / n,
        es=es,
        per_ability=per_ability,
    )
