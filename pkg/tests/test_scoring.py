import math
import random

import pytest
from hypothesis import given, strategies as st

from deskdrive.detectors import InfractionEvent
from deskdrive.scoring import (
    PENALTY_RULES,
    PenaltyRule,
    ScoreRecord,
    SplitReport,
    UnknownEventError,
    aggregate_split,
    batch_coefficients,
    compose_drive_score,
    effective_coefficient,
    fold_events,
    route_completion,
    score_route,
    update_ethics,
    update_legal,
)


def ev(etype, tick=0, relief=False, magnitude=None, coeff=None):
    return InfractionEvent(etype, tick, "s", relief_applied=relief, magnitude=magnitude,
                           effective_coefficient=coeff)


def test_red_light_coefficient():
    assert update_legal(1.0, ev("TRAFFIC_LIGHT_INFRACTION")) == 0.7


def test_collision_relief_pairs():
    assert update_legal(1.0, ev("COLLISION_PEDESTRIAN")) == 0.5
    assert update_legal(1.0, ev("COLLISION_PEDESTRIAN", relief=True)) == 0.6
    assert update_legal(1.0, ev("COLLISION_VEHICLE")) == 0.6
    assert update_legal(1.0, ev("COLLISION_VEHICLE", relief=True)) == 0.72
    assert update_legal(1.0, ev("COLLISION_STATIC")) == 0.65
    assert update_legal(1.0, ev("COLLISION_STATIC", relief=True)) == 0.78


def test_fixed_legal_rows():
    assert update_legal(1.0, ev("SCENARIO_TIMEOUT")) == 0.7
    assert update_legal(1.0, ev("STOP_INFRACTION")) == 0.8
    assert update_legal(1.0, ev("POLICE_STOP_VIOLATION")) == 0.0


def test_outside_lanes_percentage_rule():
    assert update_legal(1.0, ev("OUTSIDE_ROUTE_LANES_INFRACTION", magnitude=0.25)) == 0.75


def test_min_speed_rule_floor():
    assert update_legal(1.0, ev("MIN_SPEED_INFRACTION", magnitude=0.9)) == 0.9
    assert update_legal(1.0, ev("MIN_SPEED_INFRACTION", magnitude=0.1)) == 0.7


def test_ethics_rows():
    assert update_ethics(1.0, ev("PUDDLE_ETHICS_INFRACTION")) == 0.8
    assert update_ethics(1.0, ev("YIELD_TO_EMERGENCY_VEHICLE")) == 0.5
    assert update_ethics(1.0, ev("DOOR_PASS_SPEED_ETHICS_INFRACTION")) == 0.8
    assert update_ethics(1.0, ev("UNSAFE_ROADSIDE_MERGE_ETHICS_INFRACTION")) == 0.7
    assert update_ethics(1.0, ev("WEAVE_CLOSE_DISTANCE_ETHICS_INFRACTION")) == 0.7
    assert update_ethics(1.0, ev("SLOW_LEAD_NO_OVERTAKE_ETHICS_INFRACTION")) == 0.7
    assert update_ethics(1.0, ev("SPEED_BUMP_OVERSPEED_ETHICS_INFRACTION")) == 0.8
    assert update_ethics(0.8, ev("WEAVE_CLOSE_DISTANCE_ETHICS_INFRACTION")) == pytest.approx(0.56)


def test_override_coefficients_win():
    assert update_legal(1.0, ev("TRAFFIC_LIGHT_INFRACTION", coeff=1.0)) == 1.0
    assert update_legal(1.0, ev("COLLISION_VEHICLE", coeff=0.85)) == 0.85
    assert update_legal(1.0, ev("COLLISION_VEHICLE", relief=False, coeff=0.85)) == 0.85


def test_target_mismatch_raises():
    with pytest.raises(ValueError):
        update_ethics(1.0, ev("TRAFFIC_LIGHT_INFRACTION"))
    with pytest.raises(ValueError):
        update_legal(1.0, ev("PUDDLE_ETHICS_INFRACTION"))


def test_unknown_event_type_is_hard_error():
    with pytest.raises(UnknownEventError):
        update_legal(1.0, ev("TRAFFIC_LIGHT_INFRACTION"), rules={})


def test_relief_rule_invariant():
    with pytest.raises(ValueError):
        PenaltyRule("COLLISION_VEHICLE", "LS", 0.6, 0.5)
    with pytest.raises(ValueError):
        PenaltyRule("STOP_INFRACTION", "LS", 0.8, 0.9)


def test_route_completion():
    assert route_completion(75, 75) == 1.0
    assert route_completion(30, 75) == 0.4
    assert route_completion(20, 75, shortcut_flag=True) == 1.0


def test_compose_drive_score():
    assert compose_drive_score(1.0, 1.0, 1.0) == 1.0
    assert compose_drive_score(1.0, 0.7, 1.0) == 0.7
    assert compose_drive_score(0.4, 0.6, 0.8) == pytest.approx(0.192)


FIXED_TYPES = [
    "COLLISION_PEDESTRIAN",
    "COLLISION_VEHICLE",
    "COLLISION_STATIC",
    "SCENARIO_TIMEOUT",
    "TRAFFIC_LIGHT_INFRACTION",
    "STOP_INFRACTION",
    "YIELD_TO_EMERGENCY_VEHICLE",
    "PUDDLE_ETHICS_INFRACTION",
    "DOOR_PASS_SPEED_ETHICS_INFRACTION",
    "UNSAFE_ROADSIDE_MERGE_ETHICS_INFRACTION",
    "WEAVE_CLOSE_DISTANCE_ETHICS_INFRACTION",
    "SLOW_LEAD_NO_OVERTAKE_ETHICS_INFRACTION",
    "SPEED_BUMP_OVERSPEED_ETHICS_INFRACTION",
]


def random_ledger(rng, size=None):
    n = size if size is not None else rng.randint(0, 8)
    out = []
    for _ in range(n):
        etype = rng.choice(FIXED_TYPES + ["OUTSIDE_ROUTE_LANES_INFRACTION", "MIN_SPEED_INFRACTION"])
        relief = etype.startswith("COLLISION_") and rng.random() < 0.5
        magnitude = rng.random() if etype in (
            "OUTSIDE_ROUTE_LANES_INFRACTION", "MIN_SPEED_INFRACTION"
        ) else None
        out.append(ev(etype, relief=relief, magnitude=magnitude))
    return out


def test_incremental_equals_batch_on_random_ledgers():
    rng = random.Random(123)
    for _ in range(1000):
        ledger = random_ledger(rng)
        ls_a, es_a = fold_events(ledger)
        ls_b, es_b = batch_coefficients(ledger)
        assert ls_a == pytest.approx(ls_b, rel=1e-12)
        assert es_a == pytest.approx(es_b, rel=1e-12)
        assert 0.0 <= ls_a <= 1.0 and 0.0 <= es_a <= 1.0


def test_fixed_event_order_independence():
    rng = random.Random(9)
    for _ in range(200):
        ledger = [e for e in random_ledger(rng, 6)]
        shuffled = ledger[:]
        rng.shuffle(shuffled)
        ls1, es1 = fold_events(ledger)
        ls2, es2 = fold_events(shuffled)
        assert ls1 == pytest.approx(ls2, rel=1e-12)
        assert es1 == pytest.approx(es2, rel=1e-12)


def test_monotonicity_adding_event_never_raises_ds():
    rng = random.Random(5)
    for _ in range(300):
        ledger = random_ledger(rng)
        ls0, es0 = fold_events(ledger)
        extra = random_ledger(rng, 1)
        ls1, es1 = fold_events(ledger + extra)
        assert ls1 * es1 <= ls0 * es0 + 1e-15


def test_relief_dominance():
    base = [ev("STOP_INFRACTION"), ev("COLLISION_VEHICLE", relief=False)]
    relief = [ev("STOP_INFRACTION"), ev("COLLISION_VEHICLE", relief=True)]
    assert fold_events(relief)[0] >= fold_events(base)[0]


def _record(route_id, rc, ls, es, ethics, set_tag="Basic", ability="a"):
    return ScoreRecord(
        route_id=route_id, rc=rc, ls=ls, es=es, ds=rc * ls * es,
        ethics_applicable=ethics, ability_id=ability, set_tag=set_tag,
    )


def test_aggregate_means():
    records = [
        _record("r1", 1.0, 0.5, 1.0, False),
        _record("r2", 1.0, 0.7, 1.0, False),
        _record("r3", 1.0, 0.9, 1.0, False),
    ]
    rep = aggregate_split(records, "Basic")
    assert rep.ds == pytest.approx(0.7)
    assert rep.es is None


def test_aggregate_es_only_over_ethics_applicable():
    records = [
        _record("r1", 1.0, 1.0, 0.8, True),
        _record("r2", 1.0, 1.0, 1.0, True),
        _record("r3", 1.0, 1.0, 0.3, False),
    ]
    rep = aggregate_split(records, "mixed")
    assert rep.es == pytest.approx(0.9)
    assert rep.n_ethics == 2


def test_overall_is_flat_mean_not_mean_of_set_means():
    basic = [_record(f"b{i}", 1.0, v, 1.0, False, "Basic") for i, v in enumerate([0.2, 0.4])]
    hard = [_record("h0", 1.0, 0.9, 1.0, False, "Hard")]
    all_records = basic + hard
    rep = aggregate_split(all_records, "Overall")
    flat = sum(r.ds for r in all_records) / 3  # brute-force recomputation
    assert rep.ds == pytest.approx(flat)
    set_means = (0.3 + 0.9) / 2
    assert abs(rep.ds - set_means) > 1e-6


def test_aggregate_empty_split_errors():
    with pytest.raises(ValueError):
        aggregate_split([], "Basic")


def test_split_means_within_member_bounds():
    rng = random.Random(11)
    records = [
        _record(f"r{i}", rng.random(), rng.random(), rng.random(), rng.random() < 0.5)
        for i in range(20)
    ]
    rep = aggregate_split(records, "fuzz")
    for attr in ("ds", "rc", "ls"):
        vals = [getattr(r, attr) for r in records]
        assert min(vals) <= getattr(rep, attr) <= max(vals)


def test_score_record_requires_exact_product():
    with pytest.raises(ValueError):
        ScoreRecord("r", 0.5, 0.5, 0.5, 0.2, False)


def test_score_route_end_to_end():
    events = [ev("TRAFFIC_LIGHT_INFRACTION"), ev("PUDDLE_ETHICS_INFRACTION")]
    rec = score_route("r", events, 30, 30, False, True)
    assert rec.ls == 0.7
    assert rec.es == 0.8
    assert rec.rc == 1.0
    assert rec.ds == 0.7 * 0.8


def test_report_round_trip():
    import json

    rep = aggregate_split([_record("r", 0.5, 0.5, 0.5, True)], "x")
    again = SplitReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert again == rep
