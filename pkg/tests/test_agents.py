import json
import math

import pytest

from deskdrive.agents import (
    BUILTIN_AGENTS,
    Observation,
    RouteFollowerAgent,
    make_agent,
    observe,
)
from deskdrive.harness import run_episode
from deskdrive.library import TEMPLATES
from deskdrive.scenarios import instantiate_scenario
from deskdrive.suite import sample_params
from deskdrive.world import (
    ActorState,
    ControlCommand,
    EgoState,
    InfrastructureElement,
    Pose2D,
    WorldState,
)
from conftest import make_straight_route


class StubRuntime:
    flags: dict = {}
    armed_detectors: dict = {}


def _world(actors=(), infra=(), ego=None):
    ego = ego or EgoState(Pose2D(10.0, 0.0, 0.0), 6.0, 0.0)
    return WorldState(tick=3, ego=ego, actors=tuple(actors), infrastructure=tuple(infra))


def test_empty_world_observation():
    route = make_straight_route()
    obs = observe(_world(), route, StubRuntime(), 1)
    assert obs.nearby_actors == ()
    assert len(obs.route_preview) == 10
    assert obs.traffic_light is None
    assert obs.speed_limit == route.speed_limit


def test_observation_deterministic_and_serializable():
    route = make_straight_route()
    actors = [ActorState("v1", "vehicle", Pose2D(30.0, 1.0, 0.2), 4.0, 2.3, 1.0)]
    a = observe(_world(actors), route, StubRuntime(), 1)
    b = observe(_world(actors), route, StubRuntime(), 1)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)
    again = Observation.from_dict(json.loads(json.dumps(a.to_dict())))
    assert again.to_dict() == a.to_dict()


def test_actor_beyond_sense_radius_invisible():
    route = make_straight_route()
    actors = [ActorState("far", "vehicle", Pose2D(200.0, 0.0, 0.0), 4.0, 2.3, 1.0)]
    obs = observe(_world(actors), route, StubRuntime(), 1)
    assert obs.nearby_actors == ()


def test_sensor_degradation_masks_sector_beyond_min_range():
    route = make_straight_route()
    zone = InfrastructureElement(
        "z", "sensor_degradation_zone",
        ((0, -8), (60, -8), (60, 8), (0, 8)),
        {"sector_start": -0.5, "sector_end": 0.5, "min_range": 15.0},
    )
    # oracle: in-sector actor at 30 m is masked; same actor at 10 m is not,
    # and an out-of-sector actor at 30 m is not
    masked = ActorState("m", "vehicle", Pose2D(40.0, 0.0, 0.0), 4.0, 2.3, 1.0)
    near = ActorState("n", "vehicle", Pose2D(20.0, 0.0, 0.0), 4.0, 2.3, 1.0)
    side = ActorState("s", "vehicle", Pose2D(10.0, 30.0, 0.0), 4.0, 2.3, 1.0)
    obs = observe(_world([masked, near, side], infra=[zone]), route, StubRuntime(), 1)
    ids = {a["id"] for a in obs.nearby_actors}
    assert ids == {"n", "s"}
    # outside the zone, nothing is masked
    obs2 = observe(
        _world([masked], infra=[zone],
               ego=EgoState(Pose2D(70.0, 0.0, math.pi), 6.0, 0.0)),
        route, StubRuntime(), 1)
    # ego faces backward at x=70; actor at x=40 is 30 m ahead in ego frame
    assert {a["id"] for a in obs2.nearby_actors} == {"m"}


def test_emergency_behind_flag():
    route = make_straight_route()
    amb = ActorState("amb", "emergency_vehicle", Pose2D(0.0, 0.0, 0.0), 9.0, 2.6, 1.1)
    obs = observe(_world([amb], ego=EgoState(Pose2D(20.0, 0.0, 0.0), 6.0, 0.0)),
                  route, StubRuntime(), 1)
    assert obs.region_flags["emergency_behind"] is True
    # same vehicle ahead of the ego does not set the flag
    obs2 = observe(_world([amb], ego=EgoState(Pose2D(-20.0, 0.0, 0.0), 6.0, 0.0)),
                   route, StubRuntime(), 1)
    assert obs2.region_flags["emergency_behind"] is False


def _obs(speed=8.0, light=None, actors=(), flags=None):
    preview = tuple((5.0 * (i + 1), 0.0, 0.0) for i in range(10))
    base_flags = {
        "in_puddle_zone": False, "near_speed_bump": False, "fog": False,
        "police_pullover_armed": False, "pullover_zone": None,
        "emergency_behind": False,
    }
    base_flags.update(flags or {})
    return Observation(
        tick=0, speed=speed, steer_angle=0.0, speed_limit=8.0, lane_offset=0.0,
        route_progress=50.0, route_length=150.0, corridor_half_width=3.5,
        route_preview=preview, nearby_actors=tuple(actors),
        traffic_light=light, region_flags=base_flags,
    )


def test_lawful_brakes_for_red_light():
    agent = make_agent("lawful_follower")
    cmd = agent.act(_obs(speed=8.0, light={"phase": "red", "distance": 10.0}))
    assert cmd.brake > 0.2
    agent.reset()
    green = agent.act(_obs(speed=4.0, light={"phase": "green", "distance": 10.0}))
    assert green.throttle > 0.0 and green.brake == 0.0


def test_lawful_crosses_red_when_yielding_to_emergency():
    agent = make_agent("lawful_follower")
    cmd = agent.act(_obs(speed=4.0, light={"phase": "red", "distance": 10.0},
                         flags={"emergency_behind": True}))
    assert cmd.brake == 0.0 and cmd.throttle > 0.0


def test_reckless_constant_policy():
    agent = make_agent("reckless")
    for obs in (_obs(), _obs(speed=0.0, light={"phase": "red", "distance": 2.0})):
        cmd = agent.act(obs)
        assert (cmd.throttle, cmd.steer, cmd.brake) == (1.0, 0.0, 0.0)


def test_builtin_purity_same_observations_same_commands():
    tpl = TEMPLATES["cut_in_response"]
    params = sample_params(tpl, 9, 0)
    route, runtime, actors, infra, ego_pose = instantiate_scenario(tpl, params, 5)
    world = WorldState(tick=0, ego=EgoState(ego_pose, 5.0, 0.0),
                       actors=actors, infrastructure=infra)
    observations = [observe(world, route, runtime, 1)] * 5 + [
        observe(world, route, runtime, 2)] * 5
    logs = []
    for _ in range(2):
        agent = RouteFollowerAgent(ethics_aware=True)
        logs.append([agent.act(o).to_dict() for o in observations])
    assert logs[0] == logs[1]


def test_lawful_on_plain_route_zero_events():
    tpl = TEMPLATES["u_turn_execution"]  # route geometry only, no traffic
    params = sample_params(tpl, 11, 0)
    result = run_episode(tpl, params, 11, "lawful_follower")
    assert result.status == "completed"
    assert result.replay.footer["events"] == []
    assert result.record.ds == 1.0


def test_timid_agent_triggers_min_speed():
    tpl = TEMPLATES["reasonable_speed_keeping"]
    params = sample_params(tpl, 13, 0)
    result = run_episode(tpl, params, 13, "timid")
    kinds = [e["event_type"] for e in result.replay.footer["events"]]
    assert "MIN_SPEED_INFRACTION" in kinds
    assert result.record.ls < 1.0


def test_make_agent_roster():
    for name in BUILTIN_AGENTS:
        agent = make_agent(name)
        assert hasattr(agent, "act") and hasattr(agent, "reset")
    with pytest.raises(ValueError):
        make_agent("nonexistent")


def test_agents_return_valid_commands_on_arbitrary_observations():
    obs = _obs(speed=3.0, actors=[{
        "id": "x", "kind": "vehicle", "x": 12.0, "y": 0.3, "heading_rel": 0.1,
        "speed": 2.0, "half_length": 2.3, "half_width": 1.0,
        "route_lat": 0.3, "route_s": 62.0, "attributes": {},
    }])
    for name in BUILTIN_AGENTS:
        cmd = make_agent(name).act(obs)
        assert isinstance(cmd, ControlCommand)
        assert 0.0 <= cmd.throttle <= 1.0
        assert -1.0 <= cmd.steer <= 1.0
        assert 0.0 <= cmd.brake <= 1.0
