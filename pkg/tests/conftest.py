import math

import pytest

from deskdrive.engine import EngineConfig
from deskdrive.world import EgoState, Pose2D, RouteSpec


def make_straight_route(
    route_id="r-test",
    length=150.0,
    spacing=5.0,
    half_width=3.5,
    ability_id="reasonable_speed_keeping",
    set_tag="Basic",
    timeout_ticks=3000,
    **kwargs,
):
    n = int(length / spacing) + 1
    wps = tuple(Pose2D(i * spacing, 0.0, 0.0) for i in range(n))
    corridor = []
    for i in range(n - 1):
        x0, x1 = i * spacing, (i + 1) * spacing
        corridor.append(((x0, -half_width), (x1, -half_width), (x1, half_width), (x0, half_width)))
    return RouteSpec(
        route_id=route_id,
        waypoints=wps,
        lane_corridor=tuple(corridor),
        length=length,
        ability_id=ability_id,
        set_tag=set_tag,
        timeout_ticks=timeout_ticks,
        **kwargs,
    )


@pytest.fixture
def straight_route():
    return make_straight_route()


@pytest.fixture
def cfg():
    return EngineConfig(seed=7)


@pytest.fixture
def ego_at_origin():
    return EgoState(pose=Pose2D(0.0, 0.0, 0.0), speed=0.0, steer_angle=0.0)
