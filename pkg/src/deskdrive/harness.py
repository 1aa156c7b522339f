"""Closed-loop episode runner, rescoring, and parallel suite evaluation.

`run_episode` drives one scenario tick by tick: observe -> agent command ->
scenario triggers -> physics step -> rule detectors, then folds the event
ledger into a score. The score is computed from the replay body itself, so
`score_replay` on the emitted replay reproduces it bit-exactly by
re-simulating the recorded commands through the same deterministic engine.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .agents import make_agent, observe
from .constants import DEFAULT_THRESHOLDS
from .detectors import (
    ControlHistory,
    DetectorState,
    InfractionEvent,
    apply_overrides,
    detect_tick,
    min_speed_ratio,
    outside_lane_fraction,
)
from .engine import EngineConfig, step
from .replay import (
    EpisodeReplay,
    ReplayIntegrityError,
    make_footer,
    make_header,
    make_tick,
)
from .scenarios import instantiate_scenario, scenario_tick
from .scoring import ScoreRecord, aggregate_split, score_route
from .suite import SuiteEntry, SuiteManifest, _template_for
from .world import ControlCommand, EgoState, WorldState, waypoint_pass_check

MIN_SPEED_EMIT_BELOW = 0.8  # episode ratios under this emit a low-speed event


@dataclass(frozen=True)
class EpisodeResult:
    record: ScoreRecord
    replay: EpisodeReplay
    status: str


class AgentFailure(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def _ego_snapshot(ego: EgoState) -> dict:
    return {
        "x": ego.pose.x,
        "y": ego.pose.y,
        "heading": ego.pose.heading,
        "speed": ego.speed,
    }


def _background_speed(world: WorldState) -> float | None:
    speeds = [a.speed for a in world.actors if a.kind == "vehicle" and a.speed > 0.3]
    if not speeds:
        return None
    return sum(speeds) / len(speeds)


def _episode_loop(route, runtime, actors, infra, ego_pose, cfg, command_source,
                  record_ticks=True, max_ticks=None):
    """Shared closed-loop core for live runs (agent) and rescoring (replay).

    `command_source(obs, tick_index)` returns the ControlCommand for the tick.
    Returns the full episode outcome; raises AgentFailure if the source does.
    """
    ego = EgoState(pose=ego_pose, speed=0.0, steer_angle=0.0)
    world = WorldState(tick=0, ego=ego, actors=actors, infrastructure=infra)
    history = ControlHistory()
    dstate = DetectorState()
    events: list[InfractionEvent] = []
    trace = [(ego.pose.x, ego.pose.y)]
    ego_speeds = [0.0]
    bg_speeds = [_background_speed(world)]
    next_wp = 1  # waypoint 0 is the start pose
    ticks = []
    status = "running"
    tick_index = 0

    while status == "running":
        obs = observe(world, route, runtime, next_wp)
        cmd = command_source(obs, tick_index)
        scen_cmds, runtime, scen_status = scenario_tick(runtime, world)
        world, contacts = step(world, cmd, scen_cmds, cfg, route)
        history.push(world.tick, cmd.brake, cmd.hand_brake)
        events.extend(
            detect_tick(world, route, history, runtime, dstate, contacts,
                        DEFAULT_THRESHOLDS)
        )
        next_wp = waypoint_pass_check(world.ego, route, next_wp)
        trace.append((world.ego.pose.x, world.ego.pose.y))
        ego_speeds.append(world.ego.speed)
        bg_speeds.append(_background_speed(world))
        if record_ticks:
            ticks.append(make_tick(world.tick, cmd.to_dict(), _ego_snapshot(world.ego)))
        tick_index += 1

        if next_wp >= len(route.waypoints):
            status = "completed"
        elif scen_status == "success":
            status = "success"
        elif world.tick >= route.timeout_ticks:
            status = "timeout"
        elif max_ticks is not None and world.tick >= max_ticks:
            status = "truncated"  # fuzz/smoke cap, not a scenario outcome

    # episode-level rules
    fraction = outside_lane_fraction(trace, route)
    if fraction > 0.0:
        events.append(
            InfractionEvent("OUTSIDE_ROUTE_LANES_INFRACTION", world.tick,
                            route.route_id, magnitude=fraction)
        )
    ratio = None
    if "min_speed" in runtime.armed_detectors:
        ratio = min_speed_ratio(ego_speeds, bg_speeds)
        if ratio is not None and ratio < MIN_SPEED_EMIT_BELOW:
            events.append(
                InfractionEvent("MIN_SPEED_INFRACTION", world.tick, route.route_id,
                                magnitude=ratio)
            )
    events = apply_overrides(events, runtime)
    passed = min(next_wp, len(route.waypoints)) - 1  # start pose is not scored
    total = len(route.waypoints) - 1
    return status, world, runtime, events, ticks, passed, total, fraction, ratio


def run_episode(template, params: dict, seed: int, agent_name: str,
                agent=None, cfg: EngineConfig | None = None,
                max_ticks: int | None = None) -> EpisodeResult:
    """Run one scenario episode with a builtin agent (or an injected one
    honoring the same act/reset interface) and score it from the replay body.

    `max_ticks` truncates the episode early (fuzz/smoke runs); truncated
    episodes are scored from whatever happened before the cap."""
    route, runtime, actors, infra, ego_pose = instantiate_scenario(template, params, seed)
    cfg = cfg or EngineConfig(seed=seed)
    if agent is None:
        agent = make_agent(agent_name)
    agent.reset()

    failure: list[str] = []

    def command_source(obs, _tick):
        try:
            cmd = agent.act(obs)
        except AgentFailure as exc:
            failure.append(exc.reason)
            raise
        if not isinstance(cmd, ControlCommand):
            cmd = ControlCommand(**cmd)
        return cmd

    header = make_header(
        route_id=route.route_id, template_id=template.template_id,
        params=template.validate_params(params), seed=seed, agent=agent_name,
        engine_digest=cfg.digest(),
    )
    try:
        (status, world, runtime, events, ticks, passed, total,
         fraction, ratio) = _episode_loop(
            route, runtime, actors, infra, ego_pose, cfg, command_source,
            max_ticks=max_ticks)
    except AgentFailure as exc:
        record = ScoreRecord(
            route_id=route.route_id, rc=0.0, ls=0.0, es=0.0, ds=0.0,
            ethics_applicable=route.ethics_applicable, ability_id=route.ability_id,
            set_tag=route.set_tag, valid=False, invalid_reason=exc.reason,
        )
        footer = make_footer(status="invalid", end_tick=-1, waypoints_passed=0,
                             waypoints_total=len(route.waypoints) - 1, events=[],
                             score=record.to_dict(), outside_lane_fraction=0.0,
                             min_speed_ratio=None)
        return EpisodeResult(record, EpisodeReplay(header, (), footer), "invalid")

    record = score_route(
        route.route_id, events, passed, total,
        runtime.rc_shortcut_flag, route.ethics_applicable,
        ability_id=route.ability_id, set_tag=route.set_tag,
    )
    footer = make_footer(
        status=status, end_tick=world.tick, waypoints_passed=passed,
        waypoints_total=total, events=[e.to_dict() for e in events],
        score=record.to_dict(), outside_lane_fraction=fraction,
        min_speed_ratio=ratio,
    )
    return EpisodeResult(record, EpisodeReplay(header, tuple(ticks), footer), status)


def score_replay(replay: EpisodeReplay, strict: bool = True) -> ScoreRecord:
    """Recompute the score by re-simulating the recorded commands.

    With `strict` (the default) the recorded ego trajectory must match the
    re-simulation exactly and the footer score must be identical; pass
    strict=False to rescore a replay whose command log was deliberately
    edited (the footer is derived data, recomputed from the body)."""
    header = replay.header
    template = _template_for(header["template_id"])
    route, runtime, actors, infra, ego_pose = instantiate_scenario(
        template, header["params"], header["seed"])
    cfg = EngineConfig(seed=header["seed"])
    if cfg.digest() != header["engine_digest"]:
        raise ReplayIntegrityError("engine configuration digest mismatch")
    recorded = replay.ticks

    def command_source(obs, i):
        if i >= len(recorded):
            if strict:
                raise ReplayIntegrityError("replay ended before the episode terminated")
            # an edited command log may stretch the episode; hold the last command
            i = len(recorded) - 1
        return ControlCommand.from_dict(recorded[i]["cmd"])

    (status, world, runtime, events, ticks, passed, total,
     fraction, ratio) = _episode_loop(
        route, runtime, actors, infra, ego_pose, cfg, command_source)

    if strict:
        if len(ticks) != len(recorded):
            raise ReplayIntegrityError(
                f"tick count mismatch: recorded {len(recorded)}, replayed {len(ticks)}")
        for mine, theirs in zip(ticks, recorded):
            if mine != theirs:
                raise ReplayIntegrityError(f"tick {theirs['tick']} diverged on replay")

    record = score_route(
        route.route_id, events, passed, total,
        runtime.rc_shortcut_flag, route.ethics_applicable,
        ability_id=route.ability_id, set_tag=route.set_tag,
    )
    if strict and replay.footer is not None:
        if record.to_dict() != replay.footer["score"]:
            raise ReplayIntegrityError("rescored result differs from the recorded score")
    return record


# ---------------------------------------------------------------------------
# suite evaluation


def _run_entry(entry_dict: dict, agent_name: str, out_dir: str | None) -> dict:
    entry = SuiteEntry.from_dict(entry_dict)
    template = _template_for(entry.template_id)
    result = run_episode(template, entry.params, entry.seed, agent_name)
    if out_dir is not None:
        fname = entry.route_id.replace(":", "_") + ".jsonl"
        result.replay.save(os.path.join(out_dir, fname))
    return {"route_id": entry.route_id, "status": result.status,
            "score": result.record.to_dict()}


def run_suite(manifest: SuiteManifest, agent_name: str, parallel: int = 1,
              out_dir: str | None = None) -> list[dict]:
    """Run every manifest entry; results are sorted by route_id so the output
    is identical regardless of worker count or completion order."""
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    entry_dicts = [e.to_dict() for e in manifest.entries]
    if parallel <= 1:
        results = [_run_entry(e, agent_name, out_dir) for e in entry_dicts]
    else:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(
                pool.map(_run_entry, entry_dicts,
                         [agent_name] * len(entry_dicts),
                         [out_dir] * len(entry_dicts))
            )
    return sorted(results, key=lambda r: r["route_id"])


def build_report(results: list[dict]) -> dict:
    """Aggregate per-route scores into Overall / per-set / per-ability means."""
    records = [ScoreRecord.from_dict(r["score"]) for r in results]
    report = {"overall": aggregate_split(records, "Overall").to_dict(), "sets": {}}
    for tag in ("Basic", "Hard", "Thorny"):
        subset = [r for r in records if r.set_tag == tag]
        if subset:
            report["sets"][tag] = aggregate_split(subset, tag).to_dict()
    report["n_routes"] = len(records)
    report["n_valid"] = sum(1 for r in records if r.valid)
    return report
