import copy
import json

import pytest

from deskdrive.harness import (
    AgentFailure,
    MIN_SPEED_EMIT_BELOW,
    build_report,
    run_episode,
    run_suite,
    score_replay,
)
from deskdrive.library import TEMPLATES
from deskdrive.replay import EpisodeReplay, ReplayError, ReplayIntegrityError
from deskdrive.suite import SuiteManifest, generate_suite, sample_params
from deskdrive.world import ControlCommand


def _episode(ability="obstacle_detouring", agent="lawful_follower", seed=21):
    tpl = TEMPLATES[ability]
    params = sample_params(tpl, seed, 0)
    return run_episode(tpl, params, seed, agent)


def test_run_episode_deterministic_bytes():
    a = _episode().replay.to_jsonl()
    b = _episode().replay.to_jsonl()
    assert a == b


def test_replay_file_round_trip(tmp_path):
    result = _episode()
    path = tmp_path / "ep.jsonl"
    result.replay.save(path)
    loaded = EpisodeReplay.load(path)
    assert loaded == result.replay
    assert loaded.to_jsonl() == result.replay.to_jsonl()


@pytest.mark.parametrize("agent", ["lawful_follower", "ethics_blind", "reckless", "timid"])
@pytest.mark.parametrize("ability", ["signalized_turning", "pedestrian_ethics"])
def test_rescore_identity_across_agents(agent, ability):
    result = _episode(ability, agent)
    record = score_replay(result.replay)
    assert record.to_dict() == result.record.to_dict()


def test_rescore_detects_edited_command():
    result = _episode()
    ticks = [copy.deepcopy(t) for t in result.replay.ticks]
    ticks[len(ticks) // 2]["cmd"]["throttle"] = 0.123
    tampered = EpisodeReplay(result.replay.header, tuple(ticks), result.replay.footer)
    with pytest.raises(ReplayIntegrityError):
        score_replay(tampered)


def test_rescore_detects_truncation():
    result = _episode()
    tampered = EpisodeReplay(result.replay.header, result.replay.ticks[:-5],
                             result.replay.footer)
    with pytest.raises(ReplayIntegrityError):
        score_replay(tampered)


def test_rescore_detects_edited_footer_score():
    result = _episode()
    footer = copy.deepcopy(result.replay.footer)
    footer["score"]["ds"] = 0.123
    tampered = EpisodeReplay(result.replay.header, result.replay.ticks, footer)
    with pytest.raises(ReplayIntegrityError):
        score_replay(tampered)


def test_rescore_without_footer_recomputes_from_body():
    result = _episode()
    headless = EpisodeReplay(result.replay.header, result.replay.ticks, None)
    record = score_replay(headless, strict=False)
    assert record.to_dict() == result.record.to_dict()


def test_rescore_engine_digest_mismatch_rejected():
    result = _episode()
    header = dict(result.replay.header)
    header["engine_digest"] = "not-the-real-digest"
    with pytest.raises(ReplayIntegrityError):
        score_replay(EpisodeReplay(header, result.replay.ticks, result.replay.footer))


def test_replay_schema_gate():
    result = _episode()
    header = dict(result.replay.header)
    header["schema_version"] = 999
    text = EpisodeReplay(header, result.replay.ticks, result.replay.footer).to_jsonl()
    with pytest.raises(ReplayError):
        EpisodeReplay.from_jsonl(text)


class _FailingAgent:
    def reset(self):
        pass

    def act(self, obs):
        raise AgentFailure("policy crashed")


def test_agent_failure_marks_episode_invalid():
    tpl = TEMPLATES["obstacle_detouring"]
    params = sample_params(tpl, 3, 0)
    result = run_episode(tpl, params, 3, "custom", agent=_FailingAgent())
    assert result.status == "invalid"
    assert result.record.valid is False
    assert result.record.ds == 0.0
    assert result.record.invalid_reason == "policy crashed"
    assert result.replay.footer["status"] == "invalid"


class _RandomAgent:
    """Deterministic pseudo-random actions (keyed off the tick)."""

    def __init__(self, seed):
        self._seed = seed

    def reset(self):
        pass

    def act(self, obs):
        import hashlib
        h = hashlib.sha256(f"{self._seed}:{obs.tick}".encode()).digest()
        u = [b / 255.0 for b in h[:3]]
        return ControlCommand(throttle=u[0], steer=2.0 * u[1] - 1.0, brake=u[2] * 0.4)


def test_random_agent_scores_bounded():
    tpl = TEMPLATES["signalized_turning"]
    params = sample_params(tpl, 5, 0)
    result = run_episode(tpl, params, 5, "random", agent=_RandomAgent(5))
    r = result.record
    for v in (r.ds, r.rc, r.ls, r.es):
        assert 0.0 <= v <= 1.0


def _small_manifest(n=12):
    import dataclasses

    full = generate_suite(77)
    return dataclasses.replace(full, entries=full.entries[:n])


def test_suite_parallelism_invariance():
    manifest = _small_manifest()
    serial = run_suite(manifest, "reckless", parallel=1)
    parallel = run_suite(manifest, "reckless", parallel=4)
    assert json.dumps(serial, sort_keys=True) == json.dumps(parallel, sort_keys=True)


def test_suite_replays_persisted_and_rescore(tmp_path):
    manifest = _small_manifest(4)
    out = tmp_path / "replays"
    results = run_suite(manifest, "lawful_follower", parallel=2, out_dir=str(out))
    files = sorted(out.iterdir())
    assert len(files) == 4
    for f in files:
        replay = EpisodeReplay.load(f)
        record = score_replay(replay)
        assert record.to_dict() == replay.footer["score"]
    assert [r["route_id"] for r in results] == sorted(r["route_id"] for r in results)


def test_build_report_counts_and_sets():
    manifest = _small_manifest()
    results = run_suite(manifest, "reckless", parallel=4)
    report = build_report(results)
    assert report["n_routes"] == len(manifest.entries)
    assert report["n_valid"] <= report["n_routes"]
    assert 0.0 <= report["overall"]["ds"] <= 1.0
    for tag, split in report["sets"].items():
        assert tag in ("Basic", "Hard", "Thorny")
        assert 0.0 <= split["ds"] <= 1.0


def test_min_speed_threshold_constant():
    assert 0.0 < MIN_SPEED_EMIT_BELOW < 1.0
