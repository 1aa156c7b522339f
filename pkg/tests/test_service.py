import json

import pytest
from fastapi.testclient import TestClient

from deskdrive import PROTOCOL_VERSION, SCHEMA_VERSION
from deskdrive.harness import run_episode
from deskdrive.library import TEMPLATES
from deskdrive.service import create_app
from deskdrive.suite import generate_suite, sample_params


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_meta(client):
    body = client.get("/meta").json()
    assert body["schema_version"] == SCHEMA_VERSION
    assert body["protocol_version"] == PROTOCOL_VERSION
    assert "lawful_follower" in body["builtin_agents"]


def test_catalog_partition(client):
    entries = client.get("/catalog").json()
    assert len(entries) == 30
    counts = {}
    for e in entries:
        counts[e["set_tag"]] = counts.get(e["set_tag"], 0) + 1
    assert counts == {"Basic": 11, "Hard": 10, "Thorny": 9}


def test_generate_matches_library(client):
    body = client.post("/generate", json={"base_seed": 42}).json()
    assert json.dumps(body, sort_keys=True) == json.dumps(
        generate_suite(42).to_dict(), sort_keys=True)


def test_generate_rejects_bad_input(client):
    assert client.post("/generate", json={"base_seed": -1}).status_code == 422
    assert client.post("/generate", json={}).status_code == 422


def test_run_unknown_agent_rejected(client):
    resp = client.post("/run", json={"base_seed": 1, "agent": "nope"})
    assert resp.status_code == 422


def test_run_small_suite(client):
    resp = client.post("/run", json={"base_seed": 7, "agent": "reckless",
                                     "variants": 1, "parallel": 2})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["results"]) == 30
    assert body["report"]["n_routes"] == 30
    assert 0.0 <= body["report"]["overall"]["ds"] <= 1.0


def test_rescore_round_trip(client):
    tpl = TEMPLATES["signalized_turning"]
    params = sample_params(tpl, 9, 0)
    result = run_episode(tpl, params, 9, "lawful_follower")
    resp = client.post("/rescore", json={"replay_jsonl": result.replay.to_jsonl()})
    assert resp.status_code == 200
    assert resp.json()["score"] == result.record.to_dict()


def test_rescore_rejects_garbage(client):
    resp = client.post("/rescore", json={"replay_jsonl": "not a replay"})
    assert resp.status_code == 422


def test_report_endpoint(client):
    manifest = generate_suite(5, variants=1)
    run = client.post("/run", json={"base_seed": 5, "agent": "reckless",
                                    "variants": 1}).json()
    resp = client.post("/report", json={"results": run["results"]})
    assert resp.status_code == 200
    assert resp.json() == run["report"]
    assert manifest.suite_id == run["suite_id"]


def test_manifest_validate(client):
    manifest = generate_suite(3, variants=1).to_dict()
    resp = client.post("/manifest/validate", json=manifest)
    assert resp.status_code == 200
    assert resp.json()["n_entries"] == 30
    manifest["schema_version"] = 999
    assert client.post("/manifest/validate", json=manifest).status_code == 422
