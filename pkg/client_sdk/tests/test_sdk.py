"""SDK integration tests against a real in-process evaluation server.

The server side (`deskdrive`) is a test-only dependency: the SDK itself talks
to it exclusively over the wire protocol.
"""

import json
import socket
import threading
from pathlib import Path

import pytest

from deskdrive.harness import run_episode
from deskdrive.library import TEMPLATES
from deskdrive.protocol import AgentServer, ProtocolError
from deskdrive.suite import sample_params

import deskdrive_client as ddc

GOLDEN = Path(__file__).parents[2] / "tests" / "data" / "protocol_transcript.golden.json"

TPL = TEMPLATES["reasonable_speed_keeping"]


def serve_in_thread(template, params, seed, deadline_s=1.0, transcript=None):
    """Start one serve_episode in a background thread; returns (server, thread,
    box) where box collects the result or the server-side exception."""
    srv = AgentServer(deadline_s=deadline_s)
    box = {}

    def run():
        try:
            box["result"] = srv.serve_episode(template, params, seed,
                                              transcript=transcript)
        except Exception as exc:
            box["error"] = exc

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    return srv, thread, box


def finish(srv, thread, box):
    thread.join(timeout=60)
    srv.close()
    assert not thread.is_alive(), "server thread did not finish"
    if "error" in box:
        raise box["error"]
    return box["result"]


# ---------------------------------------------------------------------------
# protocol equivalence: sample policies over the wire == builtin in-process


@pytest.mark.parametrize("seed", range(10))
def test_sample_lawful_follower_matches_builtin(seed):
    params = sample_params(TPL, seed, seed % 3)
    srv, thread, box = serve_in_thread(TPL, params, seed)
    with ddc.connect(("127.0.0.1", srv.port), agent="sdk-lawful") as session:
        summary = ddc.run_agent(session, ddc.lawful_follower_policy())
    result = finish(srv, thread, box)

    reference = run_episode(TPL, params, seed, "lawful_follower")
    assert result.replay.ticks == reference.replay.ticks
    assert result.record.to_dict() == reference.record.to_dict()
    assert summary["score"] == reference.record.to_dict()
    assert summary["status"] == reference.status
    assert summary["valid"] is True


def test_full_throttle_matches_builtin_reckless():
    params = sample_params(TPL, 42, 0)
    srv, thread, box = serve_in_thread(TPL, params, 7)
    with ddc.connect(("127.0.0.1", srv.port)) as session:
        summary = ddc.run_agent(session, ddc.full_throttle_policy)
    result = finish(srv, thread, box)

    reference = run_episode(TPL, params, 7, "reckless")
    assert result.replay.ticks == reference.replay.ticks
    assert summary["score"] == reference.record.to_dict()


def test_golden_transcript_prefix_and_end():
    golden = json.loads(GOLDEN.read_text())
    template = TEMPLATES[golden["template_id"].rsplit("-", 1)[0]]
    transcript = []
    srv, thread, box = serve_in_thread(template, golden["params"], golden["seed"],
                                       transcript=transcript)
    with ddc.connect(("127.0.0.1", srv.port), agent="full_throttle") as session:
        ddc.run_agent(session, ddc.full_throttle_policy)
    finish(srv, thread, box)

    prefix = golden["prefix"]
    assert transcript[:len(prefix)] == prefix
    assert transcript[-1] == golden["end"]


# ---------------------------------------------------------------------------
# failure paths


def test_handshake_version_mismatch_surfaces_server_reason():
    params = sample_params(TPL, 42, 0)
    srv, thread, box = serve_in_thread(TPL, params, 7)
    with pytest.raises(ddc.HandshakeError, match="unsupported protocol version"):
        ddc.connect(("127.0.0.1", srv.port), protocol_version=999)
    thread.join(timeout=30)
    srv.close()
    assert isinstance(box.get("error"), ProtocolError)


def test_stalling_policy_times_out_server_side():
    params = sample_params(TPL, 42, 0)
    srv, thread, box = serve_in_thread(TPL, params, 7, deadline_s=0.2)

    session = ddc.connect(("127.0.0.1", srv.port), timeout_s=10)
    try:
        for _ in range(3):
            assert session.next_observation() is not None
            session.send_action(1.0, 0.0, 0.0)
        # go silent: take the next observation but never answer it, so the
        # server's action deadline must trip and invalidate the episode
        assert session.next_observation() is not None
        result = finish(srv, thread, box)
    finally:
        session.close()
    assert result.status == "invalid"
    assert result.record.valid is False
    assert "connection" in result.record.invalid_reason


def test_policy_exception_returns_invalid_summary_and_closes():
    params = sample_params(TPL, 42, 0)
    srv, thread, box = serve_in_thread(TPL, params, 7, deadline_s=0.5)

    def broken(obs):
        raise RuntimeError("policy bug")

    session = ddc.connect(("127.0.0.1", srv.port))
    summary = ddc.run_agent(session, broken)
    assert summary["valid"] is False
    assert summary["status"] == "invalid"
    assert "policy bug" in summary["error"]
    assert session.state == "closed"

    result = finish(srv, thread, box)  # server sees the hangup -> invalid
    assert result.status == "invalid"


# ---------------------------------------------------------------------------
# session state machine


def test_alternation_enforced_locally():
    params = sample_params(TPL, 42, 0)
    srv, thread, box = serve_in_thread(TPL, params, 7)
    with ddc.connect(("127.0.0.1", srv.port)) as session:
        obs = session.next_observation()
        assert obs is not None
        with pytest.raises(ddc.ProtocolStateError, match="not been answered"):
            session.next_observation()
        session.send_action(0.0, 0.0, 1.0)
        with pytest.raises(ddc.ProtocolStateError, match="one action per"):
            session.send_action(0.0, 0.0, 1.0)
        summary = ddc.run_agent(session, ddc.full_throttle_policy)
    assert summary["valid"] is True
    finish(srv, thread, box)


def test_connect_parses_host_port_string():
    params = sample_params(TPL, 42, 0)
    srv, thread, box = serve_in_thread(TPL, params, 7)
    with ddc.connect(f"127.0.0.1:{srv.port}") as session:
        assert session.hello_ack["accepted"] is True
        assert session.hello_ack["route_id"].startswith(TPL.template_id)
        ddc.run_agent(session, ddc.full_throttle_policy)
    finish(srv, thread, box)
    with pytest.raises(ddc.ClientError, match="endpoint"):
        ddc.connect("not-an-endpoint")


def test_send_action_before_handshake_refused():
    a, b = socket.socketpair()
    try:
        session = ddc.ClientSession(a, agent="x")
        with pytest.raises(ddc.ClientError, match="connecting"):
            session.next_observation()
        with pytest.raises(ddc.ProtocolStateError):
            session.send_action(0.0, 0.0, 0.0)
    finally:
        a.close()
        b.close()
