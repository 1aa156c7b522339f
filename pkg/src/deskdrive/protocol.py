"""Wire protocol server for evaluating external agents.

Line-delimited JSON over a TCP stream. The evaluation harness is the server;
an external policy connects once per episode. Message kinds:

  client -> server   hello        {"kind", "protocol_version", "agent"}
  server -> client   hello_ack    {"kind", "protocol_version", "accepted",
                                   "reason"?, "route_id"?, "seed"?}
  server -> client   observation  {"kind", "tick", "data"}
  client -> server   action       {"kind", "tick", "throttle", "steer",
                                   "brake", "hand_brake"}
  server -> client   end          {"kind", "status", "score"}

Strict alternation: exactly one action is consumed per observation and the
engine never advances without one. A missing, late (past the wall-clock
deadline), or malformed action invalidates the episode rather than being
papered over with a default command. Out-of-range action fields are clamped
with a logged warning (the command type clamps on ingestion).
"""

from __future__ import annotations

import json
import logging
import socket

from . import PROTOCOL_VERSION
from .harness import AgentFailure, EpisodeResult, run_episode
from .world import ControlCommand

log = logging.getLogger(__name__)

DEFAULT_DEADLINE_S = 1.0

_ACTION_FIELDS = ("throttle", "steer", "brake", "hand_brake")


class ProtocolError(Exception):
    """Session-level failure: handshake refusal or transport misuse."""


def dumps_message(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True, separators=(",", ":"))


def send_message(wfile, msg: dict) -> None:
    wfile.write((dumps_message(msg) + "\n").encode("utf-8"))
    wfile.flush()


def recv_message(rfile) -> dict:
    line = rfile.readline()
    if not line:
        raise ProtocolError("connection closed by peer")
    try:
        msg = json.loads(line.decode("utf-8"))
    except ValueError as exc:
        raise ProtocolError(f"malformed message: {exc}") from exc
    if not isinstance(msg, dict) or "kind" not in msg:
        raise ProtocolError("message is not an object with a 'kind' field")
    return msg


def action_to_command(msg: dict) -> ControlCommand:
    """Validate an action message and clamp its fields into a command."""
    missing = [f for f in _ACTION_FIELDS if f not in msg]
    if missing:
        raise ProtocolError(f"action message missing fields: {missing}")
    throttle, steer, brake = msg["throttle"], msg["steer"], msg["brake"]
    for name, value, lo, hi in (
        ("throttle", throttle, 0.0, 1.0),
        ("steer", steer, -1.0, 1.0),
        ("brake", brake, 0.0, 1.0),
    ):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ProtocolError(f"action field {name!r} is not a number")
        if not lo <= value <= hi:
            log.warning("action field %s=%r outside [%s, %s]; clamping",
                        name, value, lo, hi)
    return ControlCommand(throttle=throttle, steer=steer, brake=brake,
                          hand_brake=bool(msg["hand_brake"]))


class _WireAgent:
    """Adapter exposing a connected external policy through act/reset."""

    def __init__(self, rfile, wfile, deadline_s: float, sock: socket.socket,
                 transcript: list | None = None):
        self._rfile = rfile
        self._wfile = wfile
        self._deadline = deadline_s
        self._sock = sock
        self._transcript = transcript

    def reset(self) -> None:
        pass

    def _log(self, direction: str, msg: dict) -> None:
        if self._transcript is not None:
            self._transcript.append({"dir": direction, "line": dumps_message(msg)})

    def send(self, msg: dict) -> None:
        self._log("server", msg)
        send_message(self._wfile, msg)

    def act(self, obs) -> ControlCommand:
        out = {"kind": "observation", "tick": obs.tick, "data": obs.to_dict()}
        try:
            self.send(out)
            self._sock.settimeout(self._deadline)
            msg = recv_message(self._rfile)
        except (ProtocolError, OSError) as exc:
            raise AgentFailure(f"agent connection failed: {exc}") from exc
        self._log("client", msg)
        if msg["kind"] != "action":
            raise AgentFailure(f"expected an action message, got {msg['kind']!r}")
        if msg.get("tick") != obs.tick:
            raise AgentFailure(
                f"action tick {msg.get('tick')!r} does not match observation "
                f"tick {obs.tick}")
        try:
            return action_to_command(msg)
        except ProtocolError as exc:
            raise AgentFailure(str(exc)) from exc


class AgentServer:
    """Listens for external-agent connections; one session per episode."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 deadline_s: float = DEFAULT_DEADLINE_S):
        self._listener = socket.create_server((host, port))
        self._deadline = deadline_s

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    @property
    def port(self) -> int:
        return self.address[1]

    def close(self) -> None:
        self._listener.close()

    def __enter__(self) -> "AgentServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def serve_episode(self, template, params: dict, seed: int,
                      accept_timeout_s: float = 30.0,
                      transcript: list | None = None) -> EpisodeResult:
        """Accept one connection, run the handshake, then run the episode with
        the remote policy in the control loop. Returns the episode result; the
        remote side receives an `end` message with the final status and score.
        """
        self._listener.settimeout(accept_timeout_s)
        conn, _ = self._listener.accept()
        try:
            rfile = conn.makefile("rb")
            wfile = conn.makefile("wb")
            agent = _WireAgent(rfile, wfile, self._deadline, conn, transcript)

            conn.settimeout(self._deadline)
            hello = recv_message(rfile)
            if transcript is not None:
                transcript.append({"dir": "client", "line": dumps_message(hello)})
            if hello["kind"] != "hello":
                raise ProtocolError(f"expected hello, got {hello['kind']!r}")
            if hello.get("protocol_version") != PROTOCOL_VERSION:
                agent.send({
                    "kind": "hello_ack",
                    "protocol_version": PROTOCOL_VERSION,
                    "accepted": False,
                    "reason": (
                        f"unsupported protocol version "
                        f"{hello.get('protocol_version')!r}; server speaks "
                        f"{PROTOCOL_VERSION}"),
                })
                raise ProtocolError("handshake refused: protocol version mismatch")
            agent_name = str(hello.get("agent", "external"))

            result = None

            def run():
                nonlocal result
                result = run_episode(template, params, seed,
                                     f"external:{agent_name}", agent=agent)

            agent.send({
                "kind": "hello_ack",
                "protocol_version": PROTOCOL_VERSION,
                "accepted": True,
                "route_id": f"{template.template_id}:{seed}",
                "seed": seed,
            })
            run()
            try:
                agent.send({
                    "kind": "end",
                    "status": result.status,
                    "score": result.replay.footer["score"],
                })
            except OSError:
                pass  # peer already gone; the result stands regardless
            return result
        finally:
            conn.close()
