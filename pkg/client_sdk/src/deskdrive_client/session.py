"""Wire-protocol client session.

Line-delimited JSON over TCP against a deskdrive evaluation server. The
session enforces the protocol's strict alternation: every observation must be
answered by exactly one action, and a second action for the same observation
is refused locally rather than corrupting the episode.

The SDK contains zero scoring logic; scores come only from the server's `end`
message.
"""

from __future__ import annotations

import json
import socket

PROTOCOL_VERSION = 1


class ClientError(Exception):
    """Base class for SDK failures."""


class HandshakeError(ClientError):
    """The server refused the connection; carries the server's diagnostic."""


class ProtocolStateError(ClientError):
    """Alternation misuse: an action sent without a pending observation."""


def _dumps(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True, separators=(",", ":"))


class ClientSession:
    """One connected episode. Use `connect` to create one."""

    def __init__(self, sock: socket.socket, agent: str):
        self._sock = sock
        self._rfile = sock.makefile("rb")
        self._wfile = sock.makefile("wb")
        self.agent = agent
        self.protocol_version = PROTOCOL_VERSION
        self.state = "connecting"
        self.hello_ack: dict | None = None
        self.end_message: dict | None = None
        self._pending_tick: int | None = None

    # --- transport ---------------------------------------------------------

    def _send(self, msg: dict) -> None:
        self._wfile.write((_dumps(msg) + "\n").encode("utf-8"))
        self._wfile.flush()

    def _recv(self) -> dict:
        line = self._rfile.readline()
        if not line:
            raise ClientError("connection closed by server")
        msg = json.loads(line.decode("utf-8"))
        if not isinstance(msg, dict) or "kind" not in msg:
            raise ClientError("malformed message from server")
        return msg

    # --- protocol ----------------------------------------------------------

    def handshake(self, protocol_version: int = PROTOCOL_VERSION) -> dict:
        self._send({"kind": "hello", "protocol_version": protocol_version,
                    "agent": self.agent})
        ack = self._recv()
        if ack.get("kind") != "hello_ack":
            raise HandshakeError(f"expected hello_ack, got {ack.get('kind')!r}")
        if not ack.get("accepted"):
            self.close()
            # pass the server's diagnostic through verbatim
            raise HandshakeError(ack.get("reason", "handshake refused"))
        self.hello_ack = ack
        self.state = "connected"
        return ack

    def next_observation(self) -> dict | None:
        """Blocks for the next observation; returns None once the episode has
        ended (the `end` message is kept on `end_message`)."""
        if self.state != "connected":
            raise ClientError(f"session is {self.state}, not connected")
        if self._pending_tick is not None:
            raise ProtocolStateError(
                "previous observation has not been answered yet")
        msg = self._recv()
        if msg["kind"] == "end":
            self.end_message = msg
            self.state = "ended"
            return None
        if msg["kind"] != "observation":
            raise ClientError(f"unexpected message kind {msg['kind']!r}")
        self._pending_tick = msg["tick"]
        return msg["data"]

    def send_action(self, throttle: float, steer: float, brake: float,
                    hand_brake: bool = False) -> None:
        if self._pending_tick is None:
            raise ProtocolStateError(
                "no pending observation; one action per observation")
        tick, self._pending_tick = self._pending_tick, None
        self._send({"kind": "action", "tick": tick,
                    "throttle": throttle, "steer": steer, "brake": brake,
                    "hand_brake": bool(hand_brake)})

    def close(self) -> None:
        if self.state != "closed":
            self.state = "closed"
            try:
                self._sock.close()
            except OSError:
                pass

    def __enter__(self) -> "ClientSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def connect(endpoint: tuple[str, int] | str, agent: str = "sdk",
            protocol_version: int = PROTOCOL_VERSION,
            timeout_s: float = 30.0) -> ClientSession:
    """Connect and complete the version handshake.

    `endpoint` is (host, port) or "host:port". Raises HandshakeError with the
    server's diagnostic on refusal, OSError if the server is unreachable.
    """
    if isinstance(endpoint, str):
        host, _, port = endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise ClientError("endpoint must be (host, port) or 'host:port'")
        endpoint = (host, int(port))
    sock = socket.create_connection(endpoint, timeout=timeout_s)
    sock.settimeout(timeout_s)
    session = ClientSession(sock, agent)
    session.handshake(protocol_version)
    return session


def run_agent(session: ClientSession, policy) -> dict:
    """Drive one episode: observation -> policy(observation) -> action, until
    the server ends the episode. `policy` returns a dict with throttle, steer,
    brake, and optionally hand_brake.

    Returns the episode summary. Policy exceptions are caught; the session is
    closed cleanly and the summary reports the episode as invalid.
    """
    try:
        while True:
            obs = session.next_observation()
            if obs is None:
                break
            action = policy(obs)
            session.send_action(
                throttle=action["throttle"], steer=action["steer"],
                brake=action["brake"],
                hand_brake=action.get("hand_brake", False))
    except ClientError as exc:
        session.close()
        return {"status": "invalid", "valid": False, "error": str(exc)}
    except Exception as exc:  # policy bug: close cleanly, report it
        session.close()
        return {"status": "invalid", "valid": False,
                "error": f"policy raised: {exc}"}
    finally:
        session.close()
    end = session.end_message or {}
    score = end.get("score", {})
    return {"status": end.get("status", "unknown"),
            "valid": bool(score.get("valid", False)),
            "score": score}
