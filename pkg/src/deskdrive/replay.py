"""Episode replay serialization (JSON Lines).

A replay is a header record, one record per tick (the agent command plus the
resulting ego state), and a footer with the event ledger and the score. Floats
are serialized with Python's repr, which round-trips bit-exactly, so replays
rescore to byte-identical results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import PROTOCOL_VERSION, SCHEMA_VERSION


class ReplayError(ValueError):
    pass


class ReplayIntegrityError(ReplayError):
    """The recorded trajectory does not match a deterministic re-simulation."""


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class EpisodeReplay:
    header: dict
    ticks: tuple  # tick record dicts
    footer: dict

    def to_jsonl(self) -> str:
        lines = [dumps(self.header)]
        lines.extend(dumps(t) for t in self.ticks)
        lines.append(dumps(self.footer))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeReplay":
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        if len(records) < 2:
            raise ReplayError("replay must contain a header and a footer")
        header, footer = records[0], records[-1]
        if header.get("record") != "header":
            raise ReplayError("first record is not a header")
        if footer.get("record") != "footer":
            raise ReplayError("last record is not a footer")
        if header.get("schema_version") != SCHEMA_VERSION:
            raise ReplayError(
                f"unsupported replay schema version {header.get('schema_version')!r}"
            )
        ticks = []
        for r in records[1:-1]:
            if r.get("record") != "tick":
                raise ReplayError(f"unexpected record kind {r.get('record')!r}")
            ticks.append(r)
        return cls(header=header, ticks=tuple(ticks), footer=footer)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def load(cls, path) -> "EpisodeReplay":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())


def make_header(*, route_id, template_id, params, seed, agent, engine_digest) -> dict:
    return {
        "record": "header",
        "schema_version": SCHEMA_VERSION,
        "protocol_version": PROTOCOL_VERSION,
        "route_id": route_id,
        "template_id": template_id,
        "params": params,
        "seed": seed,
        "agent": agent,
        "engine_digest": engine_digest,
    }


def make_tick(tick: int, cmd: dict, ego: dict) -> dict:
    return {"record": "tick", "tick": tick, "cmd": cmd, "ego": ego}


def make_footer(*, status, end_tick, waypoints_passed, waypoints_total, events,
                score, outside_lane_fraction, min_speed_ratio) -> dict:
    return {
        "record": "footer",
        "status": status,
        "end_tick": end_tick,
        "waypoints_passed": waypoints_passed,
        "waypoints_total": waypoints_total,
        "events": events,
        "score": score,
        "outside_lane_fraction": outside_lane_fraction,
        "min_speed_ratio": min_speed_ratio,
    }
