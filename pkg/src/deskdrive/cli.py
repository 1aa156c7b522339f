"""Command-line entry point.

Verbs: catalog, generate, run, rescore, report, serve. The CLI drives the core
package directly (runs are local and deterministic; routing them through the
HTTP service would add nothing but latency). `serve` starts the HTTP wrapper
for programmatic use.

Exit codes: 0 on success, 2 on invalid input or integrity failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .agents import BUILTIN_AGENTS
from .harness import build_report, run_episode, run_suite, score_replay
from .library import list_catalog
from .protocol import AgentServer, ProtocolError
from .replay import EpisodeReplay, ReplayError
from .scenarios import ParameterError, TemplateError
from .suite import SuiteManifest, _template_for, generate_suite, load_manifest

OUT_DIR_ENV = "DESKDRIVE_OUT"


class CliError(Exception):
    pass


def _default_out() -> str:
    return os.environ.get(OUT_DIR_ENV, "deskdrive_out")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _parse_agent(spec: str):
    """Returns ("builtin", name) or ("external", (host, port))."""
    kind, _, rest = spec.partition(":")
    if kind == "builtin":
        if rest not in BUILTIN_AGENTS:
            raise CliError(
                f"unknown builtin agent {rest!r}; choose from {BUILTIN_AGENTS}")
        return "builtin", rest
    if kind == "external":
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise CliError(
                "external agent endpoint must be external:<host>:<port>")
        return "external", (host, int(port))
    raise CliError("agent must be builtin:<name> or external:<host>:<port>")


def cmd_catalog(args) -> int:
    entries = list_catalog()
    if args.json:
        print(json.dumps(entries, indent=2))
        return 0
    by_set: dict[str, list] = {}
    for e in entries:
        by_set.setdefault(e["set_tag"], []).append(e)
    for tag in ("Basic", "Hard", "Thorny"):
        rows = by_set.get(tag, [])
        print(f"{tag} ({len(rows)}):")
        for e in rows:
            print(f"  {e['ability_id']:<32} {e['description']}")
    print(f"total abilities: {len(entries)}")
    return 0


def cmd_generate(args) -> int:
    manifest = generate_suite(args.seed, variants=args.variants)
    out = Path(args.out or Path(_default_out()) / f"{manifest.suite_id}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(manifest.to_json(), encoding="utf-8")
    print(f"wrote {out} ({len(manifest.entries)} routes)")
    return 0


def _run_external(manifest: SuiteManifest, host: str, port: int,
                  out_dir: Path | None) -> list[dict]:
    results = []
    with AgentServer(host=host, port=port) as server:
        print(f"listening for the external agent on "
              f"{server.address[0]}:{server.port} "
              f"(one connection per episode, {len(manifest.entries)} episodes)")
        for entry in manifest.entries:
            template = _template_for(entry.template_id)
            result = server.serve_episode(template, entry.params, entry.seed)
            if out_dir is not None:
                fname = entry.route_id.replace(":", "_") + ".jsonl"
                result.replay.save(out_dir / fname)
            results.append({"route_id": entry.route_id, "status": result.status,
                            "score": result.record.to_dict()})
    return sorted(results, key=lambda r: r["route_id"])


def cmd_run(args) -> int:
    kind, agent = _parse_agent(args.agent)

    if args.suite:
        manifest = load_manifest(args.suite)
    elif args.template:
        manifest = None
    else:
        manifest = generate_suite(args.seed)

    out_dir = Path(args.out or _default_out())
    replay_dir = out_dir / "replays"

    if manifest is None:
        # single-route mode
        template = _template_for(args.template)
        from .suite import sample_params

        params = sample_params(template, args.seed, 0)
        if kind == "builtin":
            result = run_episode(template, params, args.seed, agent)
        else:
            host, port = agent
            with AgentServer(host=host, port=port) as server:
                print(f"listening for the external agent on "
                      f"{server.address[0]}:{server.port}")
                result = server.serve_episode(template, params, args.seed)
        replay_dir.mkdir(parents=True, exist_ok=True)
        replay_path = replay_dir / (
            result.record.route_id.replace(":", "_") + ".jsonl")
        result.replay.save(replay_path)
        print(json.dumps(result.record.to_dict(), indent=2))
        print(f"replay: {replay_path}")
        return 0

    replay_dir.mkdir(parents=True, exist_ok=True)
    if kind == "builtin":
        results = run_suite(manifest, agent, parallel=args.parallel,
                            out_dir=str(replay_dir))
    else:
        host, port = agent
        results = _run_external(manifest, host, port, replay_dir)
    report = build_report(results)
    _write_json(out_dir / "results.json", results)
    _write_json(out_dir / "report.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))
    print(f"results: {out_dir / 'results.json'}")
    return 0


def _iter_replay_paths(paths: list[str]):
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            yield from sorted(p.glob("*.jsonl"))
        else:
            yield p


def cmd_rescore(args) -> int:
    results = []
    for path in _iter_replay_paths(args.replays):
        replay = EpisodeReplay.load(path)
        record = score_replay(replay)
        results.append({"route_id": record.route_id,
                        "status": replay.footer["status"],
                        "score": record.to_dict()})
    if not results:
        raise CliError("no replay files found")
    report = build_report(results)
    payload = {"results": results, "report": report}
    if args.out:
        _write_json(Path(args.out), payload)
        print(f"wrote {args.out} ({len(results)} replays, all verified)")
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    merged: list[dict] = []
    for raw in args.results:
        payload = json.loads(Path(raw).read_text(encoding="utf-8"))
        if isinstance(payload, dict) and "results" in payload:
            payload = payload["results"]
        if not isinstance(payload, list):
            raise CliError(f"{raw}: expected a list of route results")
        merged.extend(payload)
    report = build_report(merged)
    if args.out:
        _write_json(Path(args.out), report)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deskdrive",
        description="Deterministic closed-loop driving-scenario benchmark.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("catalog", help="list ability categories and templates")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(fn=cmd_catalog)

    p = sub.add_parser("generate", help="emit a suite manifest")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--variants", type=int, default=3)
    p.add_argument("--out", help="manifest path (default under the output dir)")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("run", help="run a suite or a single route")
    p.add_argument("--agent", default="builtin:lawful_follower",
                   help="builtin:<name> or external:<host>:<port>")
    p.add_argument("--suite", help="suite manifest path")
    p.add_argument("--template", help="single template id (single-route mode)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} "
                                 "or ./deskdrive_out)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("rescore", help="recompute scores from replay files")
    p.add_argument("replays", nargs="+", help="replay files or directories")
    p.add_argument("--out", help="write the rescored report to this path")
    p.set_defaults(fn=cmd_rescore)

    p = sub.add_parser("report", help="merge route results into split tables")
    p.add_argument("results", nargs="+", help="results.json files")
    p.add_argument("--out", help="write the merged report to this path")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, TemplateError, ParameterError, ReplayError,
            ProtocolError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
