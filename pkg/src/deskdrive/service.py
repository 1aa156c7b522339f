"""HTTP service wrapping the benchmark core.

Thin, synchronous wrappers: every endpoint delegates to the same functions the
CLI uses, so service results are identical to local runs. Suited to desk-scale
suites; long runs should prefer the CLI, which streams replays to disk.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import PROTOCOL_VERSION, SCHEMA_VERSION, __version__
from .agents import BUILTIN_AGENTS
from .harness import build_report, run_suite, score_replay
from .library import list_catalog
from .replay import EpisodeReplay, ReplayError
from .scenarios import TemplateError
from .suite import SuiteManifest, generate_suite


class GenerateRequest(BaseModel):
    base_seed: int = Field(ge=0)
    variants: int = Field(default=3, ge=1, le=10)


class RunRequest(BaseModel):
    base_seed: int = Field(ge=0)
    agent: str = Field(default="lawful_follower")
    variants: int = Field(default=3, ge=1, le=10)
    parallel: int = Field(default=1, ge=1, le=32)


class RunResponse(BaseModel):
    suite_id: str
    agent: str
    results: list[dict]
    report: dict


class RescoreRequest(BaseModel):
    replay_jsonl: str


class RescoreResponse(BaseModel):
    score: dict


class ReportRequest(BaseModel):
    results: list[dict]


def create_app() -> FastAPI:
    app = FastAPI(title="deskdrive", version=__version__)

    @app.get("/meta")
    def meta() -> dict:
        return {
            "version": __version__,
            "schema_version": SCHEMA_VERSION,
            "protocol_version": PROTOCOL_VERSION,
            "builtin_agents": list(BUILTIN_AGENTS),
        }

    @app.get("/catalog")
    def catalog() -> list[dict]:
        return list_catalog()

    @app.post("/generate")
    def generate(req: GenerateRequest) -> dict:
        manifest = generate_suite(req.base_seed, variants=req.variants)
        return manifest.to_dict()

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        if req.agent not in BUILTIN_AGENTS:
            raise HTTPException(status_code=422,
                                detail=f"unknown builtin agent {req.agent!r}")
        manifest = generate_suite(req.base_seed, variants=req.variants)
        results = run_suite(manifest, req.agent, parallel=req.parallel)
        return RunResponse(suite_id=manifest.suite_id, agent=req.agent,
                           results=results, report=build_report(results))

    @app.post("/rescore", response_model=RescoreResponse)
    def rescore(req: RescoreRequest) -> RescoreResponse:
        try:
            replay = EpisodeReplay.from_jsonl(req.replay_jsonl)
            record = score_replay(replay)
        except (ValueError, TemplateError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return RescoreResponse(score=record.to_dict())

    @app.post("/report")
    def report(req: ReportRequest) -> dict:
        try:
            return build_report(req.results)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/manifest/validate")
    def validate_manifest(manifest: dict) -> dict:
        try:
            parsed = SuiteManifest.from_dict(manifest)
        except (TemplateError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"suite_id": parsed.suite_id, "n_entries": len(parsed.entries)}

    return app


app = create_app()
