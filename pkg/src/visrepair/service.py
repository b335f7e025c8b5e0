"""HTTP service exposing the repair pipeline.

The service owns all pipeline execution; the CLI is just a client.  One
endpoint runs an issue end to end, the stage endpoints advance an existing
run directory one step at a time, so a long investigation can be resumed or
inspected between steps.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import pipeline
from .errors import RepairError
from .prompting import PromptContext

app = FastAPI(title="visrepair", version="0.1.0")


class RunRequest(BaseModel):
    issue_path: str
    repo_path: str
    config_path: str
    mode: Literal["live", "record", "replay"] = "replay"
    variant: Literal["base", "i2c", "c2i", "full"] = "full"
    out_dir: str = "runs"
    run_dir: str | None = None


class TrailItem(BaseModel):
    digest: str
    status: str


class RunResult(BaseModel):
    run_dir: str
    instance_id: str
    variant: str
    patch: str
    selected_digest: str | None
    fallback_used: bool
    trail: list[TrailItem] = Field(default_factory=list)
    total_dollars: str
    total_tokens: int


class StageRequest(BaseModel):
    run_dir: str


class StageResult(BaseModel):
    run_dir: str
    stage: str
    summary: dict


@app.exception_handler(RepairError)
async def repair_error_handler(_request: Request, exc: RepairError) -> JSONResponse:
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/runs/init")
def runs_init(request: RunRequest) -> dict:
    run_dir = pipeline.init_run(
        request.issue_path,
        request.repo_path,
        request.config_path,
        request.mode,
        request.variant,
        request.out_dir,
        run_dir=request.run_dir,
    )
    return {"run_dir": str(run_dir)}


@app.post("/runs", response_model=RunResult)
def runs(request: RunRequest) -> RunResult:
    run_dir = pipeline.init_run(
        request.issue_path,
        request.repo_path,
        request.config_path,
        request.mode,
        request.variant,
        request.out_dir,
        run_dir=request.run_dir,
    )
    state = pipeline.load_run(run_dir)
    result = pipeline.run_all(state)
    return RunResult(**result)


def _context(state: pipeline.RunState) -> PromptContext:
    docs = pipeline.load_docs(state)
    repro = pipeline.load_repro(state)
    return PromptContext(issue=state.issue, docs=docs, repro_script=repro.script_code)


@app.post("/stages/mine", response_model=StageResult)
def stages_mine(request: StageRequest) -> StageResult:
    state = pipeline.load_run(request.run_dir)
    docs = pipeline.stage_mine(state)
    pipeline.finalize_stage(state)
    return StageResult(
        run_dir=request.run_dir,
        stage="mine",
        summary={
            "documents": [{"path": d.path, "origin": d.origin} for d in docs.documents],
            "key_directories": list(docs.key_directories),
        },
    )


@app.post("/stages/repro", response_model=StageResult)
def stages_repro(request: StageRequest) -> StageResult:
    state = pipeline.load_run(request.run_dir)
    docs = pipeline.load_docs(state)
    artifact = pipeline.stage_repro(state, docs)
    pipeline.finalize_stage(state)
    return StageResult(
        run_dir=request.run_dir,
        stage="repro",
        summary={"origin": artifact.origin, "available": artifact.available},
    )


@app.post("/stages/localize", response_model=StageResult)
def stages_localize(request: StageRequest) -> StageResult:
    state = pipeline.load_run(request.run_dir)
    files, hunks = pipeline.stage_localize(state, _context(state))
    pipeline.finalize_stage(state)
    return StageResult(
        run_dir=request.run_dir,
        stage="localize",
        summary={
            "key_files": list(files.key_files),
            "hunks": [h.label for h in hunks.hunks],
            "hunk_fallback": hunks.fallback,
        },
    )


@app.post("/stages/generate", response_model=StageResult)
def stages_generate(request: StageRequest) -> StageResult:
    state = pipeline.load_run(request.run_dir)
    hunks = pipeline.load_hunks(state)
    generation = pipeline.stage_generate(state, _context(state), hunks)
    pipeline.finalize_stage(state)
    return StageResult(
        run_dir=request.run_dir,
        stage="generate",
        summary={
            "candidates": len(generation.candidates),
            "completions_seen": generation.completions_seen,
            "failures": len(generation.failures),
        },
    )


@app.post("/stages/validate", response_model=StageResult)
def stages_validate(request: StageRequest) -> StageResult:
    state = pipeline.load_run(request.run_dir)
    candidates = pipeline.load_candidates(state)
    repro = pipeline.load_repro(state)
    verdict = pipeline.stage_validate(state, _context(state), candidates, repro)
    selected = next(c for c in candidates if c.digest == verdict.selected_digest)
    pipeline.write_prediction(state, selected.diff_text)
    pipeline.finalize_stage(state)
    return StageResult(
        run_dir=request.run_dir,
        stage="validate",
        summary={
            "selected_digest": verdict.selected_digest,
            "fallback_used": verdict.fallback_used,
            "trail": [{"digest": t.digest, "status": t.status} for t in verdict.trail],
        },
    )
