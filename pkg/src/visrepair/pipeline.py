"""End-to-end orchestration and run-directory persistence.

A run lives in ``<out>/<instance_id>/<timestamp>/`` and accumulates one
artifact directory per stage, so stages can execute in one process or as
separate invocations against the same run directory.  Every artifact is
deterministic JSON or verbatim text; nothing in the run directory depends on
wall-clock time or absolute machine paths except ``run.json``, which records
where the inputs came from.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .codeview import BugHunk
from .config import Config, load_config
from .errors import NoValidCandidates
from .knowledge import EMPTY_DOCUMENT_SET, DocumentSet, MinedDocument, mine_knowledge
from .localize import FileLocalization, HunkLocalization, localize_files, localize_hunks
from .patchgen import Edit, PatchCandidate, PatchGeneration, generate_patches
from .prompting import PromptContext
from .provider import (
    CostLedger,
    HttpBackend,
    ModelProvider,
    PriceTable,
    Transcript,
)
from .repro import NO_REPRO, ReproArtifact, generate_repro
from .validate import (
    RenderHarness,
    ValidationVerdict,
    select_patch,
    select_without_validation,
)
from .workspace import IssueReport, RepoSnapshot, load_issue_report, snapshot_repository

log = logging.getLogger(__name__)


@dataclass
class RunState:
    run_dir: Path
    config: Config
    mode: str
    variant: str
    issue: IssueReport
    snapshot: RepoSnapshot
    provider: ModelProvider

    @property
    def knowledge_dir(self) -> Path:
        return self.run_dir / "knowledge"

    @property
    def repro_dir(self) -> Path:
        return self.run_dir / "repro"

    @property
    def candidates_dir(self) -> Path:
        return self.run_dir / "candidates"

    @property
    def shots_dir(self) -> Path:
        return self.run_dir / "shots"

    @property
    def builds_dir(self) -> Path:
        return self.run_dir / "builds"


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


# --- run lifecycle -----------------------------------------------------------


def init_run(
    issue_path: Path | str,
    repo_path: Path | str,
    config_path: Path | str,
    mode: str,
    variant: str,
    out_dir: Path | str,
    run_dir: Path | str | None = None,
) -> Path:
    """Create a run directory and pin the inputs it will work from."""
    issue = load_issue_report(issue_path)
    if run_dir is None:
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%f")
        run_dir = Path(out_dir) / issue.instance_id / stamp
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    _write_json(
        run_dir / "run.json",
        {
            "instance_id": issue.instance_id,
            "issue_path": str(Path(issue_path).resolve()),
            "repo_path": str(Path(repo_path).resolve()),
            "config_path": str(Path(config_path).resolve()),
            "mode": mode,
            "variant": variant,
        },
    )
    return run_dir


def make_provider(config: Config, mode: str, ledger: CostLedger | None = None) -> ModelProvider:
    transcript = Transcript()
    if config.provider.transcript and Path(config.provider.transcript).is_file():
        transcript = Transcript.load(config.provider.transcript)
    backend = None
    if mode in ("live", "record"):
        backend = HttpBackend(config.provider.chat_endpoint, config.provider.embed_endpoint)
    return ModelProvider(
        mode=mode,
        chat_model=config.models.chat,
        embed_model=config.models.embed,
        backend=backend,
        transcript=transcript,
        price_table=PriceTable(config.models.prices),
        ledger=ledger or CostLedger(),
    )


def load_run(run_dir: Path | str, provider: ModelProvider | None = None) -> RunState:
    """Rebuild working state for a run directory created by init_run."""
    run_dir = Path(run_dir)
    meta = _read_json(run_dir / "run.json")
    config = load_config(meta["config_path"]).apply_variant(meta["variant"])
    issue = load_issue_report(meta["issue_path"])
    snapshot = snapshot_repository(meta["repo_path"])
    if provider is None:
        provider = make_provider(config, meta["mode"])
    return RunState(
        run_dir=run_dir,
        config=config,
        mode=meta["mode"],
        variant=meta["variant"],
        issue=issue,
        snapshot=snapshot,
        provider=provider,
    )


def finalize_stage(state: RunState) -> None:
    """Fold this invocation's ledger and transcript into the run directory."""
    ledger_path = state.run_dir / "ledger.json"
    combined = CostLedger()
    if ledger_path.is_file():
        combined = CostLedger.from_json(_read_json(ledger_path))
    combined.extend(state.provider.ledger)
    _write_json(ledger_path, combined.to_json())
    if state.mode == "record" and state.config.provider.transcript:
        transcript_path = Path(state.config.provider.transcript)
        merged = Transcript()
        if transcript_path.is_file():
            merged = Transcript.load(transcript_path)
        merged.merge(state.provider.transcript)
        transcript_path.parent.mkdir(parents=True, exist_ok=True)
        merged.save(transcript_path)


# --- stage: knowledge --------------------------------------------------------


def stage_mine(state: RunState) -> DocumentSet:
    if not state.config.pipeline.enable_image2code:
        docs = EMPTY_DOCUMENT_SET
    else:
        docs = mine_knowledge(state.provider, state.issue, state.snapshot, state.config)
    _write_json(
        state.knowledge_dir / "docs.json",
        {
            "understanding": docs.understanding,
            "key_directories": list(docs.key_directories),
            "documents": [
                {"path": d.path, "origin": d.origin, "text": d.text} for d in docs.documents
            ],
        },
    )
    return docs


def load_docs(state: RunState) -> DocumentSet:
    path = state.knowledge_dir / "docs.json"
    if not path.is_file():
        return EMPTY_DOCUMENT_SET
    doc = _read_json(path)
    return DocumentSet(
        documents=tuple(
            MinedDocument(path=d["path"], text=d["text"], origin=d["origin"])
            for d in doc.get("documents", [])
        ),
        key_directories=tuple(doc.get("key_directories", [])),
        understanding=doc.get("understanding"),
    )


# --- stage: reproduction -----------------------------------------------------


def stage_repro(state: RunState, docs: DocumentSet) -> ReproArtifact:
    context = PromptContext(issue=state.issue, docs=docs)
    if state.issue.repro_code or state.config.pipeline.enable_image2code:
        # Reporter-supplied code short-circuits generation inside.
        artifact = generate_repro(state.provider, context, state.config)
    else:
        artifact = NO_REPRO
    _write_json(
        state.repro_dir / "meta.json",
        {"origin": artifact.origin, "notes": artifact.notes},
    )
    if artifact.available:
        (state.repro_dir / "script.js").write_text(artifact.script_code, encoding="utf-8")
        (state.repro_dir / "page.html").write_text(artifact.host_page, encoding="utf-8")
    return artifact


def load_repro(state: RunState) -> ReproArtifact:
    meta_path = state.repro_dir / "meta.json"
    if not meta_path.is_file():
        return NO_REPRO
    meta = _read_json(meta_path)
    script_path = state.repro_dir / "script.js"
    if not script_path.is_file():
        return NO_REPRO
    return ReproArtifact(
        script_code=script_path.read_text(encoding="utf-8"),
        host_page=(state.repro_dir / "page.html").read_text(encoding="utf-8"),
        origin=meta["origin"],
        notes=meta.get("notes"),
    )


# --- stage: localization -----------------------------------------------------


def stage_localize(
    state: RunState, context: PromptContext
) -> tuple[FileLocalization, HunkLocalization]:
    files = localize_files(state.provider, context, state.snapshot, state.config)
    hunks = localize_hunks(
        state.provider, context, state.snapshot, files.key_files, state.config
    )
    _write_json(
        state.run_dir / "localization.json",
        {
            "suspicious": [{"path": p, "origin": o} for p, o in files.suspicious],
            "key_files": list(files.key_files),
            "key_directories": list(files.key_directories),
            "filter_fallback": files.filter_fallback,
            "hunks": [
                {
                    "path": h.path,
                    "element": h.element_name,
                    "start_line": h.start_line,
                    "end_line": h.end_line,
                }
                for h in hunks.hunks
            ],
            "hunk_origins": {label: list(samples) for label, samples in hunks.origins},
            "hunk_fallback": hunks.fallback,
        },
    )
    return files, hunks


def load_hunks(state: RunState) -> tuple[BugHunk, ...]:
    doc = _read_json(state.run_dir / "localization.json")
    hunks = []
    for entry in doc["hunks"]:
        text = state.snapshot.read_text(entry["path"])
        lines = text.splitlines(keepends=True)
        hunks.append(
            BugHunk(
                path=entry["path"],
                element_name=entry["element"],
                start_line=entry["start_line"],
                end_line=entry["end_line"],
                text="".join(lines[entry["start_line"] - 1 : entry["end_line"]]),
            )
        )
    return tuple(hunks)


# --- stage: patch generation -------------------------------------------------


def stage_generate(
    state: RunState, context: PromptContext, hunks: tuple[BugHunk, ...]
) -> PatchGeneration:
    try:
        generation = generate_patches(
            state.provider,
            context,
            state.snapshot.read_text,
            state.snapshot.file_index,
            hunks,
            state.config,
        )
    except NoValidCandidates:
        _write_json(
            state.candidates_dir / "meta.json",
            {"completions_seen": 0, "failures": [], "candidates": []},
        )
        raise
    state.candidates_dir.mkdir(parents=True, exist_ok=True)
    for candidate in generation.candidates:
        name = f"{candidate.index:03d}_{candidate.digest[:12]}.diff"
        (state.candidates_dir / name).write_text(candidate.diff_text, encoding="utf-8")
    _write_json(
        state.candidates_dir / "meta.json",
        {
            "completions_seen": generation.completions_seen,
            "failures": [{"completion": i, "reason": r} for i, r in generation.failures],
            "candidates": [
                {
                    "index": c.index,
                    "digest": c.digest,
                    "pre_dedup_count": c.pre_dedup_count,
                    "source_samples": list(c.source_samples),
                    "edits": [
                        {"path": e.path, "search": e.search, "replace": e.replace}
                        for e in c.edits
                    ],
                }
                for c in generation.candidates
            ],
        },
    )
    return generation


def load_candidates(state: RunState) -> tuple[PatchCandidate, ...]:
    meta = _read_json(state.candidates_dir / "meta.json")
    out = []
    for entry in meta["candidates"]:
        diff_name = f"{entry['index']:03d}_{entry['digest'][:12]}.diff"
        out.append(
            PatchCandidate(
                index=entry["index"],
                digest=entry["digest"],
                diff_text=(state.candidates_dir / diff_name).read_text(encoding="utf-8"),
                edits=tuple(
                    Edit(path=e["path"], search=e["search"], replace=e["replace"])
                    for e in entry["edits"]
                ),
                pre_dedup_count=entry["pre_dedup_count"],
                source_samples=tuple(entry["source_samples"]),
            )
        )
    return tuple(out)


# --- stage: validation -------------------------------------------------------


def stage_validate(
    state: RunState,
    context: PromptContext,
    candidates: tuple[PatchCandidate, ...],
    repro: ReproArtifact,
) -> ValidationVerdict:
    if not state.config.pipeline.enable_code2image:
        verdict = select_without_validation(candidates)
    else:
        harness = RenderHarness(
            state.config.render.harness_cmd, timeout_s=state.config.render.timeout_s
        )
        verdict = select_patch(
            state.provider,
            context,
            state.snapshot,
            candidates,
            repro,
            state.config,
            harness,
            workdir=state.builds_dir,
            shots_dir=state.shots_dir,
        )
    doc = verdict.to_json()
    doc["variant"] = state.variant
    doc["instance_id"] = state.issue.instance_id
    _write_json(state.run_dir / "verdict.json", doc)
    return verdict


def write_prediction(state: RunState, patch: str) -> dict:
    row = {
        "instance_id": state.issue.instance_id,
        "model_name_or_path": state.config.models.chat,
        "model_patch": patch,
    }
    line = json.dumps(row, ensure_ascii=False)
    (state.run_dir / "predictions.jsonl").write_text(line + "\n", encoding="utf-8")
    return row


# --- end to end --------------------------------------------------------------


def run_all(state: RunState) -> dict:
    """Execute every stage in order and write the final prediction."""
    docs = stage_mine(state)
    repro = stage_repro(state, docs)
    context = PromptContext(issue=state.issue, docs=docs, repro_script=repro.script_code)
    try:
        _files, hunk_loc = stage_localize(state, context)
        generation = stage_generate(state, context, hunk_loc.hunks)
    except NoValidCandidates:
        log.warning("no valid candidates; submitting an empty patch")
        _write_json(
            state.run_dir / "verdict.json",
            {
                "selected_digest": None,
                "selected_index": None,
                "fallback_used": False,
                "trail": [],
                "variant": state.variant,
                "instance_id": state.issue.instance_id,
            },
        )
        row = write_prediction(state, "")
        finalize_stage(state)
        return _result(state, row, None)
    verdict = stage_validate(state, context, generation.candidates, repro)
    selected = next(
        c for c in generation.candidates if c.digest == verdict.selected_digest
    )
    row = write_prediction(state, selected.diff_text)
    finalize_stage(state)
    return _result(state, row, verdict)


def _result(state: RunState, prediction: dict, verdict: ValidationVerdict | None) -> dict:
    ledger_doc = _read_json(state.run_dir / "ledger.json")
    return {
        "run_dir": str(state.run_dir),
        "instance_id": state.issue.instance_id,
        "variant": state.variant,
        "patch": prediction["model_patch"],
        "selected_digest": verdict.selected_digest if verdict else None,
        "fallback_used": verdict.fallback_used if verdict else False,
        "trail": [
            {"digest": t.digest, "status": t.status} for t in (verdict.trail if verdict else ())
        ],
        "total_dollars": ledger_doc["total_dollars"],
        "total_tokens": ledger_doc["total_tokens"],
    }


def run_end_to_end(
    issue_path: Path | str,
    repo_path: Path | str,
    config_path: Path | str,
    mode: str,
    variant: str,
    out_dir: Path | str,
    provider: ModelProvider | None = None,
) -> dict:
    run_dir = init_run(issue_path, repo_path, config_path, mode, variant, out_dir)
    state = load_run(run_dir, provider=provider)
    return run_all(state)
