"""Rendering-based patch selection.

Each candidate is built into its own copy of the tree, the reproduction page
is rendered against it, and the screenshot is compared to the buggy one.  A
candidate that changes nothing on screen is skipped; a candidate that does
change pixels goes to a vision judge, and the first one judged effective
wins.  When nothing can be judged, a majority vote over pre-deduplication
counts picks the submission, flagged as a fallback.
"""

from __future__ import annotations

import json
import logging
import os
import re
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .config import Config
from .errors import (
    BuildFailure,
    BundleMissing,
    DimensionMismatch,
    HarnessCrash,
    NoCandidates,
    PageLoadTimeout,
)
from .patchgen import PatchCandidate, apply_edits
from .prompting import PromptContext, fill, load_template, user_message
from .provider import ImagePart, ModelProvider, TextPart
from .repro import BUNDLE_PLACEHOLDER, SCRIPT_FILENAME, ReproArtifact
from .workspace import RepoSnapshot

log = logging.getLogger(__name__)

STATUS_EFFECTIVE = "effective"
STATUS_INEFFECTIVE = "ineffective"
STATUS_SKIPPED_UNCHANGED = "skipped-unchanged"
STATUS_NOT_EVALUATED = "not-evaluated"
STATUS_BUILD_FAILED = "build-failed"
STATUS_RENDER_FAILED = "render-failed"

# "ineffective" must come first: "effective" is a substring of it.
_JUDGE_RE = re.compile(r"\b(ineffective|effective)\b", re.IGNORECASE)


@dataclass(frozen=True)
class DiffReport:
    width: int
    height: int
    changed_pixels: int
    total_pixels: int

    @property
    def changed(self) -> bool:
        return self.changed_pixels > 0


@dataclass(frozen=True)
class ScreenshotRef:
    png_path: Path
    width: int
    height: int
    console_errors: tuple[str, ...]


@dataclass(frozen=True)
class TrailEntry:
    digest: str
    status: str


@dataclass(frozen=True)
class ValidationVerdict:
    selected_digest: str | None
    selected_index: int | None
    fallback_used: bool
    trail: tuple[TrailEntry, ...]

    def to_json(self) -> dict:
        return {
            "selected_digest": self.selected_digest,
            "selected_index": self.selected_index,
            "fallback_used": self.fallback_used,
            "trail": [{"digest": t.digest, "status": t.status} for t in self.trail],
        }


# --- pixel comparison --------------------------------------------------------


def load_pixels(png_path: Path | str) -> np.ndarray:
    with Image.open(png_path) as img:
        return np.asarray(img.convert("RGBA"), dtype=np.int16)


def pixel_diff_arrays(
    a: np.ndarray, b: np.ndarray, channel_tolerance: int = 0
) -> DiffReport:
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    delta = np.abs(a.astype(np.int16) - b.astype(np.int16))
    changed_mask = (delta > channel_tolerance).any(axis=2)
    height, width = changed_mask.shape
    return DiffReport(
        width=width,
        height=height,
        changed_pixels=int(changed_mask.sum()),
        total_pixels=int(width * height),
    )


def pixel_diff(
    a: ScreenshotRef, b: ScreenshotRef, channel_tolerance: int = 0
) -> DiffReport:
    """Exact per-pixel comparison of two screenshots.

    A pixel counts as changed when any channel differs by more than the
    tolerance.  Symmetric by construction.
    """
    return pixel_diff_arrays(load_pixels(a.png_path), load_pixels(b.png_path), channel_tolerance)


# --- render harness client ---------------------------------------------------


class RenderHarness:
    """Client for the stdio render protocol.

    One JSON request line in, one JSON response line out.  The harness owns
    the browser-shaped work; this side only maps failures onto the pipeline's
    error vocabulary.
    """

    def __init__(self, cmd: Sequence[str], timeout_s: float = 60.0, cwd: Path | None = None):
        if not cmd:
            raise ValueError("harness command must not be empty")
        self.cmd = list(cmd)
        self.timeout_s = timeout_s
        self.cwd = cwd

    def render(
        self, page: Path, width: int, height: int, settle_ms: int, out_png: Path
    ) -> dict:
        request = {
            "page": str(page),
            "viewport": {"w": width, "h": height},
            "settle_ms": settle_ms,
            "out": str(out_png),
        }
        try:
            proc = subprocess.run(
                self.cmd,
                input=json.dumps(request) + "\n",
                capture_output=True,
                text=True,
                timeout=self.timeout_s,
                cwd=self.cwd,
            )
        except subprocess.TimeoutExpired as exc:
            raise PageLoadTimeout(f"harness exceeded {self.timeout_s}s") from exc
        except OSError as exc:
            raise HarnessCrash(f"harness did not start: {exc}") from exc
        if proc.returncode != 0:
            raise HarnessCrash(
                f"harness exited {proc.returncode}: {proc.stderr.strip()[-300:]}"
            )
        line = next((ln for ln in proc.stdout.splitlines() if ln.strip()), "")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise HarnessCrash(f"harness answered non-JSON: {line[:200]!r}") from exc
        if response.get("status") == "error":
            message = str(response.get("message") or "unknown harness error")
            if "timeout" in message.lower():
                raise PageLoadTimeout(message)
            raise HarnessCrash(message)
        if response.get("status") != "ok":
            raise HarnessCrash(f"harness status {response.get('status')!r}")
        return response


# --- building and rendering variants -----------------------------------------


def build_variant(
    snapshot: RepoSnapshot,
    candidate: PatchCandidate | None,
    config: Config,
    workdir: Path,
) -> Path:
    """Copy the tree, apply a candidate (or none), run the project build."""
    label = candidate.digest[:12] if candidate else "bug"
    dest = workdir / f"build-{label}"
    if dest.exists():
        shutil.rmtree(dest)
    shutil.copytree(
        snapshot.root,
        dest,
        ignore=shutil.ignore_patterns(".git", "node_modules", "runs", "build-*"),
    )
    if candidate is not None:
        changed = apply_edits(snapshot.read_text, snapshot.file_index, candidate.edits)
        for rel_path, text in changed.items():
            (dest / rel_path).write_text(text, encoding="utf-8")
    proc = subprocess.run(
        config.project.build_cmd,
        shell=True,
        cwd=dest,
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise BuildFailure(
            f"build for {label} exited {proc.returncode}: {proc.stderr.strip()[-300:]}"
        )
    bundle = dest / config.project.bundle_path
    if not bundle.is_file():
        raise BuildFailure(f"build for {label} left no bundle at {config.project.bundle_path}")
    return dest


def render_scenario(
    build_dir: Path,
    repro: ReproArtifact,
    config: Config,
    harness: RenderHarness,
    out_png: Path,
) -> ScreenshotRef:
    """Materialize the repro page against one build and screenshot it."""
    if not repro.available:
        raise BundleMissing("no reproduction script to render")
    bundle = build_dir / config.project.bundle_path
    if not bundle.is_file():
        raise BundleMissing(f"bundle missing at {bundle}")
    scenario = build_dir / "scenario"
    scenario.mkdir(parents=True, exist_ok=True)
    (scenario / SCRIPT_FILENAME).write_text(repro.script_code, encoding="utf-8")
    bundle_rel = os.path.relpath(bundle, scenario).replace(os.sep, "/")
    page_html = repro.host_page.replace(BUNDLE_PLACEHOLDER, bundle_rel)
    page = scenario / "page.html"
    page.write_text(page_html, encoding="utf-8")
    out_png.parent.mkdir(parents=True, exist_ok=True)
    width = config.validation.viewport_width
    height = config.validation.viewport_height
    response = harness.render(page, width, height, config.validation.settle_ms, out_png)
    if not out_png.is_file():
        raise HarnessCrash(f"harness reported ok but wrote no file at {out_png}")
    pixels = load_pixels(out_png)
    if pixels.shape[0] != height or pixels.shape[1] != width:
        raise HarnessCrash(
            f"screenshot is {pixels.shape[1]}x{pixels.shape[0]}, wanted {width}x{height}"
        )
    errors = tuple(str(e) for e in response.get("console_errors", []))
    for error in errors:
        log.warning("page console error: %s", error)
    return ScreenshotRef(png_path=out_png, width=width, height=height, console_errors=errors)


# --- judging -----------------------------------------------------------------


def _parse_judgement(completion: str) -> str | None:
    match = _JUDGE_RE.search(completion)
    return match.group(1).lower() if match else None


def judge_patch(
    provider: ModelProvider,
    context: PromptContext,
    bug_shot: ScreenshotRef,
    patch_shot: ScreenshotRef,
    config: Config,
) -> bool:
    """Ask the vision judge whether the new rendering resolves the issue.

    The first decisive token wins; one retry on mushy output, then the
    conservative answer is no.
    """
    prompt = fill(
        load_template("judge_patch.txt"),
        ISSUE=context.render_text(include_docs=False),
    )
    parts = [
        TextPart(prompt),
        ImagePart(data=bug_shot.png_path.read_bytes()),
        ImagePart(data=patch_shot.png_path.read_bytes()),
    ]
    request = provider.new_request(
        [user_message(parts)],
        temperature=config.pipeline.default_temperature,
        n_samples=1,
    )
    response = provider.chat_complete(request, stage="validate.judge")
    verdict = _parse_judgement(response.first)
    if verdict is None:
        retry_parts = parts + [TextPart("Answer with exactly one word: effective or ineffective.")]
        retry = provider.new_request(
            [user_message(retry_parts)],
            temperature=config.pipeline.default_temperature,
            n_samples=1,
        )
        response = provider.chat_complete(retry, stage="validate.judge")
        verdict = _parse_judgement(response.first)
    if verdict is None:
        log.warning("judge output had no verdict token; treating as ineffective")
        return False
    return verdict == "effective"


# --- selection ---------------------------------------------------------------


def _fallback_choice(
    candidates: Sequence[PatchCandidate], statuses: dict[str, str]
) -> PatchCandidate:
    """Majority vote by pre-dedup count, earliest on ties.

    Candidates that failed to build or render only win when nothing else is
    available.
    """
    healthy = [
        c
        for c in candidates
        if statuses.get(c.digest) not in (STATUS_BUILD_FAILED, STATUS_RENDER_FAILED)
    ]
    pool = healthy or list(candidates)
    return max(pool, key=lambda c: (c.pre_dedup_count, -c.index))


def select_without_validation(candidates: Sequence[PatchCandidate]) -> ValidationVerdict:
    """Rendering disabled: submit the first candidate, nothing evaluated."""
    if not candidates:
        raise NoCandidates("selection requires at least one candidate")
    first = candidates[0]
    return ValidationVerdict(
        selected_digest=first.digest,
        selected_index=first.index,
        fallback_used=False,
        trail=tuple(TrailEntry(c.digest, STATUS_NOT_EVALUATED) for c in candidates),
    )


def select_patch(
    provider: ModelProvider,
    context: PromptContext,
    snapshot: RepoSnapshot,
    candidates: Sequence[PatchCandidate],
    repro: ReproArtifact,
    config: Config,
    harness: RenderHarness,
    workdir: Path,
    shots_dir: Path,
) -> ValidationVerdict:
    """Sequentially validate candidates and pick the first effective one.

    Evaluation stops at the first success; untouched candidates stay marked
    not-evaluated.  Without a usable bug rendering (or any effective verdict)
    the majority-vote fallback picks the submission.
    """
    if not candidates:
        raise NoCandidates("selection requires at least one candidate")
    statuses: dict[str, str] = {c.digest: STATUS_NOT_EVALUATED for c in candidates}

    bug_shot: ScreenshotRef | None = None
    if repro.available:
        try:
            bug_dir = build_variant(snapshot, None, config, workdir)
            bug_shot = render_scenario(
                bug_dir, repro, config, harness, shots_dir / "bug.png"
            )
        except (BuildFailure, BundleMissing, HarnessCrash, PageLoadTimeout) as exc:
            log.warning("bug build unusable (%s); falling back to majority vote", exc)
    else:
        log.warning("no reproduction available; falling back to majority vote")

    selected: PatchCandidate | None = None
    if bug_shot is not None:
        for candidate in candidates:
            try:
                cand_dir = build_variant(snapshot, candidate, config, workdir)
            except BuildFailure as exc:
                log.warning("candidate %s: %s", candidate.digest[:12], exc)
                statuses[candidate.digest] = STATUS_BUILD_FAILED
                continue
            try:
                shot = render_scenario(
                    cand_dir,
                    repro,
                    config,
                    harness,
                    shots_dir / f"{candidate.digest[:12]}.png",
                )
            except (BundleMissing, HarnessCrash, PageLoadTimeout) as exc:
                log.warning("candidate %s: %s", candidate.digest[:12], exc)
                statuses[candidate.digest] = STATUS_RENDER_FAILED
                continue
            report = pixel_diff(bug_shot, shot, config.validation.channel_tolerance)
            if report.changed_pixels <= config.validation.pixel_threshold:
                statuses[candidate.digest] = STATUS_SKIPPED_UNCHANGED
                continue
            if judge_patch(provider, context, bug_shot, shot, config):
                statuses[candidate.digest] = STATUS_EFFECTIVE
                selected = candidate
                break
            statuses[candidate.digest] = STATUS_INEFFECTIVE

    fallback_used = False
    if selected is None:
        selected = _fallback_choice(candidates, statuses)
        fallback_used = True
    return ValidationVerdict(
        selected_digest=selected.digest,
        selected_index=selected.index,
        fallback_used=fallback_used,
        trail=tuple(TrailEntry(c.digest, statuses[c.digest]) for c in candidates),
    )
