"""Patch candidates: parse search/replace edits, apply them, emit diffs.

The model writes edits as fenced blocks: a file path on the first line, then
``<<<<<<< SEARCH``, the lines to find, ``=======``, the lines to put there,
``>>>>>>> REPLACE``.  Every candidate applies its edits to the pristine tree
independently; the result is serialized as a git-style unified diff whose
digest identifies the candidate for deduplication and selection.
"""

from __future__ import annotations

import difflib
import hashlib
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .config import Config
from .errors import AmbiguousMatch, NoEditBlocks, NoValidCandidates, SearchNotFound
from .prompting import PromptContext, fenced_blocks, fill, load_template, user_message
from .provider import ModelProvider, TextPart

_SEARCH_MARKER = re.compile(r"^<{7}\s*SEARCH\s*$")
_DIVIDER = re.compile(r"^={7}\s*$")
_REPLACE_MARKER = re.compile(r"^>{7}\s*REPLACE\s*$")


@dataclass(frozen=True)
class Edit:
    path: str
    search: str
    replace: str


def parse_edits_or_raise(completion: str) -> list[Edit]:
    """Like :func:`parse_edit_blocks`, but an empty result is an error."""
    edits, problems = parse_edit_blocks(completion)
    if not edits:
        raise NoEditBlocks("; ".join(problems) or "completion held no edit blocks")
    return edits


def parse_edit_blocks(completion: str) -> tuple[list[Edit], list[str]]:
    """Extract edits from a completion; malformed blocks become notes.

    A block may hold several search/replace groups for the same file.  A
    completion with no usable group yields an empty edit list.
    """
    edits: list[Edit] = []
    problems: list[str] = []
    for info, body in fenced_blocks(completion):
        lines = body.split("\n")
        i = 0
        while i < len(lines) and not lines[i].strip():
            i += 1
        if i >= len(lines):
            problems.append("block is empty")
            continue
        path = lines[i].strip()
        if _SEARCH_MARKER.match(path) or "/" not in path and "." not in path:
            problems.append(f"block lacks a file path (saw {path!r})")
            continue
        i += 1
        got_group = False
        while i < len(lines):
            while i < len(lines) and not lines[i].strip():
                i += 1
            if i >= len(lines):
                break
            if not _SEARCH_MARKER.match(lines[i]):
                problems.append(f"expected search marker, saw {lines[i]!r}")
                break
            i += 1
            search_lines: list[str] = []
            while i < len(lines) and not _DIVIDER.match(lines[i]):
                if _SEARCH_MARKER.match(lines[i]) or _REPLACE_MARKER.match(lines[i]):
                    break
                search_lines.append(lines[i])
                i += 1
            if i >= len(lines) or not _DIVIDER.match(lines[i]):
                problems.append("search section never hit the divider")
                break
            i += 1
            replace_lines: list[str] = []
            while i < len(lines) and not _REPLACE_MARKER.match(lines[i]):
                if _SEARCH_MARKER.match(lines[i]) or _DIVIDER.match(lines[i]):
                    break
                replace_lines.append(lines[i])
                i += 1
            if i >= len(lines) or not _REPLACE_MARKER.match(lines[i]):
                problems.append("replace section never hit its end marker")
                break
            i += 1
            edits.append(
                Edit(path=path, search="\n".join(search_lines), replace="\n".join(replace_lines))
            )
            got_group = True
        if not got_group and not problems:
            problems.append("block held no search/replace group")
    return edits, problems


# --- application -------------------------------------------------------------


def _normalize_eol(text: str) -> tuple[str, str]:
    if "\r\n" in text:
        return text.replace("\r\n", "\n"), "\r\n"
    return text, "\n"


def _find_matches(haystack: list[str], needle: list[str], lenient: bool) -> list[int]:
    if not needle:
        return []

    def norm(s: str) -> str:
        return " ".join(s.split()) if lenient else s

    target = [norm(s) for s in needle]
    hits = []
    for i in range(len(haystack) - len(needle) + 1):
        if [norm(s) for s in haystack[i : i + len(needle)]] == target:
            hits.append(i)
    return hits


def apply_edit_to_text(text: str, edit: Edit) -> str:
    """Apply one edit: exact match first, whitespace-lenient second.

    The match must be unique in whichever pass found it; anything else is an
    error rather than a guess.
    """
    normalized, eol = _normalize_eol(text)
    if not edit.search:
        if normalized.strip():
            raise SearchNotFound(f"{edit.path}: empty search only fits an empty file")
        new_text = edit.replace
        return new_text.replace("\n", eol) if eol != "\n" else new_text
    lines = normalized.split("\n")
    needle = edit.search.split("\n")
    hits = _find_matches(lines, needle, lenient=False)
    if not hits:
        hits = _find_matches(lines, needle, lenient=True)
        if not hits:
            raise SearchNotFound(f"{edit.path}: search text not found")
    if len(hits) > 1:
        raise AmbiguousMatch(f"{edit.path}: search text matches {len(hits)} locations")
    start = hits[0]
    replacement = edit.replace.split("\n") if edit.replace else []
    lines[start : start + len(needle)] = replacement
    out = "\n".join(lines)
    return out.replace("\n", eol) if eol != "\n" else out


def apply_edits(
    read_file: Callable[[str], str],
    known_paths: Sequence[str],
    edits: Sequence[Edit],
) -> dict[str, str]:
    """Apply edits in order against pristine content; returns changed files."""
    known = set(known_paths)
    current: dict[str, str] = {}
    for edit in edits:
        if edit.path not in known:
            raise SearchNotFound(f"{edit.path} is not a text file in the tree")
        if edit.path not in current:
            current[edit.path] = read_file(edit.path)
        current[edit.path] = apply_edit_to_text(current[edit.path], edit)
    return current


# --- unified diff ------------------------------------------------------------


_NO_NEWLINE = "\\ No newline at end of file\n"


def _attach_no_newline_markers(body: list[str]) -> list[str]:
    # Only a file's true last line can lack a terminator; diffing raw lines
    # lets that show up here, where the marker goes right after it.
    out: list[str] = []
    for line in body:
        if line.endswith("\n"):
            out.append(line)
        else:
            out.append(line + "\n")
            out.append(_NO_NEWLINE)
    return out


def unified_diff(old_files: Mapping[str, str], new_files: Mapping[str, str]) -> str:
    """Git-style unified diff over changed files, paths in sorted order."""
    pieces: list[str] = []
    for path in sorted(new_files):
        old = old_files.get(path, "")
        new = new_files[path]
        if old == new:
            continue
        body = list(
            difflib.unified_diff(
                old.splitlines(keepends=True),
                new.splitlines(keepends=True),
                fromfile=f"a/{path}",
                tofile=f"b/{path}",
                n=3,
                lineterm="\n",
            )
        )
        if not body:
            continue
        pieces.append(f"diff --git a/{path} b/{path}\n")
        pieces.extend(_attach_no_newline_markers(body))
    return "".join(pieces)


def diff_digest(diff_text: str) -> str:
    return hashlib.sha256(diff_text.encode("utf-8")).hexdigest()


# --- candidate generation ----------------------------------------------------


@dataclass(frozen=True)
class PatchCandidate:
    index: int
    digest: str
    diff_text: str
    edits: tuple[Edit, ...]
    pre_dedup_count: int
    source_samples: tuple[int, ...]


@dataclass(frozen=True)
class PatchGeneration:
    candidates: tuple[PatchCandidate, ...]
    failures: tuple[tuple[int, str], ...]  # (completion index, reason)
    completions_seen: int


def _render_hunks(hunks) -> str:
    sections = []
    for hunk in hunks:
        sections.append(f"### {hunk.label}\n\n```\n{hunk.text.rstrip(chr(10))}\n```")
    return "\n\n".join(sections)


def generate_patches(
    provider: ModelProvider,
    context: PromptContext,
    read_file: Callable[[str], str],
    known_paths: Sequence[str],
    hunks,
    config: Config,
) -> PatchGeneration:
    """One greedy completion plus a sampled batch, parsed into candidates.

    Candidate order follows first appearance (greedy first), duplicates by
    diff digest collapse into the earliest candidate while keeping count.
    """
    prompt = fill(load_template("patch_generate.txt"), HUNKS=_render_hunks(hunks))
    parts = [TextPart(prompt)] + context.parts()
    completions: list[str] = []
    if config.patch.greedy_samples > 0:
        greedy = provider.chat_complete(
            provider.new_request(
                [user_message(parts)],
                temperature=config.pipeline.default_temperature,
                n_samples=config.patch.greedy_samples,
            ),
            stage="patch.greedy",
        )
        completions.extend(greedy.samples)
    if config.patch.sampled_count > 0:
        sampled = provider.chat_complete(
            provider.new_request(
                [user_message(parts)],
                temperature=config.patch.sampled_temperature,
                n_samples=config.patch.sampled_count,
            ),
            stage="patch.sampled",
        )
        completions.extend(sampled.samples)

    order: list[str] = []
    by_digest: dict[str, dict] = {}
    failures: list[tuple[int, str]] = []
    for idx, completion in enumerate(completions):
        edits, _problems = parse_edit_blocks(completion)
        if not edits:
            failures.append((idx, "no-edit-blocks"))
            continue
        try:
            changed = apply_edits(read_file, known_paths, edits)
        except (SearchNotFound, AmbiguousMatch) as exc:
            failures.append((idx, type(exc).__name__))
            continue
        pristine = {path: read_file(path) for path in changed}
        diff_text = unified_diff(pristine, changed)
        if not diff_text:
            failures.append((idx, "empty-diff"))
            continue
        digest = diff_digest(diff_text)
        if digest not in by_digest:
            order.append(digest)
            by_digest[digest] = {
                "diff": diff_text,
                "edits": tuple(edits),
                "count": 0,
                "samples": [],
            }
        by_digest[digest]["count"] += 1
        by_digest[digest]["samples"].append(idx)

    if not order:
        raise NoValidCandidates(
            f"none of {len(completions)} completions produced an applicable patch"
        )
    candidates = tuple(
        PatchCandidate(
            index=i,
            digest=digest,
            diff_text=by_digest[digest]["diff"],
            edits=by_digest[digest]["edits"],
            pre_dedup_count=by_digest[digest]["count"],
            source_samples=tuple(by_digest[digest]["samples"]),
        )
        for i, digest in enumerate(order)
    )
    return PatchGeneration(
        candidates=candidates,
        failures=tuple(failures),
        completions_seen=len(completions),
    )
