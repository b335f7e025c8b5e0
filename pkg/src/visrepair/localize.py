"""Fault localization: from the whole tree down to a few code regions.

File level first: a chat model reads the repository layout and names
suspicious files (sampled more than once, union taken), embedding retrieval
adds lookalikes, and when the union is still too broad a skeleton-guided
filter trims it to the key bug files.  Hunk level second: the model reads
compressed views of the key files and points at elements or lines; each
mention becomes an exact code region, deduplicated across samples.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .codeview import (
    BugHunk,
    build_hunk_view,
    build_skeleton,
    extract_context_window,
    extract_element_hunk,
)
from .config import Config
from .errors import (
    AmbiguousElement,
    AnchorOutOfRange,
    ElementNotFound,
    NoCandidateFiles,
    ParseFailure,
    UnparseableSelection,
)
from .prompting import PromptContext, fenced_blocks, fill, load_template, parse_selection, user_message
from .provider import ModelProvider, TextPart
from .retrieval import retrieve_files
from .workspace import RepoSnapshot, render_path_tree

log = logging.getLogger(__name__)

ORIGIN_CHAT = "chat"
ORIGIN_EMBEDDING = "embedding"
ORIGIN_BOTH = "both"


@dataclass(frozen=True)
class FileLocalization:
    suspicious: tuple[tuple[str, str], ...]  # (path, origin) in rank order
    key_files: tuple[str, ...]
    key_directories: tuple[str, ...]
    filter_fallback: bool

    @property
    def suspicious_paths(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.suspicious)


@dataclass(frozen=True)
class HunkLocalization:
    hunks: tuple[BugHunk, ...]
    origins: tuple[tuple[str, tuple[int, ...]], ...]  # hunk label -> sample indices
    fallback: bool


def localize_files(
    provider: ModelProvider,
    context: PromptContext,
    snapshot: RepoSnapshot,
    config: Config,
) -> FileLocalization:
    """Name the files that plausibly own the bug."""
    code_paths = list(snapshot.code_files())
    if not code_paths:
        raise NoCandidateFiles("snapshot holds no code files")
    prompt = fill(
        load_template("file_localize.txt"),
        REPO_TREE=render_path_tree(code_paths),
    )
    parts = [TextPart(prompt)] + context.parts()
    request = provider.new_request(
        [user_message(parts)],
        temperature=config.localization.file_temperature,
        n_samples=config.localization.file_samples,
    )
    response = provider.chat_complete(request, stage="localize.files")

    chat_paths: list[str] = []
    flagged_dirs: list[str] = []
    for sample in response.samples:
        try:
            selection = parse_selection(sample, known_paths=code_paths)
        except UnparseableSelection:
            log.warning("file localization sample yielded no paths; skipped")
            continue
        for path in selection.files:
            if path in code_paths:
                if path not in chat_paths:
                    chat_paths.append(path)
            else:
                log.warning("file localization named unknown path %r; dropped", path)
        for directory in selection.directories:
            prefix = directory.strip("/")
            if any(p == prefix or p.startswith(prefix + "/") for p in code_paths):
                if prefix not in flagged_dirs:
                    flagged_dirs.append(prefix)

    corpus = [(p, snapshot.read_text(p)) for p in code_paths]
    ranked = retrieve_files(
        query_text=context.query_text(),
        files=corpus,
        k=config.localization.embed_top_files,
        embed_query=lambda q: provider.embed_one(q, stage="localize.embed"),
        embed_fn=lambda texts: provider.embed_texts(texts, stage="localize.embed"),
        scope=tuple(flagged_dirs) or None,
        chunk_size=config.knowledge.chunk_size,
        overlap=config.knowledge.chunk_overlap,
    )
    embed_paths = [s.chunk.source_path for s in ranked]

    merged: dict[str, str] = {}
    for path in chat_paths:
        merged[path] = ORIGIN_CHAT
    for path in embed_paths:
        merged[path] = ORIGIN_BOTH if path in merged else ORIGIN_EMBEDDING
    if not merged:
        raise NoCandidateFiles("no suspicious files from either route")

    suspicious = tuple(merged.items())
    key_files, fallback = _filter_key_files(provider, context, snapshot, suspicious, config)
    return FileLocalization(
        suspicious=suspicious,
        key_files=key_files,
        key_directories=tuple(flagged_dirs),
        filter_fallback=fallback,
    )


def _filter_key_files(
    provider: ModelProvider,
    context: PromptContext,
    snapshot: RepoSnapshot,
    suspicious: tuple[tuple[str, str], ...],
    config: Config,
) -> tuple[tuple[str, ...], bool]:
    """Trim the suspicious set to the key bug files using skeletons."""
    paths = [p for p, _ in suspicious]
    limit = config.localization.max_key_files
    if len(paths) <= limit:
        return tuple(paths), False
    skeleton_sections = []
    for path in paths:
        try:
            skeleton = build_skeleton(path, snapshot.read_text(path))
            skeleton_sections.append(f"### {path}\n\n```\n{skeleton.text}\n```")
        except ParseFailure:
            skeleton_sections.append(f"### {path}\n\n(empty file)")
    prompt = fill(
        load_template("key_file_filter.txt"),
        MAX_KEY_FILES=str(limit),
        SKELETONS="\n\n".join(skeleton_sections),
    )
    parts = [TextPart(prompt)] + context.parts()
    request = provider.new_request(
        [user_message(parts)],
        temperature=config.pipeline.default_temperature,
        n_samples=1,
    )
    response = provider.chat_complete(request, stage="localize.filter")
    try:
        selection = parse_selection(response.first, known_paths=paths)
        picked = [p for p in selection.files if p in paths]
    except UnparseableSelection:
        picked = []
    if picked:
        return tuple(dict.fromkeys(picked))[:limit], False
    log.warning("key-file filter unusable; falling back to first %d suspicious files", limit)
    return tuple(paths[:limit]), True


# --- hunk localization -------------------------------------------------------

_LINE_MENTION_RE = re.compile(r"^(?:(?P<path>[\w./-]+)\s*:\s*)?line\s+(?P<line>\d+)\s*$", re.IGNORECASE)
_ELEMENT_MENTION_RE = re.compile(r"^(?:(?P<path>[\w./-]+)\s*:\s*)?(?P<name>[A-Za-z_$][\w$.]*)\s*$")


def _mention_lines(completion: str) -> list[str]:
    blocks = fenced_blocks(completion)
    source = "\n".join(body for _, body in blocks) if blocks else completion
    out = []
    for line in source.splitlines():
        line = line.strip().lstrip("-*").strip()
        if line:
            out.append(line)
    return out


def localize_hunks(
    provider: ModelProvider,
    context: PromptContext,
    snapshot: RepoSnapshot,
    key_files: tuple[str, ...],
    config: Config,
) -> HunkLocalization:
    """Resolve model mentions into exact code regions of the key files.

    Mentions may name an element (optionally path-qualified) or a line
    anchor; line anchors expand to a clamped context window.  Unresolvable
    mentions are dropped; if every sample comes up empty the whole head of
    each key file becomes the hunk, flagged as a fallback.
    """
    if not key_files:
        raise NoCandidateFiles("hunk localization needs at least one key file")
    texts = {path: snapshot.read_text(path) for path in key_files}
    views = []
    for path in key_files:
        view = build_hunk_view(path, texts[path], config.patch.max_hunk_lines)
        views.append(f"### {path}\n\n```\n{view.text}\n```")
    prompt = fill(load_template("hunk_localize.txt"), HUNK_VIEWS="\n\n".join(views))
    parts = [TextPart(prompt)] + context.parts()
    request = provider.new_request(
        [user_message(parts)],
        temperature=config.localization.hunk_temperature,
        n_samples=config.localization.hunk_samples,
    )
    response = provider.chat_complete(request, stage="localize.hunks")

    window = config.localization.context_window
    found: dict[tuple[str, int, int], BugHunk] = {}
    origins: dict[tuple[str, int, int], list[int]] = {}
    for sample_index, sample in enumerate(response.samples):
        for mention in _mention_lines(sample):
            hunk = _resolve_mention(mention, key_files, texts, window)
            if hunk is None:
                continue
            key = (hunk.path, hunk.start_line, hunk.end_line)
            if key not in found:
                found[key] = hunk
            if sample_index not in origins.setdefault(key, []):
                origins[key].append(sample_index)

    fallback = False
    if not found:
        log.warning("no hunk mentions resolved; falling back to file-head windows")
        fallback = True
        for path in key_files:
            text = texts[path]
            if not text.strip():
                continue
            hunk = extract_context_window(path, text, anchor_line=1, window=window)
            key = (hunk.path, hunk.start_line, hunk.end_line)
            found[key] = hunk
            origins[key] = []

    hunks = tuple(found.values())
    origin_pairs = tuple(
        (found[key].label, tuple(origins[key])) for key in found
    )
    return HunkLocalization(hunks=hunks, origins=origin_pairs, fallback=fallback)


def _resolve_mention(
    mention: str,
    key_files: tuple[str, ...],
    texts: dict[str, str],
    window: int,
) -> BugHunk | None:
    line_match = _LINE_MENTION_RE.match(mention)
    if line_match:
        path = line_match.group("path")
        anchor = int(line_match.group("line"))
        targets = [path] if path else list(key_files)
        for target in targets:
            if target not in texts:
                continue
            try:
                return extract_context_window(target, texts[target], anchor, window)
            except AnchorOutOfRange:
                continue
        log.warning("line mention %r did not resolve; dropped", mention)
        return None
    element_match = _ELEMENT_MENTION_RE.match(mention)
    if not element_match:
        log.warning("mention %r not understood; dropped", mention)
        return None
    path = element_match.group("path")
    name = element_match.group("name")
    targets = [path] if path else list(key_files)
    for target in targets:
        if target not in texts:
            continue
        try:
            return extract_element_hunk(target, texts[target], name)
        except (ElementNotFound, AmbiguousElement):
            continue
    log.warning("element mention %r did not resolve; dropped", mention)
    return None
