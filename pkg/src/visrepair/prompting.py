"""Prompt templates, shared prompt context, and completion parsing.

Templates live as package data with ``{{TOKEN}}`` placeholders.  The prompt
context renders the issue the same way for every stage: description first,
then mined project knowledge, then the reproduction script, then screenshots
as image parts.  Byte-identical inputs produce byte-identical prompts, which
is what makes transcript replay possible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import TYPE_CHECKING

from .errors import UnparseableSelection
from .provider import ChatMessage, ImagePart, Part, TextPart

if TYPE_CHECKING:
    from .knowledge import DocumentSet
    from .workspace import IssueReport


def load_template(name: str) -> str:
    return (resources.files("visrepair") / "prompts" / name).read_text(encoding="utf-8")


_TOKEN_RE = re.compile(r"\{\{([A-Z_]+)\}\}")


def fill(template: str, **tokens: str) -> str:
    """Substitute ``{{TOKEN}}`` placeholders; unknown leftovers are an error."""

    def replace(match: re.Match) -> str:
        name = match.group(1)
        if name not in tokens:
            raise KeyError(f"template placeholder {{{{{name}}}}} has no value")
        return tokens[name]

    return _TOKEN_RE.sub(replace, template)


# --- fenced blocks -----------------------------------------------------------

_FENCE_RE = re.compile(r"```([^\n]*)\n(.*?)\n?```", re.DOTALL)


def fenced_blocks(completion: str) -> list[tuple[str, str]]:
    """All fenced blocks as (info string, body) pairs, in order."""
    return [(m.group(1).strip(), m.group(2)) for m in _FENCE_RE.finditer(completion)]


def first_fenced_block(completion: str) -> str | None:
    blocks = fenced_blocks(completion)
    return blocks[0][1] if blocks else None


# --- issue context -----------------------------------------------------------


@dataclass
class PromptContext:
    """The issue as every stage sees it, with optional enrichments."""

    issue: "IssueReport"
    docs: "DocumentSet | None" = None
    repro_script: str | None = None

    def query_text(self) -> str:
        """Retrieval query: title, body, and the mined understanding if any."""
        pieces = [self.issue.title, self.issue.body]
        if self.docs is not None and self.docs.understanding:
            pieces.append(self.docs.understanding)
        return "\n\n".join(p for p in pieces if p)

    def render_text(self, include_docs: bool = True, include_repro: bool = True) -> str:
        parts = [f"# Issue {self.issue.instance_id}: {self.issue.title}", "", self.issue.body]
        if include_docs and self.docs is not None and self.docs.documents:
            parts += ["", "## Project knowledge"]
            for doc in self.docs.documents:
                parts += ["", f"### {doc.path}", "", doc.text.rstrip("\n")]
        if include_repro and self.repro_script:
            parts += [
                "",
                "## Reproduction script",
                "",
                "```js",
                self.repro_script.rstrip("\n"),
                "```",
            ]
        return "\n".join(parts) + "\n"

    def parts(self, include_docs: bool = True, include_repro: bool = True) -> list[Part]:
        out: list[Part] = [TextPart(self.render_text(include_docs, include_repro))]
        for image in self.issue.images:
            out.append(ImagePart(data=image.data, media_type=image.media_type))
        return out


def user_message(parts: list[Part]) -> ChatMessage:
    return ChatMessage(role="user", parts=tuple(parts))


# --- selection parsing -------------------------------------------------------


@dataclass(frozen=True)
class Selection:
    understanding: str | None
    files: tuple[str, ...]
    directories: tuple[str, ...]


_SECTION_RE = re.compile(r"^\s*(?:#+\s*)?(UNDERSTANDING|FILES|DIRECTORIES)\b.*$", re.MULTILINE | re.IGNORECASE)


def _section_spans(completion: str) -> list[tuple[str, int, int]]:
    matches = list(_SECTION_RE.finditer(completion))
    spans = []
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(completion)
        spans.append((m.group(1).upper(), m.end(), end))
    return spans


def _block_lines(text: str) -> list[str]:
    block = first_fenced_block(text)
    source = block if block is not None else text
    out = []
    for line in source.splitlines():
        line = line.strip().strip("`").lstrip("-*").strip()
        if line:
            out.append(line)
    return out


def parse_selection(completion: str, known_paths: list[str] | None = None) -> Selection:
    """Parse an UNDERSTANDING / FILES / DIRECTORIES completion.

    Falls back to positional fenced blocks, then to scanning for known paths
    anywhere in the text.  Only gives up when nothing path-like survives.
    """
    understanding: str | None = None
    files: list[str] = []
    directories: list[str] = []
    spans = _section_spans(completion)
    if spans:
        for name, start, end in spans:
            chunk = completion[start:end]
            if name == "UNDERSTANDING":
                text = re.sub(r"```.*?```", "", chunk, flags=re.DOTALL).strip()
                understanding = text or None
            elif name == "FILES":
                files.extend(_block_lines(chunk))
            else:
                directories.extend(_block_lines(chunk))
    else:
        blocks = fenced_blocks(completion)
        if blocks:
            files.extend(_block_lines("```\n" + blocks[0][1] + "\n```"))
            if len(blocks) > 1:
                directories.extend(_block_lines("```\n" + blocks[1][1] + "\n```"))
    if not files and known_paths:
        for path in known_paths:
            if re.search(re.escape(path), completion):
                files.append(path)
    if not files and not directories:
        raise UnparseableSelection("completion contained no usable paths")
    return Selection(
        understanding=understanding,
        files=tuple(dict.fromkeys(files)),
        directories=tuple(dict.fromkeys(directories)),
    )
