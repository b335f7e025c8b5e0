"""Compressed views of source files for prompting.

Three views, all built from the same structure scan:

* skeleton: imports, class/function headers, comments; bodies and variable
  declarations removed, each elided region marked once.
* hunk view: the full file, except bodies longer than a line budget collapse
  to header plus internal declarations and comments.
* bug hunk: one element's exact text, or a line window around an anchor.

Every non-marker line in a rendered view is a verbatim line of the source,
in source order, so views never invent code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from . import jsparse
from .errors import AmbiguousElement, AnchorOutOfRange, ElementNotFound, ParseFailure

ELISION_MARKER = "... omitted ..."

DEFAULT_MAX_HUNK_LINES = 500
DEFAULT_CONTEXT_WINDOW = 500


@dataclass(frozen=True)
class SkeletonView:
    path: str
    text: str


@dataclass(frozen=True)
class HunkView:
    path: str
    text: str
    compressed_elements: tuple[str, ...]


@dataclass(frozen=True)
class BugHunk:
    path: str
    element_name: str | None
    start_line: int
    end_line: int
    text: str

    @property
    def label(self) -> str:
        if self.element_name:
            return f"{self.path}:{self.element_name}"
        return f"{self.path}:{self.start_line}-{self.end_line}"


def _keepends(text: str) -> list[str]:
    return text.splitlines(keepends=True)


def _uses_structure_scanner(path: str) -> bool:
    return Path(path).suffix.lower() in jsparse.JS_SUFFIXES


# --- fallback (non-JavaScript or scan trouble) -------------------------------

_FALLBACK_KEEP = re.compile(
    r"^\s*("
    r"import\b|from\s+\S+\s+import\b|export\b|#include\b|use\s+\S+;|require\b"
    r"|def\s|class\s|function\b|fn\s|func\s|public\s|private\s|protected\s"
    r"|//|#|/\*|\*|--|\"\"\"|'''"
    r")"
)


def _fallback_skeleton_lines(lines: list[str]) -> list[str]:
    return [line for line in lines if _FALLBACK_KEEP.match(line)]


# --- skeleton ----------------------------------------------------------------


def build_skeleton(path: str, text: str) -> SkeletonView:
    """Collapse a file to imports, element headers and comments."""
    if not text.strip():
        raise ParseFailure(f"{path} is empty")
    if not _uses_structure_scanner(path):
        kept = _fallback_skeleton_lines(text.splitlines())
        return SkeletonView(path=path, text="\n".join(kept))
    result = jsparse.scan(text)
    n = len(result.lines)

    keep: set[int] = set()
    for el in result.elements:
        keep.update(range(el.decl_line, el.open_line + 1))
        keep.add(el.close_line)
    keep.update(result.import_lines)
    keep.update(result.comment_lines)

    out: list[str] = []
    pending_marker_indent: str | None = None
    for i in range(1, n + 1):
        line = result.lines[i - 1]
        inside = result.innermost_element_at(i)
        if i in keep and i not in result.var_decl_lines:
            if pending_marker_indent is not None:
                out.append(pending_marker_indent + ELISION_MARKER)
                pending_marker_indent = None
            out.append(line)
            continue
        if inside is not None:
            # Elided body content: one marker per contiguous region.
            if pending_marker_indent is None:
                stripped = line.strip()
                indent = line[: len(line) - len(line.lstrip())] if stripped else "  "
                pending_marker_indent = indent
            continue
        if i in result.var_decl_lines:
            continue
        if pending_marker_indent is not None:
            out.append(pending_marker_indent + ELISION_MARKER)
            pending_marker_indent = None
        out.append(line)
    if pending_marker_indent is not None:
        out.append(pending_marker_indent + ELISION_MARKER)
    return SkeletonView(path=path, text="\n".join(out))


# --- hunk view ---------------------------------------------------------------


def build_hunk_view(
    path: str, text: str, max_hunk_lines: int = DEFAULT_MAX_HUNK_LINES
) -> HunkView:
    """Full file, with oversized element bodies compressed.

    A body over the budget keeps its header, internal variable declarations,
    comments and nested headers; the rest of each region becomes one marker.
    """
    if max_hunk_lines < 1:
        raise ValueError("max_hunk_lines must be >= 1")
    if not text.strip():
        raise ParseFailure(f"{path} is empty")
    if not _uses_structure_scanner(path):
        return HunkView(path=path, text=text, compressed_elements=())
    result = jsparse.scan(text)

    exceeded: list[jsparse.Element] = []
    for el in result.elements:
        if el.kind == "object":
            continue
        if any(parent_el.contains_line(el.decl_line) for parent_el in exceeded):
            continue
        if el.body_line_count() > max_hunk_lines:
            exceeded.append(el)

    if not exceeded:
        return HunkView(path=path, text=text, compressed_elements=())

    keep_in_body: set[int] = set(result.comment_lines) | set(result.var_decl_lines)
    for el in result.elements:
        keep_in_body.update(range(el.decl_line, el.open_line + 1))
        keep_in_body.add(el.close_line)

    out: list[str] = []
    pending_indent: str | None = None
    for i in range(1, len(result.lines) + 1):
        line = result.lines[i - 1]
        owner = next((el for el in exceeded if el.contains_line(i)), None)
        if owner is None or i in keep_in_body:
            if pending_indent is not None:
                out.append(pending_indent + ELISION_MARKER)
                pending_indent = None
            out.append(line)
            continue
        if pending_indent is None:
            stripped = line.strip()
            pending_indent = line[: len(line) - len(line.lstrip())] if stripped else "  "
    if pending_indent is not None:
        out.append(pending_indent + ELISION_MARKER)
    return HunkView(
        path=path,
        text="\n".join(out),
        compressed_elements=tuple(el.qualified_name for el in exceeded),
    )


# --- bug hunks ---------------------------------------------------------------


def _resolve_element(
    result: jsparse.ScanResult, name: str
) -> jsparse.Element:
    simple = [el for el in result.elements if el.name == name]
    if len(simple) == 1:
        return simple[0]
    qualified = [el for el in result.elements if el.qualified_name == name]
    if len(qualified) == 1:
        return qualified[0]
    suffix = [el for el in result.elements if el.qualified_name.endswith("." + name)]
    if len(suffix) == 1:
        return suffix[0]
    if simple or qualified or suffix:
        matches = sorted({el.qualified_name for el in simple + qualified + suffix})
        raise AmbiguousElement(f"{name!r} matches {matches}")
    raise ElementNotFound(f"no class or function named {name!r}")


def extract_element_hunk(path: str, text: str, element_name: str) -> BugHunk:
    """Exact text of one named element, header through closing brace.

    A bare name must match one element; a dotted name disambiguates through
    the enclosing class, function or object.
    """
    if not _uses_structure_scanner(path):
        raise ElementNotFound(f"{path} is not structure-scanned; use a line anchor")
    result = jsparse.scan(text)
    el = _resolve_element(result, element_name)
    lines = _keepends(text)
    start, end = el.decl_line, el.close_line
    return BugHunk(
        path=path,
        element_name=el.qualified_name,
        start_line=start,
        end_line=end,
        text="".join(lines[start - 1 : end]),
    )


def extract_context_window(
    path: str, text: str, anchor_line: int, window: int = DEFAULT_CONTEXT_WINDOW
) -> BugHunk:
    """A window of up to ``window`` lines centered on an anchor, clamped."""
    if window < 1:
        raise ValueError("window must be >= 1")
    lines = _keepends(text)
    n = len(lines)
    if anchor_line < 1 or anchor_line > n:
        raise AnchorOutOfRange(f"line {anchor_line} outside 1..{n} of {path}")
    start = anchor_line - (window - 1) // 2
    end = start + window - 1
    if end > n:
        end = n
        start = max(1, end - window + 1)
    if start < 1:
        start = 1
        end = min(n, start + window - 1)
    return BugHunk(
        path=path,
        element_name=None,
        start_line=start,
        end_line=end,
        text="".join(lines[start - 1 : end]),
    )
