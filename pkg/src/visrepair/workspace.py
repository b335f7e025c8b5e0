"""Issue records and repository snapshots.

Everything downstream works from two inputs: an issue report (title, body,
screenshots, maybe reproduction code) and an immutable snapshot of the
project tree.  This module loads both and normalizes the awkward parts:
binary sniffing, documentation-root detection, image decoding.
"""

from __future__ import annotations

import io
import json
import os
import re
from dataclasses import dataclass
from pathlib import Path

import httpx
from PIL import Image

from .errors import (
    EmptyRepository,
    MissingField,
    NoDocumentation,
    NotADirectory,
    UnreadableImage,
    UnsupportedMediaType,
)

DOC_ROOT_CANDIDATES = ("docs", "doc", "documentation", "website/docs")
DOC_SUFFIXES = {".md", ".mdx", ".rst", ".txt"}
EXCLUDED_DIRS = {".git", ".hg", ".svn", "node_modules", "dist", "build", "__pycache__", "runs"}
SUPPORTED_IMAGE_FORMATS = {
    "PNG": "image/png",
    "JPEG": "image/jpeg",
    "GIF": "image/gif",
    "WEBP": "image/webp",
    "BMP": "image/bmp",
}
BINARY_SNIFF_BYTES = 8192


@dataclass(frozen=True)
class ImageAttachment:
    image_id: str
    data: bytes
    media_type: str
    width: int
    height: int


@dataclass(frozen=True)
class IssueReport:
    instance_id: str
    title: str
    body: str
    images: tuple[ImageAttachment, ...]
    repro_code: str | None


def _fetch_image_bytes(source: str, base_dir: Path) -> bytes:
    if source.startswith(("http://", "https://")):
        try:
            response = httpx.get(source, timeout=30.0)
            response.raise_for_status()
            return response.content
        except httpx.HTTPError as exc:
            raise UnreadableImage(f"fetching {source} failed: {exc}") from exc
    path = Path(source)
    if not path.is_absolute():
        path = base_dir / path
    try:
        return path.read_bytes()
    except OSError as exc:
        raise UnreadableImage(f"reading {path} failed: {exc}") from exc


def _decode_image(image_id: str, data: bytes) -> ImageAttachment:
    try:
        with Image.open(io.BytesIO(data)) as img:
            fmt = img.format or ""
            width, height = img.size
    except Exception as exc:
        raise UnreadableImage(f"image {image_id!r} did not decode: {exc}") from exc
    media_type = SUPPORTED_IMAGE_FORMATS.get(fmt)
    if media_type is None:
        raise UnsupportedMediaType(f"image {image_id!r} has unsupported format {fmt!r}")
    return ImageAttachment(
        image_id=image_id, data=data, media_type=media_type, width=width, height=height
    )


_FENCE_RE = re.compile(r"```([^\n]*)\n(.*?)\n?```", re.DOTALL)
_REPRO_HINT_RE = re.compile(r"reproduc|repro\b|steps to trigger", re.IGNORECASE)


def extract_repro_block(body: str) -> str | None:
    """Find a fenced block the reporter marked as reproduction code.

    A block counts when its info string mentions repro, or when one of the
    three non-empty lines right above it does.  First match wins.
    """
    for match in _FENCE_RE.finditer(body):
        info, code = match.group(1), match.group(2)
        if "repro" in info.lower():
            return code
        preceding = body[: match.start()].splitlines()
        context = [line for line in preceding if line.strip()][-3:]
        if any(_REPRO_HINT_RE.search(line) for line in context):
            return code
    return None


def load_issue_report(path: Path | str) -> IssueReport:
    """Load an issue record from JSON and materialize its screenshots.

    Image sources may be filesystem paths (relative to the record) or http(s)
    URLs.  Explicit ``repro_code`` wins over anything found in the body.
    """
    path = Path(path)
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MissingField(f"issue record {path} unreadable: {exc}") from exc
    for name in ("instance_id", "title", "body"):
        if not isinstance(record.get(name), str) or not record[name]:
            raise MissingField(f"issue record missing required field {name!r}")
    images = []
    for entry in record.get("images", []):
        image_id = entry.get("id")
        source = entry.get("source")
        if not image_id or not source:
            raise MissingField("image entries need both 'id' and 'source'")
        data = _fetch_image_bytes(source, path.parent)
        images.append(_decode_image(image_id, data))
    repro = record.get("repro_code")
    if not isinstance(repro, str) or not repro.strip():
        repro = extract_repro_block(record["body"])
    return IssueReport(
        instance_id=record["instance_id"],
        title=record["title"],
        body=record["body"],
        images=tuple(images),
        repro_code=repro,
    )


# --- repository snapshot -----------------------------------------------------


def _is_binary(path: Path) -> bool:
    # Null byte in the first 8 KiB means binary; same trick git uses.
    with path.open("rb") as handle:
        return b"\x00" in handle.read(BINARY_SNIFF_BYTES)


@dataclass(frozen=True)
class RepoSnapshot:
    root: Path
    file_index: tuple[str, ...]
    binary_files: frozenset[str]
    doc_root: str | None

    def read_text(self, rel_path: str) -> str:
        data = (self.root / rel_path).read_bytes()
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError:
            return data.decode("latin-1")

    def doc_files(self) -> tuple[str, ...]:
        if self.doc_root is None:
            return ()
        prefix = self.doc_root + "/"
        return tuple(p for p in self.file_index if p.startswith(prefix))

    def code_files(self) -> tuple[str, ...]:
        doc_prefix = (self.doc_root + "/") if self.doc_root else None
        out = []
        for p in self.file_index:
            if doc_prefix and p.startswith(doc_prefix):
                continue
            if Path(p).suffix.lower() in DOC_SUFFIXES:
                continue
            out.append(p)
        return tuple(out)


def snapshot_repository(root: Path | str) -> RepoSnapshot:
    """Index a project tree: text files, flagged binaries, doc root.

    The index holds relative POSIX paths in sorted order; VCS metadata and
    build output directories are skipped entirely.
    """
    root = Path(root)
    if not root.is_dir():
        raise NotADirectory(f"{root} is not a directory")
    text_files: list[str] = []
    binary_files: set[str] = set()
    total = 0
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in EXCLUDED_DIRS)
        for name in sorted(filenames):
            full = Path(dirpath) / name
            if full.is_symlink():
                continue
            rel = full.relative_to(root).as_posix()
            total += 1
            if _is_binary(full):
                binary_files.add(rel)
            else:
                text_files.append(rel)
    if total == 0:
        raise EmptyRepository(f"{root} holds no files")
    doc_root = None
    for candidate in DOC_ROOT_CANDIDATES:
        if (root / candidate).is_dir():
            doc_root = candidate
            break
    return RepoSnapshot(
        root=root,
        file_index=tuple(sorted(text_files)),
        binary_files=frozenset(binary_files),
        doc_root=doc_root,
    )


# --- tree rendering ----------------------------------------------------------


def render_path_tree(paths: list[str] | tuple[str, ...]) -> str:
    """Render relative paths as an indented tree, two spaces per level.

    Directories carry a trailing slash; entries at each level are sorted with
    directories first.
    """
    tree: dict = {}
    for path in paths:
        node = tree
        parts = path.split("/")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node.setdefault(parts[-1], None)

    lines: list[str] = []

    def walk(node: dict, depth: int) -> None:
        dirs = sorted(k for k, v in node.items() if isinstance(v, dict))
        files = sorted(k for k, v in node.items() if v is None)
        for name in dirs:
            lines.append("  " * depth + name + "/")
            walk(node[name], depth + 1)
        for name in files:
            lines.append("  " * depth + name)

    walk(tree, 0)
    return "\n".join(lines)


def doc_tree(snapshot: RepoSnapshot) -> str:
    """Indented tree of every documentation file under the doc root."""
    if snapshot.doc_root is None:
        raise NoDocumentation(f"{snapshot.root} has no documentation root")
    docs = snapshot.doc_files()
    if not docs:
        raise NoDocumentation(f"{snapshot.doc_root} holds no documentation files")
    return render_path_tree(list(docs))
