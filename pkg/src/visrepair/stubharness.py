"""Stub render harness: pre-rendered screenshots over the stdio protocol.

Speaks the same one-line-JSON-in, one-line-JSON-out protocol as the real
render harness, but instead of rendering it hashes the scenario (the page
plus every local script it references, bundle included) and copies the
matching pre-rendered PNG from a manifest.  This keeps the whole validation
loop runnable with no browser and no display server.

Usage: ``python -m visrepair.stubharness --manifest shots_manifest.json``
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import shutil
import sys
from pathlib import Path

_SCRIPT_SRC_RE = re.compile(rb"<script\s+[^>]*src=\"([^\"]+)\"")


def scenario_digest(page_path: Path) -> str:
    """Content hash of a page and the local scripts it references, in order."""
    html = page_path.read_bytes()
    h = hashlib.sha256()
    h.update(b"page\x00")
    h.update(html)
    for src in _SCRIPT_SRC_RE.findall(html):
        h.update(b"\x00script\x00" + src + b"\x00")
        src_text = src.decode("utf-8", errors="replace")
        if src_text.startswith(("http://", "https://", "//")):
            continue
        target = (page_path.parent / src_text).resolve()
        h.update(target.read_bytes() if target.is_file() else b"<missing>")
    return h.hexdigest()


def _respond(status: str, png: str | None, console_errors: list[str], message: str | None) -> None:
    print(
        json.dumps(
            {
                "status": status,
                "png": png,
                "console_errors": console_errors,
                "message": message,
            }
        ),
        flush=True,
    )


def handle_request(raw: str, manifest: dict[str, str], shots_dir: Path) -> None:
    try:
        request = json.loads(raw)
        page = Path(request["page"])
        out = Path(request["out"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        _respond("error", None, [], f"bad request: {exc}")
        return
    if not page.is_file():
        _respond("error", None, [], f"page not found: {page}")
        return
    digest = scenario_digest(page)
    shot_name = manifest.get(digest)
    if shot_name is None:
        _respond("error", None, [], f"no pre-rendered shot for scenario {digest[:16]}")
        return
    source = shots_dir / shot_name
    if not source.is_file():
        _respond("error", None, [], f"manifest points at missing file {shot_name}")
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(source, out)
    _respond("ok", str(out), [], None)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--manifest", required=True, help="JSON map of scenario digest to PNG name")
    parser.add_argument(
        "--shots-dir",
        default=None,
        help="directory holding the PNGs (default: the manifest's directory)",
    )
    args = parser.parse_args(argv)
    manifest_path = Path(args.manifest)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read manifest: {exc}", file=sys.stderr)
        return 2
    shots_dir = Path(args.shots_dir) if args.shots_dir else manifest_path.parent
    for raw in sys.stdin:
        if raw.strip():
            handle_request(raw, manifest, shots_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
