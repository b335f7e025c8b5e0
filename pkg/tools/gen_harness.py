"""Recording render harness used while fixtures are generated.

Speaks the stdio protocol of the stub harness, but on a manifest miss it
actually renders: page scripts run through record_ops.mjs under node, the
resulting op list is rasterized to a PNG, and both the shot and its manifest
entry are persisted.  Replays of the same fixture then need nothing beyond
the stub harness and the files this tool saved.

Usage: python3 gen_harness.py --manifest PATH --shots-dir PATH
"""

from __future__ import annotations

import argparse
import json
import re
import shutil
import subprocess
import sys
from pathlib import Path

from visrepair.stubharness import scenario_digest

TOOLS_DIR = Path(__file__).resolve().parent
_SRC_RE = re.compile(r'<script\s+[^>]*src="([^"]+)"')


def _local_scripts(page: Path) -> list[Path]:
    scripts = []
    for src in _SRC_RE.findall(page.read_text(encoding="utf-8")):
        if src.startswith(("http://", "https://", "//")):
            continue
        scripts.append((page.parent / src).resolve())
    return scripts


def _render(page: Path, width: int, height: int, out: Path) -> list[str]:
    scripts = [str(p) for p in _local_scripts(page)]
    ops_proc = subprocess.run(
        ["node", str(TOOLS_DIR / "record_ops.mjs"), str(width), str(height), *scripts],
        capture_output=True,
        text=True,
        check=True,
    )
    doc = json.loads(ops_proc.stdout)
    subprocess.run(
        [sys.executable, str(TOOLS_DIR / "rasterize.py"), str(out)],
        input=ops_proc.stdout,
        text=True,
        check=True,
    )
    return [str(e) for e in doc.get("errors", [])]


def _respond(status: str, png: str | None, console_errors: list[str], message: str | None) -> None:
    print(
        json.dumps(
            {"status": status, "png": png, "console_errors": console_errors, "message": message}
        ),
        flush=True,
    )


def handle(raw: str, manifest_path: Path, shots_dir: Path) -> None:
    request = json.loads(raw)
    page = Path(request["page"])
    out = Path(request["out"])
    width = int(request["viewport"]["w"])
    height = int(request["viewport"]["h"])

    manifest: dict[str, str] = {}
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    digest = scenario_digest(page)
    errors: list[str] = []
    shot_name = manifest.get(digest)
    if shot_name is None or not (shots_dir / shot_name).is_file():
        shot_name = f"{digest[:16]}.png"
        errors = _render(page, width, height, shots_dir / shot_name)
        manifest[digest] = shot_name
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(
            json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )
    out.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(shots_dir / shot_name, out)
    _respond("ok", str(out), errors, None)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--shots-dir", required=True)
    args = parser.parse_args(argv)
    manifest_path = Path(args.manifest)
    shots_dir = Path(args.shots_dir)
    shots_dir.mkdir(parents=True, exist_ok=True)
    for raw in sys.stdin:
        if raw.strip():
            handle(raw, manifest_path, shots_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
