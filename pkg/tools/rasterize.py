"""Turn a recorded op list into a PNG.

Reads the JSON emitted by record_ops.mjs on stdin (or from a file given as
the first argument) and writes the raster to the output path.  The canvas
starts white; fillRect paints an axis-aligned rectangle, clearRect paints
white again.  Coordinates are truncated to integers, matching how the
fixture projects draw.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from PIL import Image, ImageDraw


def _parse_color(value: str) -> tuple[int, int, int]:
    text = value.strip()
    if text.startswith("#") and len(text) == 7:
        return tuple(int(text[i : i + 2], 16) for i in (1, 3, 5))
    raise ValueError(f"unsupported color {value!r}")


def rasterize(doc: dict) -> Image.Image:
    image = Image.new("RGB", (int(doc["width"]), int(doc["height"])), (255, 255, 255))
    draw = ImageDraw.Draw(image)
    for entry in doc.get("ops", []):
        x, y = int(entry["x"]), int(entry["y"])
        w, h = int(entry["w"]), int(entry["h"])
        if w <= 0 or h <= 0:
            continue
        if entry["op"] == "fillRect":
            color = _parse_color(entry["color"])
        elif entry["op"] == "clearRect":
            color = (255, 255, 255)
        else:
            raise ValueError(f"unknown op {entry['op']!r}")
        draw.rectangle([x, y, x + w - 1, y + h - 1], fill=color)
    return image


def main(argv: list[str]) -> int:
    if len(argv) == 2:
        doc = json.loads(sys.stdin.read())
        out = Path(argv[1])
    elif len(argv) == 3:
        doc = json.loads(Path(argv[1]).read_text(encoding="utf-8"))
        out = Path(argv[2])
    else:
        print("usage: rasterize.py [OPS_JSON] OUT_PNG", file=sys.stderr)
        return 2
    out.parent.mkdir(parents=True, exist_ok=True)
    rasterize(doc).save(out, format="PNG")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
