"""A tiny but complete project plus scripted model responses.

Pipeline, service, and CLI tests all need the same thing: a repo that
builds, an issue with an embedded reproduction snippet, a config whose
harness actually renders, and a chat function that answers every stage.
Keeping one copy here stops the three suites from drifting apart.
"""

from __future__ import annotations

import io
import textwrap
from pathlib import Path

from PIL import Image

from conftest import png_bytes, scripted_provider, write_issue, write_repo
from visrepair.provider import CostLedger, ImagePart, PriceTable

GREEN = (46, 139, 87)
RED = (204, 34, 34)

PRICES = {
    "chat-test": {"prompt_per_million": 2.5, "completion_per_million": 10.0},
    "embed-test": {"prompt_per_million": 0.1, "completion_per_million": 0},
}

BUILD_SCRIPT = textwrap.dedent(
    """\
    import sys
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent
    parts = []
    for path in sorted((root / "src").glob("*.js")):
        text = path.read_text()
        if "SYNTAX_BOMB" in text:
            sys.exit(1)
        parts.append(text)
    out = root / "dist"
    out.mkdir(exist_ok=True)
    (out / "bundle.js").write_text("\\n".join(parts))
    """
)

# Solid-color renderer keyed off the bundle, same trick as the validation
# tests: sea green when the fix landed, red while the bug is in place.
FAKE_HARNESS = textwrap.dedent(
    """\
    import json, re, sys
    from pathlib import Path
    from PIL import Image

    request = json.loads(sys.stdin.readline())
    page = Path(request["page"])
    html = page.read_text()
    color = (0, 0, 255)
    for src in re.findall(r'src="([^"]+)"', html):
        target = page.parent / src
        if target.is_file() and "bundle" in target.name:
            bundle = target.read_text()
            if "#2e8b57" in bundle:
                color = (46, 139, 87)
            elif "#cc2222" in bundle:
                color = (204, 34, 34)
    size = (request["viewport"]["w"], request["viewport"]["h"])
    Image.new("RGB", size, color).save(request["out"])
    print(json.dumps({"status": "ok", "png": request["out"], "console_errors": []}))
    """
)

PALETTE_JS = '// shared palette\nwindow.COLOR = "#cc2222";\nwindow.SIZE = 12;\n'

WIDGET_JS = textwrap.dedent(
    """\
    function paintBox(ctx) {
      ctx.fillStyle = window.COLOR;
      ctx.fillRect(0, 0, window.SIZE, window.SIZE);
    }

    window.paintBox = paintBox;
    """
)

ISSUE_BODY = textwrap.dedent(
    """\
    The demo box comes out bright red, but our brand accent is sea green.

    Steps to reproduce:

    ```js
    paintBox(document.getElementById("stage").getContext("2d"));
    ```
    """
)

CONFIG_YAML = textwrap.dedent(
    """\
    models:
      chat: chat-test
      embed: embed-test
      prices:
        chat-test: {prompt_per_million: 2.5, completion_per_million: 10.0}
        embed-test: {prompt_per_million: 0.1, completion_per_million: 0}
    provider:
      mode: replay
      transcript: ./transcript.json
    patch:
      sampled_count: 3
    validation:
      viewport: {width: 32, height: 24}
      settle_ms: 10
    project:
      build_cmd: python3 scripts/build.py
      bundle_path: dist/bundle.js
    render:
      harness_cmd: ['python3', './fake_harness.py']
    """
)


def _fix_block(search: str, replace: str) -> str:
    return (
        "```\nsrc/palette.js\n"
        f"<<<<<<< SEARCH\n{search}\n=======\n{replace}\n>>>>>>> REPLACE\n```\n"
    )


GREEDY_FIX = "The palette entry is wrong.\n" + _fix_block(
    'window.COLOR = "#cc2222";', 'window.COLOR = "#2e8b57";'
)
SIZE_FIX = _fix_block("window.SIZE = 12;", "window.SIZE = 14;")
SAMPLED_FIXES = [GREEDY_FIX, "Maybe adjust the stylesheet instead?\n", SIZE_FIX]

PICK_RESPONSE = (
    "UNDERSTANDING\nThe widget reads its accent color from a palette table.\n"
    "FILES\ndocs/colors.md\nDIRECTORIES\ndocs\n"
)
FILE_SAMPLES = ["FILES\nsrc/palette.js\n", "FILES\nsrc/palette.js\nsrc/widget.js\n"]
HUNK_SAMPLES = ["src/palette.js: line 2\n", "src/widget.js: paintBox\n"]


def brain(request, forbidden: tuple[str, ...] = ()):
    """Scripted answers for every stage the pipeline can reach."""
    text = request.messages[0].text_content()
    for marker in forbidden:
        assert marker not in text, f"stage should be disabled: {marker}"
    n = request.n_samples
    if "TASK: PICK DOCUMENTATION" in text:
        return [PICK_RESPONSE]
    if "TASK: WRITE REPRODUCTION SCRIPT" in text:
        raise AssertionError("issue carries its own reproduction snippet")
    if "TASK: LOCATE SUSPICIOUS FILES" in text:
        return FILE_SAMPLES[:n]
    if "TASK: CONFIRM KEY FILES" in text:
        return ["FILES\nsrc/palette.js\nsrc/widget.js\n"]
    if "TASK: LOCATE FAULTY REGIONS" in text:
        return HUNK_SAMPLES[:n]
    if "TASK: WRITE FIX" in text:
        if n == 1:
            return [GREEDY_FIX]
        return SAMPLED_FIXES[:n]
    if "TASK: JUDGE RENDERING" in text:
        images = [p for p in request.messages[0].parts if isinstance(p, ImagePart)]
        with Image.open(io.BytesIO(images[1].data)) as img:
            pixel = img.convert("RGB").getpixel((0, 0))
        return ["effective" if pixel == GREEN else "ineffective"]
    raise AssertionError(f"unscripted prompt: {text[:80]}")


def write_project(root: Path) -> dict[str, Path]:
    """Lay out repo, issue, config, and harness; returns their paths."""
    repo = write_repo(
        root / "repo",
        {
            "src/palette.js": PALETTE_JS,
            "src/widget.js": WIDGET_JS,
            "scripts/build.py": BUILD_SCRIPT,
            "docs/colors.md": "The widget accent is sea green (#2e8b57).\n",
            "docs/about.md": "A tiny canvas widget library.\n",
        },
    )
    (root / "fake_harness.py").write_text(FAKE_HARNESS, encoding="utf-8")
    shot = root / "issue_shot.png"
    shot.write_bytes(png_bytes(32, 24, RED))
    issue = write_issue(
        root / "issue.json",
        ISSUE_BODY,
        instance_id="pipe-1",
        title="Box paints red instead of sea green",
        images=[{"id": "shot-1", "source": "issue_shot.png"}],
    )
    config = root / "config.yaml"
    config.write_text(CONFIG_YAML, encoding="utf-8")
    return {"root": root, "repo": repo, "issue": issue, "config": config}


def record_provider(chat_fn=brain):
    """Scripted provider in record mode, priced like the project config."""
    return scripted_provider(
        chat_fn,
        mode="record",
        price_table=PriceTable(PRICES),
        ledger=CostLedger(),
    )


def collect_artifacts(run_dir: Path) -> dict[str, bytes]:
    """Bytes of every run artifact that should be reproducible.

    Skips run.json (absolute input paths) and builds/ (scratch trees).
    """
    out: dict[str, bytes] = {}
    for path in sorted(Path(run_dir).rglob("*")):
        if path.is_dir():
            continue
        rel = path.relative_to(run_dir)
        if rel.parts[0] == "builds" or rel.name == "run.json":
            continue
        out[str(rel)] = path.read_bytes()
    return out
