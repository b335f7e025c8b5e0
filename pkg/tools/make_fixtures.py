"""Regenerate the recorded fixture projects under fixtures/.

Each fixture is a small canvas library with one visual bug, an issue record
with a screenshot, a scripted set of model responses, and (after this script
runs) a transcript, pre-rendered shots, and golden run artifacts for every
variant it covers.  Everything a replay needs is frozen to disk, so the test
suite never touches a model endpoint or a browser.

Run from the repository root: python3 tools/make_fixtures.py
"""

from __future__ import annotations

import io
import json
import shutil
import subprocess
import sys
import tempfile
import textwrap
from pathlib import Path

from PIL import Image

from visrepair import pipeline
from visrepair.provider import (
    CostLedger,
    ImagePart,
    ModelProvider,
    PriceTable,
    ScriptedBackend,
    Transcript,
    hashing_embedder,
)

ROOT = Path(__file__).resolve().parent.parent
FIXTURES_DIR = ROOT / "fixtures"
TOOLS_DIR = Path(__file__).resolve().parent

VIEWPORT = (400, 300)

PRICES = {
    "vision-chat-1": {"prompt_per_million": 2.5, "completion_per_million": 10.0},
    "embed-mini-1": {"prompt_per_million": 0.1, "completion_per_million": 0},
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

CONFIG_REPLAY = textwrap.dedent(
    """\
    models:
      chat: vision-chat-1
      embed: embed-mini-1
      prices:
        vision-chat-1: {prompt_per_million: 2.5, completion_per_million: 10.0}
        embed-mini-1: {prompt_per_million: 0.1, completion_per_million: 0}
    provider:
      mode: replay
      transcript: ./transcript.json
    validation:
      viewport: {width: 400, height: 300}
      settle_ms: 50
    project:
      build_cmd: python3 scripts/build.py
      bundle_path: dist/bundle.js
    render:
      harness_cmd: ['python3', '-m', 'visrepair.stubharness', '--manifest', './shots_manifest.json', '--shots-dir', './shots']
    """
)

CONFIG_RECORD = textwrap.dedent(
    f"""\
    models:
      chat: vision-chat-1
      embed: embed-mini-1
      prices:
        vision-chat-1: {{prompt_per_million: 2.5, completion_per_million: 10.0}}
        embed-mini-1: {{prompt_per_million: 0.1, completion_per_million: 0}}
    provider:
      mode: record
      transcript: ./transcript.json
    validation:
      viewport: {{width: 400, height: 300}}
      settle_ms: 50
    project:
      build_cmd: python3 scripts/build.py
      bundle_path: dist/bundle.js
    render:
      harness_cmd: ['python3', '{TOOLS_DIR}/gen_harness.py', '--manifest', './shots_manifest.json', '--shots-dir', './shots']
    """
)


def _b(path: str, search: str, replace: str) -> str:
    return (
        f"```\n{path}\n<<<<<<< SEARCH\n{search}\n=======\n{replace}\n>>>>>>> REPLACE\n```\n"
    )


FILLERS = [
    "I would want to trace the rendering path before committing to an edit.\n",
    "Hard to pin down from this hunk alone; the bug may live elsewhere.\n",
    "The layout math looks plausible at a glance.\n",
    "Possibly an upstream data problem rather than a drawing bug.\n",
    "No safe single edit stands out in this region.\n",
]


def _pad(samples: list[str], total: int = 39) -> list[str]:
    out = list(samples)
    while len(out) < total:
        out.append(FILLERS[len(out) % len(FILLERS)])
    return out


# --- fixture definitions -----------------------------------------------------

BOXKIT_FIX = _b("src/palette.js", '  accent: "#cc2222",', '  accent: "#2e8b57",')

BOXKIT = {
    "repo": {
        "src/boxkit.js": textwrap.dedent(
            """\
            function clearStage(ctx, width, height) {
              ctx.fillStyle = PALETTE.backdrop;
              ctx.fillRect(0, 0, width, height);
            }

            function drawBox(ctx, x, y, w, h) {
              ctx.fillStyle = PALETTE.accent;
              ctx.fillRect(x, y, w, h);
            }

            window.boxkit = { clearStage, drawBox };
            """
        ),
        "src/palette.js": textwrap.dedent(
            """\
            // Color table shared by every drawing helper.
            const PALETTE = {
              backdrop: "#f8f8f8",
              accent: "#cc2222",
              outline: "#222222",
            };
            """
        ),
        "scripts/build.py": BUILD_SCRIPT,
        "docs/overview.md": "boxkit paints simple labeled boxes onto a canvas stage.\n",
        "docs/palette.md": (
            "# Colors\n\nThe backdrop is near-white (#f8f8f8). The accent is sea green\n"
            "(#2e8b57); accent boxes must always render sea green.\n"
        ),
        "docs/drawing.md": (
            "# Drawing\n\nCall clearStage before anything else, then drawBox once per box.\n"
        ),
    },
    "issue": {
        "instance_id": "boxkit-accent-0001",
        "title": "Accent boxes render bright red instead of sea green",
        "body": textwrap.dedent(
            """\
            Every accent box on the stage comes out bright red. The docs say the
            accent is sea green, and it used to look that way.

            Steps to reproduce:

            ```js
            const ctx = document.getElementById("stage").getContext("2d");
            boxkit.clearStage(ctx, 400, 300);
            boxkit.drawBox(ctx, 40, 40, 120, 80);
            boxkit.drawBox(ctx, 200, 60, 100, 100);
            ```

            The attached screenshot shows the wrong color.
            """
        ),
    },
    "issue_repro": None,  # embedded in the body
    "responses": {
        "pick": (
            "UNDERSTANDING\nAccent boxes take their fill color from the shared palette,"
            " and the docs pin the accent to sea green.\n"
            "FILES\ndocs/palette.md\ndocs/drawing.md\nDIRECTORIES\ndocs\n"
        ),
        "repro": None,
        "files": ["FILES\nsrc/palette.js\n", "FILES\nsrc/palette.js\nsrc/boxkit.js\n"],
        "filter": "FILES\nsrc/palette.js\nsrc/boxkit.js\n",
        "hunks": ["src/palette.js: line 3\n", "src/boxkit.js: drawBox\n"],
        "greedy": "The accent entry in the palette carries the wrong hex value.\n"
        + BOXKIT_FIX,
        "sampled": _pad(
            [
                "Swap the accent back to the documented sea green.\n" + BOXKIT_FIX,
                _b("src/palette.js", '  accent: "#dd0000",', '  accent: "#2e8b57",'),
                FILLERS[0],
                "A brighter backdrop could also mask the tint.\n"
                + _b("src/palette.js", '  backdrop: "#f8f8f8",', '  backdrop: "#ffffff",'),
            ]
        ),
    },
    "judge": lambda img: img.getpixel((50, 50)) == (46, 139, 87),
    "variants": ["full"],
    "expect": {
        "full": {
            "trail": ["effective", "not-evaluated"],
            "patch_has": '"#2e8b57"',
            "fallback": False,
        }
    },
}

CHARTLITE_FIX = _b(
    "src/scale.js",
    "  return Math.round((value * plotHeight) / (maxValue + maxValue));",
    "  return Math.round((value * plotHeight) / maxValue);",
)

CHARTLITE_REPRO = textwrap.dedent(
    """\
    const ctx = document.getElementById("stage").getContext("2d");
    chartlite.drawBars(ctx, [4, 9, 6, 2], {
      x0: 20,
      bottom: 260,
      plotHeight: 240,
      barWidth: 60,
      gap: 20,
      color: "#3366cc",
    });
    """
)

CHARTLITE = {
    "repo": {
        "src/chart.js": textwrap.dedent(
            """\
            function maxOf(values) {
              let max = 0;
              for (let i = 0; i < values.length; i++) {
                if (values[i] > max) {
                  max = values[i];
                }
              }
              return max;
            }

            function drawBars(ctx, values, options) {
              ctx.fillStyle = "#ffffff";
              ctx.fillRect(0, 0, 400, 300);
              const maxValue = maxOf(values);
              for (let i = 0; i < values.length; i++) {
                const h = barHeight(values[i], maxValue, options.plotHeight);
                const x = options.x0 + i * (options.barWidth + options.gap);
                ctx.fillStyle = options.color;
                ctx.fillRect(x, options.bottom - h, options.barWidth, h);
              }
            }

            window.chartlite = { drawBars };
            """
        ),
        "src/scale.js": textwrap.dedent(
            """\
            // Scale helpers for the bar plot.
            function barHeight(value, maxValue, plotHeight) {
              return Math.round((value * plotHeight) / (maxValue + maxValue));
            }
            """
        ),
        "scripts/build.py": BUILD_SCRIPT,
    },
    "issue": {
        "instance_id": "chartlite-bars-0007",
        "title": "Bars plot at half their height",
        "body": (
            "The tallest value should reach the top of the plot area, but every bar\n"
            "tops out around the middle. With values [4, 9, 6, 2] and a 240px plot\n"
            "area the 9 bar stops at 120px. No repro script handy, sorry; the\n"
            "screenshot is from our demo page.\n"
        ),
    },
    "issue_repro": CHARTLITE_REPRO,
    "responses": {
        "pick": None,
        "repro": "I will plot the dataset from the report against the stage canvas.\n\n```js\n"
        + CHARTLITE_REPRO
        + "```\n",
        "files": ["FILES\nsrc/scale.js\n", "FILES\nsrc/scale.js\nsrc/chart.js\n"],
        "filter": "FILES\nsrc/scale.js\nsrc/chart.js\n",
        "hunks": ["src/scale.js: barHeight\n", "src/chart.js: drawBars\n"],
        "greedy": "The divisor doubles the maximum, which halves every bar.\n"
        + CHARTLITE_FIX,
        "sampled": _pad(
            [
                "barHeight divides by twice the maximum; drop the doubling.\n"
                + CHARTLITE_FIX,
                FILLERS[1],
                "The plot background could be softened a touch.\n"
                + _b(
                    "src/chart.js",
                    '  ctx.fillStyle = "#ffffff";',
                    '  ctx.fillStyle = "#fefefe";',
                ),
            ]
        ),
    },
    "judge": lambda img: img.getpixel((130, 100)) == (51, 102, 204),
    "variants": ["full"],
    "expect": {
        "full": {
            "trail": ["effective", "not-evaluated"],
            "patch_has": "/ maxValue);",
            "fallback": False,
        }
    },
}

GRIDLY_WRONG = _b(
    "src/grid.js",
    "  if ((row + col) % 2 === 0) {",
    "  if ((row + col) % 2 === 2) {",
)
GRIDLY_RIGHT = _b(
    "src/grid.js",
    "  if ((row + col) % 2 === 0) {",
    "  if ((row + col) % 2 === 1) {",
)
GRIDLY_COMMENT = _b(
    "src/theme.js", "// Default shading palette.", "// Default shading colors."
)

GRIDLY_REPRO = textwrap.dedent(
    """\
    const ctx = document.getElementById("stage").getContext("2d");
    gridly.drawGrid(ctx, 5, 6, 48, window.gridlyTheme);
    """
)

GRIDLY = {
    "repo": {
        "src/grid.js": textwrap.dedent(
            """\
            function cellShade(row, col, theme) {
              if ((row + col) % 2 === 0) {
                return theme.dark;
              }
              return theme.light;
            }

            function drawGrid(ctx, rows, cols, size, theme) {
              ctx.fillStyle = "#ffffff";
              ctx.fillRect(0, 0, 400, 300);
              for (let r = 0; r < rows; r++) {
                for (let c = 0; c < cols; c++) {
                  ctx.fillStyle = cellShade(r, c, theme);
                  ctx.fillRect(10 + c * size, 10 + r * size, size, size);
                }
              }
            }

            window.gridly = { drawGrid };
            """
        ),
        "src/theme.js": textwrap.dedent(
            """\
            // Default shading palette.
            const DEFAULT_THEME = {
              light: "#f5f5f5",
              dark: "#333333",
            };

            window.gridlyTheme = DEFAULT_THEME;
            """
        ),
        "scripts/build.py": BUILD_SCRIPT,
    },
    "issue": {
        "instance_id": "gridly-checker-0003",
        "title": "Checkerboard shading is inverted",
        "body": (
            "The top-left cell of every grid renders dark, and the rest of the board\n"
            "alternates the wrong way around. The first cell (row 0, column 0) must\n"
            "be light. Screenshot attached from our demo page.\n"
        ),
    },
    "issue_repro": GRIDLY_REPRO,
    "responses": {
        "pick": None,
        "repro": "Drawing the default five-by-six board reproduces the report.\n\n```js\n"
        + GRIDLY_REPRO
        + "```\n",
        "files": ["FILES\nsrc/grid.js\n", "FILES\nsrc/grid.js\nsrc/theme.js\n"],
        "filter": "FILES\nsrc/grid.js\nsrc/theme.js\n",
        "hunks": ["src/grid.js: cellShade\n", "src/grid.js: drawGrid\n"],
        "greedy": "The parity test is the culprit; compare against 2 instead.\n"
        + GRIDLY_WRONG,
        "sampled": _pad(
            [
                "Change the comparison so the even branch can never win.\n"
                + GRIDLY_WRONG,
                FILLERS[2],
                "The theme comment is stale.\n" + GRIDLY_COMMENT,
                "Checker parity should flip on odd sums, not even ones.\n"
                + GRIDLY_RIGHT,
                GRIDLY_WRONG,
                GRIDLY_RIGHT,
                "Try bumping the comparison constant.\n" + GRIDLY_WRONG,
                "The first cell must take the light shade.\n" + GRIDLY_RIGHT,
            ]
        ),
    },
    "judge": lambda img: (
        img.getpixel((12, 12)) == (245, 245, 245)
        and img.getpixel((60, 12)) == (51, 51, 51)
    ),
    "variants": ["full", "base", "i2c", "c2i"],
    "expect": {
        "full": {
            "trail": ["ineffective", "skipped-unchanged", "effective"],
            "patch_has": "% 2 === 1",
            "fallback": False,
        },
        "base": {
            "trail": ["not-evaluated", "not-evaluated", "not-evaluated"],
            "patch_has": "% 2 === 2",
            "fallback": False,
        },
        "i2c": {
            "trail": ["not-evaluated", "not-evaluated", "not-evaluated"],
            "patch_has": "% 2 === 2",
            "fallback": False,
        },
        "c2i": {
            "trail": ["not-evaluated", "not-evaluated", "not-evaluated"],
            "patch_has": "% 2 === 2",
            "fallback": True,
        },
    },
}

FIXTURES = {"boxkit": BOXKIT, "chartlite": CHARTLITE, "gridly": GRIDLY}


# --- scripted backend --------------------------------------------------------


def make_chat_fn(spec: dict):
    responses = spec["responses"]

    def chat_fn(request):
        text = request.messages[0].text_content()
        n = request.n_samples
        if "TASK: PICK DOCUMENTATION" in text:
            assert responses["pick"], "pick requested but not scripted"
            return [responses["pick"]]
        if "TASK: WRITE REPRODUCTION SCRIPT" in text:
            assert responses["repro"], "repro requested but not scripted"
            return [responses["repro"]]
        if "TASK: LOCATE SUSPICIOUS FILES" in text:
            return responses["files"][:n]
        if "TASK: CONFIRM KEY FILES" in text:
            return [responses["filter"]]
        if "TASK: LOCATE FAULTY REGIONS" in text:
            return responses["hunks"][:n]
        if "TASK: WRITE FIX" in text:
            if n == 1:
                return [responses["greedy"]]
            return responses["sampled"][:n]
        if "TASK: JUDGE RENDERING" in text:
            images = [p for p in request.messages[0].parts if isinstance(p, ImagePart)]
            with Image.open(io.BytesIO(images[1].data)) as img:
                good = spec["judge"](img.convert("RGB"))
            return ["Verdict: effective." if good else "Verdict: ineffective."]
        raise AssertionError(f"unscripted prompt: {text[:100]}")

    return chat_fn


def record_provider(spec: dict) -> ModelProvider:
    return ModelProvider(
        mode="record",
        chat_model="vision-chat-1",
        embed_model="embed-mini-1",
        backend=ScriptedBackend(make_chat_fn(spec), hashing_embedder),
        transcript=Transcript(),
        price_table=PriceTable(PRICES),
        ledger=CostLedger(),
    )


# --- rendering the issue screenshot ------------------------------------------


def render_issue_image(repo: Path, repro_code: str, out: Path) -> None:
    """Build the buggy tree and rasterize the reporter's scenario."""
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp) / "tree"
        shutil.copytree(repo, work)
        subprocess.run(
            "python3 scripts/build.py", shell=True, cwd=work, check=True
        )
        repro = work / "repro.js"
        repro.write_text(repro_code, encoding="utf-8")
        ops = subprocess.run(
            [
                "node",
                str(TOOLS_DIR / "record_ops.mjs"),
                str(VIEWPORT[0]),
                str(VIEWPORT[1]),
                str(work / "dist/bundle.js"),
                str(repro),
            ],
            capture_output=True,
            text=True,
            check=True,
        )
        subprocess.run(
            [sys.executable, str(TOOLS_DIR / "rasterize.py"), str(out)],
            input=ops.stdout,
            text=True,
            check=True,
        )


# --- orchestration -----------------------------------------------------------


def collect(run_dir: Path) -> dict[str, bytes]:
    out = {}
    for path in sorted(run_dir.rglob("*")):
        if path.is_dir():
            continue
        rel = path.relative_to(run_dir)
        if rel.parts[0] == "builds" or rel.name == "run.json":
            continue
        out[str(rel)] = path.read_bytes()
    return out


def check_expectations(name: str, variant: str, spec: dict, result: dict) -> None:
    want = spec["expect"][variant]
    got_trail = [t["status"] for t in result["trail"]]
    assert got_trail == want["trail"], (
        f"{name}/{variant}: trail {got_trail}, wanted {want['trail']}"
    )
    assert want["patch_has"] in result["patch"], (
        f"{name}/{variant}: patch lacks {want['patch_has']!r}"
    )
    assert result["fallback_used"] is want["fallback"], (
        f"{name}/{variant}: fallback_used={result['fallback_used']}"
    )


def build_fixture(name: str, spec: dict) -> None:
    fixture = FIXTURES_DIR / name
    if fixture.exists():
        shutil.rmtree(fixture)
    repo = fixture / "repo"
    for rel, text in spec["repo"].items():
        path = repo / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")

    issue_repro = spec["issue_repro"]
    if issue_repro is None:
        from visrepair.workspace import extract_repro_block

        issue_repro = extract_repro_block(spec["issue"]["body"])
        assert issue_repro, f"{name}: issue body carries no repro block"
    render_issue_image(repo, issue_repro, fixture / "issue_image.png")

    issue_doc = dict(spec["issue"])
    issue_doc["images"] = [{"id": "shot-1", "source": "issue_image.png"}]
    (fixture / "issue.json").write_text(
        json.dumps(issue_doc, indent=1) + "\n", encoding="utf-8"
    )

    config = fixture / "config.yaml"
    config.write_text(CONFIG_REPLAY, encoding="utf-8")
    config_record = fixture / "config_record.yaml"
    config_record.write_text(CONFIG_RECORD, encoding="utf-8")

    recorded: dict[str, dict] = {}
    with tempfile.TemporaryDirectory() as tmp:
        for variant in spec["variants"]:
            result = pipeline.run_end_to_end(
                fixture / "issue.json",
                repo,
                config_record,
                mode="record",
                variant=variant,
                out_dir=Path(tmp) / f"record-{variant}",
                provider=record_provider(spec),
            )
            check_expectations(name, variant, spec, result)
            recorded[variant] = collect(Path(result["run_dir"]))
    config_record.unlink()

    with tempfile.TemporaryDirectory() as tmp:
        for variant in spec["variants"]:
            result = pipeline.run_end_to_end(
                fixture / "issue.json",
                repo,
                config,
                mode="replay",
                variant=variant,
                out_dir=Path(tmp) / f"replay-{variant}",
            )
            check_expectations(name, variant, spec, result)
            artifacts = collect(Path(result["run_dir"]))
            assert artifacts == recorded[variant], (
                f"{name}/{variant}: replay artifacts differ from the recording"
            )
            golden = fixture / "golden" / variant
            for rel, data in artifacts.items():
                target = golden / rel
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(data)

    shots = sorted(p.name for p in (fixture / "shots").glob("*.png"))
    print(f"{name}: variants={spec['variants']} shots={len(shots)}")


def main() -> int:
    for name, spec in FIXTURES.items():
        build_fixture(name, spec)
    print("fixtures regenerated under", FIXTURES_DIR)
    return 0


if __name__ == "__main__":
    sys.exit(main())
