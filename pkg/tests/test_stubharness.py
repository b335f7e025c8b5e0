"""Pre-rendered screenshot harness and its scenario hashing."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

from conftest import png_bytes
from visrepair.stubharness import scenario_digest

PAGE = """<!DOCTYPE html>
<html><body>
<canvas id="stage"></canvas>
<script src="../dist/bundle.js"></script>
<script src="repro.js"></script>
</body></html>
"""


def _scenario(tmp_path: Path, bundle: str = "paint();", repro: str = "go();") -> Path:
    (tmp_path / "dist").mkdir(exist_ok=True)
    (tmp_path / "dist/bundle.js").write_text(bundle)
    scenario = tmp_path / "scenario"
    scenario.mkdir(exist_ok=True)
    (scenario / "repro.js").write_text(repro)
    page = scenario / "page.html"
    page.write_text(PAGE)
    return page


class TestScenarioDigest:
    def test_sensitive_to_page_and_scripts(self, tmp_path: Path):
        page = _scenario(tmp_path)
        base = scenario_digest(page)
        assert base == scenario_digest(page)

        (tmp_path / "dist/bundle.js").write_text("paintDifferently();")
        assert scenario_digest(page) != base

        _scenario(tmp_path, bundle="paint();", repro="goFaster();")
        changed_repro = scenario_digest(page)
        assert changed_repro != base

    def test_missing_script_still_hashes(self, tmp_path: Path):
        page = _scenario(tmp_path)
        (tmp_path / "dist/bundle.js").unlink()
        assert scenario_digest(page)

    def test_remote_scripts_skipped(self, tmp_path: Path):
        scenario = tmp_path / "s"
        scenario.mkdir()
        page = scenario / "page.html"
        page.write_text('<script src="https://cdn.invalid/x.js"></script>')
        assert scenario_digest(page)


def _run_harness(tmp_path: Path, requests: list[dict], manifest: dict) -> list[dict]:
    manifest_path = tmp_path / "shots_manifest.json"
    manifest_path.write_text(json.dumps(manifest))
    proc = subprocess.run(
        [sys.executable, "-m", "visrepair.stubharness", "--manifest", str(manifest_path)],
        input="\n".join(json.dumps(r) for r in requests) + "\n",
        capture_output=True,
        text=True,
        timeout=30,
    )
    assert proc.returncode == 0, proc.stderr
    return [json.loads(line) for line in proc.stdout.splitlines() if line.strip()]


class TestProtocol:
    def test_known_scenario_copies_shot(self, tmp_path: Path):
        page = _scenario(tmp_path)
        digest = scenario_digest(page)
        (tmp_path / "shot.png").write_bytes(png_bytes(4, 3))
        out = tmp_path / "out/result.png"
        responses = _run_harness(
            tmp_path,
            [
                {
                    "page": str(page),
                    "viewport": {"w": 4, "h": 3},
                    "settle_ms": 10,
                    "out": str(out),
                }
            ],
            {digest: "shot.png"},
        )
        assert responses[0]["status"] == "ok"
        assert responses[0]["console_errors"] == []
        assert out.read_bytes() == png_bytes(4, 3)

    def test_unknown_scenario_is_an_error(self, tmp_path: Path):
        page = _scenario(tmp_path)
        responses = _run_harness(
            tmp_path,
            [{"page": str(page), "viewport": {"w": 4, "h": 3}, "settle_ms": 0, "out": str(tmp_path / "o.png")}],
            {},
        )
        assert responses[0]["status"] == "error"
        assert "no pre-rendered shot" in responses[0]["message"]

    def test_missing_page_is_an_error(self, tmp_path: Path):
        responses = _run_harness(
            tmp_path,
            [{"page": str(tmp_path / "ghost.html"), "viewport": {"w": 1, "h": 1}, "settle_ms": 0, "out": str(tmp_path / "o.png")}],
            {},
        )
        assert responses[0]["status"] == "error"
        assert "not found" in responses[0]["message"]

    def test_malformed_request_is_an_error(self, tmp_path: Path):
        manifest_path = tmp_path / "m.json"
        manifest_path.write_text("{}")
        proc = subprocess.run(
            [sys.executable, "-m", "visrepair.stubharness", "--manifest", str(manifest_path)],
            input='{"not": "a request"}\n',
            capture_output=True,
            text=True,
            timeout=30,
        )
        response = json.loads(proc.stdout.splitlines()[0])
        assert response["status"] == "error"

    def test_one_response_line_per_request(self, tmp_path: Path):
        page = _scenario(tmp_path)
        digest = scenario_digest(page)
        (tmp_path / "shot.png").write_bytes(png_bytes())
        request = {
            "page": str(page),
            "viewport": {"w": 8, "h": 6},
            "settle_ms": 0,
            "out": str(tmp_path / "o.png"),
        }
        responses = _run_harness(tmp_path, [request] * 3, {digest: "shot.png"})
        assert len(responses) == 3
        assert all(r["status"] == "ok" for r in responses)

    def test_unreadable_manifest_exits_2(self, tmp_path: Path):
        proc = subprocess.run(
            [sys.executable, "-m", "visrepair.stubharness", "--manifest", str(tmp_path / "no.json")],
            input="",
            capture_output=True,
            text=True,
            timeout=30,
        )
        assert proc.returncode == 2
