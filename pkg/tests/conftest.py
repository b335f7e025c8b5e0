"""Shared helpers for the test suite."""

from __future__ import annotations

import io
import json
from pathlib import Path

import pytest
from PIL import Image

from visrepair.provider import ModelProvider, ScriptedBackend, hashing_embedder


def png_bytes(width: int = 8, height: int = 6, color: tuple = (200, 30, 30)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buf, format="PNG")
    return buf.getvalue()


def write_repo(root: Path, files: dict[str, str | bytes]) -> Path:
    for rel, content in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            path.write_text(content, encoding="utf-8")
    return root


def write_issue(path: Path, body: str = "Something renders wrong.", **overrides) -> Path:
    record = {
        "instance_id": "proj-1",
        "title": "Widget renders wrong",
        "body": body,
        "images": [],
    }
    record.update(overrides)
    path.write_text(json.dumps(record), encoding="utf-8")
    return path


def scripted_provider(chat_fn, mode: str = "live", embed_fn=None, **kwargs) -> ModelProvider:
    backend = ScriptedBackend(chat_fn, embed_fn or hashing_embedder)
    return ModelProvider(
        mode=mode,
        chat_model="chat-test",
        embed_model="embed-test",
        backend=backend,
        **kwargs,
    )


@pytest.fixture
def tiny_repo(tmp_path: Path) -> Path:
    return write_repo(
        tmp_path / "repo",
        {
            "src/app.js": "function run() {\n  return 1;\n}\n",
            "docs/guide.md": "# Guide\n\nHow the widget works.\n",
            "README.md": "# Project\n",
        },
    )
