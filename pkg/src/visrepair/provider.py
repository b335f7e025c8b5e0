"""Model access with record/replay transcripts and an exact cost ledger.

All chat and embedding traffic flows through :class:`ModelProvider`.  In
``live`` mode requests hit a backend directly; ``record`` mode does the same
but also writes every exchange into a :class:`Transcript`; ``replay`` mode
answers purely from a transcript and never touches the network.  Requests are
keyed by a content fingerprint, so a replayed run must issue byte-identical
requests to find its answers.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx
import numpy as np

from .errors import EndpointUnreachable, RateLimited, ReplayMiss

log = logging.getLogger(__name__)

API_KEY_ENV_VAR = "VISREPAIR_API_KEY"

# Retry schedule for live calls, in seconds.
RETRY_BACKOFF_S = (1.0, 2.0, 4.0)


def estimate_tokens(text: str) -> int:
    """Crude token count used when a backend reports no usage."""
    return len(text.split())


# --- request/response shapes -------------------------------------------------


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    data: bytes
    media_type: str = "image/png"

    def digest(self) -> str:
        return hashlib.sha256(self.data).hexdigest()


Part = TextPart | ImagePart


@dataclass(frozen=True)
class ChatMessage:
    role: str
    parts: tuple[Part, ...]

    @staticmethod
    def text(role: str, text: str) -> "ChatMessage":
        return ChatMessage(role=role, parts=(TextPart(text),))

    def text_content(self) -> str:
        return "\n".join(p.text for p in self.parts if isinstance(p, TextPart))


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float
    n_samples: int = 1
    max_tokens: int = 4096

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("chat request needs at least one message")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    def fingerprint(self) -> str:
        """Content hash identifying this request in a transcript.

        Image bytes contribute through their digests, so transcripts stay
        small while still distinguishing different attachments.
        """
        doc = {
            "kind": "chat",
            "model_id": self.model_id,
            "temperature": float(self.temperature),
            "n_samples": self.n_samples,
            "max_tokens": self.max_tokens,
            "messages": [
                {
                    "role": m.role,
                    "parts": [
                        {"text": p.text}
                        if isinstance(p, TextPart)
                        else {"image_digest": p.digest(), "media_type": p.media_type}
                        for p in m.parts
                    ],
                }
                for m in self.messages
            ],
        }
        return _hash_doc(doc)


@dataclass(frozen=True)
class ChatResponse:
    samples: tuple[str, ...]
    prompt_tokens: int
    completion_tokens: int
    model_id: str

    @property
    def first(self) -> str:
        return self.samples[0]


def _hash_doc(doc: object) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _embed_fingerprint(model_id: str, texts: Sequence[str]) -> str:
    doc = {
        "kind": "embed",
        "model_id": model_id,
        "texts": [hashlib.sha256(t.encode("utf-8")).hexdigest() for t in texts],
    }
    return _hash_doc(doc)


# --- cost ledger -------------------------------------------------------------


@dataclass(frozen=True)
class LedgerEntry:
    stage: str
    prompt_tokens: int
    completion_tokens: int
    dollars: Decimal


class PriceTable:
    """Per-model prices, dollars per million tokens, kept as Decimal."""

    def __init__(self, prices: Mapping[str, Mapping[str, float | str]] | None = None):
        self._prices: dict[str, tuple[Decimal, Decimal]] = {}
        for model_id, entry in (prices or {}).items():
            self._prices[model_id] = (
                Decimal(str(entry.get("prompt_per_million", 0))),
                Decimal(str(entry.get("completion_per_million", 0))),
            )

    def dollars(self, model_id: str, prompt_tokens: int, completion_tokens: int) -> Decimal:
        prompt_rate, completion_rate = self._prices.get(model_id, (Decimal(0), Decimal(0)))
        million = Decimal(1_000_000)
        return (
            prompt_rate * Decimal(prompt_tokens) / million
            + completion_rate * Decimal(completion_tokens) / million
        )


class CostLedger:
    """Append-only record of token and dollar spend, summed exactly."""

    def __init__(self) -> None:
        self._entries: list[LedgerEntry] = []
        self._lock = threading.Lock()

    def add(self, stage: str, prompt_tokens: int, completion_tokens: int, dollars: Decimal) -> None:
        if prompt_tokens < 0 or completion_tokens < 0:
            raise ValueError("token counts cannot be negative")
        entry = LedgerEntry(stage, prompt_tokens, completion_tokens, Decimal(dollars))
        with self._lock:
            self._entries.append(entry)

    @property
    def entries(self) -> tuple[LedgerEntry, ...]:
        with self._lock:
            return tuple(self._entries)

    def total_tokens(self) -> int:
        return sum(e.prompt_tokens + e.completion_tokens for e in self.entries)

    def total_dollars(self) -> Decimal:
        return sum((e.dollars for e in self.entries), Decimal(0))

    def by_stage(self) -> dict[str, dict[str, object]]:
        out: dict[str, dict[str, object]] = {}
        for e in self.entries:
            bucket = out.setdefault(
                e.stage,
                {"prompt_tokens": 0, "completion_tokens": 0, "dollars": Decimal(0)},
            )
            bucket["prompt_tokens"] += e.prompt_tokens
            bucket["completion_tokens"] += e.completion_tokens
            bucket["dollars"] += e.dollars
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "CostLedger":
        ledger = cls()
        for entry in doc.get("entries", []):
            ledger.add(
                entry["stage"],
                int(entry["prompt_tokens"]),
                int(entry["completion_tokens"]),
                Decimal(entry["dollars"]),
            )
        return ledger

    def extend(self, other: "CostLedger") -> None:
        for entry in other.entries:
            self.add(entry.stage, entry.prompt_tokens, entry.completion_tokens, entry.dollars)

    def to_json(self) -> dict:
        return {
            "entries": [
                {
                    "stage": e.stage,
                    "prompt_tokens": e.prompt_tokens,
                    "completion_tokens": e.completion_tokens,
                    "dollars": str(e.dollars),
                }
                for e in self.entries
            ],
            "by_stage": {
                stage: {
                    "prompt_tokens": b["prompt_tokens"],
                    "completion_tokens": b["completion_tokens"],
                    "dollars": str(b["dollars"]),
                }
                for stage, b in sorted(self.by_stage().items())
            },
            "total_tokens": self.total_tokens(),
            "total_dollars": str(self.total_dollars()),
        }


# --- transcript --------------------------------------------------------------


class Transcript:
    """Recorded chat and embedding exchanges, keyed by request fingerprint."""

    def __init__(self) -> None:
        self.chat: dict[str, dict] = {}
        self.embeddings: dict[str, dict] = {}

    @classmethod
    def load(cls, path: Path | str) -> "Transcript":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        t = cls()
        t.chat = dict(raw.get("chat", {}))
        t.embeddings = dict(raw.get("embeddings", {}))
        return t

    def save(self, path: Path | str) -> None:
        doc = {"chat": self.chat, "embeddings": self.embeddings}
        text = json.dumps(doc, sort_keys=True, indent=1)
        Path(path).write_text(text + "\n", encoding="utf-8")

    def merge(self, other: "Transcript") -> None:
        self.chat.update(other.chat)
        self.embeddings.update(other.embeddings)


# --- backends ----------------------------------------------------------------


class Backend(Protocol):
    """Anything that can answer chat and embedding requests."""

    def chat(self, request: ChatRequest) -> ChatResponse: ...

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]: ...


class HttpBackend:
    """Chat-completions style HTTP backend.

    Wire format: POST ``chat_url`` with ``{"model", "messages", "temperature",
    "n", "max_tokens"}`` where image parts travel as base64 data URLs, and
    POST ``embed_url`` with ``{"model", "input"}``.  The API key is read from
    the environment, never stored in config files.
    """

    def __init__(
        self,
        chat_url: str,
        embed_url: str,
        api_key_env: str = API_KEY_ENV_VAR,
        timeout_s: float = 120.0,
        client: httpx.Client | None = None,
    ):
        self.chat_url = chat_url
        self.embed_url = embed_url
        self.api_key = os.environ.get(api_key_env, "")
        self._client = client or httpx.Client(timeout=timeout_s)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, url: str, payload: dict) -> dict:
        try:
            response = self._client.post(url, json=payload, headers=self._headers())
        except httpx.HTTPError as exc:
            raise EndpointUnreachable(f"POST {url} failed: {exc}") from exc
        if response.status_code == 429:
            raise RateLimited(f"POST {url} rate limited")
        if response.status_code >= 400:
            raise EndpointUnreachable(
                f"POST {url} returned {response.status_code}: {response.text[:200]}"
            )
        return response.json()

    def chat(self, request: ChatRequest) -> ChatResponse:
        messages = []
        for message in request.messages:
            content: list[dict] = []
            for part in message.parts:
                if isinstance(part, TextPart):
                    content.append({"type": "text", "text": part.text})
                else:
                    encoded = base64.b64encode(part.data).decode("ascii")
                    content.append(
                        {
                            "type": "image_url",
                            "image_url": {"url": f"data:{part.media_type};base64,{encoded}"},
                        }
                    )
            messages.append({"role": message.role, "content": content})
        raw = self._post(
            self.chat_url,
            {
                "model": request.model_id,
                "messages": messages,
                "temperature": request.temperature,
                "n": request.n_samples,
                "max_tokens": request.max_tokens,
            },
        )
        try:
            choices = raw["choices"]
            samples = tuple(str(c["message"]["content"]) for c in choices)
            usage = raw.get("usage", {})
        except (KeyError, TypeError) as exc:
            raise EndpointUnreachable(f"malformed chat response: {exc}") from exc
        return ChatResponse(
            samples=samples,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            model_id=request.model_id,
        )

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]:
        raw = self._post(self.embed_url, {"model": model_id, "input": list(texts)})
        try:
            rows = sorted(raw["data"], key=lambda r: r["index"])
            return [list(map(float, r["embedding"])) for r in rows]
        except (KeyError, TypeError) as exc:
            raise EndpointUnreachable(f"malformed embed response: {exc}") from exc


# Tokens charged per image attachment when usage is estimated locally.
IMAGE_TOKEN_ESTIMATE = 64


class ScriptedBackend:
    """Deterministic in-process backend for tests and fixture recording."""

    def __init__(
        self,
        chat_fn: Callable[[ChatRequest], Sequence[str]],
        embed_fn: Callable[[Sequence[str]], list[list[float]]],
    ):
        self.chat_fn = chat_fn
        self.embed_fn = embed_fn

    def chat(self, request: ChatRequest) -> ChatResponse:
        samples = tuple(self.chat_fn(request))
        prompt_tokens = 0
        for message in request.messages:
            for part in message.parts:
                if isinstance(part, TextPart):
                    prompt_tokens += estimate_tokens(part.text)
                else:
                    prompt_tokens += IMAGE_TOKEN_ESTIMATE
        completion_tokens = sum(estimate_tokens(s) for s in samples)
        return ChatResponse(
            samples=samples,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            model_id=request.model_id,
        )

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]:
        return self.embed_fn(texts)


def hashing_embedder(texts: Sequence[str], dim: int = 64) -> list[list[float]]:
    """Bag-of-hashed-words embedder: deterministic, dependency-free.

    Useful as the scripted counterpart of a real embedding endpoint; cosine
    similarity still tracks word overlap.
    """
    vectors = []
    for text in texts:
        v = [0.0] * dim
        for token in text.lower().split():
            h = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")
            v[h % dim] += 1.0
        vectors.append(v)
    return vectors


# --- the provider ------------------------------------------------------------


MODES = ("live", "record", "replay")


class ModelProvider:
    """Single gateway for all model traffic.

    Every call books its usage into the ledger under the caller's stage name.
    Embedding vectors are L2-normalized here, so downstream cosine scores are
    plain dot products.
    """

    def __init__(
        self,
        mode: str,
        chat_model: str,
        embed_model: str,
        backend: Backend | None = None,
        transcript: Transcript | None = None,
        price_table: PriceTable | None = None,
        ledger: CostLedger | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if mode == "replay" and transcript is None:
            raise ValueError("replay mode requires a transcript")
        if mode in ("live", "record") and backend is None:
            raise ValueError(f"{mode} mode requires a backend")
        self.mode = mode
        self.chat_model = chat_model
        self.embed_model = embed_model
        self.backend = backend
        self.transcript = transcript if transcript is not None else Transcript()
        self.price_table = price_table or PriceTable()
        self.ledger = ledger or CostLedger()
        self._sleep = sleep

    # -- request building ------------------------------------------------

    def new_request(
        self,
        messages: Sequence[ChatMessage],
        temperature: float,
        n_samples: int = 1,
        max_tokens: int = 4096,
    ) -> ChatRequest:
        return ChatRequest(
            model_id=self.chat_model,
            messages=tuple(messages),
            temperature=temperature,
            n_samples=n_samples,
            max_tokens=max_tokens,
        )

    # -- chat ------------------------------------------------------------

    def chat_complete(self, request: ChatRequest, stage: str) -> ChatResponse:
        fingerprint = request.fingerprint()
        if self.mode == "replay":
            entry = self.transcript.chat.get(fingerprint)
            if entry is None:
                raise ReplayMiss(
                    f"stage {stage!r}: no recorded chat for fingerprint {fingerprint[:16]}"
                )
            response = ChatResponse(
                samples=tuple(entry["samples"]),
                prompt_tokens=int(entry["prompt_tokens"]),
                completion_tokens=int(entry["completion_tokens"]),
                model_id=str(entry["model_id"]),
            )
        else:
            response = self._call_with_retry(lambda: self.backend.chat(request))
            if len(response.samples) != request.n_samples:
                raise EndpointUnreachable(
                    f"asked for {request.n_samples} samples, got {len(response.samples)}"
                )
            if self.mode == "record":
                self.transcript.chat[fingerprint] = {
                    "samples": list(response.samples),
                    "prompt_tokens": response.prompt_tokens,
                    "completion_tokens": response.completion_tokens,
                    "model_id": response.model_id,
                }
        self.ledger.add(
            stage,
            response.prompt_tokens,
            response.completion_tokens,
            self.price_table.dollars(
                response.model_id, response.prompt_tokens, response.completion_tokens
            ),
        )
        return response

    # -- embeddings ------------------------------------------------------

    def embed_texts(self, texts: Sequence[str], stage: str) -> np.ndarray:
        if not texts:
            raise ValueError("embed_texts needs at least one text")
        fingerprint = _embed_fingerprint(self.embed_model, texts)
        if self.mode == "replay":
            entry = self.transcript.embeddings.get(fingerprint)
            if entry is None:
                raise ReplayMiss(
                    f"stage {stage!r}: no recorded embedding for fingerprint {fingerprint[:16]}"
                )
            vectors = [list(map(float, v)) for v in entry["vectors"]]
            prompt_tokens = int(entry["prompt_tokens"])
        else:
            vectors = self._call_with_retry(
                lambda: self.backend.embed(self.embed_model, texts)
            )
            if len(vectors) != len(texts):
                raise EndpointUnreachable(
                    f"asked for {len(texts)} embeddings, got {len(vectors)}"
                )
            prompt_tokens = sum(estimate_tokens(t) for t in texts)
            if self.mode == "record":
                self.transcript.embeddings[fingerprint] = {
                    "vectors": vectors,
                    "prompt_tokens": prompt_tokens,
                    "model_id": self.embed_model,
                }
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("embedding backend returned ragged vectors")
        self.ledger.add(
            stage,
            prompt_tokens,
            0,
            self.price_table.dollars(self.embed_model, prompt_tokens, 0),
        )
        return _normalize_rows(matrix)

    def embed_one(self, text: str, stage: str) -> np.ndarray:
        return self.embed_texts([text], stage)[0]

    # -- retry loop ------------------------------------------------------

    def _call_with_retry(self, call: Callable[[], object]):
        # Initial attempt plus one retry per backoff slot.
        attempts = len(RETRY_BACKOFF_S) + 1
        for attempt in range(attempts):
            try:
                return call()
            except (RateLimited, EndpointUnreachable) as exc:
                if attempt == attempts - 1:
                    raise
                delay = RETRY_BACKOFF_S[attempt]
                log.warning("model call failed (%s), retrying in %.0fs", exc, delay)
                self._sleep(delay)


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    # A zero vector stays zero instead of dividing by zero.
    safe = np.where(norms == 0.0, 1.0, norms)
    return matrix / safe
