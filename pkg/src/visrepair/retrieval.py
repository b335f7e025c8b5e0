"""Text chunking and exact top-k cosine retrieval.

The index is a plain list of embedded chunks; search is brute force with a
deterministic tie-break, so two runs over the same corpus always return the
same ranking.  Vectors are expected to arrive unit-normalized (the provider
guarantees this), which makes cosine similarity a dot product.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyScope

Tokenizer = Callable[[str], list[str]]

DEFAULT_CHUNK_SIZE = 512
DEFAULT_CHUNK_OVERLAP = 0


def whitespace_tokenizer(text: str) -> list[str]:
    return text.split()


@dataclass(frozen=True)
class Chunk:
    source_path: str
    ordinal: int
    text: str

    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    score: float


def chunk_text(
    source_path: str,
    text: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
    tokenizer: Tokenizer = whitespace_tokenizer,
) -> list[Chunk]:
    """Greedy fixed-size chunking over the token stream.

    With ``overlap == 0`` the chunks partition the token stream exactly, so
    joining their tokens reproduces the tokenized source.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    if not 0 <= overlap < chunk_size:
        raise ValueError("overlap must satisfy 0 <= overlap < chunk_size")
    tokens = tokenizer(text)
    if not tokens:
        return []
    step = chunk_size - overlap
    chunks = []
    ordinal = 0
    for start in range(0, len(tokens), step):
        window = tokens[start : start + chunk_size]
        if not window:
            break
        chunks.append(Chunk(source_path=source_path, ordinal=ordinal, text=" ".join(window)))
        ordinal += 1
        if start + chunk_size >= len(tokens):
            break
    return chunks


def chunk_files(
    files: Sequence[tuple[str, str]],
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
    tokenizer: Tokenizer = whitespace_tokenizer,
) -> list[Chunk]:
    out: list[Chunk] = []
    for path, text in files:
        out.extend(chunk_text(path, text, chunk_size, overlap, tokenizer))
    return out


def in_scope(path: str, scope: Iterable[str] | None) -> bool:
    """True when ``path`` sits under any scope prefix (directory-wise)."""
    if scope is None:
        return True
    for prefix in scope:
        prefix = prefix.strip("/")
        if not prefix:
            return True
        if path == prefix or path.startswith(prefix + "/"):
            return True
    return False


def top_k_similar(
    query: np.ndarray,
    index: Sequence[tuple[Chunk, np.ndarray]],
    k: int,
    scope: Iterable[str] | None = None,
) -> list[ScoredChunk]:
    """Exact top-k by cosine score over unit vectors.

    Ties break by ``(source_path, ordinal)`` ascending so rankings are stable
    across runs and platforms.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = np.asarray(query, dtype=np.float64)
    scope_list = list(scope) if scope is not None else None
    candidates: list[tuple[float, str, int, Chunk]] = []
    for chunk, vector in index:
        if not in_scope(chunk.source_path, scope_list):
            continue
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != query.shape:
            raise DimensionMismatch(
                f"query dim {query.shape} vs chunk dim {vector.shape} for {chunk.source_path}"
            )
        score = float(np.dot(query, vector))
        candidates.append((score, chunk.source_path, chunk.ordinal, chunk))
    if scope_list is not None and not candidates and index:
        raise EmptyScope(f"scope {scope_list} matched none of {len(index)} chunks")
    candidates.sort(key=lambda item: (-item[0], item[1], item[2]))
    return [ScoredChunk(chunk=c[3], score=c[0]) for c in candidates[:k]]


def dedup_by_file(ranked: Sequence[ScoredChunk], k: int) -> list[ScoredChunk]:
    """Keep the best-ranked chunk per source file, then truncate to k files."""
    seen: set[str] = set()
    out: list[ScoredChunk] = []
    for scored in ranked:
        if scored.chunk.source_path in seen:
            continue
        seen.add(scored.chunk.source_path)
        out.append(scored)
        if len(out) == k:
            break
    return out


class EmbeddingIndexCache:
    """JSONL cache of chunk vectors keyed by (path, ordinal, text digest).

    A stale entry is simply never looked up again because the digest key
    changes with the text, so invalidation is automatic.
    """

    def __init__(self) -> None:
        self._vectors: dict[tuple[str, int, str], list[float]] = {}

    @staticmethod
    def _key(chunk: Chunk) -> tuple[str, int, str]:
        return (chunk.source_path, chunk.ordinal, chunk.digest())

    def get(self, chunk: Chunk) -> list[float] | None:
        return self._vectors.get(self._key(chunk))

    def put(self, chunk: Chunk, vector: Sequence[float]) -> None:
        self._vectors[self._key(chunk)] = [float(v) for v in vector]

    def __len__(self) -> int:
        return len(self._vectors)

    @classmethod
    def load(cls, path: Path | str) -> "EmbeddingIndexCache":
        cache = cls()
        p = Path(path)
        if not p.exists():
            return cache
        with p.open(encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                cache._vectors[(row["path"], int(row["ordinal"]), row["digest"])] = [
                    float(v) for v in row["vector"]
                ]
        return cache

    def save(self, path: Path | str) -> None:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w", encoding="utf-8") as handle:
            for (path_, ordinal, digest), vector in sorted(self._vectors.items()):
                handle.write(
                    json.dumps(
                        {"path": path_, "ordinal": ordinal, "digest": digest, "vector": vector},
                        sort_keys=True,
                    )
                    + "\n"
                )


EmbedFn = Callable[[Sequence[str]], np.ndarray]


def embed_chunks(
    chunks: Sequence[Chunk],
    embed_fn: EmbedFn,
    cache: EmbeddingIndexCache | None = None,
) -> list[tuple[Chunk, np.ndarray]]:
    """Embed chunks, going to the embedder only for cache misses."""
    vectors: dict[int, np.ndarray] = {}
    missing: list[int] = []
    for i, chunk in enumerate(chunks):
        if cache is not None:
            hit = cache.get(chunk)
            if hit is not None:
                vectors[i] = np.asarray(hit, dtype=np.float64)
                continue
        missing.append(i)
    if missing:
        fresh = embed_fn([chunks[i].text for i in missing])
        for row, i in enumerate(missing):
            vectors[i] = np.asarray(fresh[row], dtype=np.float64)
            if cache is not None:
                cache.put(chunks[i], vectors[i].tolist())
    return [(chunk, vectors[i]) for i, chunk in enumerate(chunks)]


def retrieve_files(
    query_text: str,
    files: Sequence[tuple[str, str]],
    k: int,
    embed_query: Callable[[str], np.ndarray],
    embed_fn: EmbedFn,
    scope: Iterable[str] | None = None,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
    tokenizer: Tokenizer = whitespace_tokenizer,
    cache: EmbeddingIndexCache | None = None,
) -> list[ScoredChunk]:
    """Rank files for a query: chunk, embed, score, dedup to one chunk each.

    The scope narrows the corpus before embedding; an empty result after
    scoping raises EmptyScope rather than silently searching everything.
    """
    scope_list = list(scope) if scope is not None else None
    scoped = [(p, t) for p, t in files if in_scope(p, scope_list)]
    if not scoped:
        if files:
            raise EmptyScope(f"scope {scope_list} matched none of {len(files)} files")
        return []
    chunks = chunk_files(scoped, chunk_size, overlap, tokenizer)
    if not chunks:
        return []
    index = embed_chunks(chunks, embed_fn, cache)
    query_vector = embed_query(query_text)
    ranked = top_k_similar(query_vector, index, k=len(index))
    return dedup_by_file(ranked, k)
