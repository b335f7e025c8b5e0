"""Chunking and exact top-k retrieval."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_top_k
from visrepair.errors import DimensionMismatch, EmptyScope
from visrepair.retrieval import (
    Chunk,
    EmbeddingIndexCache,
    chunk_files,
    chunk_text,
    dedup_by_file,
    embed_chunks,
    in_scope,
    retrieve_files,
    top_k_similar,
)


class TestChunkText:
    def test_validation(self):
        with pytest.raises(ValueError):
            chunk_text("p", "a b", chunk_size=0)
        with pytest.raises(ValueError):
            chunk_text("p", "a b", chunk_size=4, overlap=4)
        with pytest.raises(ValueError):
            chunk_text("p", "a b", chunk_size=4, overlap=-1)

    def test_empty_text(self):
        assert chunk_text("p", "   \n  ") == []

    def test_overlap_windows(self):
        tokens = "t0 t1 t2 t3 t4 t5 t6"
        chunks = chunk_text("p", tokens, chunk_size=4, overlap=2)
        assert [c.text for c in chunks] == ["t0 t1 t2 t3", "t2 t3 t4 t5", "t4 t5 t6"]
        assert [c.ordinal for c in chunks] == [0, 1, 2]

    @given(
        n_tokens=st.integers(0, 300),
        chunk_size=st.integers(1, 50),
        data=st.data(),
    )
    @settings(max_examples=60, deadline=None)
    def test_partition_property(self, n_tokens, chunk_size, data):
        overlap = data.draw(st.integers(0, chunk_size - 1))
        text = " ".join(f"w{i}" for i in range(n_tokens))
        chunks = chunk_text("p", text, chunk_size=chunk_size, overlap=overlap)
        step = chunk_size - overlap
        tokens = text.split()
        if not tokens:
            assert chunks == []
            return
        # Every window is the expected slice of the token stream.
        for c in chunks:
            start = c.ordinal * step
            assert c.text.split() == tokens[start : start + chunk_size]
        # Coverage: the final window reaches the last token.
        last = chunks[-1]
        assert last.ordinal * step + len(last.text.split()) == len(tokens)
        # With no overlap the chunks partition the stream exactly.
        if overlap == 0:
            rebuilt = [t for c in chunks for t in c.text.split()]
            assert rebuilt == tokens

    def test_chunk_files_concatenates(self):
        chunks = chunk_files([("a.md", "x y"), ("b.md", "z")], chunk_size=1)
        assert [(c.source_path, c.ordinal) for c in chunks] == [
            ("a.md", 0),
            ("a.md", 1),
            ("b.md", 0),
        ]


class TestScope:
    def test_prefix_semantics(self):
        assert in_scope("docs/a.md", ["docs"])
        assert in_scope("docs/deep/a.md", ["docs"])
        assert in_scope("docs", ["docs"])
        assert not in_scope("docs2/a.md", ["docs"])
        assert in_scope("anything", None)
        assert in_scope("anything", ["/"])  # bare slash means everything


def _index(rows):
    return [
        (Chunk(source_path=path, ordinal=ordinal, text=f"{path}#{ordinal}"), np.array(vec))
        for path, ordinal, vec in rows
    ]


class TestTopK:
    def test_ranking_and_tie_break(self):
        index = _index(
            [
                ("b.md", 0, [1.0, 0.0]),
                ("a.md", 1, [1.0, 0.0]),
                ("a.md", 0, [0.0, 1.0]),
            ]
        )
        out = top_k_similar(np.array([1.0, 0.0]), index, k=3)
        assert [(s.chunk.source_path, s.chunk.ordinal) for s in out] == [
            ("a.md", 1),
            ("b.md", 0),
            ("a.md", 0),
        ]
        assert out[0].score == 1.0

    def test_k_larger_than_index(self):
        index = _index([("a.md", 0, [1.0, 0.0])])
        assert len(top_k_similar(np.array([1.0, 0.0]), index, k=10)) == 1

    def test_k_validation(self):
        with pytest.raises(ValueError):
            top_k_similar(np.array([1.0]), [], k=0)

    def test_dimension_mismatch(self):
        index = _index([("a.md", 0, [1.0, 0.0, 0.0])])
        with pytest.raises(DimensionMismatch):
            top_k_similar(np.array([1.0, 0.0]), index, k=1)

    def test_scope_filters(self):
        index = _index(
            [("docs/a.md", 0, [1.0, 0.0]), ("src/b.js", 0, [1.0, 0.0])]
        )
        out = top_k_similar(np.array([1.0, 0.0]), index, k=5, scope=["src"])
        assert [s.chunk.source_path for s in out] == ["src/b.js"]

    def test_empty_scope_raises(self):
        index = _index([("docs/a.md", 0, [1.0, 0.0])])
        with pytest.raises(EmptyScope):
            top_k_similar(np.array([1.0, 0.0]), index, k=1, scope=["nope"])

    def test_empty_index_is_fine(self):
        assert top_k_similar(np.array([1.0]), [], k=3) == []

    @given(data=st.data())
    @settings(max_examples=60, deadline=None)
    def test_matches_independent_oracle(self, data):
        # Dyadic coordinates make float equality exact, so deliberate score
        # ties exercise the tie-break against the reference implementation.
        dim = data.draw(st.integers(1, 4))
        coord = st.sampled_from([0.0, 0.25, 0.5, 1.0])
        n = data.draw(st.integers(0, 30))
        rows = []
        for i in data.draw(st.permutations(range(n))):
            path = f"f{data.draw(st.integers(0, 5))}.md"
            vec = [data.draw(coord) for _ in range(dim)]
            rows.append((path, i, vec))
        index = _index(rows)
        query = np.array([data.draw(coord) for _ in range(dim)])
        k = data.draw(st.integers(1, 10))
        got = top_k_similar(query, index, k=k)
        expected = oracle_top_k(query, index, k)
        assert [
            (s.chunk.source_path, s.chunk.ordinal, s.score) for s in got
        ] == expected


class TestDedup:
    def test_keeps_best_per_file(self):
        index = _index(
            [
                ("a.md", 0, [1.0, 0.0]),
                ("a.md", 1, [0.5, 0.5]),
                ("b.md", 0, [0.0, 1.0]),
            ]
        )
        ranked = top_k_similar(np.array([1.0, 0.0]), index, k=3)
        out = dedup_by_file(ranked, k=2)
        assert [(s.chunk.source_path, s.chunk.ordinal) for s in out] == [
            ("a.md", 0),
            ("b.md", 0),
        ]


class TestCache:
    def test_only_misses_hit_the_embedder(self, tmp_path):
        calls: list[list[str]] = []

        def embed_fn(texts):
            calls.append(list(texts))
            return np.ones((len(texts), 2))

        chunks = [Chunk("a.md", 0, "alpha"), Chunk("a.md", 1, "beta")]
        cache = EmbeddingIndexCache()
        embed_chunks(chunks, embed_fn, cache)
        assert calls == [["alpha", "beta"]]
        # Second pass: everything cached.
        embed_chunks(chunks, embed_fn, cache)
        assert len(calls) == 1
        # Changed text means a changed digest, so one miss.
        changed = [Chunk("a.md", 0, "alpha"), Chunk("a.md", 1, "beta edited")]
        embed_chunks(changed, embed_fn, cache)
        assert calls[-1] == ["beta edited"]

    def test_round_trip(self, tmp_path):
        cache = EmbeddingIndexCache()
        chunk = Chunk("a.md", 0, "alpha")
        cache.put(chunk, [0.25, 0.75])
        path = tmp_path / "cache.jsonl"
        cache.save(path)
        back = EmbeddingIndexCache.load(path)
        assert back.get(chunk) == [0.25, 0.75]
        assert len(back) == 1

    def test_load_missing_file_is_empty(self, tmp_path):
        assert len(EmbeddingIndexCache.load(tmp_path / "absent.jsonl")) == 0


class TestRetrieveFiles:
    def _embedders(self):
        def embed_fn(texts):
            # Map each text onto an axis by first token for predictable scores.
            axes = {"alpha": 0, "beta": 1, "gamma": 2}
            out = np.zeros((len(texts), 3))
            for i, text in enumerate(texts):
                out[i, axes[text.split()[0]]] = 1.0
            return out

        return (lambda q: embed_fn([q])[0]), embed_fn

    def test_ranks_and_dedups(self):
        embed_query, embed_fn = self._embedders()
        files = [("x.md", "alpha one two"), ("y.md", "beta three"), ("z.md", "alpha four")]
        out = retrieve_files("alpha", files, k=2, embed_query=embed_query, embed_fn=embed_fn)
        assert [s.chunk.source_path for s in out] == ["x.md", "z.md"]

    def test_scope_restricts(self):
        embed_query, embed_fn = self._embedders()
        files = [("docs/x.md", "alpha"), ("src/y.md", "alpha")]
        out = retrieve_files(
            "alpha", files, k=5, embed_query=embed_query, embed_fn=embed_fn, scope=["src"]
        )
        assert [s.chunk.source_path for s in out] == ["src/y.md"]

    def test_empty_scope_raises(self):
        embed_query, embed_fn = self._embedders()
        with pytest.raises(EmptyScope):
            retrieve_files(
                "alpha",
                [("docs/x.md", "alpha")],
                k=1,
                embed_query=embed_query,
                embed_fn=embed_fn,
                scope=["src"],
            )

    def test_empty_corpus_returns_nothing(self):
        embed_query, embed_fn = self._embedders()
        assert retrieve_files("alpha", [], k=1, embed_query=embed_query, embed_fn=embed_fn) == []
