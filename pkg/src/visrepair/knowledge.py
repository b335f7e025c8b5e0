"""Documentation mining: pick the docs that explain the broken feature.

Two routes run side by side and their results merge: a chat model picks
paths off the documentation tree (and flags promising directories), and
embedding retrieval ranks doc chunks against the issue text.  When a repo
has no documentation root at all, the chat route is skipped and retrieval
falls back to every text file in the tree.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import Config
from .errors import NoDocumentation
from .prompting import fill, load_template, parse_selection, user_message
from .provider import ImagePart, ModelProvider, TextPart
from .retrieval import retrieve_files
from .workspace import IssueReport, RepoSnapshot, doc_tree

log = logging.getLogger(__name__)

ORIGIN_CHAT = "chat"
ORIGIN_EMBEDDING = "embedding"
ORIGIN_BOTH = "both"


@dataclass(frozen=True)
class MinedDocument:
    path: str
    text: str
    origin: str


@dataclass(frozen=True)
class DocumentSet:
    documents: tuple[MinedDocument, ...]
    key_directories: tuple[str, ...]
    understanding: str | None

    @property
    def paths(self) -> tuple[str, ...]:
        return tuple(d.path for d in self.documents)


EMPTY_DOCUMENT_SET = DocumentSet(documents=(), key_directories=(), understanding=None)


def pick_docs_via_tree(
    provider: ModelProvider,
    issue: IssueReport,
    snapshot: RepoSnapshot,
    config: Config,
) -> tuple[tuple[str, ...], tuple[str, ...], str | None]:
    """Chat route: show the doc tree, get back doc paths and directories.

    Paths that do not exist in the snapshot are dropped with a warning; the
    list is truncated to the configured budget.
    """
    tree = doc_tree(snapshot)
    prompt = fill(
        load_template("knowledge_pick.txt"),
        ISSUE=f"# Issue {issue.instance_id}: {issue.title}\n\n{issue.body}",
        DOC_TREE=tree,
        TOP_DOCS=str(config.knowledge.top_docs),
    )
    parts = [TextPart(prompt)]
    parts += [ImagePart(data=img.data, media_type=img.media_type) for img in issue.images]
    request = provider.new_request(
        [user_message(parts)],
        temperature=config.knowledge.chat_temperature,
        n_samples=config.knowledge.chat_samples,
    )
    response = provider.chat_complete(request, stage="knowledge.pick")
    known = list(snapshot.doc_files())
    selection = parse_selection(response.first, known_paths=known)
    valid_files = []
    for path in selection.files:
        if path in known:
            valid_files.append(path)
        else:
            log.warning("knowledge pick named unknown doc %r; dropped", path)
    valid_dirs = []
    for directory in selection.directories:
        prefix = directory.strip("/")
        if any(p == prefix or p.startswith(prefix + "/") for p in known):
            valid_dirs.append(prefix)
        else:
            log.warning("knowledge pick flagged unknown directory %r; dropped", directory)
    return (
        tuple(valid_files[: config.knowledge.top_docs]),
        tuple(dict.fromkeys(valid_dirs)),
        selection.understanding,
    )


def retrieve_docs_via_embedding(
    provider: ModelProvider,
    query_text: str,
    corpus: list[tuple[str, str]],
    config: Config,
    scope: tuple[str, ...] | None,
) -> tuple[str, ...]:
    """Embedding route: top documents by cosine against the issue text."""
    if not corpus:
        return ()
    ranked = retrieve_files(
        query_text=query_text,
        files=corpus,
        k=config.knowledge.embed_top_docs,
        embed_query=lambda q: provider.embed_one(q, stage="knowledge.embed"),
        embed_fn=lambda texts: provider.embed_texts(texts, stage="knowledge.embed"),
        scope=scope if scope else None,
        chunk_size=config.knowledge.chunk_size,
        overlap=config.knowledge.chunk_overlap,
    )
    return tuple(s.chunk.source_path for s in ranked)


def mine_knowledge(
    provider: ModelProvider,
    issue: IssueReport,
    snapshot: RepoSnapshot,
    config: Config,
) -> DocumentSet:
    """Run both routes and merge, chat picks first, embedding extras after."""
    understanding: str | None = None
    chat_paths: tuple[str, ...] = ()
    key_dirs: tuple[str, ...] = ()
    if snapshot.doc_root is not None:
        try:
            chat_paths, key_dirs, understanding = pick_docs_via_tree(
                provider, issue, snapshot, config
            )
        except NoDocumentation:
            return EMPTY_DOCUMENT_SET
        corpus = [(p, snapshot.read_text(p)) for p in snapshot.doc_files()]
        scope = key_dirs or None
    else:
        # No documentation root: retrieval-only over the whole text index.
        corpus = [(p, snapshot.read_text(p)) for p in snapshot.file_index]
        scope = None
    query = issue.title + "\n\n" + issue.body
    embed_paths = retrieve_docs_via_embedding(provider, query, corpus, config, scope)

    merged: dict[str, str] = {}
    for path in chat_paths:
        merged[path] = ORIGIN_CHAT
    for path in embed_paths:
        merged[path] = ORIGIN_BOTH if path in merged else ORIGIN_EMBEDDING

    documents = tuple(
        MinedDocument(path=path, text=snapshot.read_text(path), origin=origin)
        for path, origin in merged.items()
    )
    return DocumentSet(documents=documents, key_directories=key_dirs, understanding=understanding)
