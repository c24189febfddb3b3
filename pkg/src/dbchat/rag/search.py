"""Retrieval: exact vector scan, BM25 keyword scoring, adjacency expansion,
and reciprocal-rank fusion of heterogeneous ranked lists."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from . import encoder
from .knowledge import EmptyKnowledgeBaseError, KnowledgeBase

BM25_K1 = 1.2
BM25_B = 0.75
RRF_C = 60
GRAPH_EXPAND_TOP_M = 3
GRAPH_NEIGHBOR_DAMPING = 0.5


@dataclass(frozen=True)
class Query:
    text: str
    vector: tuple[float, ...]
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @classmethod
    def from_text(cls, text: str, k: int, dim: int = encoder.DIM) -> Query:
        return cls(text=text, vector=tuple(encoder.embed(text, dim)), k=k)


@dataclass(frozen=True)
class RetrievalHit:
    chunk_id: str
    score: float
    source: str  # vector | keyword | graph | fused
    rank: int

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "score": self.score,
            "source": self.source,
            "rank": self.rank,
        }


def _ranked(scored: list[tuple[str, float]], source: str | None, k: int | None) -> list[RetrievalHit]:
    """Sort by descending score with ascending chunk-id tiebreak, assign ranks."""
    scored.sort(key=lambda t: (-t[1], t[0]))
    if k is not None:
        scored = scored[:k]
    return [
        RetrievalHit(chunk_id=cid, score=score, source=source or "fused", rank=i + 1)
        for i, (cid, score) in enumerate(scored)
    ]


def vector_search(kb: KnowledgeBase, q: Query) -> list[RetrievalHit]:
    """Exact top-k scan by cosine similarity."""
    if not kb.chunks:
        raise EmptyKnowledgeBaseError("knowledge base has no chunks")
    scored = [
        (cid, encoder.cosine(q.vector, chunk.vector))
        for cid, chunk in kb.chunks.items()
    ]
    return _ranked(scored, "vector", q.k)


def keyword_search(kb: KnowledgeBase, q: Query) -> list[RetrievalHit]:
    """BM25 (k1=1.2, b=0.75) with idf = ln(1 + (N - n + 0.5) / (n + 0.5)).

    Only chunks containing at least one query token are scored; a query with
    no corpus tokens yields an empty list.
    """
    if not kb.chunks:
        raise EmptyKnowledgeBaseError("knowledge base has no chunks")
    n_docs = len(kb.chunks)
    avgdl = sum(len(c.keywords) for c in kb.chunks.values()) / n_docs
    scores: dict[str, float] = {}
    for term in sorted(set(encoder.tokenize(q.text))):
        postings = kb.inverted.get(term)
        if not postings:
            continue
        n = len(postings)
        idf = math.log(1.0 + (n_docs - n + 0.5) / (n + 0.5))
        for cid in postings:
            chunk = kb.chunks[cid]
            tf = Counter(chunk.keywords)[term]
            dl = len(chunk.keywords)
            denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / avgdl)
            scores[cid] = scores.get(cid, 0.0) + idf * tf * (BM25_K1 + 1.0) / denom
    return _ranked(list(scores.items()), "keyword", q.k)


def graph_expand(
    kb: KnowledgeBase, hits: list[RetrievalHit], m: int = GRAPH_EXPAND_TOP_M
) -> list[RetrievalHit]:
    """Widen the top-m hits with sequence-adjacent neighbor chunks at half
    the parent's score, then re-rank the combined list."""
    present = {h.chunk_id for h in hits}
    additions: dict[str, float] = {}
    for hit in sorted(hits, key=lambda h: h.rank)[:m]:
        for neighbor in kb.graph.get(hit.chunk_id, ()):
            if neighbor in present:
                continue
            score = hit.score * GRAPH_NEIGHBOR_DAMPING
            if neighbor not in additions or score > additions[neighbor]:
                additions[neighbor] = score
    combined = [(h.chunk_id, h.score, h.source) for h in hits] + [
        (cid, score, "graph") for cid, score in additions.items()
    ]
    combined.sort(key=lambda t: (-t[1], t[0]))
    return [
        RetrievalHit(chunk_id=cid, score=score, source=source, rank=i + 1)
        for i, (cid, score, source) in enumerate(combined)
    ]


def fuse(lists: list[list[RetrievalHit]], c: int = RRF_C) -> list[RetrievalHit]:
    """Reciprocal rank fusion: score(chunk) = sum over lists of 1/(c + rank)."""
    if len(lists) < 2:
        raise ValueError("fusion requires at least two ranked lists")
    scores: dict[str, float] = {}
    for ranked_list in lists:
        for hit in ranked_list:
            scores[hit.chunk_id] = scores.get(hit.chunk_id, 0.0) + 1.0 / (c + hit.rank)
    return _ranked(list(scores.items()), "fused", None)
