"""Knowledge construction and retrieval: chunking, hashed-bag encoding,
vector/keyword/graph search, rank fusion, prompt assembly, redaction."""

from . import encoder
from .knowledge import DocumentChunk, EmptyKnowledgeBaseError, KnowledgeBase, KnowledgeSpaces
from .prompting import BadTemplateError, build_prompt, redact
from .search import (
    BM25_B,
    BM25_K1,
    RRF_C,
    Query,
    RetrievalHit,
    fuse,
    graph_expand,
    keyword_search,
    vector_search,
)
from .segment import segment

__all__ = [
    "BM25_B",
    "BM25_K1",
    "BadTemplateError",
    "DocumentChunk",
    "EmptyKnowledgeBaseError",
    "KnowledgeBase",
    "KnowledgeSpaces",
    "Query",
    "RRF_C",
    "RetrievalHit",
    "build_prompt",
    "encoder",
    "fuse",
    "graph_expand",
    "keyword_search",
    "redact",
    "segment",
    "vector_search",
]
