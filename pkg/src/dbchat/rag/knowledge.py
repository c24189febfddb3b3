"""Knowledge base: chunk storage plus inverted and adjacency indexes.

Both secondary indexes are derivable from the chunk map; ``rebuild_indexes``
recomputes them from scratch, and persistence stores only the chunks plus a
small metadata file.  Ingestion takes the write lock; searches read immutable
snapshots.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from pathlib import Path

from ..errors import DbChatError
from . import encoder


class EmptyKnowledgeBaseError(DbChatError):
    pass


@dataclass(frozen=True)
class DocumentChunk:
    chunk_id: str
    doc_id: str
    seq: int
    text: str
    vector: tuple[float, ...]
    keywords: tuple[str, ...]  # normalized tokens in text order (a multiset)

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "seq": self.seq,
            "text": self.text,
            "vector": list(self.vector),
            "keywords": list(self.keywords),
        }

    @classmethod
    def from_dict(cls, d: dict) -> DocumentChunk:
        return cls(
            chunk_id=d["chunk_id"],
            doc_id=d["doc_id"],
            seq=int(d["seq"]),
            text=d["text"],
            vector=tuple(float(x) for x in d["vector"]),
            keywords=tuple(d["keywords"]),
        )


class KnowledgeBase:
    def __init__(self, encoder_dim: int = encoder.DIM):
        self.encoder_dim = encoder_dim
        self.chunks: dict[str, DocumentChunk] = {}
        self.inverted: dict[str, list[str]] = {}
        self.graph: dict[str, tuple[str, ...]] = {}
        self._write_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.chunks)

    # -- ingestion -------------------------------------------------------------

    def add_document(self, doc_id: str, text: str, max_chars: int = 512) -> int:
        """Segment, encode, and index one document; replaces any previous
        chunks for the same doc_id.  Returns the number of chunks indexed."""
        from .segment import segment

        fresh = segment(doc_id, text, max_chars=max_chars)
        with self._write_lock:
            self._remove_doc_locked(doc_id)
            for chunk in fresh:
                enriched = replace(
                    chunk,
                    vector=tuple(encoder.embed(chunk.text, self.encoder_dim)),
                    keywords=tuple(encoder.tokenize(chunk.text)),
                )
                self.chunks[enriched.chunk_id] = enriched
            self.rebuild_indexes()
        return len(fresh)

    def remove_document(self, doc_id: str) -> None:
        with self._write_lock:
            self._remove_doc_locked(doc_id)
            self.rebuild_indexes()

    def _remove_doc_locked(self, doc_id: str) -> None:
        for cid in [c for c, ch in self.chunks.items() if ch.doc_id == doc_id]:
            del self.chunks[cid]

    def rebuild_indexes(self) -> None:
        """Recompute inverted and adjacency indexes from the chunk map."""
        inverted: dict[str, list[str]] = {}
        for cid in sorted(self.chunks):
            for token in set(self.chunks[cid].keywords):
                inverted.setdefault(token, []).append(cid)
        by_doc: dict[str, dict[int, str]] = {}
        for chunk in self.chunks.values():
            by_doc.setdefault(chunk.doc_id, {})[chunk.seq] = chunk.chunk_id
        graph: dict[str, tuple[str, ...]] = {}
        for seq_map in by_doc.values():
            for seq, cid in seq_map.items():
                neighbors = [
                    seq_map[s] for s in (seq - 1, seq + 1) if s in seq_map
                ]
                graph[cid] = tuple(neighbors)
        self.inverted = inverted
        self.graph = graph

    # -- persistence -------------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        """One directory per knowledge space: chunks.jsonl + meta.json."""
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / "chunks.jsonl", "w", encoding="utf-8") as fh:
            for cid in sorted(self.chunks):
                fh.write(json.dumps(self.chunks[cid].to_dict(), ensure_ascii=False) + "\n")
        meta = {
            "encoder_dim": self.encoder_dim,
            "chunk_count": len(self.chunks),
            "doc_count": len({c.doc_id for c in self.chunks.values()}),
        }
        (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory: str | Path) -> KnowledgeBase:
        path = Path(directory)
        meta = json.loads((path / "meta.json").read_text(encoding="utf-8"))
        kb = cls(encoder_dim=int(meta["encoder_dim"]))
        with open(path / "chunks.jsonl", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    chunk = DocumentChunk.from_dict(json.loads(line))
                    kb.chunks[chunk.chunk_id] = chunk
        kb.rebuild_indexes()
        return kb


class KnowledgeSpaces:
    """Named knowledge bases persisted one directory per space."""

    def __init__(self, root: str | Path, max_chars: int = 512):
        self.root = Path(root)
        self.max_chars = max_chars
        self._spaces: dict[str, KnowledgeBase] = {}
        self._lock = threading.Lock()

    def get(self, space: str) -> KnowledgeBase:
        with self._lock:
            kb = self._spaces.get(space)
            if kb is None:
                directory = self.root / space
                if (directory / "meta.json").exists():
                    kb = KnowledgeBase.load(directory)
                else:
                    kb = KnowledgeBase()
                self._spaces[space] = kb
            return kb

    def ingest(self, space: str, doc_id: str, text: str) -> int:
        """Segment + encode + index one document, then persist the space."""
        kb = self.get(space)
        count = kb.add_document(doc_id, text, max_chars=self.max_chars)
        kb.save(self.root / space)
        return count
