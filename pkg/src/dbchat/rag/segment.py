"""Document chunking: paragraph split, oversize split, small-run merge."""

from __future__ import annotations

from .knowledge import DocumentChunk

DEFAULT_MAX_CHARS = 512
MIN_MAX_CHARS = 64


def _paragraphs(text: str) -> list[str]:
    """Blank-line separated paragraphs, stripped, empties dropped."""
    paragraphs: list[str] = []
    current: list[str] = []
    for line in text.split("\n"):
        if line.strip():
            current.append(line)
        elif current:
            paragraphs.append("\n".join(current).strip())
            current = []
    if current:
        paragraphs.append("\n".join(current).strip())
    return [p for p in paragraphs if p]


def _split_oversize(paragraph: str, max_chars: int) -> list[str]:
    """Hard-split at the last whitespace before the limit; if a window has
    no whitespace, cut at the limit itself."""
    pieces: list[str] = []
    rest = paragraph
    while len(rest) > max_chars:
        window = rest[:max_chars]
        cut = -1
        for i, ch in enumerate(window):
            if ch.isspace():
                cut = i
        if cut == -1:
            pieces.append(rest[:max_chars])
            rest = rest[max_chars:].lstrip()
        else:
            pieces.append(rest[:cut].rstrip())
            rest = rest[cut + 1 :].lstrip()
    if rest:
        pieces.append(rest)
    return pieces


def _merge_small_runs(pieces: list[str], max_chars: int) -> list[str]:
    """Runs of >= 2 consecutive pieces each under max_chars/4 become one chunk."""
    threshold = max_chars / 4
    merged: list[str] = []
    i = 0
    while i < len(pieces):
        if len(pieces[i]) >= threshold:
            merged.append(pieces[i])
            i += 1
            continue
        j = i
        while j < len(pieces) and len(pieces[j]) < threshold:
            j += 1
        run = pieces[i:j]
        merged.append("\n\n".join(run) if len(run) > 1 else run[0])
        i = j
    return merged


def segment(doc_id: str, text: str, max_chars: int = DEFAULT_MAX_CHARS) -> list[DocumentChunk]:
    """Split a document into ordered, unindexed chunks.

    Empty text yields an empty list.  Chunk ids are ``<doc_id>:<seq>``;
    vectors and keywords are filled in at indexing time.
    """
    if max_chars < MIN_MAX_CHARS:
        raise ValueError(f"max_chars must be >= {MIN_MAX_CHARS}")
    pieces: list[str] = []
    for paragraph in _paragraphs(text):
        pieces.extend(_split_oversize(paragraph, max_chars))
    chunks = []
    for seq, piece in enumerate(_merge_small_runs(pieces, max_chars)):
        chunks.append(
            DocumentChunk(
                chunk_id=f"{doc_id}:{seq:04d}",
                doc_id=doc_id,
                seq=seq,
                text=piece,
                vector=(),
                keywords=(),
            )
        )
    return chunks
