"""Reference text encoder: hashed bag-of-words.

Tokens are lowercase alphanumeric words; each token is hashed with 64-bit
FNV-1a into one of ``DIM`` buckets and the bucket counts are L2-normalized.
An empty token set yields the zero vector.  Deterministic and dependency-free
so retrieval tests are bit-exact; remote embedding models plug in through the
gateway's embedding route instead.
"""

from __future__ import annotations

import math
import re

DIM = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK
    return h


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric word tokens, in text order."""
    return _TOKEN_RE.findall(text.lower())


def bucket(token: str, dim: int = DIM) -> int:
    return fnv1a_64(token.encode("utf-8")) % dim


def embed(text: str, dim: int = DIM) -> list[float]:
    counts = [0] * dim
    for token in tokenize(text):
        counts[bucket(token, dim)] += 1
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0.0:
        return [0.0] * dim
    return [c / norm for c in counts]


def cosine(a: list[float] | tuple[float, ...], b: list[float] | tuple[float, ...]) -> float:
    # fsum: exactly-rounded summation, so scores are accumulation-order-free
    norm_a = math.sqrt(math.fsum(x * x for x in a))
    norm_b = math.sqrt(math.fsum(x * x for x in b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return math.fsum(x * y for x, y in zip(a, b)) / (norm_a * norm_b)
