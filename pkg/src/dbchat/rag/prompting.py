"""Prompt assembly from retrieved context, with privacy redaction."""

from __future__ import annotations

import re

from ..errors import DbChatError
from .knowledge import KnowledgeBase
from .search import RetrievalHit

DEFAULT_TOKEN_BUDGET = 2048
CONTEXT_SEPARATOR = "\n---\n"

_EMAIL_RE = re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}")
# Candidate digit runs with the allowed separators; kept only if >= 7 digits.
_PHONE_CANDIDATE_RE = re.compile(r"\+?[\d(][\d\-\s()]*[\d)]")


class BadTemplateError(DbChatError):
    def __init__(self, placeholder: str):
        self.placeholder = placeholder
        super().__init__(f"template is missing the {placeholder} placeholder")


def build_prompt(
    question: str,
    hits: list[RetrievalHit],
    kb: KnowledgeBase,
    template: str,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> str:
    """Fill the template with retrieved contexts in rank order.

    If the filled prompt exceeds the budget (counted in whitespace words),
    the lowest-ranked contexts are dropped first; the question is never
    truncated.
    """
    for placeholder in ("{context}", "{question}"):
        if placeholder not in template:
            raise BadTemplateError(placeholder)
    ordered = sorted(hits, key=lambda h: h.rank)
    texts = [kb.chunks[h.chunk_id].text for h in ordered if h.chunk_id in kb.chunks]
    for j in range(len(texts), -1, -1):
        context = CONTEXT_SEPARATOR.join(texts[:j])
        prompt = template.replace("{context}", context).replace("{question}", question)
        if len(prompt.split()) <= token_budget or j == 0:
            return prompt
    raise AssertionError("unreachable")


def redact(text: str) -> str:
    """Replace email addresses and phone-like digit runs (>= 7 digits with
    optional +, -, space, or parenthesis separators).  Idempotent."""
    out = _EMAIL_RE.sub("[REDACTED:email]", text)

    def replace_phone(match: re.Match[str]) -> str:
        digits = sum(ch.isdigit() for ch in match.group(0))
        return "[REDACTED:phone]" if digits >= 7 else match.group(0)

    return _PHONE_CANDIDATE_RE.sub(replace_phone, out)
