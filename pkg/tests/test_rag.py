from __future__ import annotations

import json
import math
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbchat.rag import (
    BadTemplateError,
    EmptyKnowledgeBaseError,
    KnowledgeBase,
    Query,
    RetrievalHit,
    build_prompt,
    encoder,
    fuse,
    graph_expand,
    keyword_search,
    redact,
    segment,
    vector_search,
)
from oracles import brute_force_cosine_topk, segment_oracle

GOLDEN = Path(__file__).parent / "golden"


# --- segmentation ---------------------------------------------------------------


PARA_ONE = "first paragraph " + "alpha beta gamma delta " * 6   # >= 128 chars
PARA_TWO = "second paragraph " + "epsilon zeta eta theta " * 6


def test_two_paragraphs_two_chunks():
    chunks = segment("d", f"{PARA_ONE}\n\n{PARA_TWO}")
    assert [c.text for c in chunks] == [PARA_ONE.strip(), PARA_TWO.strip()]
    assert [c.seq for c in chunks] == [0, 1]


def test_tiny_paragraphs_merge_into_one_chunk():
    chunks = segment("d", "tiny one\n\ntiny two")
    assert len(chunks) == 1
    assert chunks[0].text == "tiny one\n\ntiny two"


def test_empty_text_no_chunks():
    assert segment("d", "") == []


def test_long_paragraph_split_matches_oracle():
    rng = random.Random(5)
    words = [("w%03d" % rng.randint(0, 999)) * rng.randint(1, 3) for _ in range(260)]
    text = " ".join(words)  # ~1200+ chars, single paragraph
    chunks = segment("d", text, max_chars=512)
    assert [c.text for c in chunks] == segment_oracle(text, 512)
    assert all(len(c.text) <= 512 for c in chunks)
    assert len(chunks) >= 3


def test_small_consecutive_paragraphs_merge():
    text = "tiny one\n\ntiny two\n\ntiny three\n\n" + "x" * 200
    chunks = segment("d", text, max_chars=512)
    assert chunks[0].text == "tiny one\n\ntiny two\n\ntiny three"
    assert chunks[1].text == "x" * 200
    assert [c.text for c in chunks] == segment_oracle(text, 512)


def test_max_chars_floor():
    with pytest.raises(ValueError):
        segment("d", "text", max_chars=32)


@settings(max_examples=200, deadline=None)
@given(
    st.text(alphabet=" \nabcdefgh.,!", min_size=0, max_size=2000),
    st.integers(min_value=64, max_value=300),
)
def test_segment_lossless_modulo_whitespace(text, max_chars):
    chunks = segment("d", text, max_chars=max_chars)
    original = "".join(text.split())
    recovered = "".join("".join(c.text.split()) for c in chunks)
    assert recovered == original
    assert [c.seq for c in chunks] == list(range(len(chunks)))
    assert [c.text for c in chunks] == segment_oracle(text, max_chars)


# --- encoder ---------------------------------------------------------------------


def test_repeated_token_single_bucket_unit_norm():
    vec = encoder.embed("a a")
    nonzero = [v for v in vec if v != 0.0]
    assert len(nonzero) == 1
    assert math.isclose(sum(v * v for v in vec), 1.0, abs_tol=1e-12)


def test_self_similarity_is_one():
    for text in ("hello world", "a", "The quick brown fox!"):
        vec = encoder.embed(text)
        assert math.isclose(encoder.cosine(vec, vec), 1.0, abs_tol=1e-9)


def test_disjoint_overlap_half_cosine():
    # The three tokens land in distinct buckets (191, 144, 248 at dim 256),
    # so the overlap on "apple" contributes (1/sqrt2)(1/sqrt2) = 0.5 exactly.
    buckets = {encoder.bucket(t) for t in ("apple", "banana", "cherry")}
    assert len(buckets) == 3
    similarity = encoder.cosine(encoder.embed("apple banana"), encoder.embed("apple cherry"))
    assert math.isclose(similarity, 0.5, abs_tol=1e-12)


def test_empty_text_zero_vector():
    assert encoder.embed("  ...  ") == [0.0] * encoder.DIM


# --- vector search ----------------------------------------------------------------


def corpus_kb(texts: dict[str, str]) -> KnowledgeBase:
    kb = KnowledgeBase()
    for doc_id, text in texts.items():
        kb.add_document(doc_id, text)
    return kb


def test_query_equal_to_chunk_text_ranks_first():
    kb = corpus_kb({"a": "alpha beta gamma", "b": "delta epsilon zeta"})
    hits = vector_search(kb, Query.from_text("alpha beta gamma", k=1))
    assert hits[0].chunk_id == "a:0000"
    assert math.isclose(hits[0].score, 1.0, abs_tol=1e-9)
    assert hits[0].rank == 1


def test_k_larger_than_corpus_returns_all():
    kb = corpus_kb({"a": "one", "b": "two", "c": "three"})
    hits = vector_search(kb, Query.from_text("one", k=50))
    assert len(hits) == 3
    assert [h.rank for h in hits] == [1, 2, 3]


def test_empty_kb_raises():
    with pytest.raises(EmptyKnowledgeBaseError):
        vector_search(KnowledgeBase(), Query.from_text("x", k=1))
    with pytest.raises(EmptyKnowledgeBaseError):
        keyword_search(KnowledgeBase(), Query.from_text("x", k=1))


def _random_words(rng: random.Random, n: int) -> str:
    vocab = [f"tok{i}" for i in range(60)]
    return " ".join(rng.choice(vocab) for _ in range(n))


def test_vector_search_matches_brute_force_oracle():
    rng = random.Random(1234)
    kb = KnowledgeBase()
    for d in range(40):
        # paragraphs long enough (>= max_chars/4) to stay unmerged: 5 chunks each
        text = "\n\n".join(_random_words(rng, rng.randint(30, 70)) for _ in range(5))
        kb.add_document(f"doc{d:03d}", text)
    assert len(kb) == 200
    vectors = {cid: list(chunk.vector) for cid, chunk in kb.chunks.items()}
    for _ in range(50):
        qtext = _random_words(rng, rng.randint(1, 8))
        k = rng.randint(1, 12)
        q = Query.from_text(qtext, k=k)
        produced = [h.chunk_id for h in vector_search(kb, q)]
        expected = brute_force_cosine_topk(vectors, list(q.vector), k)
        assert produced == expected


def test_scores_bounded():
    kb = corpus_kb({"a": "x y z", "b": "p q r"})
    for hit in vector_search(kb, Query.from_text("x q", k=2)):
        assert -1.0 - 1e-9 <= hit.score <= 1.0 + 1e-9
    for hit in keyword_search(kb, Query.from_text("x q", k=2)):
        assert hit.score >= 0.0 and math.isfinite(hit.score)


# --- keyword search ----------------------------------------------------------------


def test_unique_token_ranks_its_chunk_first():
    kb = corpus_kb({"a": "common words here", "b": "rareword among common words"})
    hits = keyword_search(kb, Query.from_text("rareword", k=2))
    assert hits[0].chunk_id == "b:0000"


def test_bm25_matches_hand_computed_table():
    fixture = json.loads((GOLDEN / "bm25_fixture.json").read_text())
    kb = KnowledgeBase()
    for cid, text in fixture["docs"].items():
        doc_id = cid.split(":")[0]
        kb.add_document(doc_id, text)
    hits = keyword_search(kb, Query.from_text(fixture["query"], k=5))
    produced = {h.chunk_id: h.score for h in hits}
    assert set(produced) == set(fixture["expected_scores"])
    for cid, expected in fixture["expected_scores"].items():
        assert math.isclose(produced[cid], expected, abs_tol=1e-9), cid


def test_query_with_no_corpus_tokens_is_empty():
    kb = corpus_kb({"a": "alpha beta"})
    assert keyword_search(kb, Query.from_text("zzz qqq", k=3)) == []


# --- graph expansion ----------------------------------------------------------------


def three_chunk_kb() -> KnowledgeBase:
    kb = KnowledgeBase()
    parts = [
        "first part " + "alpha beta gamma delta " * 6,
        "second part " + "epsilon zeta eta theta " * 6,
        "third part " + "iota kappa lambda mu " * 7,
    ]
    kb.add_document("doc", "\n\n".join(parts))
    assert len(kb) == 3
    return kb


def test_neighbors_added_at_half_score():
    kb = three_chunk_kb()
    hits = [RetrievalHit(chunk_id="doc:0001", score=0.8, source="vector", rank=1)]
    expanded = graph_expand(kb, hits)
    by_id = {h.chunk_id: h for h in expanded}
    assert set(by_id) == {"doc:0000", "doc:0001", "doc:0002"}
    assert by_id["doc:0000"].score == pytest.approx(0.4)
    assert by_id["doc:0002"].score == pytest.approx(0.4)
    assert by_id["doc:0000"].source == "graph"
    assert by_id["doc:0001"].rank == 1


def test_single_chunk_doc_unchanged():
    kb = corpus_kb({"solo": "only one chunk"})
    hits = [RetrievalHit(chunk_id="solo:0000", score=0.9, source="vector", rank=1)]
    assert graph_expand(kb, hits) == hits


def test_existing_neighbor_not_duplicated():
    kb = three_chunk_kb()
    hits = [
        RetrievalHit(chunk_id="doc:0000", score=0.9, source="vector", rank=1),
        RetrievalHit(chunk_id="doc:0001", score=0.7, source="vector", rank=2),
    ]
    expanded = graph_expand(kb, hits)
    assert [h.chunk_id for h in expanded].count("doc:0001") == 1
    by_id = {h.chunk_id: h for h in expanded}
    assert by_id["doc:0001"].score == pytest.approx(0.7)  # original score kept


# --- fusion -----------------------------------------------------------------------


def hit(cid: str, rank: int, score: float = 1.0, source: str = "vector") -> RetrievalHit:
    return RetrievalHit(chunk_id=cid, score=score, source=source, rank=rank)


def test_identical_singletons_fuse_to_two_over_sixtyone():
    fused = fuse([[hit("c", 1)], [hit("c", 1, source="keyword")]])
    assert len(fused) == 1
    assert fused[0].score == pytest.approx(1 / 61 + 1 / 61)
    assert fused[0].source == "fused"


def test_empty_list_preserves_other_ranks():
    fused = fuse([[], [hit("a", 1), hit("b", 2)]])
    assert [h.chunk_id for h in fused] == ["a", "b"]
    assert [h.rank for h in fused] == [1, 2]


def test_rank_1_and_3_beats_2_and_2():
    lists = [
        [hit("x", 1), hit("y", 2), hit("z", 3)],
        [hit("z", 1, source="keyword"), hit("y", 2, source="keyword"), hit("x", 3, source="keyword")],
    ]
    fused = fuse(lists)
    x = next(h for h in fused if h.chunk_id == "x")
    y = next(h for h in fused if h.chunk_id == "y")
    assert x.rank < y.rank  # 1/61 + 1/63 > 2/62


@given(st.permutations(range(4)))
def test_fuse_permutation_invariant(order):
    base = [
        [hit("a", 1), hit("b", 2)],
        [hit("b", 1, source="keyword"), hit("c", 2, source="keyword")],
        [hit("c", 1, source="graph"), hit("a", 2, source="graph")],
        [hit("d", 1, source="keyword")],
    ]
    reference = fuse(base)
    shuffled = fuse([base[i] for i in order])
    assert shuffled == reference


# --- prompting and redaction ---------------------------------------------------------


TEMPLATE = "Context:\n{context}\n\nQuestion: {question}\nAnswer:"


def test_single_hit_fits_budget():
    kb = corpus_kb({"a": "relevant context text"})
    hits = [hit("a:0000", 1)]
    prompt = build_prompt("what?", hits, kb, TEMPLATE)
    assert "relevant context text" in prompt
    assert "what?" in prompt


def test_budget_drops_lowest_ranked_contexts():
    kb = KnowledgeBase()
    for i in range(5):
        kb.add_document(f"d{i}", f"filler{i} " * 10)
    hits = [hit(f"d{i}:0000", i + 1) for i in range(5)]
    # template overhead: "Context:", "Question:", "what?", "Answer:" -> 4 words;
    # each context is 10 words plus the --- separator word between contexts.
    budget = 4 + 3 * 10 + 2  # exactly the top-3 contexts fit
    prompt = build_prompt("what?", hits, kb, TEMPLATE, token_budget=budget)
    assert "filler2" in prompt and "filler3" not in prompt
    assert len(prompt.split()) <= budget


def test_question_never_truncated():
    kb = corpus_kb({"a": "ctx"})
    question = "why " * 500
    prompt = build_prompt(question, [hit("a:0000", 1)], kb, TEMPLATE, token_budget=10)
    assert question.strip() in prompt


def test_missing_placeholder_rejected():
    kb = corpus_kb({"a": "ctx"})
    with pytest.raises(BadTemplateError):
        build_prompt("q", [], kb, "no placeholders here")
    with pytest.raises(BadTemplateError):
        build_prompt("q", [], kb, "{context} only")


def test_redact_email():
    assert redact("mail a@b.co") == "mail [REDACTED:email]"


def test_redact_phone_variants():
    assert redact("call +1 (415) 555-0123 now") == "call [REDACTED:phone] now"
    assert redact("ring 1234567") == "ring [REDACTED:phone]"
    assert redact("room 123 floor 4") == "room 123 floor 4"  # < 7 digits kept


def test_redact_no_match_unchanged():
    text = "nothing sensitive here, just words"
    assert redact(text) == text


@given(st.text(alphabet="abc 0123456789@.-()+\n", max_size=120))
def test_redact_idempotent(text):
    once = redact(text)
    assert redact(once) == once


# --- persistence -----------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    kb = corpus_kb({"a": f"{PARA_ONE}\n\n{PARA_TWO}", "b": "epsilon"})
    assert len(kb) == 3
    kb.save(tmp_path / "space")
    loaded = KnowledgeBase.load(tmp_path / "space")
    assert loaded.chunks == kb.chunks
    assert loaded.inverted == kb.inverted
    assert loaded.graph == kb.graph
    meta = json.loads((tmp_path / "space" / "meta.json").read_text())
    assert meta["chunk_count"] == 3 and meta["encoder_dim"] == encoder.DIM


def test_index_rebuild_consistency():
    kb = corpus_kb({"a": "one two\n\nthree four", "b": "five six seven"})
    inverted, graph = dict(kb.inverted), dict(kb.graph)
    kb.rebuild_indexes()
    assert kb.inverted == inverted
    assert kb.graph == graph


def test_reingest_replaces_chunks():
    kb = KnowledgeBase()
    assert kb.add_document("doc", "one\n\ntwo\n\nthree" + " padding" * 40) >= 1
    first_count = len(kb)
    assert kb.add_document("doc", "only paragraph") == 1
    assert len(kb) == 1 != first_count
