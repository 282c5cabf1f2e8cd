from __future__ import annotations

import hashlib
import random

import numpy as np
import pytest

from vdcook.index import (
    AttributeConstraints,
    ClipIndex,
    RetrievalTemplate,
    embed_text,
    tokenize,
)
from vdcook.model import ClipRecord, EnrichmentMetadata, Prefilters, motion_category_for

from oracles import cosine_rank

VOCAB = ("koi", "fish", "pond", "city", "night", "rain", "truck", "snow",
         "garden", "market", "drone", "harbor", "forest", "bridge", "neon")


def _fake_id(i: int) -> str:
    return hashlib.sha256(str(i).encode()).hexdigest()


def _row(i: int, caption: str, *, tags=frozenset(), language="und",
         safety=frozenset(), motion=10.0, frames=72, fps=(24, 1),
         origin="retrieved"):
    record = ClipRecord(
        clip_id=_fake_id(i), width=320, height=180, fps_num=fps[0],
        fps_den=fps[1], frame_count=frames, origin=origin,
        ingest_time="2026-01-01T00:00:00Z", status="enriched")
    metadata = EnrichmentMetadata(
        clip_id=record.clip_id, scenes=((0, frames),),
        motion_intensity=motion, motion_category=motion_category_for(motion),
        ocr_text_area=0.0, ocr_box_count=0.0, caption=caption,
        caption_word_count=len(caption.split()), tags=frozenset(tags),
        language=language, safety_flags=frozenset(safety),
        resolution_bucket="lt480p", annotator_versions={})
    return record, metadata


def _build_corpus(n: int, seed: int = 0) -> tuple[ClipIndex, dict]:
    rng = random.Random(seed)
    index = ClipIndex()
    vectors = {}
    for i in range(n):
        caption = " ".join(rng.choices(VOCAB, k=rng.randint(3, 8)))
        record, metadata = _row(i, caption,
                                tags=frozenset(rng.sample(VOCAB, 2)),
                                motion=rng.uniform(0, 100))
        index.upsert(record, metadata)
        text = metadata.caption + " " + " ".join(sorted(metadata.tags))
        vectors[record.clip_id] = embed_text(text)
    return index, vectors


# --- embedding ---

def test_empty_text_is_zero_vector():
    vec = embed_text("")
    assert not vec.any()
    assert vec.shape == (256,)


def test_embedding_deterministic_and_unit_norm():
    a = embed_text("koi fish pond")
    b = embed_text("koi fish pond")
    assert np.array_equal(a, b)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-9)
    assert float(a @ a) == pytest.approx(1.0, abs=1e-9)


def test_bag_of_words_order_invariance():
    assert np.array_equal(embed_text("koi fish pond"),
                          embed_text("pond fish koi"))


def test_tokenizer_lowercases_and_splits_alnum_runs():
    assert tokenize("Koi-Fish pond_42!") == ["koi", "fish", "pond", "42"]


# --- attribute queries ---

def test_excluded_safety_flag_filters_clip():
    index = ClipIndex()
    for i, safety in enumerate((frozenset(), frozenset({"violence"}))):
        index.upsert(*_row(i, "city night", safety=safety))
    result = index.query_attributes(
        Prefilters(excluded_safety_flags=frozenset({"violence"})))
    assert result == {_fake_id(0)}


def test_duration_floor_excludes_shorter_clip():
    index = ClipIndex()
    index.upsert(*_row(0, "a", frames=48))          # exactly 2.0 s
    index.upsert(*_row(1, "b", frames=19, fps=(10, 1)))  # 1.9 s
    result = index.query_attributes(Prefilters(min_duration_s=2.0))
    assert result == {_fake_id(0)}


def test_empty_filters_return_all(engine=None):
    index, _ = _build_corpus(20)
    assert len(index.query_attributes(Prefilters())) == 20


def test_attribute_predicate_complement_property():
    index, _ = _build_corpus(200, seed=1)
    prefilters = Prefilters(excluded_safety_flags=frozenset({"nope"}))
    constraints = AttributeConstraints(motion_category="medium",
                                       tags_any=frozenset({"koi", "rain"}))
    result = index.query_attributes(prefilters, constraints)
    for row in index.rows():
        in_result = row.clip_id in result
        satisfies = (row.motion_category == "medium"
                     and bool(row.tags & {"koi", "rain"}))
        assert in_result == satisfies
    # union of result and complement is the full indexed set
    complement = index.clip_ids() - result
    assert result | complement == index.clip_ids()


# --- vector search ---

def test_own_caption_ranks_first_with_cosine_one():
    index, vectors = _build_corpus(50, seed=2)
    target = index.rows()[7]
    text = target.metadata.caption + " " + " ".join(sorted(target.tags))
    results = index.vector_search(embed_text(text), 5, index.clip_ids())
    assert results[0][0] == target.clip_id
    assert results[0][1] == pytest.approx(1.0, abs=1e-9)


def test_vector_search_matches_brute_force_oracle():
    index, vectors = _build_corpus(500, seed=3)
    query = embed_text("koi pond at night")
    got = index.vector_search(query, 25, index.clip_ids())
    expected = cosine_rank(vectors, query, 25, index.clip_ids())
    assert [g[0] for g in got] == [e[0] for e in expected]
    for (_, a), (_, b) in zip(got, expected):
        assert a == pytest.approx(b, abs=1e-12)


def test_identical_captions_tie_break_by_clip_id():
    index = ClipIndex()
    for i in range(4):
        index.upsert(*_row(i, "same words here", tags=frozenset()))
    results = index.vector_search(embed_text("same words here"), 4,
                                  index.clip_ids())
    assert [cid for cid, _ in results] == sorted(_fake_id(i) for i in range(4))


def test_empty_candidates_empty_result():
    index, _ = _build_corpus(10)
    assert index.vector_search(embed_text("koi"), 3, set()) == []


def test_fewer_candidates_than_k():
    index, _ = _build_corpus(3)
    assert len(index.vector_search(embed_text("koi"), 10, index.clip_ids())) == 3


# --- upsert semantics ---

def test_upsert_is_idempotent_and_updates_vector():
    index = ClipIndex()
    record, metadata = _row(0, "old caption words")
    index.upsert(record, metadata)
    index.upsert(record, metadata)
    assert len(index) == 1
    old_cos = index.vector_search(embed_text("old caption words"), 1,
                                  index.clip_ids())[0][1]
    assert old_cos == pytest.approx(1.0, abs=1e-9)
    _, updated = _row(0, "completely different text")
    index.upsert(record, updated)
    new_results = index.vector_search(embed_text("completely different text"),
                                      1, index.clip_ids())
    assert new_results[0][1] == pytest.approx(1.0, abs=1e-9)
    stale = index.vector_search(embed_text("old caption words"), 1,
                                index.clip_ids())
    assert stale[0][1] < 1.0  # old caption no longer a perfect match


# --- hybrid retrieval ---

def test_single_template_degenerates_to_vector_search():
    index, _ = _build_corpus(100, seed=4)
    template = RetrievalTemplate(("koi", "pond"), weight=1.0)
    got = index.retrieve([template], Prefilters(), 10)
    expected = index.vector_search(embed_text("koi pond"), 10,
                                   index.query_attributes(Prefilters()))
    assert [g[0] for g in got] == [e[0] for e in expected]


def test_max_rule_across_templates():
    index = ClipIndex()
    index.upsert(*_row(0, "koi pond"))
    t1 = RetrievalTemplate(("koi", "pond"), weight=0.8)
    t2 = RetrievalTemplate(("koi", "pond"), weight=0.45,
                           constraints=AttributeConstraints(
                               tags_any=frozenset({"missing"})))
    t3 = RetrievalTemplate(("koi", "pond"), weight=0.9)
    results = index.retrieve([t1, t3], Prefilters(), 5)
    assert results[0][1] == pytest.approx(0.9, abs=1e-9)  # max, not sum


def test_source_mode_filtering_by_origin():
    index = ClipIndex()
    index.upsert(*_row(0, "koi pond", origin="retrieved"))
    index.upsert(*_row(1, "koi pond", origin="synthetic"))
    template = RetrievalTemplate(("koi", "pond"))
    uploaded_only = index.retrieve([template], Prefilters(), 10,
                                   origins=("uploaded",))
    assert uploaded_only == []
    hybrid = index.retrieve([template], Prefilters(), 10,
                            origins=("retrieved", "uploaded"))
    assert [c for c, _ in hybrid] == [_fake_id(0)]
    unrestricted = index.retrieve([template], Prefilters(), 10)
    assert len(unrestricted) == 2


def test_repeated_retrieve_is_deterministic():
    index, _ = _build_corpus(300, seed=5)
    templates = [RetrievalTemplate(("koi", "pond"), weight=1.0),
                 RetrievalTemplate(("night", "rain"), weight=0.8)]
    first = index.retrieve(templates, Prefilters(), 40)
    for _ in range(3):
        assert index.retrieve(templates, Prefilters(), 40) == first
