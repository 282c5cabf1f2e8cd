from __future__ import annotations

import pytest

from vdcook.cooking import (
    CoverageReport,
    amplify_long_tail,
    coverage_report,
    expand_query,
    plan_assembly,
    policy_filter,
    quality_score,
)
from vdcook.errors import EmptyQuery, ShortfallUnmet
from vdcook.index import AttributeConstraints
from vdcook.model import CookRequest, EnrichmentMetadata, Prefilters, motion_category_for

from fractions import Fraction


# --- query expansion ---

def test_base_template_from_raw_tokens():
    templates = expand_query("road waterlogging")
    assert len(templates) == 1
    assert templates[0].terms == ("road", "waterlogging")
    assert templates[0].weight == 1.0
    assert templates[0].constraints.is_empty()


def test_synonym_set_adds_one_template_at_point_eight():
    synonyms = [["waterlogging", "flooded street"]]
    templates = expand_query("road waterlogging", synonyms)
    assert [(t.terms, t.weight) for t in templates] == [
        (("road", "waterlogging"), 1.0),
        (("road", "flooded", "street"), 0.8)]


def test_motion_directive_becomes_constraint():
    templates = expand_query("motion:high dump truck")
    assert len(templates) == 1
    assert templates[0].terms == ("dump", "truck")
    assert templates[0].constraints.motion_category == "high"


def test_directive_only_query_allowed():
    templates = expand_query("motion:high")
    assert templates[0].terms == ()
    assert templates[0].constraints.motion_category == "high"


def test_tag_and_lang_directives():
    templates = expand_query("tag:inkwash lang:zh brush painting")
    c = templates[0].constraints
    assert c.tags_any == frozenset({"inkwash"})
    assert c.language == "zh"
    assert templates[0].terms == ("brush", "painting")


def test_empty_query_rejected():
    with pytest.raises(EmptyQuery):
        expand_query("   ")
    with pytest.raises(EmptyQuery):
        expand_query("motion:fast")  # invalid directive value


def test_external_expander_appends_at_point_six():
    templates = expand_query("koi pond", expander=lambda q: [q + " garden"])
    assert templates[-1].terms == ("koi", "pond", "garden")
    assert templates[-1].weight == 0.6


def test_duplicate_templates_removed():
    synonyms = [["koi", "koi"]]
    templates = expand_query("koi", synonyms,
                             expander=lambda q: [q])
    keys = [t.key() for t in templates]
    assert len(keys) == len(set(keys))


# --- assembly planning ---

@pytest.mark.parametrize("scale,ratio,expected", [
    (100, 0.7, (70, 30)),
    (10, 1.0, (10, 0)),
    (3, 0.5, (2, 1)),
    (50, 0.6, (30, 20)),   # float 0.6*50 rounds above 30; exact math must not
    (7, 0.0, (0, 7)),
    (1, 0.25, (1, 0)),
])
def test_plan_assembly_exact_ceiling(scale, ratio, expected):
    plan = plan_assembly(scale, ratio)
    assert (plan.n_retrieve, plan.n_synthesize) == expected
    assert plan.n_retrieve + plan.n_synthesize == scale


# --- quality scoring ---

def _meta(bucket="1080p", words=60, scenes=1):
    caption = " ".join(["w"] * words)
    return EnrichmentMetadata(
        clip_id="a" * 64, scenes=tuple((i * 10, (i + 1) * 10) for i in range(scenes)),
        motion_intensity=10.0, motion_category="low", ocr_text_area=0.0,
        ocr_box_count=0.0, caption=caption, caption_word_count=words,
        tags=frozenset(), language="und", safety_flags=frozenset(),
        resolution_bucket=bucket, annotator_versions={})


def test_perfect_clip_scores_one():
    assert quality_score(_meta("1080p", 60, 1)) == 1.0


def test_low_quality_arithmetic():
    # 0.4*0.25 + 0.3*0 + 0.3*(1/4) = 0.175
    assert quality_score(_meta("lt480p", 0, 4)) == pytest.approx(0.175)


def test_caption_only_weights():
    assert quality_score(_meta("lt480p", 25, 1),
                         weights=(0.0, 1.0, 0.0)) == pytest.approx(0.5)


# --- policy filtering ---

def _request(**over):
    base = dict(query="q", scale=5, retrieval_ratio=1.0, quality_threshold=0.5,
                seed=1, shortfall_policy="truncate")
    base.update(over)
    return CookRequest(**base)


def test_policy_drops_low_quality():
    row = ("a" * 64, _meta("lt480p", 0, 4), Fraction(3))
    kept, dropped = policy_filter([row], _request(quality_threshold=0.5))
    assert kept == []
    assert dropped == [("a" * 64, "quality")]


def test_policy_drops_flagged_clip():
    meta = _meta("1080p", 60, 1)
    flagged = EnrichmentMetadata(**{**meta.__dict__, "safety_flags": frozenset({"nsfw"})})
    row = ("a" * 64, flagged, Fraction(3))
    request = _request(quality_threshold=0.0,
                       prefilters=Prefilters(excluded_safety_flags=frozenset({"nsfw"})))
    kept, dropped = policy_filter([row], request)
    assert dropped == [("a" * 64, "compliance")]


def test_policy_drops_out_of_bounds_duration():
    row = ("a" * 64, _meta(), Fraction(10))
    request = _request(quality_threshold=0.0,
                       prefilters=Prefilters(max_duration_s=8.0))
    kept, dropped = policy_filter([row], request)
    assert dropped == [("a" * 64, "duration")]


def test_zero_threshold_keeps_everything():
    rows = [(f"{i:064x}", _meta("lt480p", 0, 4), Fraction(3)) for i in range(3)]
    kept, dropped = policy_filter(rows, _request(quality_threshold=0.0))
    assert len(kept) == 3 and dropped == []
    assert [k[0] for k in kept] == [r[0] for r in rows]  # order preserved


# --- coverage and amplification ---

class _Row:
    def __init__(self, tags):
        self.tags = frozenset(tags)


def test_coverage_deficits():
    rows = [_Row({"snow"}), _Row({"snow", "city"}), _Row({"city"})]
    report = coverage_report(rows, floor=5, tag_universe={"snow", "city"})
    assert report.per_tag_counts == {"snow": 2, "city": 2}
    assert report.deficient_tags == (("city", 3), ("snow", 3))


def test_amplify_emits_min_of_deficit_and_batch():
    report = CoverageReport({"snow": 2}, 5, (("snow", 3),))
    plans = amplify_long_tail(report, per_tag_batch=10)
    assert len(plans) == 3
    assert all(p.style_label == "snow" and p.motion_target == 50.0
               for p in plans)
    assert len(amplify_long_tail(report, per_tag_batch=2)) == 2


def test_all_tags_covered_means_empty_plan():
    rows = [_Row({"snow"})] * 5
    report = coverage_report(rows, floor=5, tag_universe={"snow"})
    assert report.deficient_tags == ()
    assert amplify_long_tail(report, 10) == []
