from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vdcook.errors import EmptyData, InvalidEdges
from vdcook.stats import histogram, ks_statistic, percentiles, summarize

from oracles import ks_brute, sort_percentile


# --- percentiles ---

def test_median_of_five():
    assert percentiles([1, 2, 3, 4, 5], [50]) == [3]


def test_p10_p90_of_ten():
    values = list(range(1, 11))
    assert percentiles(values, [10, 90]) == [1, 9]


def test_p0_is_minimum():
    assert percentiles([5, 1, 9], [0]) == [1]


def test_empty_input_rejected():
    with pytest.raises(EmptyData):
        percentiles([], [50])


def test_seeded_uniform_sample_matches_sort_oracle():
    rng = np.random.default_rng(12)
    values = rng.uniform(0, 1, 1000).tolist()
    for p in (0, 10, 25, 50, 75, 90, 99, 100):
        assert percentiles(values, [p])[0] == sort_percentile(values, p)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=300),
       st.integers(0, 100))
def test_percentiles_property_match_oracle(values, p):
    assert percentiles(values, [p])[0] == sort_percentile(values, p)


# --- histogram ---

def test_duration_buckets_with_under_and_overflow():
    result = histogram([3, 10, 45, 120], [5, 60])
    assert result["underflow"] == 1
    assert result["counts"] == [2]
    assert result["overflow"] == 1


def test_empty_values_all_zero():
    result = histogram([], [0, 1, 2])
    assert result["counts"] == [0, 0]
    assert result["underflow"] == 0 and result["overflow"] == 0


def test_value_on_interior_edge_goes_up():
    result = histogram([1.0], [0.0, 1.0, 2.0])
    assert result["counts"] == [0, 1]


def test_unsorted_edges_rejected():
    with pytest.raises(InvalidEdges):
        histogram([1], [2, 1])
    with pytest.raises(InvalidEdges):
        histogram([1], [1, 1])
    with pytest.raises(InvalidEdges):
        histogram([1], [1])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), max_size=200))
def test_histogram_conserves_totals(values):
    result = histogram(values, [-50, -10, 0, 10, 50])
    assert sum(result["counts"]) + result["underflow"] + result["overflow"] \
        == len(values)


# --- two-sample KS ---

def test_identical_samples_have_zero_distance():
    assert ks_statistic([1, 2, 3], [1, 2, 3]) == 0.0


def test_disjoint_supports_have_distance_one():
    assert ks_statistic([0, 0, 0, 0], [1, 1, 1, 1]) == 1.0


def test_shifted_quartet_is_one_quarter():
    assert ks_statistic([1, 2, 3, 4], [2, 3, 4, 5]) == pytest.approx(0.25)
    assert ks_brute([1, 2, 3, 4], [2, 3, 4, 5]) == pytest.approx(0.25)


def test_empty_sample_rejected():
    with pytest.raises(EmptyData):
        ks_statistic([], [1])
    with pytest.raises(EmptyData):
        ks_statistic([1], [])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=60),
       st.lists(st.floats(-50, 50), min_size=1, max_size=60))
def test_ks_matches_brute_force_and_is_symmetric(a, b):
    d = ks_statistic(a, b)
    assert d == pytest.approx(ks_brute(a, b), abs=1e-12)
    assert d == pytest.approx(ks_statistic(b, a), abs=1e-12)
    assert 0.0 <= d <= 1.0
    assert ks_statistic(a, a) == 0.0


# --- corpus summary ---

def _meta(clip_id, caption_words, motion, area, boxes, bucket):
    from vdcook.model import EnrichmentMetadata, motion_category_for

    return EnrichmentMetadata(
        clip_id=clip_id, scenes=((0, 48),), motion_intensity=motion,
        motion_category=motion_category_for(motion), ocr_text_area=area,
        ocr_box_count=boxes, caption=" ".join(["w"] * caption_words),
        caption_word_count=caption_words, tags=frozenset(), language="und",
        safety_flags=frozenset(), resolution_bucket=bucket,
        annotator_versions={})


def test_three_clip_summary_matches_hand_computation():
    rows = [
        (2.0, _meta("a" * 64, 10, 30.0, 0.10, 1.0, "lt480p")),
        (4.0, _meta("b" * 64, 20, 60.0, 0.20, 2.0, "480p")),
        (6.0, _meta("c" * 64, 60, 90.0, 0.60, 3.0, "lt480p")),
    ]
    s = summarize(rows, snapshot_time="2026-01-01T00:00:00Z")
    assert s.clip_count == 3
    assert s.caption_words_mean == 30.0
    assert s.caption_words_p50 == 20.0
    assert s.total_duration_s == 12.0
    assert s.duration_p10 == 2.0 and s.duration_p50 == 4.0 and s.duration_p90 == 6.0
    assert s.ocr_text_area_mean == pytest.approx(0.3)
    assert s.ocr_text_area_median == 0.2
    assert s.ocr_box_count_mean == 2.0
    assert s.motion_intensity_mean == 60.0
    assert s.resolution_bucket_fractions["lt480p"] == pytest.approx(2 / 3)
    assert s.resolution_bucket_fractions["480p"] == pytest.approx(1 / 3)
    assert sum(s.resolution_bucket_fractions.values()) == pytest.approx(1.0, abs=1e-9)
    assert s.sampling == {"mode": "full"}


def test_random_sample_of_full_size_equals_full_summary():
    rows = [(float(i + 2), _meta(chr(97 + i) * 64, 5 + i, 10.0 * i, 0.0,
                                 0.0, "lt480p"))
            for i in range(5)]
    full = summarize(rows, "2026-01-01T00:00:00Z")
    sampled = summarize(rows, "2026-01-01T00:00:00Z",
                        {"mode": "random_n", "n": 5, "seed": 3})
    for field_name in ("clip_count", "caption_words_mean", "total_duration_s",
                       "motion_intensity_mean", "duration_p50"):
        assert getattr(full, field_name) == getattr(sampled, field_name)
    assert sampled.sampling["mode"] == "random_n"


def test_empty_corpus_rejected():
    with pytest.raises(EmptyData):
        summarize([], "2026-01-01T00:00:00Z")
