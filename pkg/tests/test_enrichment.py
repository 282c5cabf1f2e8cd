from __future__ import annotations

import numpy as np
import pytest

from vdcook.container import Clip, compute_clip_id, encode_clip
from vdcook.enrichment import (
    OcrFrameBoxes,
    aggregate_ocr,
    categorize_motion,
    detect_scenes,
    downscale_luma,
    luma_plane,
    ocr_sample_indices,
    scene_spans,
    score_motion,
    split_into_scene_clips,
)
from vdcook.errors import InvalidSample, InvalidScore, MotionUndefined
from vdcook.model import ClipRecord
from vdcook.canonical import utc_now
from vdcook.synthesis import noise_bytes

from oracles import brute_force_motion_score, rect_union_area


def _clip(frames: np.ndarray, fps_num=24, fps_den=1) -> Clip:
    return Clip(np.ascontiguousarray(frames, dtype=np.uint8), fps_num, fps_den)


def _gray(value: int, n: int, h: int = 32, w: int = 32) -> np.ndarray:
    return np.full((n, h, w, 3), value, dtype=np.uint8)


def _textured_translation(n_frames: int, v: int, h: int = 64, w: int = 124,
                          key: int = 11) -> Clip:
    """Random texture translating v px/frame with wraparound. Width leaves
    4 px of slack past the block grid so every block can reach |v| <= 4."""
    tile = noise_bytes(key, h * w).reshape(h, w)
    frames = np.stack([np.roll(tile, v * t, axis=1) for t in range(n_frames)])
    return _clip(np.repeat(frames[:, :, :, None], 3, axis=3))


# --- scene detection ---

def test_identical_frames_no_cuts():
    assert detect_scenes(_clip(_gray(90, 20))) == []


def test_black_to_white_cut_scores_255():
    frames = np.concatenate([_gray(0, 10), _gray(255, 10)])
    cuts = detect_scenes(_clip(frames), threshold=30.0, min_scene_frames=10)
    assert len(cuts) == 1
    assert cuts[0].frame_index == 10
    assert cuts[0].score == 255.0


def test_gradual_luma_ramp_produces_no_cuts():
    frames = np.stack([np.full((32, 32, 3), min(5 * t, 255), dtype=np.uint8)
                       for t in range(40)])
    assert detect_scenes(_clip(frames)) == []


def test_min_scene_frames_suppresses_early_cut():
    frames = np.concatenate([_gray(0, 10), _gray(255, 10)])
    # default hysteresis window is 12 frames: the cut at 10 is suppressed
    assert detect_scenes(_clip(frames), threshold=30.0) == []


def test_planted_cuts_recovered_exactly():
    segments = [_gray(v, n) for v, n in ((20, 25), (200, 14), (70, 30))]
    frames = np.concatenate(segments)
    cuts = detect_scenes(_clip(frames))
    assert [c.frame_index for c in cuts] == [25, 39]
    assert scene_spans(69, cuts) == ((0, 25), (25, 39), (39, 69))


def test_single_frame_clip_has_no_cuts():
    assert detect_scenes(_clip(_gray(10, 1))) == []


# --- scene splitting ---

def _record_for(clip: Clip) -> ClipRecord:
    return ClipRecord(
        clip_id=compute_clip_id(encode_clip(clip)),
        width=clip.width, height=clip.height,
        fps_num=clip.fps_num, fps_den=clip.fps_den,
        frame_count=clip.frame_count, origin="retrieved",
        ingest_time=utc_now())


def test_split_keeps_two_five_second_halves():
    frames = np.concatenate([_gray(0, 120), _gray(255, 120)])
    clip = _clip(frames)
    cuts = detect_scenes(clip)
    assert [c.frame_index for c in cuts] == [120]
    result = split_into_scene_clips(clip, cuts, _record_for(clip))
    assert len(result.segments) == 2
    assert result.dropped_short == 0
    for record, data in result.segments:
        assert record.frame_count == 120
        assert record.parent_clip_id == _record_for(clip).clip_id
        assert compute_clip_id(data) == record.clip_id


def test_split_drops_both_sub_two_second_segments():
    # 60 frames at 24 fps (2.5 s) cut at 24: 1.0 s and 1.5 s, both dropped
    frames = np.concatenate([_gray(0, 24), _gray(255, 36)])
    clip = _clip(frames)
    cuts = detect_scenes(clip)
    assert [c.frame_index for c in cuts] == [24]
    result = split_into_scene_clips(clip, cuts, _record_for(clip))
    assert result.segments == ()
    assert result.dropped_short == 2


def test_split_without_cuts_reproduces_the_clip():
    clip = _clip(_gray(128, 96))
    result = split_into_scene_clips(clip, [], _record_for(clip))
    assert len(result.segments) == 1
    record, data = result.segments[0]
    assert record.clip_id == _record_for(clip).clip_id  # same pixels, same id
    assert record.parent_clip_id == _record_for(clip).clip_id


# --- motion ---

def test_static_clip_scores_zero():
    assert score_motion(_clip(_gray(77, 10))) == 0.0


def test_single_frame_motion_undefined():
    with pytest.raises(MotionUndefined):
        score_motion(_clip(_gray(77, 1)))


@pytest.mark.parametrize("v", [0, 1, 2, 3, 4])
def test_translation_scores_match_brute_force_oracle(v):
    clip = _textured_translation(10, v)
    expected = brute_force_motion_score(luma_plane(clip.frames))
    got = score_motion(clip)
    assert abs(got - expected) <= 1e-9
    if v == 0:
        assert got == 0.0
    else:
        assert abs(got - 25.0 * v) <= 0.1 * 25.0 * v


def test_saturation_at_four_px_per_frame():
    assert score_motion(_textured_translation(10, 4)) == 100.0


def test_downscale_keeps_small_planes_untouched():
    luma = np.arange(2 * 64 * 128, dtype=np.uint8).reshape(2, 64, 128)
    assert downscale_luma(luma) is luma
    big = np.zeros((2, 180, 320), dtype=np.uint8)
    small = downscale_luma(big)
    assert small.shape == (2, 72, 128)


def test_categorize_motion_boundaries():
    assert categorize_motion(0.0) == "low"
    assert categorize_motion(32.999) == "low"
    assert categorize_motion(33.0) == "medium"
    assert categorize_motion(65.999) == "medium"
    assert categorize_motion(66.0) == "high"
    assert categorize_motion(99.9) == "high"
    assert categorize_motion(100.0) == "high"
    with pytest.raises(InvalidScore):
        categorize_motion(-0.1)
    with pytest.raises(InvalidScore):
        categorize_motion(100.1)


# --- OCR aggregation ---

def test_no_boxes_on_five_frames_is_zero():
    frames = [OcrFrameBoxes(i, ()) for i in range(5)]
    assert aggregate_ocr(frames, 5) == (0.0, 0.0)


def test_full_frame_box_covers_everything():
    frames = [OcrFrameBoxes(0, ((0.0, 0.0, 1.0, 1.0),))]
    assert aggregate_ocr(frames, 1) == (1.0, 1.0)


def test_grid_aligned_overlap_matches_inclusion_exclusion():
    boxes = ((0.0, 0.0, 0.5, 0.5), (0.25, 0.25, 0.75, 0.75))
    area, count = aggregate_ocr([OcrFrameBoxes(0, boxes)], 1)
    assert area == 0.4375  # 0.25 + 0.25 - 0.0625
    assert area == rect_union_area(boxes)
    assert count == 2.0


def test_boxless_frames_count_in_denominator():
    frames = [OcrFrameBoxes(0, ((0.0, 0.0, 0.5, 0.5),))]
    area, count = aggregate_ocr(frames, 2)
    assert area == 0.125
    assert count == 0.5


def test_empty_sample_rejected():
    with pytest.raises(InvalidSample):
        aggregate_ocr([], 0)


def test_random_boxes_within_grid_tolerance():
    rng = np.random.default_rng(3)
    for _ in range(200):
        boxes = []
        for _ in range(rng.integers(1, 4)):
            x0, y0 = rng.uniform(0, 0.8, 2)
            x1 = x0 + rng.uniform(0.05, 1 - x0 - 1e-9)
            y1 = y0 + rng.uniform(0.05, 1 - y0 - 1e-9)
            boxes.append((float(x0), float(y0), float(x1), float(y1)))
        area, _ = aggregate_ocr([OcrFrameBoxes(0, tuple(boxes))], 1)
        assert abs(area - rect_union_area(boxes)) <= 2 / 64


# --- sampling schedule ---

def test_one_sample_per_second():
    assert ocr_sample_indices(48, 24, 1) == [0, 24]
    assert ocr_sample_indices(49, 24, 1) == [0, 24, 48]
    assert ocr_sample_indices(75, 30000, 1001) == [0, 29, 59]
    assert ocr_sample_indices(1, 24, 1) == [0]
