"""Per-clip signal extraction: scene cuts, scene splitting, motion, OCR area.

Everything here is a pure function of pixel data, so enrichment results
are reproducible and clips can be processed concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .container import Clip, compute_clip_id, encode_clip, meets_min_duration
from .errors import InvalidSample, InvalidScore, MotionUndefined, ValidationError
from .model import ClipRecord, motion_category_for

SCENE_THRESHOLD = 30.0
MIN_SCENE_FRAMES = 12
MOTION_MAX_DIM = 128
MOTION_SCALE = 25.0
OCR_GRID = 64


@dataclass(frozen=True)
class SceneCut:
    frame_index: int  # first frame of the new scene
    score: float      # mean absolute luma difference at the cut


@dataclass(frozen=True)
class OcrFrameBoxes:
    frame_index: int
    boxes: tuple  # ((x0, y0, x1, y1), ...) normalized to [0,1]

    def __post_init__(self):
        for x0, y0, x1, y1 in self.boxes:
            if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
                raise ValidationError(f"box out of range: {(x0, y0, x1, y1)}")


def luma_plane(frames: np.ndarray) -> np.ndarray:
    """Integer luma round((R+G+B)/3), via the kernel backend."""
    return kernels.luma_plane(frames)


def downscale_luma(luma: np.ndarray, max_dim: int = MOTION_MAX_DIM) -> np.ndarray:
    """Nearest-neighbor downscale so max(width, height) <= max_dim."""
    h, w = luma.shape[1], luma.shape[2]
    longest = max(h, w)
    if longest <= max_dim:
        return luma
    out_h = max(1, h * max_dim // longest)
    out_w = max(1, w * max_dim // longest)
    ys = np.arange(out_h) * h // out_h
    xs = np.arange(out_w) * w // out_w
    return luma[:, ys[:, None], xs[None, :]]


def detect_scenes(clip: Clip, threshold: float = SCENE_THRESHOLD,
                  min_scene_frames: int = MIN_SCENE_FRAMES,
                  luma: np.ndarray | None = None) -> list[SceneCut]:
    """Hard-cut detection on mean absolute luma difference.

    A cut is emitted at frame t iff d(t) >= threshold and at least
    min_scene_frames frames passed since the previous cut (or clip start).
    A precomputed luma plane may be passed to share work with the motion
    scorer.
    """
    if clip.frame_count < 2:
        return []
    if luma is None:
        luma = luma_plane(clip.frames)
    sums = kernels.frame_diff_sums(luma)
    pixels = clip.width * clip.height
    cuts: list[SceneCut] = []
    last = 0
    for t in range(1, clip.frame_count):
        d = sums[t - 1] / pixels
        if d >= threshold and t - last >= min_scene_frames:
            cuts.append(SceneCut(frame_index=t, score=float(d)))
            last = t
    return cuts


def scene_spans(frame_count: int, cuts: list[SceneCut]) -> tuple:
    """Partition [0, frame_count) at the cut indices."""
    bounds = [0] + [c.frame_index for c in cuts] + [frame_count]
    return tuple((bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1))


@dataclass(frozen=True)
class SplitResult:
    segments: tuple  # ((ClipRecord, container bytes), ...), order preserved
    dropped_short: int


def split_into_scene_clips(clip: Clip, cuts: list[SceneCut],
                           parent: ClipRecord) -> SplitResult:
    """Re-encode each scene as its own clip, dropping sub-2-second segments.

    The duration test is exact rational arithmetic on the frame counts so a
    segment of exactly 2.0 s is always kept.
    """
    segments = []
    dropped = 0
    for start, end in scene_spans(clip.frame_count, cuts):
        if not meets_min_duration(end - start, clip.fps_num, clip.fps_den):
            dropped += 1
            continue
        child = clip.slice(start, end)
        data = encode_clip(child)
        record = ClipRecord(
            clip_id=compute_clip_id(data),
            width=child.width,
            height=child.height,
            fps_num=child.fps_num,
            fps_den=child.fps_den,
            frame_count=child.frame_count,
            origin=parent.origin,
            ingest_time=parent.ingest_time,
            status="raw",
            parent_clip_id=parent.clip_id,
        )
        segments.append((record, data))
    return SplitResult(segments=tuple(segments), dropped_short=dropped)


def motion_displacement_field(clip: Clip, luma: np.ndarray | None = None
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Integer per-block displacements in the downscaled measurement space."""
    if clip.frame_count < 2:
        raise MotionUndefined("motion needs at least two frames")
    if luma is None:
        luma = luma_plane(clip.frames)
    return kernels.block_match_displacements(downscale_luma(luma))


def score_motion(clip: Clip, luma: np.ndarray | None = None) -> float:
    """Mean block displacement magnitude, scaled so the score spans [0,100].

    The kernel returns integers; the float reduction happens here once, so
    the numba and numpy backends produce bit-identical scores.
    """
    dys, dxs = motion_displacement_field(clip, luma)
    if dys.size == 0:
        return 0.0
    mags = np.hypot(dys.astype(np.float64), dxs.astype(np.float64))
    mean_mag = float(mags.sum() / mags.size)
    return min(100.0, MOTION_SCALE * mean_mag)


def categorize_motion(motion_intensity: float) -> str:
    if not 0.0 <= motion_intensity <= 100.0:
        raise InvalidScore(f"motion intensity out of [0,100]: {motion_intensity}")
    return motion_category_for(motion_intensity)


def ocr_sample_indices(frame_count: int, fps_num: int, fps_den: int) -> list[int]:
    """One sampled frame per second: floor(k*fps) for k = 0, 1, ..."""
    indices = []
    k = 0
    while True:
        idx = k * fps_num // fps_den
        if idx >= frame_count:
            break
        indices.append(idx)
        k += 1
    return indices or [0]


def _rasterize_union(boxes) -> int:
    """Covered cell count on the OCR_GRID grid; a cell counts iff its center
    lies in some box (half-open on the upper edges)."""
    centers = (np.arange(OCR_GRID) + 0.5) / OCR_GRID
    mask = np.zeros((OCR_GRID, OCR_GRID), dtype=bool)
    for x0, y0, x1, y1 in boxes:
        cols = (centers >= x0) & (centers < x1)
        rows = (centers >= y0) & (centers < y1)
        mask |= rows[:, None] & cols[None, :]
    return int(mask.sum())


def aggregate_ocr(frames_boxes: list[OcrFrameBoxes],
                  sampled_frame_count: int) -> tuple[float, float]:
    """Mean union-area fraction and mean box count over the sampled frames.

    Frames without boxes still count in the denominator.
    """
    if sampled_frame_count < 1:
        raise InvalidSample("sampled_frame_count must be >= 1")
    if len(frames_boxes) > sampled_frame_count:
        raise InvalidSample("more box frames than sampled frames")
    total_cells = 0
    total_boxes = 0
    for fb in frames_boxes:
        if fb.frame_index < 0:
            raise InvalidSample(f"negative frame_index {fb.frame_index}")
        total_cells += _rasterize_union(fb.boxes)
        total_boxes += len(fb.boxes)
    area = total_cells / (OCR_GRID * OCR_GRID) / sampled_frame_count
    return area, total_boxes / sampled_frame_count
