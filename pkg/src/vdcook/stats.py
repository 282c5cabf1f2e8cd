"""Corpus analytics: nearest-rank percentiles, histograms, two-sample KS,
and the corpus summary table."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import EmptyData, InvalidEdges
from .model import RESOLUTION_BUCKETS


def percentiles(values: list[float], ps: list[float]) -> list[float]:
    """Nearest-rank percentiles: element at index ceil(p/100 * n) - 1.

    The rank is computed in exact rational arithmetic; a float product like
    0.1 * 10 would otherwise ceil to the wrong rank.
    """
    if len(values) == 0:
        raise EmptyData("percentiles of an empty list")
    ordered = sorted(values)
    n = len(ordered)
    out = []
    for p in ps:
        if not 0.0 <= p <= 100.0:
            raise EmptyData(f"percentile out of [0,100]: {p}")
        rank = math.ceil(Fraction(p) * n / 100)
        out.append(ordered[max(rank - 1, 0)])
    return out


def histogram(values: list[float], edges: list[float]) -> dict:
    """Half-open buckets [edges[i], edges[i+1]) plus underflow/overflow."""
    if len(edges) < 2 or any(edges[i] >= edges[i + 1] for i in range(len(edges) - 1)):
        raise InvalidEdges(f"edges must be strictly ascending: {edges}")
    arr = np.asarray(values, dtype=np.float64)
    idx = np.searchsorted(np.asarray(edges, dtype=np.float64), arr, side="right") - 1
    counts = [int(np.count_nonzero(idx == i)) for i in range(len(edges) - 1)]
    return {
        "edges": [float(e) for e in edges],
        "counts": counts,
        "underflow": int(np.count_nonzero(idx < 0)),
        "overflow": int(np.count_nonzero(idx == len(edges) - 1)),
    }


def ks_statistic(a: list[float], b: list[float]) -> float:
    """Two-sample KS statistic: max |F_a - F_b| over the pooled points,
    with right-continuous empirical CDFs."""
    if len(a) == 0 or len(b) == 0:
        raise EmptyData("ks_statistic needs two nonempty samples")
    xa = np.sort(np.asarray(a, dtype=np.float64))
    xb = np.sort(np.asarray(b, dtype=np.float64))
    pooled = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, pooled, side="right") / xa.size
    fb = np.searchsorted(xb, pooled, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True)
class CorpusSummary:
    clip_count: int
    caption_words_mean: float
    caption_words_p10: float
    caption_words_p50: float
    caption_words_p90: float
    total_duration_s: float
    duration_p10: float
    duration_p50: float
    duration_p90: float
    resolution_bucket_fractions: dict
    ocr_text_area_mean: float
    ocr_text_area_median: float
    ocr_box_count_mean: float
    motion_intensity_mean: float
    snapshot_time: str
    sampling: dict

    def to_dict(self) -> dict:
        return {
            "clip_count": self.clip_count,
            "caption_words_mean": float(self.caption_words_mean),
            "caption_words_p10": float(self.caption_words_p10),
            "caption_words_p50": float(self.caption_words_p50),
            "caption_words_p90": float(self.caption_words_p90),
            "total_duration_s": float(self.total_duration_s),
            "duration_p10": float(self.duration_p10),
            "duration_p50": float(self.duration_p50),
            "duration_p90": float(self.duration_p90),
            "resolution_bucket_fractions": {
                k: float(v) for k, v in sorted(self.resolution_bucket_fractions.items())},
            "ocr_text_area_mean": float(self.ocr_text_area_mean),
            "ocr_text_area_median": float(self.ocr_text_area_median),
            "ocr_box_count_mean": float(self.ocr_box_count_mean),
            "motion_intensity_mean": float(self.motion_intensity_mean),
            "snapshot_time": self.snapshot_time,
            "sampling": self.sampling,
        }


def summarize(rows, snapshot_time: str, sampling: Optional[dict] = None) -> CorpusSummary:
    """Aggregate index rows (clip records + metadata) into a summary.

    rows: iterable of (duration_s float, metadata). Sampling spec is always
    recorded so aggregates are attributable.
    """
    rows = list(rows)
    if not rows:
        raise EmptyData("corpus summary over an empty index")
    sampling = sampling or {"mode": "full"}
    if sampling.get("mode") == "random_n":
        n = sampling["n"]
        seed = sampling.get("seed", 0)
        if n < len(rows):
            rng = np.random.default_rng(seed)
            order = sorted(rows, key=lambda r: r[1].clip_id)
            picks = rng.choice(len(order), size=n, replace=False)
            rows = [order[i] for i in sorted(picks)]

    durations = [d for d, _ in rows]
    captions = [float(m.caption_word_count) for _, m in rows]
    ocr_areas = [m.ocr_text_area for _, m in rows]
    bucket_counts = {b: 0 for b in RESOLUTION_BUCKETS}
    for _, m in rows:
        bucket_counts[m.resolution_bucket] += 1
    n = len(rows)
    cp10, cp50, cp90 = percentiles(captions, [10, 50, 90])
    dp10, dp50, dp90 = percentiles(durations, [10, 50, 90])
    return CorpusSummary(
        clip_count=n,
        caption_words_mean=sum(captions) / n,
        caption_words_p10=cp10, caption_words_p50=cp50, caption_words_p90=cp90,
        total_duration_s=sum(durations),
        duration_p10=dp10, duration_p50=dp50, duration_p90=dp90,
        resolution_bucket_fractions={b: c / n for b, c in bucket_counts.items()},
        ocr_text_area_mean=sum(ocr_areas) / n,
        ocr_text_area_median=percentiles(ocr_areas, [50])[0],
        ocr_box_count_mean=sum(m.ocr_box_count for _, m in rows) / n,
        motion_intensity_mean=sum(m.motion_intensity for _, m in rows) / n,
        snapshot_time=snapshot_time,
        sampling=sampling,
    )


def summary_table(summary: CorpusSummary) -> str:
    """Aligned plain-text rendering, units labeled explicitly."""
    rows = [
        ("clips", f"{summary.clip_count}"),
        ("caption words (mean)", f"{summary.caption_words_mean:.2f}"),
        ("caption words P10/P50/P90",
         f"{summary.caption_words_p10:.0f}/{summary.caption_words_p50:.0f}/{summary.caption_words_p90:.0f}"),
        ("total duration (seconds)", f"{summary.total_duration_s:.2f}"),
        ("duration P10/P50/P90 (s)",
         f"{summary.duration_p10:.2f}/{summary.duration_p50:.2f}/{summary.duration_p90:.2f}"),
        ("ocr_text_area avg/median",
         f"{summary.ocr_text_area_mean:.4f}/{summary.ocr_text_area_median:.4f}"),
        ("avg. motion intensity", f"{summary.motion_intensity_mean:.1f}"),
        ("OCR boxes (mean per frame)", f"{summary.ocr_box_count_mean:.2f}"),
    ]
    for bucket in RESOLUTION_BUCKETS:
        frac = summary.resolution_bucket_fractions.get(bucket, 0.0)
        rows.append((f"resolution {bucket}", f"{frac * 100:.1f}%"))
    rows.append(("sampling", summary.sampling.get("mode", "full")))
    rows.append(("snapshot", summary.snapshot_time))
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)
