"""Deterministic fixture corpus for tests and demos.

Builds a fully pipelined corpus of 200 indexed clips: crawled and uploaded
procedural clips across resolutions, durations and motion levels, planted
multi-scene and sub-2s clips, and synthetic clips with conditioning-driven
tags, overlays, safety flags and languages. Facts a test needs to assert
against (planted ids, counts) are written to fixtures.json beside the
store.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np

from .canonical import canonical_dumps
from .container import compute_clip_id, encode_clip_container
from .engine import Engine
from .ingestion import FetchItem, SourceDescriptor
from .synthesis import (
    SynthesisConditioning,
    derive_key,
    render_frames,
    style_background,
    synthesize_clip,
    text_key,
)

CRAWL_SOURCE = "fixture-crawl"
UPLOAD_SOURCE = "fixture-upload"

_TAG_PALETTE = ("city", "traffic", "night", "market", "rain", "drone",
                "portrait", "cooking", "nature")
_STYLES = ("plain", "inkwash", "neon", "pastel")

# (width, height, fps_num, fps_den, duration choices, count): long clips get
# the low frame rate so duration diversity stays byte-cheap
_CRAWL_GEOMETRY = (
    (160, 90, 24, 1, (2.0, 2.5, 2.5, 3.0), 60),
    (160, 90, 12, 1, (4.0, 5.0, 6.0, 8.0), 28),
    (160, 90, 30000, 1001, (2.5, 3.0), 12),
    (256, 144, 30, 1, (2.0, 2.5), 12),
)

_MULTI_SCENE_BACKGROUNDS = ((40, 40, 40), (190, 190, 190), (90, 90, 200))


def _render_fixture(width: int, height: int, fps_num: int, fps_den: int,
                    n_frames: int, style: str, motion_v: int, key: int,
                    solid_rgb=None) -> bytes:
    background = style_background(style, solid_rgb, width, height)
    shifts = [t * motion_v for t in range(n_frames)]
    frames = render_frames(width, height, n_frames, background, key, shifts)
    return encode_clip_container(list(frames), width, height, fps_num, fps_den)


def _concat_containers(parts: list[bytes]) -> bytes:
    """Splice same-geometry clips into one multi-scene container."""
    from .container import decode_clip_container, encode_clip

    clips = [decode_clip_container(p) for p in parts]
    frames = np.concatenate([c.frames for c in clips])
    first = clips[0]
    return encode_clip_container(list(frames), first.width, first.height,
                                 first.fps_num, first.fps_den)


def build_fixture_corpus(engine: Engine, seed: int = 7) -> dict:
    """Populate the engine with the seeded corpus, run enrichment and
    indexing, and return the planted-facts summary."""
    rng = random.Random(seed)
    planted: dict = {"seed": seed}

    try:
        engine.ingestor.register_source(
            SourceDescriptor(CRAWL_SOURCE, "local_dir",
                             {"root": str(Path(engine.store.root) / "fixtures"),
                              "license": "cc-by"}))
        engine.ingestor.register_source(
            SourceDescriptor(UPLOAD_SOURCE, "upload", {}))
    except Exception:
        pass  # already registered on a rebuilt store

    # --- crawled clips, staged on disk and pulled through the connector ---
    fixture_dir = Path(engine.store.root) / "fixtures"
    fixture_dir.mkdir(parents=True, exist_ok=True)
    serial = 0
    for width, height, fps_num, fps_den, durations, count in _CRAWL_GEOMETRY:
        for _ in range(count):
            seconds = rng.choice(durations)
            n_frames = max(int(round(seconds * fps_num / fps_den)),
                           -(-2 * fps_num // fps_den))  # >= 2s exactly
            motion_v = rng.choice((0, 1, 2, 3, 4, 5, 6))
            style = rng.choice(_STYLES)
            data = _render_fixture(width, height, fps_num, fps_den, n_frames,
                                   style, motion_v, derive_key(seed, serial))
            (fixture_dir / f"clip{serial:04d}.vdc").write_bytes(data)
            serial += 1

    # two multi-scene clips with planted hard cuts (2.5 s segments, solid
    # high-contrast backgrounds so the cuts are unambiguous)
    multi_parents = []
    for n_scenes in (3, 2):
        parts = []
        for s in range(n_scenes):
            parts.append(_render_fixture(
                160, 90, 24, 1, 60, "plain", s % 3,
                derive_key(seed, 9000 + serial * 10 + s),
                solid_rgb=_MULTI_SCENE_BACKGROUNDS[s]))
        data = _concat_containers(parts)
        multi_parents.append({"clip_id": compute_clip_id(data),
                              "scenes": n_scenes,
                              "cut_frames": [60 * k for k in range(1, n_scenes)]})
        (fixture_dir / f"multi{serial:04d}.vdc").write_bytes(data)
        serial += 1
    planted["multi_scene_parents"] = multi_parents

    # two structurally short clips; the 1.9 s one must never reach a package
    short_ids = []
    short_specs = ((36, 24, 1), (19, 10, 1))  # 1.5 s and 1.9 s
    for n_frames, fps_num, fps_den in short_specs:
        data = _render_fixture(160, 90, fps_num, fps_den, n_frames, "plain",
                               1, derive_key(seed, 9900 + serial))
        short_ids.append(compute_clip_id(data))
        (fixture_dir / f"short{serial:04d}.vdc").write_bytes(data)
        serial += 1
    planted["short_clip_ids"] = short_ids

    crawl_results = engine.crawl_source(CRAWL_SOURCE)
    planted["crawled_accepted"] = sum(1 for r in crawl_results if r.accepted)

    # --- uploaded clips (the few large-resolution ones live here so they
    # are written once instead of staged and copied) ---
    upload_items = []
    for i in range(37):
        seconds = rng.choice((2.0, 2.5, 3.0, 4.0, 5.0))
        motion_v = rng.choice((0, 1, 2, 3, 4, 5))
        data = _render_fixture(160, 90, 24, 1, int(seconds * 24),
                               rng.choice(_STYLES), motion_v,
                               derive_key(seed, 20000 + i))
        upload_items.append(FetchItem(data, f"upload://fixture/{i}", "private"))
    for i, (width, height, seconds) in enumerate(
            ((640, 480, 2.0), (640, 480, 2.5), (960, 720, 2.0))):
        data = _render_fixture(width, height, 24, 1, int(seconds * 24),
                               rng.choice(_STYLES), rng.choice((1, 2, 3)),
                               derive_key(seed, 30000 + i))
        upload_items.append(FetchItem(data, f"upload://fixture/hires/{i}", "private"))
    upload_results = engine.ingestor.ingest_batch(UPLOAD_SOURCE, upload_items)
    planted["uploaded_accepted"] = sum(1 for r in upload_results if r.accepted)

    outcomes = engine.enrich_pending()
    planted["dropped_short"] = sum(o.dropped_short for o in outcomes)
    planted["indexed_after_enrich"] = engine.index_pending()

    # --- synthetic clips reinjected with conditioning-driven annotations ---
    snow_ids, violence_ids, synth_ids = [], [], []
    payloads = []
    for i in range(43):
        tags = tuple(sorted(rng.sample(_TAG_PALETTE, rng.randint(1, 3))))
        style = rng.choice(_STYLES)
        safety = ()
        language = "und"
        overlay = None
        if i in (4, 17):
            tags = tuple(sorted(set(tags) | {"snow"}))
        if i in (9, 23):
            safety = ("violence",)
        if i in (6, 13, 28):
            language = "zh"
        if i % 5 == 0:
            overlay = ((0.05, 0.8, 0.45, 0.95),)
        elif i % 7 == 0:
            overlay = ((0.1, 0.05, 0.35, 0.12), (0.55, 0.55, 0.8, 0.7))
        conditioning = SynthesisConditioning(
            style_label=style,
            motion_target=float(rng.choice((0, 10, 25, 40, 50, 65, 80, 95))),
            duration_s=rng.choice((2.5, 3.0)),
            text_overlay_boxes=overlay,
            tags=tags,
            safety_flags=safety,
            language=language,
        )
        data, provenance = synthesize_clip(conditioning, seed, 50000 + i)
        record, metadata = engine.enrich_payload_in_memory(data, provenance)
        payloads.append((data, provenance, metadata))
        synth_ids.append(record.clip_id)
        if "snow" in tags:
            snow_ids.append(record.clip_id)
        if safety:
            violence_ids.append(record.clip_id)
    engine.reinject(payloads)
    planted["synthetic_clip_ids"] = synth_ids
    planted["snow_clip_ids"] = snow_ids
    planted["violence_clip_ids"] = violence_ids
    planted["indexed_total"] = len(engine.index)

    if planted["indexed_total"] != 200 or len(snow_ids) != 2:
        raise RuntimeError(f"fixture corpus drifted from its design: {planted}")

    facts_path = Path(engine.store.root) / "fixtures.json"
    facts_path.write_text(canonical_dumps(planted) + "\n", encoding="utf-8")
    return planted
