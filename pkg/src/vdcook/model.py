"""Shared domain types: clip records, metadata, provenance, requests, manifests.

All types are immutable value objects and serialize to canonical-JSON-safe
dicts (sets become sorted lists, numbers keep their python type).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationError

ORIGINS = ("retrieved", "uploaded", "synthetic")
STATUSES = ("raw", "enriched", "indexed", "rejected")
PROVENANCE_KINDS = ("crawled", "uploaded", "synthetic")
SOURCE_MODES = ("crawled", "uploaded", "hybrid")
SHORTFALL_POLICIES = ("fail", "backfill_synthesis", "truncate")
MOTION_CATEGORIES = ("low", "medium", "high")
RESOLUTION_BUCKETS = ("lt480p", "480p", "720p", "1080p", "4k")

METADATA_SCHEMA_VERSION = 1
MANIFEST_VERSION = 1

# origins a cook job may retrieve from, per source mode; synthetic clips are
# reachable through direct index queries but never through cook retrieval,
# otherwise re-running a job would see its own reinjected output
SOURCE_MODE_ORIGINS = {
    "crawled": ("retrieved",),
    "uploaded": ("uploaded",),
    "hybrid": ("retrieved", "uploaded"),
}


def motion_category_for(score: float) -> str:
    """Tertile boundaries: low [0,33), medium [33,66), high [66,100]."""
    if score < 33.0:
        return "low"
    if score < 66.0:
        return "medium"
    return "high"


def resolution_bucket_for(width: int, height: int) -> str:
    """Bucket keyed on the smaller dimension (the 720p/1080p vocabulary)."""
    short = min(width, height)
    if short < 480:
        return "lt480p"
    if short < 720:
        return "480p"
    if short < 1080:
        return "720p"
    if short < 2160:
        return "1080p"
    return "4k"


def word_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class ClipRecord:
    clip_id: str
    width: int
    height: int
    fps_num: int
    fps_den: int
    frame_count: int
    origin: str
    ingest_time: str
    status: str = "raw"
    parent_clip_id: Optional[str] = None

    def __post_init__(self):
        if not (len(self.clip_id) == 64 and all(c in "0123456789abcdef" for c in self.clip_id)):
            raise ValidationError(f"clip_id is not a 64-char lowercase hex digest: {self.clip_id!r}")
        if self.width < 1 or self.height < 1 or self.fps_num < 1 or self.fps_den < 1:
            raise ValidationError("width, height and fps terms must be >= 1")
        if self.frame_count < 1:
            raise ValidationError("frame_count must be >= 1")
        if self.origin not in ORIGINS:
            raise ValidationError(f"unknown origin {self.origin!r}")
        if self.status not in STATUSES:
            raise ValidationError(f"unknown status {self.status!r}")

    @property
    def duration_s(self) -> float:
        return self.frame_count * self.fps_den / self.fps_num

    def with_status(self, status: str) -> "ClipRecord":
        return ClipRecord(self.clip_id, self.width, self.height, self.fps_num,
                          self.fps_den, self.frame_count, self.origin,
                          self.ingest_time, status, self.parent_clip_id)

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "width": self.width,
            "height": self.height,
            "fps_num": self.fps_num,
            "fps_den": self.fps_den,
            "frame_count": self.frame_count,
            "duration_s": float(self.duration_s),
            "origin": self.origin,
            "parent_clip_id": self.parent_clip_id,
            "ingest_time": self.ingest_time,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClipRecord":
        return cls(d["clip_id"], d["width"], d["height"], d["fps_num"],
                   d["fps_den"], d["frame_count"], d["origin"],
                   d["ingest_time"], d.get("status", "raw"),
                   d.get("parent_clip_id"))


@dataclass(frozen=True)
class EnrichmentMetadata:
    clip_id: str
    scenes: tuple  # ((start, end), ...) half-open frame ranges
    motion_intensity: float
    motion_category: str
    ocr_text_area: float
    ocr_box_count: float
    caption: str
    caption_word_count: int
    tags: frozenset
    language: str
    safety_flags: frozenset
    resolution_bucket: str
    annotator_versions: dict
    schema_version: int = METADATA_SCHEMA_VERSION
    pending: frozenset = frozenset()  # annotator kinds awaiting retry

    def __post_init__(self):
        if not 0.0 <= self.motion_intensity <= 100.0:
            raise ValidationError(f"motion_intensity out of [0,100]: {self.motion_intensity}")
        if not 0.0 <= self.ocr_text_area <= 1.0:
            raise ValidationError(f"ocr_text_area out of [0,1]: {self.ocr_text_area}")
        if self.ocr_box_count < 0:
            raise ValidationError("ocr_box_count must be >= 0")
        if self.motion_category != motion_category_for(self.motion_intensity):
            raise ValidationError(
                f"motion_category {self.motion_category!r} inconsistent with "
                f"intensity {self.motion_intensity}")
        if self.caption_word_count != word_count(self.caption):
            raise ValidationError("caption_word_count disagrees with caption")
        if self.resolution_bucket not in RESOLUTION_BUCKETS:
            raise ValidationError(f"unknown resolution bucket {self.resolution_bucket!r}")
        prev_end = 0
        for start, end in self.scenes:
            if start != prev_end or end <= start:
                raise ValidationError(f"scenes must partition [0,n): {self.scenes}")
            prev_end = end

    @property
    def scene_count(self) -> int:
        return len(self.scenes)

    def validate_against_frame_count(self, frame_count: int) -> None:
        if not self.scenes or self.scenes[-1][1] != frame_count:
            raise ValidationError(
                f"scenes cover [0,{self.scenes[-1][1] if self.scenes else 0}) "
                f"but clip has {frame_count} frames")

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "schema_version": self.schema_version,
            "scenes": [[int(s), int(e)] for s, e in self.scenes],
            "motion_intensity": float(self.motion_intensity),
            "motion_category": self.motion_category,
            "ocr_text_area": float(self.ocr_text_area),
            "ocr_box_count": float(self.ocr_box_count),
            "caption": self.caption,
            "caption_word_count": self.caption_word_count,
            "tags": sorted(self.tags),
            "language": self.language,
            "safety_flags": sorted(self.safety_flags),
            "resolution_bucket": self.resolution_bucket,
            "annotator_versions": dict(sorted(self.annotator_versions.items())),
            "pending": sorted(self.pending),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnrichmentMetadata":
        return cls(
            clip_id=d["clip_id"],
            scenes=tuple((s, e) for s, e in d["scenes"]),
            motion_intensity=d["motion_intensity"],
            motion_category=d["motion_category"],
            ocr_text_area=d["ocr_text_area"],
            ocr_box_count=d["ocr_box_count"],
            caption=d["caption"],
            caption_word_count=d["caption_word_count"],
            tags=frozenset(d["tags"]),
            language=d["language"],
            safety_flags=frozenset(d["safety_flags"]),
            resolution_bucket=d["resolution_bucket"],
            annotator_versions=dict(d["annotator_versions"]),
            schema_version=d["schema_version"],
            pending=frozenset(d.get("pending", [])),
        )


@dataclass(frozen=True)
class ProvenanceChain:
    kind: str
    source_id: str
    locator: str
    license: str
    created_time: str
    crawl_job_id: Optional[str] = None
    seed_clip_ids: tuple = ()
    generator_id: Optional[str] = None
    generator_version: Optional[str] = None
    conditioning: Optional[dict] = None

    def __post_init__(self):
        if self.kind not in PROVENANCE_KINDS:
            raise ValidationError(f"unknown provenance kind {self.kind!r}")
        if self.kind == "synthetic":
            if not self.generator_id:
                raise ValidationError("synthetic provenance needs a generator_id")
        else:
            if self.seed_clip_ids or self.generator_id or self.generator_version \
                    or self.conditioning is not None:
                raise ValidationError(
                    f"{self.kind} provenance must not carry generator fields")

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "source_id": self.source_id,
            "locator": self.locator,
            "crawl_job_id": self.crawl_job_id,
            "license": self.license,
            "created_time": self.created_time,
        }
        if self.kind == "synthetic":
            d["seed_clip_ids"] = list(self.seed_clip_ids)
            d["generator_id"] = self.generator_id
            d["generator_version"] = self.generator_version
            d["conditioning"] = self.conditioning or {}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProvenanceChain":
        return cls(
            kind=d["kind"],
            source_id=d["source_id"],
            locator=d["locator"],
            license=d["license"],
            created_time=d["created_time"],
            crawl_job_id=d.get("crawl_job_id"),
            seed_clip_ids=tuple(d.get("seed_clip_ids", ())),
            generator_id=d.get("generator_id"),
            generator_version=d.get("generator_version"),
            conditioning=d.get("conditioning"),
        )


@dataclass(frozen=True)
class Prefilters:
    min_duration_s: float = 2.0
    max_duration_s: Optional[float] = None
    languages: frozenset | str = "any"  # frozenset of BCP-47 tags, or "any"
    excluded_safety_flags: frozenset = frozenset()

    def __post_init__(self):
        if self.min_duration_s < 0:
            raise ValidationError("min_duration_s must be >= 0")
        if self.max_duration_s is not None and self.max_duration_s < self.min_duration_s:
            raise ValidationError("max_duration_s < min_duration_s")

    def to_dict(self) -> dict:
        return {
            "min_duration_s": float(self.min_duration_s),
            "max_duration_s": None if self.max_duration_s is None else float(self.max_duration_s),
            "languages": "any" if self.languages == "any" else sorted(self.languages),
            "excluded_safety_flags": sorted(self.excluded_safety_flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Prefilters":
        langs = d.get("languages", "any")
        return cls(
            min_duration_s=d.get("min_duration_s", 2.0),
            max_duration_s=d.get("max_duration_s"),
            languages="any" if langs == "any" else frozenset(langs),
            excluded_safety_flags=frozenset(d.get("excluded_safety_flags", [])),
        )


@dataclass(frozen=True)
class CookRequest:
    query: str
    scale: int
    retrieval_ratio: float
    quality_threshold: float
    seed: int
    prefilters: Prefilters = field(default_factory=Prefilters)
    source_mode: str = "hybrid"
    shortfall_policy: str = "fail"

    def __post_init__(self):
        if self.scale < 1:
            raise ValidationError("scale must be >= 1")
        if not 0.0 <= self.retrieval_ratio <= 1.0:
            raise ValidationError("retrieval_ratio must be in [0,1]")
        if not 0.0 <= self.quality_threshold <= 1.0:
            raise ValidationError("quality_threshold must be in [0,1]")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.source_mode not in SOURCE_MODES:
            raise ValidationError(f"unknown source_mode {self.source_mode!r}")
        if self.shortfall_policy not in SHORTFALL_POLICIES:
            raise ValidationError(f"unknown shortfall_policy {self.shortfall_policy!r}")

    def to_dict(self) -> dict:
        # a sub-2s min_duration override is visible here, and therefore in
        # the manifest's request echo, satisfying the recording requirement
        return {
            "query": self.query,
            "scale": self.scale,
            "retrieval_ratio": float(self.retrieval_ratio),
            "quality_threshold": float(self.quality_threshold),
            "prefilters": self.prefilters.to_dict(),
            "source_mode": self.source_mode,
            "shortfall_policy": self.shortfall_policy,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CookRequest":
        return cls(
            query=d["query"],
            scale=d["scale"],
            retrieval_ratio=d["retrieval_ratio"],
            quality_threshold=d["quality_threshold"],
            seed=d["seed"],
            prefilters=Prefilters.from_dict(d.get("prefilters", {})),
            source_mode=d.get("source_mode", "hybrid"),
            shortfall_policy=d.get("shortfall_policy", "fail"),
        )


@dataclass(frozen=True)
class ManifestEntry:
    clip_id: str
    container_digest: str
    byte_length: int
    metadata: EnrichmentMetadata
    provenance: ProvenanceChain
    channel: str  # retrieved | synthesized
    rank_score: float
    quality_score: float

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "container_digest": self.container_digest,
            "byte_length": self.byte_length,
            "metadata": self.metadata.to_dict(),
            "provenance": self.provenance.to_dict(),
            "selection": {
                "channel": self.channel,
                "rank_score": float(self.rank_score),
                "quality_score": float(self.quality_score),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        sel = d["selection"]
        return cls(
            clip_id=d["clip_id"],
            container_digest=d["container_digest"],
            byte_length=d["byte_length"],
            metadata=EnrichmentMetadata.from_dict(d["metadata"]),
            provenance=ProvenanceChain.from_dict(d["provenance"]),
            channel=sel["channel"],
            rank_score=sel["rank_score"],
            quality_score=sel["quality_score"],
        )


@dataclass(frozen=True)
class Manifest:
    job_id: str
    request: CookRequest
    engine_version: str
    created_time: str
    entries: tuple  # ManifestEntry, sorted ascending by clip_id
    retrieved_count: int
    synthesized_count: int
    dropped_by_policy: int
    replay_command: str
    manifest_version: int = MANIFEST_VERSION

    def __post_init__(self):
        ids = [e.clip_id for e in self.entries]
        if ids != sorted(ids):
            raise ValidationError("manifest entries must be sorted by clip_id")
        if self.retrieved_count + self.synthesized_count != len(self.entries):
            raise ValidationError("entry counts do not add up")

    def to_dict(self) -> dict:
        return {
            "manifest_version": self.manifest_version,
            "job_id": self.job_id,
            "request": self.request.to_dict(),
            "engine_version": self.engine_version,
            "created_time": self.created_time,
            "entries": [e.to_dict() for e in self.entries],
            "counts": {
                "retrieved": self.retrieved_count,
                "synthesized": self.synthesized_count,
                "dropped_by_policy": self.dropped_by_policy,
            },
            "replay_command": self.replay_command,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        return cls(
            job_id=d["job_id"],
            request=CookRequest.from_dict(d["request"]),
            engine_version=d["engine_version"],
            created_time=d["created_time"],
            entries=tuple(ManifestEntry.from_dict(e) for e in d["entries"]),
            retrieved_count=d["counts"]["retrieved"],
            synthesized_count=d["counts"]["synthesized"],
            dropped_by_policy=d["counts"]["dropped_by_policy"],
            replay_command=d["replay_command"],
            manifest_version=d["manifest_version"],
        )
