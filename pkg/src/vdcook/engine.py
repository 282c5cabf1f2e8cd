"""The engine: wires the store, registries, index, and pipelines together.

State is rebuilt from the append-only record logs at startup (latest line
per key wins); the index has no authoritative file of its own.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import cooking, storage
from .annotators import (
    AnnotationCenter,
    AnnotatorDescriptor,
    BUILTINS,
    QUERY_EXPANDER_ID,
    prime_signal_cache,
)
from .canonical import EPOCH_TIME, canonical_bytes, utc_now
from .container import compute_clip_id, decode_clip_container, meets_min_duration
from .enrichment import (
    detect_scenes,
    luma_plane,
    ocr_sample_indices,
    scene_spans,
    score_motion,
    split_into_scene_clips,
)
from .errors import (
    AnnotatorProtocolError,
    AnnotatorTimeout,
    NoAnnotator,
    UnknownClip,
    ValidationError,
)
from .index import ClipIndex
from .ingestion import ConnectorRunner, FetchItem, Ingestor, SYNTHETIC_SOURCE_ID
from .model import (
    ClipRecord,
    CookRequest,
    EnrichmentMetadata,
    Manifest,
    ProvenanceChain,
    motion_category_for,
    resolution_bucket_for,
    word_count,
)
from .stats import CorpusSummary, summarize
from .synthesis import synthesize_clip

logger = logging.getLogger(__name__)

ENGINE_VERSION = "0.1.0"

DEFAULT_ANNOTATORS = (
    AnnotatorDescriptor("mock-caption", "caption", "builtin:mock_caption", "1"),
    AnnotatorDescriptor("mock-ocr", "ocr", "builtin:mock_ocr", "1"),
    AnnotatorDescriptor("mock-tags", "tags", "builtin:mock_tags", "1"),
)

RETRYABLE_ANNOTATION_ERRORS = (AnnotatorTimeout, NoAnnotator, AnnotatorProtocolError)


@dataclass(frozen=True)
class EnrichOutcome:
    clip_id: str
    action: str  # enriched | split | dropped_short | skipped
    enriched_ids: tuple = ()
    dropped_short: int = 0


class Engine:
    def __init__(self, store_root: str | Path,
                 packages_root: Optional[str | Path] = None,
                 synonyms_path: Optional[str | Path] = None,
                 http_transport=None):
        self.store = storage.ClipStore(store_root)
        root = Path(store_root)
        self.packages_root = Path(packages_root) if packages_root else root.parent / "packages"
        self.version = ENGINE_VERSION
        self.synonyms = cooking.load_synonyms(synonyms_path)

        self._lock = threading.RLock()
        self._clips: dict[str, ClipRecord] = {}
        self._provenance: dict[str, ProvenanceChain] = {}
        self._metadata: dict[str, EnrichmentMetadata] = {}

        self.index = ClipIndex()
        self.annotators = AnnotationCenter(
            http_transport=http_transport,
            on_register=lambda d: self.store.append_record(storage.ANNOTATORS_LOG, d.to_dict()))
        self.ingestor = Ingestor(
            runner=ConnectorRunner(http_transport=http_transport),
            known_clip=self.has_clip,
            persist_clip=self._persist_new_clip,
            persist_source=lambda s: self.store.append_record(storage.SOURCES_LOG, s.to_dict()),
            persist_schedule=lambda s: self.store.append_record(storage.SCHEDULES_LOG, s.to_dict()),
        )
        self._load()

    # --- startup ---

    def _load(self) -> None:
        from .ingestion import SourceDescriptor

        for row in self.store.read_records(storage.CLIPS_LOG):
            record = ClipRecord.from_dict(row["clip"])
            self._clips[record.clip_id] = record
            self._provenance[record.clip_id] = ProvenanceChain.from_dict(row["provenance"])
        for row in self.store.read_records(storage.METADATA_LOG):
            metadata = EnrichmentMetadata.from_dict(row)
            self._metadata[metadata.clip_id] = metadata
        latest_sources = {}
        for row in self.store.read_records(storage.SOURCES_LOG):
            desc = SourceDescriptor.from_dict(row)
            latest_sources[desc.source_id] = desc
        for desc in latest_sources.values():
            self.ingestor.register_source(desc, persist=False)
        seen = {}
        for row in self.store.read_records(storage.ANNOTATORS_LOG):
            seen[row["annotator_id"]] = AnnotatorDescriptor.from_dict(row)
        for desc in seen.values():
            self.annotators._descriptors[desc.annotator_id] = desc
        if not seen:
            for desc in DEFAULT_ANNOTATORS:
                self.annotators.register_annotator(desc)
        for clip_id, record in self._clips.items():
            if record.status == "indexed" and clip_id in self._metadata:
                self.index.upsert(record, self._metadata[clip_id])

    # --- clip registry ---

    def has_clip(self, clip_id: str) -> bool:
        with self._lock:
            return clip_id in self._clips

    def clip(self, clip_id: str) -> tuple[ClipRecord, ProvenanceChain]:
        with self._lock:
            if clip_id not in self._clips:
                raise UnknownClip(clip_id)
            return self._clips[clip_id], self._provenance[clip_id]

    def metadata(self, clip_id: str) -> Optional[EnrichmentMetadata]:
        with self._lock:
            return self._metadata.get(clip_id)

    def clip_records(self) -> list[ClipRecord]:
        with self._lock:
            return sorted(self._clips.values(), key=lambda r: r.clip_id)

    def _persist_new_clip(self, record: ClipRecord, provenance: ProvenanceChain,
                          data: bytes) -> None:
        self.store.save_clip(record.clip_id, data)
        self.store.append_record(storage.CLIPS_LOG,
                                 {"clip": record.to_dict(),
                                  "provenance": provenance.to_dict()})
        with self._lock:
            self._clips[record.clip_id] = record
            self._provenance[record.clip_id] = provenance

    def update_status(self, clip_id: str, status: str) -> ClipRecord:
        with self._lock:
            record = self._clips[clip_id].with_status(status)
            self._clips[clip_id] = record
            provenance = self._provenance[clip_id]
        self.store.append_record(storage.CLIPS_LOG,
                                 {"clip": record.to_dict(),
                                  "provenance": provenance.to_dict()})
        return record

    def _persist_metadata(self, metadata: EnrichmentMetadata) -> None:
        self.store.append_record(storage.METADATA_LOG, metadata.to_dict())
        with self._lock:
            self._metadata[metadata.clip_id] = metadata

    def crawl_source(self, source_id: str, query: str = ""):
        return self.ingestor.crawl_once(source_id, query)

    def corpus_snapshot_time(self) -> str:
        """Deterministic snapshot identity: the latest real-ingestion
        provenance time among indexed clips. Reinjected synthetic clips do
        not move it, so replaying a job sees the same snapshot."""
        with self._lock:
            times = [self._provenance[cid].created_time
                     for cid, rec in self._clips.items()
                     if rec.status == "indexed"
                     and self._provenance[cid].kind != "synthetic"]
        return max(times) if times else EPOCH_TIME

    def first_frame_mean_rgb(self, clip_id: str) -> tuple[int, int, int]:
        clip = decode_clip_container(self.store.load_clip(clip_id))
        mean = clip.frames[0].reshape(-1, 3).mean(axis=0)
        return tuple(int(round(v)) for v in mean)

    # --- enrichment pipeline ---

    def enrich_clip(self, clip_id: str) -> EnrichOutcome:
        """Scene-split a raw clip and enrich the surviving scene clips.

        Single-scene clips are enriched in place; split parents are marked
        rejected once their children carry the content; sub-2s segments are
        dropped and counted.
        """
        record, provenance = self.clip(clip_id)
        if record.status != "raw":
            return EnrichOutcome(clip_id, "skipped")
        data = self.store.load_clip(clip_id)
        clip = decode_clip_container(data)
        luma = luma_plane(clip.frames)
        cuts = detect_scenes(clip, luma=luma)

        if not cuts:
            # single scene: no re-encode needed, only the 2-second floor
            if not meets_min_duration(clip.frame_count, clip.fps_num, clip.fps_den):
                self.update_status(clip_id, "rejected")
                return EnrichOutcome(clip_id, "dropped_short", (), 1)
            metadata = self._compute_metadata(record, clip, data, provenance,
                                              ((0, clip.frame_count),), luma)
            self._persist_metadata(metadata)
            self.update_status(clip_id, "enriched")
            return EnrichOutcome(clip_id, "enriched", (clip_id,), 0)

        split = split_into_scene_clips(clip, cuts, record)
        enriched = []
        spans = {r.clip_id: span for (r, _), span in zip(
            split.segments,
            [s for s in scene_spans(clip.frame_count, cuts)
             if meets_min_duration(s[1] - s[0], clip.fps_num, clip.fps_den)])}
        for child_record, child_data in split.segments:
            if self.has_clip(child_record.clip_id):
                continue  # identical scene content already known
            self._persist_new_clip(child_record, provenance, child_data)
            child_clip = decode_clip_container(child_data)
            start, end = spans[child_record.clip_id]
            metadata = self._compute_metadata(
                child_record, child_clip, child_data, provenance,
                ((0, child_clip.frame_count),), luma[start:end])
            self._persist_metadata(metadata)
            self.update_status(child_record.clip_id, "enriched")
            enriched.append(child_record.clip_id)
        self.update_status(clip_id, "rejected")
        action = "split" if split.segments else "dropped_short"
        return EnrichOutcome(clip_id, action, tuple(enriched), split.dropped_short)

    def enrich_pending(self) -> list[EnrichOutcome]:
        outcomes = []
        for record in self.clip_records():
            if record.status == "raw":
                outcomes.append(self.enrich_clip(record.clip_id))
        return outcomes

    def enrich_payload_in_memory(self, data: bytes, provenance: ProvenanceChain
                                 ) -> tuple[ClipRecord, EnrichmentMetadata]:
        """Enrich a synthesized clip before it exists in the store; the
        record's timestamps come from the provenance so results stay
        deterministic."""
        clip = decode_clip_container(data)
        record = ClipRecord(
            clip_id=compute_clip_id(data),
            width=clip.width, height=clip.height,
            fps_num=clip.fps_num, fps_den=clip.fps_den,
            frame_count=clip.frame_count,
            origin="synthetic",
            ingest_time=provenance.created_time,
            status="raw",
        )
        luma = luma_plane(clip.frames)
        cuts = detect_scenes(clip, luma=luma)
        metadata = self._compute_metadata(record, clip, data, provenance,
                                          scene_spans(clip.frame_count, cuts), luma)
        return record, metadata

    def _compute_metadata(self, record: ClipRecord, clip, data: bytes,
                          provenance: ProvenanceChain, spans,
                          luma=None) -> EnrichmentMetadata:
        motion = 0.0 if clip.frame_count < 2 else score_motion(clip, luma)
        prime_signal_cache(record.clip_id, motion_category_for(motion), len(spans))
        samples = ocr_sample_indices(clip.frame_count, clip.fps_num, clip.fps_den)
        records = []
        pending = set()
        for kind in ("caption", "ocr", "tags"):
            try:
                records.append(self.annotators.annotate(
                    record.clip_id, kind, data=data, provenance=provenance,
                    sample_indices=samples))
            except RETRYABLE_ANNOTATION_ERRORS as exc:
                logger.warning("annotator %s unavailable for %s: %s",
                               kind, record.clip_id[:8], exc)
                pending.add(kind)
        merged = self.annotators.merge_annotations(records)
        caption = merged.get("caption", "")
        return EnrichmentMetadata(
            clip_id=record.clip_id,
            scenes=tuple(spans),
            motion_intensity=motion,
            motion_category=motion_category_for(motion),
            ocr_text_area=merged.get("ocr_text_area", 0.0),
            ocr_box_count=merged.get("ocr_box_count", 0.0),
            caption=caption,
            caption_word_count=word_count(caption),
            tags=merged.get("tags", frozenset()),
            language=merged.get("language", "und"),
            safety_flags=merged.get("safety_flags", frozenset()),
            resolution_bucket=resolution_bucket_for(record.width, record.height),
            annotator_versions=merged.get("annotator_versions", {}),
            pending=frozenset(pending),
        )

    # --- indexing ---

    def upsert_clip(self, metadata: EnrichmentMetadata) -> None:
        record, _ = self.clip(metadata.clip_id)
        if record.status == "raw" or record.status == "rejected":
            raise ValidationError(
                f"clip {metadata.clip_id[:8]} has status {record.status}, "
                f"needs enriched or indexed")
        metadata.validate_against_frame_count(record.frame_count)
        self.index.upsert(record, metadata)
        if record.status != "indexed":
            self.update_status(metadata.clip_id, "indexed")

    def index_pending(self) -> int:
        n = 0
        for record in self.clip_records():
            if record.status == "enriched":
                metadata = self.metadata(record.clip_id)
                if metadata is not None:
                    self.upsert_clip(metadata)
                    n += 1
        return n

    # --- cooking surface ---

    def query_expander(self):
        """Builtin query expander hook: a custom annotator registered under
        the id 'query-expander' with a builtin endpoint."""
        desc = self.annotators.find(QUERY_EXPANDER_ID)
        if desc is None or not desc.enabled or not desc.endpoint.startswith("builtin:"):
            return None
        return BUILTINS[desc.endpoint.split(":", 1)[1]]

    def cook(self, request: CookRequest, on_phase=None, dry_run: bool = False) -> Manifest:
        return cooking.cook(self, request, on_phase=on_phase) if not dry_run \
            else cooking.cook_dry_run(self, request, on_phase=on_phase)

    def write_package(self, manifest: Manifest, payloads: Optional[dict] = None) -> Path:
        payloads = payloads or {}
        pkg_dir = self.packages_root / manifest.job_id
        clips_dir = pkg_dir / "clips"
        clips_dir.mkdir(parents=True, exist_ok=True)
        for entry in manifest.entries:
            dst = clips_dir / f"{entry.clip_id}.vdc"
            if dst.exists():
                continue
            data = payloads.get(entry.clip_id)
            if data is None:
                data = self.store.load_clip(entry.clip_id)
            dst.write_bytes(data)
        (pkg_dir / "manifest.json").write_bytes(canonical_bytes(manifest.to_dict()))
        return pkg_dir

    def reinject(self, synth_payloads: list) -> int:
        """Feed synthesized clips back through ingestion, keeping their
        synthesis provenance and the already-computed metadata."""
        accepted = 0
        for data, provenance, metadata in synth_payloads:
            results = self.ingestor.ingest_batch(
                SYNTHETIC_SOURCE_ID,
                [FetchItem(data, provenance.locator, provenance.license)],
                provenances=[provenance])
            result = results[0]
            if not result.accepted:
                logger.info("reinjection skipped %s (%s)",
                            result.clip_id and result.clip_id[:8], result.reason)
                continue
            self._persist_metadata(metadata)
            self.update_status(result.clip_id, "enriched")
            self.upsert_clip(metadata)
            accepted += 1
        return accepted

    def coverage(self, floor: int, tag_universe: Optional[set[str]] = None
                 ) -> cooking.CoverageReport:
        return cooking.coverage_report(self.index.rows(), floor, tag_universe)

    def amplify(self, floor: int, per_tag_batch: int, seed: int,
                tag_universe: Optional[set[str]] = None) -> tuple:
        """One amplification round: synthesize for deficient tags, enrich,
        and reinject. Returns (report, new clip ids)."""
        report = self.coverage(floor, tag_universe)
        plans = cooking.amplify_long_tail(report, per_tag_batch)
        payloads = []
        for i, conditioning in enumerate(plans):
            data, provenance = synthesize_clip(conditioning, seed, i)
            record, metadata = self.enrich_payload_in_memory(data, provenance)
            payloads.append((data, provenance, metadata))
        self.reinject(payloads)
        new_ids = sorted(compute_clip_id(p[0]) for p in payloads)
        return report, new_ids

    # --- stats ---

    def corpus_summary(self, sampling: Optional[dict] = None) -> CorpusSummary:
        rows = [(float(r.duration), r.metadata) for r in self.index.rows()]
        with self._lock:
            times = [self._clips[r.clip_id].ingest_time for r in self.index.rows()]
        snapshot = max(times) if times else EPOCH_TIME
        return summarize(rows, snapshot, sampling)

    def metric_values(self, metric: str) -> list[float]:
        rows = self.index.rows()
        if metric == "duration_s":
            return [float(r.duration) for r in rows]
        if metric == "caption_words":
            return [float(r.metadata.caption_word_count) for r in rows]
        if metric == "motion_intensity":
            return [r.metadata.motion_intensity for r in rows]
        if metric == "ocr_text_area":
            return [r.metadata.ocr_text_area for r in rows]
        if metric == "ocr_box_count":
            return [r.metadata.ocr_box_count for r in rows]
        raise ValidationError(f"unknown metric {metric!r}")

    # --- replay ---

    def replay(self, manifest: Manifest) -> tuple[Manifest, bool, list[str]]:
        """Re-execute the embedded request without touching the store or the
        package directory; returns the regenerated manifest, whether it is
        byte-identical, and a human-readable diff summary."""
        regenerated = cooking.cook(self, manifest.request, package=False,
                                   reinject=False)
        original = canonical_bytes(manifest.to_dict())
        fresh = canonical_bytes(regenerated.to_dict())
        if original == fresh:
            return regenerated, True, []
        diff = []
        old_ids = {e.clip_id for e in manifest.entries}
        new_ids = {e.clip_id for e in regenerated.entries}
        for cid in sorted(old_ids - new_ids):
            diff.append(f"- entry {cid}")
        for cid in sorted(new_ids - old_ids):
            diff.append(f"+ entry {cid}")
        if manifest.created_time != regenerated.created_time:
            diff.append(f"created_time {manifest.created_time} -> {regenerated.created_time}")
        for field_name in ("retrieved_count", "synthesized_count", "dropped_by_policy"):
            a, b = getattr(manifest, field_name), getattr(regenerated, field_name)
            if a != b:
                diff.append(f"{field_name} {a} -> {b}")
        if not diff:
            diff.append("entry-level metadata or scores differ")
        return regenerated, False, diff
