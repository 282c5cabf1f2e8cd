"""Annotator registry, wire-protocol client, builtin mocks, and merging.

Wire protocol: POST <endpoint>/annotate with
{clip_id, kind, container_b64, sampled_frames}; response
{annotator_id, version, kind, payload, confidence?}. Non-200 responses and
timeouts are retryable failures. Builtin mocks (endpoint "builtin:<name>")
are pure functions of the clip bytes and, for synthetic clips, of the
conditioning stored in provenance.
"""

from __future__ import annotations

import base64
import threading
from dataclasses import dataclass
from typing import Optional

import httpx

from .canonical import utc_now
from .container import decode_clip_container
from .enrichment import OcrFrameBoxes, aggregate_ocr, detect_scenes, score_motion
from .errors import (
    AnnotatorExists,
    AnnotatorProtocolError,
    AnnotatorTimeout,
    MergeMismatch,
    NoAnnotator,
    UnknownAnnotator,
    ValidationError,
)
from .model import ProvenanceChain, motion_category_for

ANNOTATOR_KINDS = ("caption", "ocr", "tags", "custom")

# tag tokens with these prefixes are routed into dedicated metadata fields
SAFETY_TAG_PREFIX = "safety:"
LANG_TAG_PREFIX = "lang:"


@dataclass(frozen=True)
class AnnotatorDescriptor:
    annotator_id: str
    kind: str
    endpoint: str  # URL or "builtin:<name>"
    version: str
    timeout_s: float = 5.0
    enabled: bool = True

    def __post_init__(self):
        if self.kind not in ANNOTATOR_KINDS:
            raise ValidationError(f"unknown annotator kind {self.kind!r}")
        if not self.version:
            raise ValidationError("annotator version must be nonempty")

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "kind": self.kind,
            "endpoint": self.endpoint,
            "version": self.version,
            "timeout_s": float(self.timeout_s),
            "enabled": self.enabled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotatorDescriptor":
        return cls(d["annotator_id"], d["kind"], d["endpoint"], d["version"],
                   d.get("timeout_s", 5.0), d.get("enabled", True))


@dataclass(frozen=True)
class AnnotationRecord:
    clip_id: str
    annotator_id: str
    kind: str
    payload: object
    produced_time: str
    confidence: Optional[float] = None

    def __post_init__(self):
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence out of [0,1]: {self.confidence}")


_SIGNAL_CACHE: dict[str, tuple[str, int]] = {}
_SIGNAL_CACHE_MAX = 2048


def prime_signal_cache(clip_id: str, category: str, scene_count: int) -> None:
    """Let the enrichment pipeline share its motion/scene results with the
    caption mock instead of recomputing them; content-addressed ids make
    the cache safe."""
    if len(_SIGNAL_CACHE) >= _SIGNAL_CACHE_MAX:
        _SIGNAL_CACHE.clear()
    _SIGNAL_CACHE[clip_id] = (category, scene_count)


def _clip_signals(clip_id: str, data: bytes) -> tuple[str, int]:
    cached = _SIGNAL_CACHE.get(clip_id)
    if cached is not None:
        return cached
    clip = decode_clip_container(data)
    scene_count = len(detect_scenes(clip)) + 1
    if clip.frame_count < 2:
        signals = ("low", scene_count)
    else:
        signals = (motion_category_for(score_motion(clip)), scene_count)
    prime_signal_cache(clip_id, *signals)
    return signals


def _conditioning_of(provenance: Optional[ProvenanceChain]) -> dict:
    if provenance is not None and provenance.kind == "synthetic":
        return provenance.conditioning or {}
    return {}


def mock_caption(clip_id: str, data: bytes, provenance, sample_indices) -> str:
    category, scenes = _clip_signals(clip_id, data)
    return f"clip {clip_id[:8]} motion {category} scenes {scenes}"


def mock_ocr(clip_id: str, data: bytes, provenance, sample_indices) -> list:
    boxes = _conditioning_of(provenance).get("text_overlay_boxes") or []
    return [{"frame_index": int(i), "boxes": [list(map(float, b)) for b in boxes]}
            for i in sample_indices]


def mock_tags(clip_id: str, data: bytes, provenance, sample_indices) -> list:
    cond = _conditioning_of(provenance)
    tags = [str(t).lower() for t in cond.get("tags", [])]
    style = cond.get("style_label")
    if style:
        tags.append(str(style).lower())
    for flag in cond.get("safety_flags", []):
        tags.append(SAFETY_TAG_PREFIX + str(flag).lower())
    lang = cond.get("language", "und")
    if lang and lang != "und":
        tags.append(LANG_TAG_PREFIX + lang)
    return sorted(set(tags))


def mock_expander(query: str) -> list[str]:
    """Demo query expander: one generic related phrase."""
    return [f"{query} video"]


BUILTINS = {
    "mock_caption": mock_caption,
    "mock_ocr": mock_ocr,
    "mock_tags": mock_tags,
    "mock_expander": mock_expander,
}

QUERY_EXPANDER_ID = "query-expander"


def _validate_payload(kind: str, payload) -> None:
    if kind == "caption":
        if not isinstance(payload, str):
            raise AnnotatorProtocolError("caption payload must be a string")
    elif kind == "tags":
        if not isinstance(payload, list) or not all(isinstance(t, str) for t in payload):
            raise AnnotatorProtocolError("tags payload must be a list of strings")
    elif kind == "ocr":
        if not isinstance(payload, list):
            raise AnnotatorProtocolError("ocr payload must be a list of frame boxes")
        for entry in payload:
            try:
                OcrFrameBoxes(entry["frame_index"],
                              tuple(tuple(b) for b in entry["boxes"]))
            except (KeyError, TypeError, ValidationError) as exc:
                raise AnnotatorProtocolError(f"bad ocr frame entry: {exc}") from exc


class AnnotationCenter:
    """Registry of annotators plus the annotate/merge operations.

    Mutations are serialized; reads take cheap snapshots. Records are kept
    in memory for history; persistence of descriptors is the engine's job
    via the on_register callback.
    """

    def __init__(self, http_transport=None, on_register=None):
        self._lock = threading.Lock()
        self._descriptors: dict[str, AnnotatorDescriptor] = {}
        self._records: list[AnnotationRecord] = []
        self._transport = http_transport
        self._on_register = on_register

    # --- registry ---

    def register_annotator(self, desc: AnnotatorDescriptor, persist: bool = True) -> str:
        if desc.endpoint.startswith("builtin:"):
            name = desc.endpoint.split(":", 1)[1]
            if name not in BUILTINS:
                raise UnknownAnnotator(f"no builtin named {name!r}")
        with self._lock:
            if desc.annotator_id in self._descriptors:
                raise AnnotatorExists(desc.annotator_id)
            changed = [desc]
            if desc.enabled and desc.kind != "custom":
                for prior in self._descriptors.values():
                    if prior.kind == desc.kind and prior.enabled:
                        disabled = AnnotatorDescriptor(
                            prior.annotator_id, prior.kind, prior.endpoint,
                            prior.version, prior.timeout_s, enabled=False)
                        self._descriptors[prior.annotator_id] = disabled
                        changed.append(disabled)
            self._descriptors[desc.annotator_id] = desc
        if persist and self._on_register:
            for d in changed:
                self._on_register(d)
        return desc.annotator_id

    def list_annotators(self) -> list[AnnotatorDescriptor]:
        with self._lock:
            return sorted(self._descriptors.values(), key=lambda d: d.annotator_id)

    def enabled_for(self, kind: str, annotator_id: str | None = None) -> AnnotatorDescriptor:
        with self._lock:
            matches = [d for d in self._descriptors.values()
                       if d.kind == kind and d.enabled
                       and (annotator_id is None or d.annotator_id == annotator_id)]
        if not matches:
            raise NoAnnotator(f"no enabled annotator for kind {kind!r}")
        return sorted(matches, key=lambda d: d.annotator_id)[0]

    def is_enabled(self, annotator_id: str) -> bool:
        with self._lock:
            d = self._descriptors.get(annotator_id)
        return bool(d and d.enabled)

    def find(self, annotator_id: str) -> Optional[AnnotatorDescriptor]:
        with self._lock:
            return self._descriptors.get(annotator_id)

    # --- annotation ---

    def annotate(self, clip_id: str, kind: str, *, data: bytes,
                 provenance: Optional[ProvenanceChain] = None,
                 sample_indices: Optional[list[int]] = None,
                 annotator_id: Optional[str] = None) -> AnnotationRecord:
        desc = self.enabled_for(kind, annotator_id)
        sample_indices = sample_indices or [0]
        if desc.endpoint.startswith("builtin:"):
            fn = BUILTINS[desc.endpoint.split(":", 1)[1]]
            payload = fn(clip_id, data, provenance, sample_indices)
            confidence = None
        else:
            payload, confidence = self._call_http(desc, clip_id, kind, data, sample_indices)
        _validate_payload(kind, payload)
        record = AnnotationRecord(clip_id, desc.annotator_id, kind, payload,
                                  utc_now(), confidence)
        with self._lock:
            self._records.append(record)
        return record

    def _call_http(self, desc: AnnotatorDescriptor, clip_id: str, kind: str,
                   data: bytes, sample_indices: list[int]):
        body = {
            "clip_id": clip_id,
            "kind": kind,
            "container_b64": base64.b64encode(data).decode("ascii"),
            "sampled_frames": list(sample_indices),
        }
        try:
            with httpx.Client(transport=self._transport, timeout=desc.timeout_s) as client:
                resp = client.post(desc.endpoint.rstrip("/") + "/annotate", json=body)
        except httpx.TimeoutException as exc:
            raise AnnotatorTimeout(f"{desc.annotator_id}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise AnnotatorTimeout(f"{desc.annotator_id}: {exc}") from exc
        if resp.status_code != 200:
            raise AnnotatorTimeout(f"{desc.annotator_id}: HTTP {resp.status_code}")
        try:
            reply = resp.json()
        except ValueError as exc:
            raise AnnotatorProtocolError("response is not JSON") from exc
        if not isinstance(reply, dict) or reply.get("kind") != kind:
            raise AnnotatorProtocolError(
                f"response kind {reply.get('kind')!r} does not match request {kind!r}")
        if "payload" not in reply:
            raise AnnotatorProtocolError("response lacks a payload")
        return reply["payload"], reply.get("confidence")

    def records_for(self, clip_id: str) -> list[AnnotationRecord]:
        with self._lock:
            return [r for r in self._records if r.clip_id == clip_id]

    # --- merging ---

    def merge_annotations(self, records: list[AnnotationRecord]) -> dict:
        """Fold annotator outputs into partial metadata fields.

        Caption and language conflicts resolve by enabled-over-disabled then
        newest produced_time; tag records union; OCR aggregates the winning
        record's per-frame boxes. Returns a dict with any of: caption, tags,
        safety_flags, language, ocr_text_area, ocr_box_count,
        annotator_versions.
        """
        if not records:
            return {"annotator_versions": {}}
        clip_ids = {r.clip_id for r in records}
        if len(clip_ids) > 1:
            raise MergeMismatch(f"records span clips {sorted(clip_ids)}")

        def precedence(r: AnnotationRecord):
            return (self.is_enabled(r.annotator_id), r.produced_time, r.annotator_id)

        out: dict = {"annotator_versions": {}}
        for r in sorted(records, key=precedence):
            desc = self.find(r.annotator_id)
            if desc is not None:
                out["annotator_versions"][r.kind] = desc.version

        captions = [r for r in records if r.kind == "caption"]
        if captions:
            best = max(captions, key=precedence)
            out["caption"] = best.payload

        tag_records = [r for r in records if r.kind == "tags"]
        if tag_records:
            tags, safety = set(), set()
            langs: list[tuple[tuple, str]] = []
            for r in tag_records:
                for token in r.payload:
                    if token.startswith(SAFETY_TAG_PREFIX):
                        safety.add(token[len(SAFETY_TAG_PREFIX):])
                    elif token.startswith(LANG_TAG_PREFIX):
                        langs.append((precedence(r), token[len(LANG_TAG_PREFIX):]))
                    else:
                        tags.add(token)
            out["tags"] = frozenset(tags)
            out["safety_flags"] = frozenset(safety)
            if langs:
                out["language"] = max(langs)[1]

        ocr_records = [r for r in records if r.kind == "ocr"]
        if ocr_records:
            best = max(ocr_records, key=precedence)
            frames = [OcrFrameBoxes(e["frame_index"],
                                    tuple(tuple(b) for b in e["boxes"]))
                      for e in best.payload]
            area, count = aggregate_ocr(frames, max(len(frames), 1))
            out["ocr_text_area"] = area
            out["ocr_box_count"] = count
        return out
