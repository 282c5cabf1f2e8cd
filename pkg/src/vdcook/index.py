"""Attribute store plus exact vector index over caption/tag text.

The embedding is a signed feature-hashed bag of words (256 dims, FNV-1a):
deterministic and dependency-free, so the vector code path is real but
needs no model. Search is exhaustive and exact; at desk scale that is the
correctness baseline an ANN structure would have to match.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import UnknownClip, ValidationError
from .model import ClipRecord, EnrichmentMetadata, Prefilters

DIMS = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF
_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for b in token.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def embed_text(text: str) -> np.ndarray:
    """Signed hashed bag of words, L2-normalized; empty text stays zero."""
    vec = np.zeros(DIMS, dtype=np.float64)
    for token in tokenize(text):
        h = _fnv1a64(token)
        sign = 1.0 if (h >> 63) == 0 else -1.0
        vec[h % DIMS] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


@dataclass(frozen=True)
class AttributeConstraints:
    motion_category: Optional[str] = None
    tags_any: frozenset = frozenset()
    language: Optional[str] = None
    min_motion: Optional[float] = None
    max_motion: Optional[float] = None

    def is_empty(self) -> bool:
        return (self.motion_category is None and not self.tags_any
                and self.language is None and self.min_motion is None
                and self.max_motion is None)

    def to_dict(self) -> dict:
        return {
            "motion_category": self.motion_category,
            "tags_any": sorted(self.tags_any),
            "language": self.language,
            "min_motion": self.min_motion,
            "max_motion": self.max_motion,
        }


@dataclass(frozen=True)
class RetrievalTemplate:
    terms: tuple
    constraints: AttributeConstraints = field(default_factory=AttributeConstraints)
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0:
            raise ValidationError("template weight must be > 0")
        if not self.terms and self.constraints.is_empty():
            raise ValidationError("template needs terms or constraints")

    def key(self) -> tuple:
        return (self.terms, self.constraints.motion_category,
                tuple(sorted(self.constraints.tags_any)), self.constraints.language,
                self.constraints.min_motion, self.constraints.max_motion)


@dataclass(frozen=True)
class IndexRow:
    clip_id: str
    origin: str
    duration: Fraction
    language: str
    safety_flags: frozenset
    tags: frozenset
    motion_intensity: float
    motion_category: str
    vector: np.ndarray
    metadata: EnrichmentMetadata


class ClipIndex:
    """Exact multi-tier index; mutations serialized, queries run on cheap
    snapshots so readers never observe a partial upsert."""

    def __init__(self):
        self._rows: dict[str, IndexRow] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._rows)

    def upsert(self, record: ClipRecord, metadata: EnrichmentMetadata) -> None:
        text = metadata.caption + " " + " ".join(sorted(metadata.tags))
        row = IndexRow(
            clip_id=record.clip_id,
            origin=record.origin,
            duration=Fraction(record.frame_count * record.fps_den, record.fps_num),
            language=metadata.language,
            safety_flags=metadata.safety_flags,
            tags=metadata.tags,
            motion_intensity=metadata.motion_intensity,
            motion_category=metadata.motion_category,
            vector=embed_text(text),
            metadata=metadata,
        )
        with self._lock:
            self._rows[record.clip_id] = row

    def drop(self, clip_id: str) -> None:
        with self._lock:
            self._rows.pop(clip_id, None)

    def _snapshot(self) -> list[IndexRow]:
        with self._lock:
            return list(self._rows.values())

    def clip_ids(self) -> set[str]:
        with self._lock:
            return set(self._rows)

    def row(self, clip_id: str) -> IndexRow:
        with self._lock:
            if clip_id not in self._rows:
                raise UnknownClip(clip_id)
            return self._rows[clip_id]

    def rows(self) -> list[IndexRow]:
        return sorted(self._snapshot(), key=lambda r: r.clip_id)

    # --- queries ---

    @staticmethod
    def _passes(row: IndexRow, prefilters: Prefilters,
                constraints: AttributeConstraints,
                origins: Optional[tuple] = None) -> bool:
        if origins is not None and row.origin not in origins:
            return False
        if row.duration < Fraction(prefilters.min_duration_s):
            return False
        if prefilters.max_duration_s is not None \
                and row.duration > Fraction(prefilters.max_duration_s):
            return False
        if prefilters.languages != "any" and row.language not in prefilters.languages:
            return False
        if row.safety_flags & prefilters.excluded_safety_flags:
            return False
        if constraints.motion_category is not None \
                and row.motion_category != constraints.motion_category:
            return False
        if constraints.tags_any and not (row.tags & constraints.tags_any):
            return False
        if constraints.language is not None and row.language != constraints.language:
            return False
        if constraints.min_motion is not None \
                and row.motion_intensity < constraints.min_motion:
            return False
        if constraints.max_motion is not None \
                and row.motion_intensity > constraints.max_motion:
            return False
        return True

    def query_attributes(self, prefilters: Prefilters,
                         constraints: AttributeConstraints = AttributeConstraints(),
                         origins: Optional[tuple] = None) -> set[str]:
        return {row.clip_id for row in self._snapshot()
                if self._passes(row, prefilters, constraints, origins)}

    def vector_search(self, query_vec: np.ndarray, k: int,
                      candidate_set: set[str]) -> list[tuple[str, float]]:
        """Exact top-k by cosine over the candidates, ties by ascending id."""
        scored = []
        for row in self._snapshot():
            if row.clip_id in candidate_set:
                scored.append((row.clip_id, float(row.vector @ query_vec)))
        scored.sort(key=lambda t: (-t[1], t[0]))
        return scored[:k]

    def retrieve(self, templates: list[RetrievalTemplate], prefilters: Prefilters,
                 k: int, origins: Optional[tuple] = None) -> list[tuple[str, float]]:
        """Hybrid retrieval: per-template prefiltered vector search, then the
        best weighted cosine per clip across templates, top-k overall."""
        best: dict[str, float] = {}
        for template in templates:
            candidates = self.query_attributes(prefilters, template.constraints, origins)
            qvec = embed_text(" ".join(template.terms))
            for clip_id, cosine in self.vector_search(qvec, k, candidates):
                score = template.weight * cosine
                if clip_id not in best or score > best[clip_id]:
                    best[clip_id] = score
        ranked = sorted(best.items(), key=lambda t: (-t[1], t[0]))
        return ranked[:k]
