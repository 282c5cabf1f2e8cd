"""Cook pipeline: query expansion, assembly planning, quality and policy
gates, manifest packaging, synthesis backfill, and long-tail amplification.

cook() is a pure function of the request, the corpus snapshot, the
registered annotator versions, and the synonym table; identical inputs
yield byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from .canonical import canonical_bytes, canonical_dumps
from .container import compute_clip_id as compute_payload_id
from .errors import EmptyQuery, PackagingAuditError, ShortfallUnmet
from .index import AttributeConstraints, RetrievalTemplate
from .model import (
    CookRequest,
    EnrichmentMetadata,
    Manifest,
    ManifestEntry,
    MOTION_CATEGORIES,
    SOURCE_MODE_ORIGINS,
)
from .stats import percentiles
from .synthesis import SynthesisConditioning, synthesize_clip

SYNONYM_WEIGHT = 0.8
EXPANDER_WEIGHT = 0.6
SYNTH_ATTEMPTS = 10
DEFAULT_SYNTH_DURATION_S = 3.0

_DIRECTIVE_RE = re.compile(r"^(motion|lang|tag):(\S+)$")


@dataclass(frozen=True)
class AssemblyPlan:
    n_retrieve: int
    n_synthesize: int
    shortfall_policy: str


def plan_assembly(scale: int, retrieval_ratio: float,
                  shortfall_policy: str = "fail") -> AssemblyPlan:
    """n_retrieve = ceil(ratio * scale), computed on exact rationals so a
    float product cannot round 0.6*50 up to 31."""
    n_retrieve = math.ceil(Fraction(retrieval_ratio) * scale)
    return AssemblyPlan(n_retrieve, scale - n_retrieve, shortfall_policy)


def load_synonyms(path: Optional[str | Path]) -> list[list[str]]:
    """Synonym sets: a JSON list of phrase lists; matching any member of a
    set spawns one extra template with the member replaced by the others."""
    if path is None:
        return []
    p = Path(path)
    if not p.exists():
        return []
    return json.loads(p.read_text(encoding="utf-8"))


def expand_query(query: str, synonyms: Optional[list[list[str]]] = None,
                 expander: Optional[Callable[[str], list[str]]] = None
                 ) -> list[RetrievalTemplate]:
    """Deterministic rule-based expansion.

    Inline directives (motion:high, lang:zh, tag:xyz) are stripped into
    attribute constraints; each matched synonym set adds one template at
    weight 0.8; an optional external expander appends phrases at 0.6.
    """
    if not query.strip():
        raise EmptyQuery("query is empty")
    motion_category = None
    language = None
    tags: list[str] = []
    words = []
    for raw in query.split():
        m = _DIRECTIVE_RE.match(raw.lower())
        if m:
            key, value = m.groups()
            if key == "motion":
                if value not in MOTION_CATEGORIES:
                    raise EmptyQuery(f"motion directive must be one of {MOTION_CATEGORIES}")
                motion_category = value
            elif key == "lang":
                language = value
            else:
                tags.append(value)
        else:
            words.append(raw)
    base_terms = tuple(_tokens(" ".join(words)))
    constraints = AttributeConstraints(
        motion_category=motion_category,
        tags_any=frozenset(tags),
        language=language,
    )
    if not base_terms and constraints.is_empty():
        raise EmptyQuery("nothing left after stripping directives")

    templates = [RetrievalTemplate(base_terms, constraints, 1.0)]
    for group in synonyms or []:
        phrases = [tuple(_tokens(p)) for p in group]
        for i, phrase in enumerate(phrases):
            if _contains(base_terms, phrase):
                replacement = [t for j, alt in enumerate(phrases) if j != i for t in alt]
                new_terms = _replace(base_terms, phrase, tuple(replacement))
                templates.append(RetrievalTemplate(new_terms, constraints, SYNONYM_WEIGHT))
                break
    if expander is not None:
        for phrase in expander(" ".join(base_terms)):
            terms = tuple(_tokens(phrase))
            if terms:
                templates.append(RetrievalTemplate(terms, constraints, EXPANDER_WEIGHT))

    seen = set()
    unique = []
    for t in templates:
        if t.key() not in seen:
            seen.add(t.key())
            unique.append(t)
    return unique


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _contains(terms: tuple, phrase: tuple) -> bool:
    if not phrase or len(phrase) > len(terms):
        return False
    return any(terms[i:i + len(phrase)] == phrase
               for i in range(len(terms) - len(phrase) + 1))


def _replace(terms: tuple, phrase: tuple, replacement: tuple) -> tuple:
    for i in range(len(terms) - len(phrase) + 1):
        if terms[i:i + len(phrase)] == phrase:
            return terms[:i] + replacement + terms[i + len(phrase):]
    return terms


# --- quality and policy ---

QUALITY_WEIGHTS = (0.4, 0.3, 0.3)  # resolution, caption, scene coherence
_RES_NORM = {"lt480p": 0.25, "480p": 0.5, "720p": 0.75, "1080p": 1.0, "4k": 1.0}


def quality_score(metadata: EnrichmentMetadata,
                  weights: tuple = QUALITY_WEIGHTS) -> float:
    w_res, w_cap, w_scene = weights
    res_norm = _RES_NORM[metadata.resolution_bucket]
    cap_norm = min(1.0, metadata.caption_word_count / 50)
    coherence = 1.0 if metadata.scene_count == 1 else 1.0 / metadata.scene_count
    q = w_res * res_norm + w_cap * cap_norm + w_scene * coherence
    return min(1.0, max(0.0, q))


def policy_filter(candidates: list, request: CookRequest) -> tuple[list, list]:
    """Split (clip_id, metadata, duration_fraction) rows by the job's
    quality/compliance/duration thresholds. Order preserved among kept."""
    kept, dropped = [], []
    pf = request.prefilters
    for item in candidates:
        clip_id, metadata, duration = item[0], item[1], item[2]
        if metadata.safety_flags & pf.excluded_safety_flags:
            dropped.append((clip_id, "compliance"))
            continue
        if duration < Fraction(pf.min_duration_s) or (
                pf.max_duration_s is not None and duration > Fraction(pf.max_duration_s)):
            dropped.append((clip_id, "duration"))
            continue
        if quality_score(metadata) < request.quality_threshold:
            dropped.append((clip_id, "quality"))
            continue
        kept.append(item)
    return kept, dropped


# --- cook ---

def job_id_for(request: CookRequest) -> str:
    """Deterministic manifest job id: a digest of the canonical request.
    Service-side submission ids are separate and unique per submission."""
    return hashlib.sha256(canonical_bytes(request.to_dict())).hexdigest()[:16]


def replay_command_for(request: CookRequest) -> str:
    return f"vdcook cook --request-json '{canonical_dumps(request.to_dict())}'"


def cook(engine, request: CookRequest,
         on_phase: Optional[Callable[[str, float, dict], None]] = None,
         package: bool = True, reinject: bool = True) -> Manifest:
    """Execute one cook job end to end against the engine's corpus.

    Phases: expanding -> retrieving -> synthesizing -> filtering ->
    packaging. Synthesized clips are enriched, policy-gated, packaged, and
    then reinjected through ingestion. Replay passes package=False and
    reinject=False so verification never mutates state.
    """
    phase = on_phase or (lambda *a: None)

    phase("expanding", 0.05, {})
    templates = expand_query(request.query, engine.synonyms, engine.query_expander())
    plan = plan_assembly(request.scale, request.retrieval_ratio,
                         request.shortfall_policy)

    phase("retrieving", 0.2, {"target": plan.n_retrieve})
    origins = SOURCE_MODE_ORIGINS[request.source_mode]
    dropped_by_policy = 0
    retrieved_entries = []
    durations: dict[str, Fraction] = {}
    if plan.n_retrieve > 0:
        ranked = engine.index.retrieve(templates, request.prefilters,
                                       k=len(engine.index) or 1, origins=origins)
        candidates = []
        for clip_id, score in ranked:
            row = engine.index.row(clip_id)
            candidates.append((clip_id, row.metadata, row.duration, score))
        kept, dropped = policy_filter(candidates, request)
        dropped_by_policy += len(dropped)
        for clip_id, metadata, duration, score in kept[:plan.n_retrieve]:
            retrieved_entries.append(_entry(engine, clip_id, metadata, "retrieved",
                                            rank_score=score))
            durations[clip_id] = duration

    n_synthesize = plan.n_synthesize
    deficit = plan.n_retrieve - len(retrieved_entries)
    if deficit > 0:
        if request.shortfall_policy == "fail":
            raise ShortfallUnmet(
                f"retrieval produced {len(retrieved_entries)} of {plan.n_retrieve}")
        if request.shortfall_policy == "backfill_synthesis":
            n_synthesize += deficit
        # truncate: accept fewer

    phase("synthesizing", 0.5, {"target": n_synthesize})
    conditioning = _derive_conditioning(engine, request, templates, retrieved_entries)
    synth_entries = []
    synth_payloads = []
    next_index = 0
    for _ in range(n_synthesize):
        produced = False
        for _attempt in range(SYNTH_ATTEMPTS):
            data, provenance = synthesize_clip(conditioning, request.seed, next_index)
            next_index += 1
            record, metadata = engine.enrich_payload_in_memory(data, provenance)
            kept, dropped = policy_filter(
                [(record.clip_id, metadata, record_duration(record))], request)
            if kept:
                durations[record.clip_id] = record_duration(record)
                synth_entries.append(ManifestEntry(
                    clip_id=record.clip_id,
                    container_digest=record.clip_id,
                    byte_length=len(data),
                    metadata=metadata,
                    provenance=provenance,
                    channel="synthesized",
                    rank_score=0.0,
                    quality_score=quality_score(metadata),
                ))
                synth_payloads.append((data, provenance, metadata))
                produced = True
                break
            dropped_by_policy += 1
        if not produced:
            if request.shortfall_policy == "fail":
                raise ShortfallUnmet(
                    f"synthesis could not satisfy policy after {SYNTH_ATTEMPTS} attempts")
            break  # truncate / backfill exhausted

    phase("filtering", 0.7, {"retrieved": len(retrieved_entries),
                             "synthesized": len(synth_entries)})
    entries = tuple(sorted(retrieved_entries + synth_entries,
                           key=lambda e: e.clip_id))

    phase("packaging", 0.85, {})
    manifest = Manifest(
        job_id=job_id_for(request),
        request=request,
        engine_version=engine.version,
        created_time=engine.corpus_snapshot_time(),
        entries=entries,
        retrieved_count=len(retrieved_entries),
        synthesized_count=len(synth_entries),
        dropped_by_policy=dropped_by_policy,
        replay_command=replay_command_for(request),
    )
    audit_manifest(manifest, durations)
    if package:
        engine.write_package(manifest,
                             payloads={compute_payload_id(d): d
                                       for d, _, _ in synth_payloads})
    if reinject:
        engine.reinject(synth_payloads)
    return manifest


def cook_dry_run(engine, request: CookRequest,
                 on_phase: Optional[Callable[[str, float, dict], None]] = None
                 ) -> Manifest:
    """Retrieval-only preview: same retrieval path as cook, no synthesis,
    no packaging, no reinjection, shortfall tolerated."""
    preview = CookRequest(
        query=request.query,
        scale=request.scale,
        retrieval_ratio=1.0,
        quality_threshold=request.quality_threshold,
        seed=request.seed,
        prefilters=request.prefilters,
        source_mode=request.source_mode,
        shortfall_policy="truncate",
    )
    return cook(engine, preview, on_phase=on_phase, package=False, reinject=False)


def record_duration(record) -> Fraction:
    return Fraction(record.frame_count * record.fps_den, record.fps_num)


def _entry(engine, clip_id: str, metadata: EnrichmentMetadata, channel: str,
           rank_score: float) -> ManifestEntry:
    data = engine.store.load_clip(clip_id)
    _, provenance = engine.clip(clip_id)
    return ManifestEntry(
        clip_id=clip_id,
        container_digest=clip_id,
        byte_length=len(data),
        metadata=metadata,
        provenance=provenance,
        channel=channel,
        rank_score=rank_score,
        quality_score=quality_score(metadata),
    )


def _derive_conditioning(engine, request: CookRequest, templates,
                         retrieved_entries) -> SynthesisConditioning:
    """Conditioning for backfill synthesis: style from tag: directives,
    motion target from the median of the retrieved set, keyframe color and
    seeds from the top retrieved clips."""
    style = "plain"
    for template in templates:
        if template.constraints.tags_any:
            style = sorted(template.constraints.tags_any)[0]
            break
    if retrieved_entries:
        motions = [e.metadata.motion_intensity for e in retrieved_entries]
        motion_target = percentiles(motions, [50])[0]
        seeds = tuple(e.clip_id for e in retrieved_entries[:3])
        keyframe_color = engine.first_frame_mean_rgb(retrieved_entries[0].clip_id)
    else:
        motion_target = 50.0
        seeds = ()
        keyframe_color = None
    duration = DEFAULT_SYNTH_DURATION_S
    pf = request.prefilters
    duration = max(duration, pf.min_duration_s)
    if pf.max_duration_s is not None:
        duration = min(duration, pf.max_duration_s)
    duration = max(duration, 2.0)
    language = "und" if pf.languages == "any" else sorted(pf.languages)[0]
    return SynthesisConditioning(
        style_label=style,
        motion_target=motion_target,
        duration_s=duration,
        seed_clip_ids=seeds,
        keyframe_color=keyframe_color,
        tags=tuple(sorted(t for tpl in templates for t in tpl.constraints.tags_any)),
        language=language,
    )


def audit_manifest(manifest: Manifest, durations: dict) -> None:
    """Post-packaging audit: no entry may violate the request it shipped
    under. A failure here is an engine bug, not a data problem."""
    request = manifest.request
    pf = request.prefilters
    for entry in manifest.entries:
        duration = durations[entry.clip_id]
        if duration < Fraction(pf.min_duration_s) or (
                pf.max_duration_s is not None and duration > Fraction(pf.max_duration_s)):
            raise PackagingAuditError(f"{entry.clip_id} violates the duration bounds")
        if pf.languages != "any" and entry.metadata.language not in pf.languages:
            raise PackagingAuditError(f"{entry.clip_id} violates the language prefilter")
        if entry.metadata.safety_flags & pf.excluded_safety_flags:
            raise PackagingAuditError(f"{entry.clip_id} carries an excluded flag")
        if quality_score(entry.metadata) < request.quality_threshold:
            raise PackagingAuditError(f"{entry.clip_id} is below the quality threshold")
        if entry.channel not in ("retrieved", "synthesized"):
            raise PackagingAuditError(f"{entry.clip_id} has channel {entry.channel!r}")


# --- long-tail coverage ---

@dataclass(frozen=True)
class CoverageReport:
    per_tag_counts: dict
    floor: int
    deficient_tags: tuple  # ((tag, deficit), ...)

    def to_dict(self) -> dict:
        return {
            "per_tag_counts": dict(sorted(self.per_tag_counts.items())),
            "floor": self.floor,
            "deficient_tags": [[t, d] for t, d in self.deficient_tags],
        }


def coverage_report(index_rows, floor: int,
                    tag_universe: Optional[set[str]] = None) -> CoverageReport:
    counts: dict[str, int] = {t: 0 for t in (tag_universe or set())}
    for row in index_rows:
        for tag in row.tags:
            if tag_universe is None or tag in tag_universe:
                counts[tag] = counts.get(tag, 0) + 1
    deficient = tuple((tag, floor - count)
                      for tag, count in sorted(counts.items()) if count < floor)
    return CoverageReport(per_tag_counts=counts, floor=floor, deficient_tags=deficient)


def amplify_long_tail(report: CoverageReport,
                      per_tag_batch: int) -> list[SynthesisConditioning]:
    """One conditioning per missing clip, capped at per_tag_batch per tag."""
    plans = []
    for tag, deficit in report.deficient_tags:
        for _ in range(min(deficit, per_tag_batch)):
            plans.append(SynthesisConditioning(
                style_label=tag, motion_target=50.0,
                duration_s=DEFAULT_SYNTH_DURATION_S))
    return plans
