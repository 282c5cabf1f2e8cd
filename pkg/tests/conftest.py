from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vdcook import kernels
from vdcook.engine import Engine
from vdcook.ingestion import FetchItem, SourceDescriptor
from vdcook.synthesis import SynthesisConditioning, synthesize_clip


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger the one-time numba compile outside any timed test."""
    luma = np.zeros((3, 16, 16), dtype=np.uint8)
    frames = np.zeros((2, 8, 8, 3), dtype=np.uint8)
    kernels.luma_plane(frames)
    kernels.frame_diff_sums(luma)
    kernels.block_match_displacements(luma)


@pytest.fixture
def engine(tmp_path) -> Engine:
    return Engine(tmp_path / "store", packages_root=tmp_path / "packages")


def seed_corpus(engine: Engine, n: int = 8, seed_base: int = 100,
                tags=("city", "traffic")) -> list[str]:
    """Small indexed corpus of uploaded procedural clips. Uploaded clips have
    no conditioning, so the tags only shape the pixel content."""
    engine.ingestor.register_source(SourceDescriptor("unit-upload", "upload", {}))
    items = []
    for i in range(n):
        cond = SynthesisConditioning(motion_target=(i * 13) % 101,
                                     duration_s=2.5, tags=tuple(tags))
        data, _ = synthesize_clip(cond, seed=seed_base + i, index=0)
        items.append(FetchItem(data, f"up://unit/{i}", "cc0"))
    results = engine.ingestor.ingest_batch("unit-upload", items)
    engine.enrich_pending()
    engine.index_pending()
    return [r.clip_id for r in results if r.accepted]


def seed_synthetic(engine: Engine, n: int, seed_base: int = 7000,
                   tags=()) -> list[str]:
    """Indexed synthetic clips whose conditioning carries the given tags."""
    payloads = []
    ids = []
    for i in range(n):
        cond = SynthesisConditioning(duration_s=2.5, tags=tuple(tags))
        data, provenance = synthesize_clip(cond, seed=seed_base + i, index=0)
        record, metadata = engine.enrich_payload_in_memory(data, provenance)
        payloads.append((data, provenance, metadata))
        ids.append(record.clip_id)
    engine.reinject(payloads)
    return ids
