"""Canonical JSON and timestamp helpers.

Canonical form: UTF-8, keys sorted lexicographically, no whitespace,
floats rendered with Python's shortest round-trip repr. Identical inputs
always produce byte-identical output, which is what makes manifests
replayable by byte comparison.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone

EPOCH_TIME = "1970-01-01T00:00:00Z"


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def canonical_bytes(obj) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def canonical_line(obj) -> str:
    """One canonical-JSON record per line, for the append-only logs."""
    return canonical_dumps(obj) + "\n"


def utc_now() -> str:
    """Current UTC time at seconds precision, e.g. 2026-08-10T12:00:05Z."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_time(stamp: str) -> datetime:
    return datetime.strptime(stamp, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


def format_time(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
