"""VDC1 raw clip container.

Layout, little-endian: 4-byte magic "VDC1", then u32 width, height,
fps_num, fps_den, frame_count (24-byte header), followed by frame_count
frames of width*height*3 bytes RGB24, row-major, top-left origin.
Clip identity is the SHA-256 of the container bytes.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    EmptyClip,
    InvalidFrameGeometry,
    InvalidHeader,
    NotAClip,
    TruncatedClip,
)

MAGIC = b"VDC1"
HEADER = struct.Struct("<4s5I")
HEADER_SIZE = HEADER.size  # 24


@dataclass(frozen=True)
class Clip:
    """Decoded clip: frames as a (n, h, w, 3) uint8 array plus frame rate."""

    frames: np.ndarray
    fps_num: int
    fps_den: int

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])

    @property
    def duration_s(self) -> float:
        return self.frame_count * self.fps_den / self.fps_num

    def duration_fraction(self) -> Fraction:
        """Exact duration for threshold comparisons that must not float-tie."""
        return Fraction(self.frame_count * self.fps_den, self.fps_num)

    def slice(self, start: int, end: int) -> "Clip":
        return Clip(self.frames[start:end].copy(), self.fps_num, self.fps_den)


def encode_clip_container(frames, width: int, height: int,
                          fps_num: int, fps_den: int) -> bytes:
    """Serialize RGB24 frames into VDC1 bytes.

    Frames may be raw bytes objects or uint8 arrays of shape (h, w, 3);
    each must hold exactly width*height*3 bytes.
    """
    if len(frames) == 0:
        raise EmptyClip("cannot encode a clip with no frames")
    if width < 1 or height < 1 or fps_num < 1 or fps_den < 1:
        raise InvalidHeader(
            f"dimensions and fps terms must be >= 1, got "
            f"{width}x{height} @ {fps_num}/{fps_den}")
    expected = width * height * 3
    payload = bytearray()
    for i, frame in enumerate(frames):
        if isinstance(frame, np.ndarray):
            buf = np.ascontiguousarray(frame, dtype=np.uint8).tobytes()
        else:
            buf = bytes(frame)
        if len(buf) != expected:
            raise InvalidFrameGeometry(
                f"frame {i} holds {len(buf)} bytes, expected {expected}")
        payload += buf
    header = HEADER.pack(MAGIC, width, height, fps_num, fps_den, len(frames))
    return header + bytes(payload)


def encode_clip(clip: Clip) -> bytes:
    return encode_clip_container(
        list(clip.frames), clip.width, clip.height, clip.fps_num, clip.fps_den)


def decode_clip_container(data: bytes) -> Clip:
    """Parse VDC1 bytes back into a Clip, validating the byte length."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise NotAClip("missing VDC1 magic")
    if len(data) < HEADER_SIZE:
        raise TruncatedClip(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
    _, width, height, fps_num, fps_den, frame_count = HEADER.unpack_from(data)
    if width == 0 or height == 0 or fps_num == 0 or fps_den == 0 or frame_count == 0:
        raise InvalidHeader(
            f"zero field in header: {width}x{height} @ {fps_num}/{fps_den}, "
            f"{frame_count} frames")
    expected = HEADER_SIZE + frame_count * width * height * 3
    if len(data) != expected:
        raise TruncatedClip(f"container is {len(data)} bytes, header implies {expected}")
    frames = np.frombuffer(data, dtype=np.uint8, offset=HEADER_SIZE)
    frames = frames.reshape(frame_count, height, width, 3).copy()
    return Clip(frames, fps_num, fps_den)


def compute_clip_id(container_bytes: bytes) -> str:
    """Content digest used as clip identity: SHA-256 hex of the container."""
    return hashlib.sha256(container_bytes).hexdigest()


def meets_min_duration(frame_count: int, fps_num: int, fps_den: int,
                       min_seconds: float = 2.0) -> bool:
    """Exact rational duration >= threshold test (no float tie ambiguity)."""
    return Fraction(frame_count * fps_den, fps_num) >= Fraction(min_seconds)
