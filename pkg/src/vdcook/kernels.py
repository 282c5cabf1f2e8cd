"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Both paths return identical integers (SADs and displacements are exact
integer arithmetic), so every score derived from them is bit-identical
regardless of backend. Selection: VDCOOK_KERNELS=numba|numpy, defaulting
to numba when importable. `benchmarks/bench_kernels.py` compares the two.
"""

from __future__ import annotations

import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

BLOCK = 8
RADIUS = 4

_SENTINEL = np.int64(1) << 60

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


# --- pure numpy implementations ---

def _luma_plane_np(frames: np.ndarray) -> np.ndarray:
    sums = frames.sum(axis=3, dtype=np.uint16)
    np.add(sums, 1, out=sums)
    np.floor_divide(sums, 3, out=sums)
    return sums.astype(np.uint8)


def _frame_diff_sums_np(luma: np.ndarray) -> np.ndarray:
    """Sum over pixels of |Y_t - Y_{t-1}| for each consecutive pair."""
    if luma.shape[0] < 2:
        return np.zeros(0, dtype=np.int64)
    diffs = np.abs(luma[1:].astype(np.int16) - luma[:-1].astype(np.int16))
    return diffs.sum(axis=(1, 2), dtype=np.int64)


def _candidate_order() -> list[tuple[int, int]]:
    """All displacements within RADIUS, sorted by (magnitude^2, dy, dx).

    Tie order matters: np.argmin picks the first minimal SAD, which must
    agree with the numba path's explicit lexicographic comparison.
    """
    cands = [(dy, dx)
             for dy in range(-RADIUS, RADIUS + 1)
             for dx in range(-RADIUS, RADIUS + 1)]
    cands.sort(key=lambda c: (c[0] * c[0] + c[1] * c[1], c[0], c[1]))
    return cands


_CANDIDATES = _candidate_order()


def _block_match_np(luma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t, h, w = luma.shape
    nby, nbx = h // BLOCK, w // BLOCK
    pairs = max(t - 1, 0)
    dys = np.zeros((pairs, nby, nbx), dtype=np.int64)
    dxs = np.zeros((pairs, nby, nbx), dtype=np.int64)
    if pairs == 0 or nby == 0 or nbx == 0:
        return dys, dxs

    prev = luma[:-1].astype(np.int16)
    cur = luma[1:].astype(np.int16)
    sads = np.full((len(_CANDIDATES), pairs, nby, nbx), _SENTINEL, dtype=np.int64)

    for ci, (dy, dx) in enumerate(_CANDIDATES):
        y_lo, y_hi = max(0, -dy), min(h, h - dy)
        x_lo, x_hi = max(0, -dx), min(w, w - dx)
        # blocks fully inside the overlap region for this displacement
        by_lo, by_hi = (y_lo + BLOCK - 1) // BLOCK, (y_hi - BLOCK) // BLOCK + 1
        bx_lo, bx_hi = (x_lo + BLOCK - 1) // BLOCK, (x_hi - BLOCK) // BLOCK + 1
        if by_hi <= by_lo or bx_hi <= bx_lo:
            continue
        ys, ye = by_lo * BLOCK, by_hi * BLOCK
        xs, xe = bx_lo * BLOCK, bx_hi * BLOCK
        diff = np.abs(prev[:, ys:ye, xs:xe]
                      - cur[:, ys + dy:ye + dy, xs + dx:xe + dx])
        bsum = diff.reshape(pairs, by_hi - by_lo, BLOCK,
                            bx_hi - bx_lo, BLOCK).sum(axis=(2, 4), dtype=np.int64)
        sads[ci, :, by_lo:by_hi, bx_lo:bx_hi] = bsum

    best = sads.argmin(axis=0)
    cand_arr = np.asarray(_CANDIDATES, dtype=np.int64)
    dys = cand_arr[best, 0]
    dxs = cand_arr[best, 1]
    return dys, dxs


# --- numba implementations ---

if HAS_NUMBA:

    @numba.njit(cache=True)
    def _luma_plane_nb(frames):
        t, h, w, _ = frames.shape
        out = np.empty((t, h, w), dtype=np.uint8)
        for i in range(t):
            for y in range(h):
                for x in range(w):
                    s = (np.uint16(frames[i, y, x, 0])
                         + np.uint16(frames[i, y, x, 1])
                         + np.uint16(frames[i, y, x, 2]))
                    out[i, y, x] = np.uint8((s + 1) // 3)
        return out

    @numba.njit(cache=True)
    def _frame_diff_sums_nb(luma):
        t, h, w = luma.shape
        out = np.zeros(max(t - 1, 0), dtype=np.int64)
        for i in range(1, t):
            acc = np.int64(0)
            for y in range(h):
                for x in range(w):
                    d = np.int64(luma[i, y, x]) - np.int64(luma[i - 1, y, x])
                    acc += d if d >= 0 else -d
            out[i - 1] = acc
        return out

    @numba.njit(cache=True)
    def _block_match_nb(luma):
        t, h, w = luma.shape
        nby, nbx = h // BLOCK, w // BLOCK
        pairs = max(t - 1, 0)
        dys = np.zeros((pairs, nby, nbx), dtype=np.int64)
        dxs = np.zeros((pairs, nby, nbx), dtype=np.int64)
        for p in range(pairs):
            for by in range(nby):
                y0 = by * BLOCK
                for bx in range(nbx):
                    x0 = bx * BLOCK
                    best_sad = np.int64(1) << 60
                    best_mag = np.int64(1) << 60
                    best_dy = np.int64(0)
                    best_dx = np.int64(0)
                    for dy in range(-RADIUS, RADIUS + 1):
                        ty = y0 + dy
                        if ty < 0 or ty + BLOCK > h:
                            continue
                        for dx in range(-RADIUS, RADIUS + 1):
                            tx = x0 + dx
                            if tx < 0 or tx + BLOCK > w:
                                continue
                            sad = np.int64(0)
                            for i in range(BLOCK):
                                for j in range(BLOCK):
                                    d = (np.int64(luma[p, y0 + i, x0 + j])
                                         - np.int64(luma[p + 1, ty + i, tx + j]))
                                    sad += d if d >= 0 else -d
                            mag = np.int64(dy * dy + dx * dx)
                            if (sad < best_sad
                                    or (sad == best_sad
                                        and (mag < best_mag
                                             or (mag == best_mag
                                                 and (dy < best_dy
                                                      or (dy == best_dy
                                                          and dx < best_dx)))))):
                                best_sad = sad
                                best_mag = mag
                                best_dy = dy
                                best_dx = dx
                    dys[p, by, bx] = best_dy
                    dxs[p, by, bx] = best_dx
        return dys, dxs


# --- backend selection ---

def _resolve_backend(name: str | None) -> str:
    if name is None:
        name = os.environ.get("VDCOOK_KERNELS", "").strip().lower() or "numba"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r} (use numba or numpy)")
    if name == "numba" and not HAS_NUMBA:
        logger.warning("numba unavailable, falling back to numpy kernels")
        return "numpy"
    return name


_BACKEND = _resolve_backend(None)


def active_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    """Override the kernel backend (used by tests and the benchmark)."""
    global _BACKEND
    _BACKEND = _resolve_backend(name)


def luma_plane(frames: np.ndarray) -> np.ndarray:
    """Integer luma round((R+G+B)/3); (s+1)//3 is exact because a byte sum
    mod 3 never lands on one half."""
    frames = np.ascontiguousarray(frames, dtype=np.uint8)
    if _BACKEND == "numba":
        return _luma_plane_nb(frames)
    return _luma_plane_np(frames)


def frame_diff_sums(luma: np.ndarray) -> np.ndarray:
    """Per-pair total absolute luma difference; callers divide by pixel count."""
    luma = np.ascontiguousarray(luma, dtype=np.uint8)
    if _BACKEND == "numba":
        return _frame_diff_sums_nb(luma)
    return _frame_diff_sums_np(luma)


def block_match_displacements(luma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best integer displacement per 8x8 block and consecutive frame pair.

    Exhaustive search within RADIUS, minimizing block SAD with ties broken
    by smallest magnitude, then smallest dy, then smallest dx. Returns
    integer (dy, dx) arrays of shape (pairs, nby, nbx); partial edge blocks
    are discarded by the flooring block grid.
    """
    luma = np.ascontiguousarray(luma, dtype=np.uint8)
    if _BACKEND == "numba":
        return _block_match_nb(luma)
    return _block_match_np(luma)
