"""Run-length smoothing of edge maps and blank-band separator discovery.

Boolean maps use True for ink.  Smoothing fills short bounded white runs
so characters and words fuse into solid element blobs, while page margins
and column gutters stay white.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import BBox, BinaryMap


@dataclass(frozen=True)
class RunValueMap:
    """Per-pixel maximal run lengths of the pixel's own color."""

    h_run: np.ndarray
    v_run: np.ndarray


@dataclass(frozen=True)
class SeparatorSet:
    """Blank bands that separate elements, in page coordinates."""

    horizontal: tuple[tuple[int, int], ...]
    vertical: tuple[tuple[int, int], ...]


def _run_bounds(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel start and end column of the same-color run, row-wise."""
    h, w = mask.shape
    cols = np.broadcast_to(np.arange(w), (h, w))
    is_start = np.ones((h, w), dtype=bool)
    is_start[:, 1:] = mask[:, 1:] != mask[:, :-1]
    start = np.maximum.accumulate(np.where(is_start, cols, 0), axis=1)
    is_end = np.ones((h, w), dtype=bool)
    is_end[:, :-1] = is_start[:, 1:]
    end = np.where(is_end, cols, w - 1)[:, ::-1]
    end = np.minimum.accumulate(end, axis=1)[:, ::-1]
    return start, end


def run_values(mask: BinaryMap) -> RunValueMap:
    """Lengths of the horizontal and vertical runs each pixel belongs to."""
    hs, he = _run_bounds(mask)
    vs, ve = _run_bounds(mask.T)
    return RunValueMap(h_run=he - hs + 1, v_run=(ve - vs + 1).T)


def _fill_rows(mask: np.ndarray, thresh: int) -> np.ndarray:
    """Blacken white runs strictly shorter than thresh with black on both
    sides; runs touching the row border are never filled."""
    if thresh <= 1:
        return mask
    h, w = mask.shape
    # ink sentinel columns keep runs within their row and mark the border
    padded = np.ones((h, w + 2), dtype=bool)
    padded[:, 1:-1] = mask
    flat = padded.ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], change))
    lengths = np.diff(np.concatenate((starts, [flat.size])))
    vals = flat[starts]
    col_s = starts % (w + 2)
    col_e = col_s + lengths
    fill = (~vals & (lengths < thresh) & (col_s != 1) & (col_e != w + 1))
    out = np.repeat(vals | fill, lengths).reshape(h, w + 2)
    return out[:, 1:-1]


def smear(edges: BinaryMap, h_thresh: int, v_thresh: int,
          final_h: int) -> BinaryMap:
    """Run-length smoothing: fill short white gaps into solid black blobs.

    Each round fills horizontally (h_thresh) and vertically (v_thresh) on
    the same input, keeps ink from either pass, then closes residual
    horizontal gaps (final_h).  Rounds repeat until nothing changes, so
    the result is a fixpoint: smearing it again is a no-op.
    """
    if min(h_thresh, v_thresh, final_h) < 1:
        raise ValueError("smear thresholds must be >= 1")
    current = edges.astype(bool)
    while True:
        fused = _fill_rows(current, h_thresh) | _fill_rows(current.T, v_thresh).T
        nxt = _fill_rows(fused, final_h)
        if nxt is current or np.array_equal(nxt, current):
            return nxt
        current = nxt


def _blank_bands(counts: np.ndarray, lo: int, min_gap: int) -> list[tuple[int, int]]:
    """Maximal zero-count index bands of length >= min_gap, offset by lo."""
    empty = counts == 0
    bands: list[tuple[int, int]] = []
    i, n = 0, len(empty)
    while i < n:
        if not empty[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and empty[j + 1]:
            j += 1
        if j - i + 1 >= min_gap:
            bands.append((lo + i, lo + j))
        i = j + 1
    return bands


def find_separators(smeared: BinaryMap, scope: BBox,
                    min_h_gap: int, min_v_gap: int) -> SeparatorSet:
    """Blank row and column bands within scope, at least min_*_gap thick.

    Bands touching the scope border count; coordinates are absolute.
    """
    h, w = smeared.shape
    if scope.x0 < 0 or scope.y0 < 0 or scope.x1 >= w or scope.y1 >= h:
        raise ValueError(f"scope {scope.as_tuple()} outside {w}x{h} map")
    window = smeared[scope.y0:scope.y1 + 1, scope.x0:scope.x1 + 1]
    row_ink = window.sum(axis=1)
    col_ink = window.sum(axis=0)
    return SeparatorSet(
        horizontal=tuple(_blank_bands(row_ink, scope.y0, min_h_gap)),
        vertical=tuple(_blank_bands(col_ink, scope.x0, min_v_gap)),
    )
