"""Block labeling: image filters plus line-height rules for text.

Labeling runs in two phases.  First every block is tested against three
image filters (size, edge density, aspect); image blocks are set aside.
Then the dominant body-text line height is computed over the remaining
blocks and each is labeled Headline, SubHeadline, or Column by how far
its line height sits above the dominant one.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import DecompositionConfig, ResolvedScale
from .raster import BBox, BinaryMap, GrayImage, crop
from .segment import Block


class ElementLabel(str, Enum):
    IMAGE = "image"
    HEADLINE = "headline"
    SUBHEADLINE = "subheadline"
    COLUMN = "column"


class NoTextLinesError(Exception):
    """No text line bands were found where some were required."""


@dataclass(frozen=True)
class LineMetrics:
    """Projection-profile statistics of one text line band."""

    band_top: int
    band_bottom: int
    line_height: int
    matra_row: int
    matra_index: int
    matra_black: int


@dataclass(frozen=True)
class Region:
    """A labeled layout element in page coordinates."""

    box: BBox
    label: ElementLabel
    line_height: int | None = None


def binarize_block(block_img: GrayImage, threshold: int = 128) -> BinaryMap:
    """Ink mask of a crop: true where luminance < threshold."""
    return np.asarray(block_img) < threshold


def line_metrics(ink: BinaryMap, alpha: float) -> list[LineMetrics]:
    """Text-line bands of an ink mask via its horizontal projection.

    A band is a maximal run of rows whose black count exceeds
    alpha * width; bands under 2 rows tall are discarded as noise.
    Within a band the matra row is the black-count argmax (ties go to
    the smallest row index).
    """
    if not (0 < alpha < 1):
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    profile = ink.sum(axis=1)
    width = ink.shape[1]
    busy = profile > alpha * width
    bands = []
    n = len(busy)
    i = 0
    while i < n:
        if not busy[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and busy[j + 1]:
            j += 1
        if j - i + 1 >= 2:
            matra_row = i + int(np.argmax(profile[i:j + 1]))
            bands.append(LineMetrics(
                band_top=i, band_bottom=j, line_height=j - i + 1,
                matra_row=matra_row, matra_index=matra_row - i,
                matra_black=int(profile[matra_row]),
            ))
        i = j + 1
    return bands


def _mode_smallest(values: list[int]) -> int:
    """Most frequent value; ties broken toward the smaller value."""
    counts = Counter(values)
    return min(counts, key=lambda v: (-counts[v], v))


def dominant_line_height(all_blocks: list[list[LineMetrics]]) -> int:
    """Body-text line height: the mode over every block's line heights."""
    heights = [m.line_height for block in all_blocks for m in block]
    if not heights:
        raise NoTextLinesError("no text lines in any block")
    return _mode_smallest(heights)


def estimate_line_height(ink_or_edges: BinaryMap, alpha: float,
                         fallback: int) -> int:
    """First-pass scale estimate from a whole-page map's line bands.

    Bands shorter than 3 rows (specks) or taller than a quarter of the
    page (photos) are ignored.  Rows where only part of the page carries
    text can split a line band into fragments, so bands shorter than
    half the 90th-percentile height are dropped before taking the mode;
    fragment splits outnumber full bands on some layouts and would steal
    it.  With nothing left, `fallback` is used.
    """
    cap = max(3, ink_or_edges.shape[0] // 4)
    heights = [m.line_height for m in line_metrics(ink_or_edges, alpha)
               if 3 <= m.line_height <= cap]
    if not heights:
        return fallback
    floor = float(np.percentile(heights, 90)) / 2.0
    solid = [h for h in heights if h >= floor]
    return _mode_smallest(solid)


def is_image_block(block: Block, block_ink: BinaryMap,
                   cfg: DecompositionConfig,
                   resolved: ResolvedScale | None = None) -> bool:
    """Three-filter image test: size, edge density, aspect, all must hold.

    block_ink is the edge map cropped to the block; it supplies the edge
    count when the block does not carry one.  Pass `resolved` to reuse a
    scale resolution; otherwise the config fallback line height is used.
    """
    if resolved is None:
        resolved = cfg.resolve_scale(cfg.fallback_line_height)
    box = block.box
    if not (box.width > resolved.img_min_w and box.height > resolved.img_min_h):
        return False
    edge_count = block.edge_pixel_count
    if edge_count is None:
        edge_count = int(block_ink.sum())
    density = edge_count / box.area
    if not (resolved.img_density_min <= density <= resolved.img_density_max):
        return False
    aspect = box.height / box.width
    return cfg.img_aspect_min <= aspect <= cfg.img_aspect_max


def label_text_block(metrics: list[LineMetrics], dominant: int,
                     cfg: DecompositionConfig) -> ElementLabel:
    """Headline / SubHeadline / Column by line height above the dominant."""
    if not metrics:
        raise ValueError("metrics must be non-empty")
    t = cfg.text_thresholds(dominant)
    h = _mode_smallest([m.line_height for m in metrics])
    d = h - dominant
    if d > t.gap1 and h >= t.x3:
        return ElementLabel.HEADLINE
    if d > t.gap2 and t.x1 < h < t.x2:
        return ElementLabel.SUBHEADLINE
    return ElementLabel.COLUMN


def classify_page(blocks: list[tuple[Block, GrayImage]], edges: BinaryMap,
                  cfg: DecompositionConfig,
                  resolved: ResolvedScale | None = None) -> list["Region"]:
    """Label every block; see classify_page_detailed for the mechanics."""
    return classify_page_detailed(blocks, edges, cfg, resolved).regions


@dataclass(frozen=True)
class ClassifyDetail:
    """classify_page output plus the thresholds it actually used."""

    regions: list[Region]
    dominant: int | None
    resolved: ResolvedScale


def classify_page_detailed(blocks: list[tuple[Block, GrayImage]],
                           edges: BinaryMap, cfg: DecompositionConfig,
                           resolved: ResolvedScale | None = None,
                           ) -> ClassifyDetail:
    """Two-phase labeling of cut blocks.

    Phase 1 marks image blocks.  Phase 2 measures line bands on the
    remaining blocks, takes the dominant height across them, and labels
    each by the height rules.  A text block with no detectable line
    bands falls back to Column with no line height; an all-image page
    yields only Image regions.
    """
    if resolved is None:
        scale = estimate_line_height(edges, cfg.line_band_alpha,
                                     cfg.fallback_line_height)
        resolved = cfg.resolve_scale(scale)
    labels: list[ElementLabel | None] = []
    per_block_metrics: list[list[LineMetrics]] = []
    for block, block_img in blocks:
        block_edges = crop(edges, block.box)
        if is_image_block(block, block_edges, cfg, resolved):
            labels.append(ElementLabel.IMAGE)
            per_block_metrics.append([])
        else:
            labels.append(None)
            ink = binarize_block(block_img, cfg.ink_threshold)
            per_block_metrics.append(line_metrics(ink, cfg.line_band_alpha))
    text_metrics = [m for lbl, m in zip(labels, per_block_metrics)
                    if lbl is None and m]
    dominant: int | None
    try:
        dominant = dominant_line_height(text_metrics)
    except NoTextLinesError:
        dominant = None
    regions = []
    for (block, _), label, metrics in zip(blocks, labels, per_block_metrics):
        if label is ElementLabel.IMAGE:
            regions.append(Region(box=block.box, label=label))
        elif not metrics or dominant is None:
            regions.append(Region(box=block.box, label=ElementLabel.COLUMN))
        else:
            text_label = label_text_block(metrics, dominant, cfg)
            regions.append(Region(
                box=block.box, label=text_label,
                line_height=_mode_smallest(
                    [m.line_height for m in metrics]),
            ))
    return ClassifyDetail(regions=regions, dominant=dominant,
                          resolved=resolved)
