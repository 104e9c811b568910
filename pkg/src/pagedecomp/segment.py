"""Connected-component extraction over smeared maps and page cutting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import BBox, BinaryMap, GrayImage, crop


@dataclass(frozen=True)
class Block:
    """A candidate layout element: a box plus ink statistics inside it."""

    box: BBox
    black_pixel_count: int
    edge_pixel_count: int | None = None


def _integral(mask: BinaryMap) -> np.ndarray:
    h, w = mask.shape
    table = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(mask, axis=0), axis=1, out=table[1:, 1:])
    return table


def _box_sum(table: np.ndarray, box: BBox) -> int:
    return int(table[box.y1 + 1, box.x1 + 1] - table[box.y0, box.x1 + 1]
               - table[box.y1 + 1, box.x0] + table[box.y0, box.x0])


def _row_runs(mask: BinaryMap) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Maximal True runs per row as parallel arrays (y, x_start, x_end)."""
    padded = np.zeros((mask.shape[0], mask.shape[1] + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    d = np.diff(padded, axis=1)
    ys, xs = np.nonzero(d == 1)
    _, xe = np.nonzero(d == -1)
    return ys, xs, xe - 1


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _component_boxes(mask: BinaryMap) -> list[tuple[BBox, int]]:
    """4-connected component bounding boxes with their pixel counts."""
    ys, xs, xe = _row_runs(mask)
    n = len(ys)
    if n == 0:
        return []
    uf = _UnionFind(n)
    row_start = {}
    for i, y in enumerate(ys):
        row_start.setdefault(int(y), i)
    # runs are emitted row-major, so each row is one contiguous index range
    for i in range(n):
        y = int(ys[i])
        j = row_start.get(y - 1)
        if j is None:
            continue
        while j < n and ys[j] == y - 1 and xs[j] <= xe[i]:
            if xe[j] >= xs[i]:
                uf.union(i, j)
            j += 1
    agg: dict[int, list[int]] = {}
    for i in range(n):
        r = uf.find(i)
        y, x0, x1 = int(ys[i]), int(xs[i]), int(xe[i])
        cur = agg.get(r)
        if cur is None:
            agg[r] = [x0, y, x1, y, x1 - x0 + 1]
        else:
            cur[0] = min(cur[0], x0)
            cur[1] = min(cur[1], y)
            cur[2] = max(cur[2], x1)
            cur[3] = max(cur[3], y)
            cur[4] += x1 - x0 + 1
    return [(BBox(a[0], a[1], a[2], a[3]), a[4]) for a in agg.values()]


def _merge_intersecting(boxes: list[BBox]) -> list[BBox]:
    """Union intersecting boxes until all pairs are disjoint.

    The result is order-independent: merging is confluent because box
    union only grows boxes, so any merge possible now stays possible.
    """
    boxes = list(boxes)
    changed = True
    while changed:
        changed = False
        out: list[BBox] = []
        for box in boxes:
            merged = box
            keep: list[BBox] = []
            for other in out:
                if merged.intersects(other):
                    merged = merged.union(other)
                    changed = True
                else:
                    keep.append(other)
            keep.append(merged)
            out = keep
        boxes = out
    return boxes


def connected_black_boxes(smeared: BinaryMap, min_area: int,
                          edges: BinaryMap | None = None) -> list[Block]:
    """Boxes of 4-connected ink components, merged until pairwise disjoint.

    Components whose bounding box covers fewer than min_area pixels are
    dropped as specks before merging.  Pixel counts are measured inside
    the final boxes; edge_pixel_count is filled when an edge map is given.
    """
    if min_area < 1:
        raise ValueError(f"min_area must be >= 1, got {min_area}")
    comps = [box for box, _ in _component_boxes(smeared)
             if box.area >= min_area]
    merged = _merge_intersecting(comps)
    merged.sort(key=lambda b: (b.y0, b.x0))
    ink_table = _integral(smeared)
    edge_table = _integral(edges) if edges is not None else None
    blocks = []
    for box in merged:
        blocks.append(Block(
            box=box,
            black_pixel_count=_box_sum(ink_table, box),
            edge_pixel_count=(_box_sum(edge_table, box)
                              if edge_table is not None else None),
        ))
    return blocks


def cut_blocks(page: GrayImage, edges: BinaryMap, smeared: BinaryMap,
               blocks: list[Block]) -> list[tuple[Block, GrayImage]]:
    """Pair each block with its crop of the original grayscale page.

    Crops come from the page, not the smeared map: downstream line-height
    analysis needs real glyphs, not fused blobs.
    """
    if page.shape != edges.shape or page.shape != smeared.shape:
        raise ValueError("page, edges and smeared shapes differ")
    h, w = page.shape
    for block in blocks:
        b = block.box
        if b.x0 < 0 or b.y0 < 0 or b.x1 >= w or b.y1 >= h:
            raise ValueError(f"block box {b.as_tuple()} outside {w}x{h} page")
    return [(block, crop(page, block.box)) for block in blocks]
