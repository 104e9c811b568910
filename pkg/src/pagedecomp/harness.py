"""Synthetic page corpus with ground truth, and evaluation machinery.

Pages imitate the projection statistics of Bangla print: every text
line is a full-width dark bar (the matra) with vertical strokes hanging
beneath it.  Photos are dark-framed rectangles whose interior texture
is mid-gray: visible to the edge detector, invisible to binarization,
which keeps line profiles clean.  Ground truth is recorded in the
upright frame together with the applied (skew, turns).
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

from .classify import (ClassifyDetail, ElementLabel, Region,
                       classify_page_detailed, estimate_line_height)
from .config import DecompositionConfig, ResolvedScale
from .edge import canny
from .orient import OrientOutcome, auto_orient
from .raster import BBox, GrayImage, rotate_by_angle, rotate_quarter
from .segment import Block, connected_black_boxes, cut_blocks
from .smear import smear


class LayoutError(Exception):
    """A PageSpec cannot be laid out (too many columns for the width)."""


FractionBox = tuple[float, float, float, float]


@dataclass(frozen=True)
class PageSpec:
    """Recipe for one synthetic page."""

    width: int = 800
    height: int = 1000
    seed: int = 0
    body_line_height: int = 20
    column_count: int = 2
    headline_present: bool = True
    subheadline_present: bool = False
    image_blocks: tuple[FractionBox, ...] = ()
    skew: float = 0.0
    turns: int = 0
    noise_density: float = 0.0

    def __post_init__(self) -> None:
        if self.width < 400 or self.height < 400:
            raise ValueError("page dimensions must be at least 400x400")
        if not (0 <= self.noise_density < 0.01):
            raise ValueError("noise_density must be in [0, 0.01)")
        if self.turns not in (0, 1, 2, 3):
            raise ValueError(f"turns must be 0..3, got {self.turns}")
        if abs(self.skew) > 15:
            raise ValueError(f"|skew| must be <= 15, got {self.skew}")
        if self.body_line_height < 8:
            raise ValueError("body_line_height must be >= 8")
        if self.column_count < 1:
            raise ValueError("column_count must be >= 1")
        for fb in self.image_blocks:
            fx0, fy0, fx1, fy1 = fb
            if not (0 <= fx0 < fx1 <= 1 and 0 <= fy0 < fy1 <= 1):
                raise ValueError(f"bad image block fractions {fb}")
        # tuples survive JSON round trips as lists; normalize
        object.__setattr__(self, "image_blocks",
                           tuple(tuple(float(v) for v in fb)
                                 for fb in self.image_blocks))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PageSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown page spec field: {sorted(unknown)[0]}")
        if "image_blocks" in data:
            data = dict(data)
            data["image_blocks"] = tuple(tuple(fb)
                                         for fb in data["image_blocks"])
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["image_blocks"] = [list(fb) for fb in self.image_blocks]
        return out


@dataclass(frozen=True)
class GroundTruth:
    """Labeled regions in the upright frame plus the applied distortion."""

    regions: tuple[tuple[BBox, ElementLabel], ...]
    skew: float
    turns: int
    width: int
    height: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "width": self.width,
            "height": self.height,
            "skew": self.skew,
            "turns": self.turns,
            "regions": [{"label": label.value, "bbox": list(box.as_tuple())}
                        for box, label in self.regions],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GroundTruth":
        regions = tuple(
            (BBox(*entry["bbox"]), ElementLabel(entry["label"]))
            for entry in data["regions"])
        return cls(regions=regions, skew=float(data["skew"]),
                   turns=int(data["turns"]), width=int(data["width"]),
                   height=int(data["height"]))


def _draw_text_line(page: np.ndarray, rng: np.random.Generator,
                    x0: int, y0: int, width: int, height: int) -> None:
    """One Bangla-like line: full-width matra bar, strokes hanging below."""
    bar = max(2, height // 7)
    page[y0:y0 + bar, x0:x0 + width] = 0
    stroke_w = max(2, round(0.15 * height))
    stride = max(stroke_w + 2, round(0.25 * height))
    full_h = height - bar
    short_h = max(2, round(0.4 * height))
    # per-line jitter so stroke columns never align across lines; aligned
    # grids stack into vertical runs that read as fake matra lines in the
    # rotated view
    offset = int(rng.integers(0, stride))
    for sx in range(x0 + 1 + offset, x0 + width - stroke_w, stride):
        if rng.random() < 0.85:
            hh = full_h if rng.random() < 0.7 else short_h
            page[y0 + bar:y0 + bar + hh, sx:sx + stroke_w] = 0


def _draw_photo(page: np.ndarray, rng: np.random.Generator,
                box: BBox, line_height: int) -> None:
    """Framed photo: dark 2 px border, mid-gray interior shapes.

    Interior grays sit above the ink threshold so the photo vanishes
    from binarized profiles, but well below white so the edge detector
    sees plenty of contours.  The shape count grows with the area so
    edge density stays size-stable.
    """
    page[box.y0:box.y1 + 1, box.x0:box.x1 + 1] = 255
    page[box.y0:box.y0 + 2, box.x0:box.x1 + 1] = 40
    page[box.y1 - 1:box.y1 + 1, box.x0:box.x1 + 1] = 40
    page[box.y0:box.y1 + 1, box.x0:box.x0 + 2] = 40
    page[box.y0:box.y1 + 1, box.x1 - 1:box.x1 + 1] = 40
    inner_w, inner_h = box.width - 8, box.height - 8
    if inner_w < 10 or inner_h < 10:
        return
    count = int(np.clip(round(box.area / (100 * line_height ** 2)), 6, 40))
    yy, xx = np.mgrid[0:box.height, 0:box.width]
    for _ in range(count):
        gray = int(rng.integers(140, 191))
        cx = box.x0 + 4 + rng.integers(0, inner_w)
        cy = box.y0 + 4 + rng.integers(0, inner_h)
        rx = int(rng.integers(6, max(7, inner_w // 4)))
        ry = int(rng.integers(6, max(7, inner_h // 4)))
        if rng.random() < 0.5:
            x_lo = max(box.x0 + 3, cx - rx)
            x_hi = min(box.x1 - 2, cx + rx)
            y_lo = max(box.y0 + 3, cy - ry)
            y_hi = min(box.y1 - 2, cy + ry)
            if x_lo < x_hi and y_lo < y_hi:
                page[y_lo:y_hi + 1, x_lo:x_hi + 1] = gray
        else:
            ell = (((xx + box.x0 - cx) / max(rx, 1)) ** 2
                   + ((yy + box.y0 - cy) / max(ry, 1)) ** 2) <= 1.0
            ell[:3, :] = False
            ell[-3:, :] = False
            ell[:, :3] = False
            ell[:, -3:] = False
            page[box.y0:box.y1 + 1, box.x0:box.x1 + 1][ell] = gray


def synth_page(spec: PageSpec) -> tuple[GrayImage, GroundTruth]:
    """Deterministic synthetic page plus its ground truth."""
    rng = np.random.default_rng(spec.seed)
    L = spec.body_line_height
    W, H = spec.width, spec.height
    margin = round(2.0 * L)
    gutter = round(1.6 * L)
    intra = round(0.45 * L)
    elem_gap = round(1.3 * L)
    page = np.full((H, W), 255, dtype=np.uint8)
    regions: list[tuple[BBox, ElementLabel]] = []

    content_w = W - 2 * margin
    n = spec.column_count
    col_w = (content_w - (n - 1) * gutter) // n
    stride = max(max(2, round(0.15 * L)) + 2, round(0.25 * L))
    if col_w < 6 * stride:
        raise LayoutError(f"{n} columns do not fit a width of {W}")

    image_boxes = []
    for fx0, fy0, fx1, fy1 in spec.image_blocks:
        box = BBox(round(fx0 * (W - 1)), round(fy0 * (H - 1)),
                   round(fx1 * (W - 1)), round(fy1 * (H - 1)))
        image_boxes.append(box)

    pad = elem_gap

    def clear_of_images(box: BBox) -> bool:
        inflated = BBox(max(0, box.x0 - pad), max(0, box.y0 - pad),
                        min(W - 1, box.x1 + pad), min(H - 1, box.y1 + pad))
        return not any(inflated.intersects(b) for b in image_boxes)

    y = margin
    if spec.headline_present:
        hl = round(2.2 * L)
        box = BBox(margin, y, margin + content_w - 1, y + hl - 1)
        if clear_of_images(box):
            _draw_text_line(page, rng, margin, y, content_w, hl)
            regions.append((box, ElementLabel.HEADLINE))
        y += hl + elem_gap
    if spec.subheadline_present:
        sh = round(1.5 * L)
        sw = round(0.6 * content_w)
        box = BBox(margin, y, margin + sw - 1, y + sh - 1)
        if clear_of_images(box):
            _draw_text_line(page, rng, margin, y, sw, sh)
            regions.append((box, ElementLabel.SUBHEADLINE))
        y += sh + elem_gap

    for box in image_boxes:
        _draw_photo(page, rng, box, L)
        regions.append((box, ElementLabel.IMAGE))

    slot = L + intra
    for i in range(n):
        cx = margin + i * (col_w + gutter)
        run_start: int | None = None
        last_y = 0
        for ys in range(y, H - margin - L + 1, slot):
            line_box = BBox(cx, ys, cx + col_w - 1, ys + L - 1)
            inflated = BBox(max(0, line_box.x0 - pad),
                            max(0, line_box.y0 - pad),
                            min(W - 1, line_box.x1 + pad),
                            min(H - 1, line_box.y1 + pad))
            blocked = any(inflated.intersects(b) for b in image_boxes)
            if blocked:
                if run_start is not None:
                    regions.append((BBox(cx, run_start, cx + col_w - 1,
                                         last_y + L - 1),
                                    ElementLabel.COLUMN))
                    run_start = None
                continue
            _draw_text_line(page, rng, cx, ys, col_w, L)
            if run_start is None:
                run_start = ys
            last_y = ys
        if run_start is not None:
            regions.append((BBox(cx, run_start, cx + col_w - 1,
                                 last_y + L - 1), ElementLabel.COLUMN))

    truth = GroundTruth(regions=tuple(regions), skew=spec.skew,
                        turns=spec.turns, width=W, height=H)

    if spec.turns:
        page = rotate_quarter(page, spec.turns)
    if spec.skew:
        page = rotate_by_angle(page, -spec.skew, fill=255)
    if spec.noise_density > 0:
        noisy = rng.random(page.shape) < spec.noise_density
        salt = rng.random(page.shape) < 0.5
        page = page.copy()
        page[noisy & salt] = 255
        page[noisy & ~salt] = 0
    return page, truth


# --------------------------------------------------------------------------
# evaluation

_ALL_LABELS = (ElementLabel.IMAGE, ElementLabel.HEADLINE,
               ElementLabel.SUBHEADLINE, ElementLabel.COLUMN)


def box_iou(a: BBox, b: BBox) -> float:
    inter = a.intersection_area(b)
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class EvalReport:
    """Per-class confusion counts and the derived Table-1 style metrics."""

    counts: dict[str, dict[str, int]]
    precision: dict[str, float]
    recall: dict[str, float]
    accuracy: dict[str, float]
    matches: tuple[tuple[str, int, int, float], ...] = ()

    @staticmethod
    def _safe_div(num: int, den: int) -> float:
        return 1.0 if den == 0 else num / den

    @classmethod
    def from_counts(cls, counts: dict[str, dict[str, int]],
                    matches: tuple[tuple[str, int, int, float], ...] = (),
                    ) -> "EvalReport":
        precision, recall, accuracy = {}, {}, {}
        for label, c in counts.items():
            precision[label] = cls._safe_div(c["tp"], c["tp"] + c["fp"])
            recall[label] = cls._safe_div(c["tp"], c["tp"] + c["fn"])
            total = c["tp"] + c["tn"] + c["fp"] + c["fn"]
            accuracy[label] = cls._safe_div(c["tp"] + c["tn"], total)
        return cls(counts=counts, precision=precision, recall=recall,
                   accuracy=accuracy, matches=matches)


def match_regions(predicted: list[Region], truth: GroundTruth,
                  iou_min: float = 0.5) -> EvalReport:
    """Greedy per-class IoU matching into TP/FP/FN/TN counts.

    Within each class, candidate pairs are taken in descending IoU
    order; a prediction matches at most one truth region and vice
    versa.  TN for a class counts truth regions of other classes that
    no prediction of this class overlaps at the threshold.
    """
    if not (0 < iou_min <= 1):
        raise ValueError(f"iou_min must be in (0,1], got {iou_min}")
    counts: dict[str, dict[str, int]] = {}
    matches: list[tuple[str, int, int, float]] = []
    for label in _ALL_LABELS:
        preds = [i for i, r in enumerate(predicted) if r.label is label]
        truths = [j for j, (_, lbl) in enumerate(truth.regions)
                  if lbl is label]
        pairs = []
        for i in preds:
            for j in truths:
                iou = box_iou(predicted[i].box, truth.regions[j][0])
                if iou >= iou_min:
                    pairs.append((-iou, i, j))
        pairs.sort()
        used_p: set[int] = set()
        used_t: set[int] = set()
        for neg_iou, i, j in pairs:
            if i in used_p or j in used_t:
                continue
            used_p.add(i)
            used_t.add(j)
            matches.append((label.value, i, j, -neg_iou))
        tp = len(used_p)
        fp = len(preds) - tp
        fn = len(truths) - tp
        tn = 0
        for j, (box, lbl) in enumerate(truth.regions):
            if lbl is label:
                continue
            hit = any(box_iou(predicted[i].box, box) >= iou_min
                      for i in preds)
            if not hit:
                tn += 1
        counts[label.value] = {"tp": tp, "fp": fp, "fn": fn, "tn": tn}
    return EvalReport.from_counts(counts, tuple(matches))


# --------------------------------------------------------------------------
# pipeline driver

@dataclass(frozen=True)
class PipelineResult:
    """Everything one page run produces, for reports and manifests."""

    page: GrayImage
    regions: list[Region]
    orientation: OrientOutcome | None
    resolved: ResolvedScale
    dominant: int | None
    blocks: list[Block]
    timings_ms: dict[str, float]


def run_pipeline(page: GrayImage, cfg: DecompositionConfig,
                 orient: bool = True) -> PipelineResult:
    """Full decomposition of one grayscale page."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    outcome: OrientOutcome | None = None
    if orient:
        outcome = auto_orient(page, cfg)
        page = outcome.page
    timings["orient"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    edges = canny(page, low=cfg.canny_low, high=cfg.canny_high,
                  sigma=cfg.sigma, radius=cfg.blur_radius)
    timings["edges"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    scale = estimate_line_height(edges, cfg.line_band_alpha,
                                 cfg.fallback_line_height)
    resolved = cfg.resolve_scale(scale)
    smeared = smear(edges, resolved.h_thresh, resolved.v_thresh,
                    resolved.final_h)
    timings["smear"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    blocks = connected_black_boxes(smeared, resolved.min_area, edges=edges)
    cut = cut_blocks(page, edges, smeared, blocks)
    timings["segment"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    detail = classify_page_detailed(cut, edges, cfg, resolved)
    timings["classify"] = (time.perf_counter() - t0) * 1000

    return PipelineResult(page=page, regions=detail.regions,
                          orientation=outcome, resolved=resolved,
                          dominant=detail.dominant, blocks=blocks,
                          timings_ms=timings)


@dataclass(frozen=True)
class PageRecord:
    """Evaluation outcome of one synthetic page."""

    spec: PageSpec
    report: EvalReport | None
    skew_error: float | None
    turns_correct: bool | None
    flags: tuple[str, ...] = ()
    error: str | None = None


def map_to_upright(regions: list[Region], corrected_shape: tuple[int, int],
                   truth: GroundTruth) -> list[Region]:
    """Shift predictions from the corrected frame into the truth frame.

    Both frames share their center: quarter turns and expansion-padded
    rotations keep content centered, so a pure translation aligns them.
    """
    ch, cw = corrected_shape
    dx = round((cw - truth.width) / 2)
    dy = round((ch - truth.height) / 2)
    out = []
    for region in regions:
        clipped = region.box.shifted(-dx, -dy).clipped(truth.width,
                                                       truth.height)
        if clipped is not None:
            out.append(Region(box=clipped, label=region.label,
                              line_height=region.line_height))
    return out


def evaluate_page(spec: PageSpec, cfg: DecompositionConfig,
                  iou_min: float = 0.5, orient: bool = True) -> PageRecord:
    """Generate, decompose, and score one page; failures become records."""
    try:
        page, truth = synth_page(spec)
        result = run_pipeline(page, cfg, orient=orient)
        mapped = map_to_upright(result.regions, result.page.shape, truth)
        report = match_regions(mapped, truth, iou_min)
        skew_error = None
        turns_correct: bool | None = None
        if orient and result.orientation is not None:
            est = result.orientation.skew
            if est is not None:
                skew_error = abs(est.angle + truth.skew)
            decision = result.orientation.decision
            found = decision.turns if decision is not None else 0
            turns_correct = found == (4 - truth.turns) % 4
            flags = result.orientation.flags
        else:
            flags = ()
        return PageRecord(spec=spec, report=report, skew_error=skew_error,
                          turns_correct=turns_correct, flags=flags)
    except Exception as exc:  # per-page failures must never abort a corpus
        return PageRecord(spec=spec, report=None, skew_error=None,
                          turns_correct=None, error=f"{type(exc).__name__}: {exc}")


@dataclass(frozen=True)
class CorpusReport:
    """Aggregate over a list of page specs, deterministic in spec order."""

    pages: tuple[PageRecord, ...]
    aggregate: EvalReport
    skew_errors: tuple[float, ...]
    rotation_accuracy: float | None
    failure_count: int

    @property
    def skew_mean_abs_error(self) -> float | None:
        if not self.skew_errors:
            return None
        return float(np.mean(self.skew_errors))

    @property
    def skew_max_error(self) -> float | None:
        if not self.skew_errors:
            return None
        return float(np.max(self.skew_errors))


def run_corpus(specs: list[PageSpec], cfg: DecompositionConfig,
               iou_min: float = 0.5, orient: bool = True,
               workers: int | None = None) -> CorpusReport:
    """Evaluate every spec, in parallel, folding results in spec order."""
    if workers is None or workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(
                lambda s: evaluate_page(s, cfg, iou_min, orient), specs))
    else:
        records = [evaluate_page(s, cfg, iou_min, orient) for s in specs]
    counts = {label.value: {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
              for label in _ALL_LABELS}
    skew_errors = []
    turns_flags = []
    failures = 0
    for rec in records:
        if rec.error is not None:
            failures += 1
            continue
        for label, c in rec.report.counts.items():
            for key in ("tp", "fp", "fn", "tn"):
                counts[label][key] += c[key]
        if rec.skew_error is not None:
            skew_errors.append(rec.skew_error)
        if rec.turns_correct is not None:
            turns_flags.append(rec.turns_correct)
    rotation_accuracy = (sum(turns_flags) / len(turns_flags)
                         if turns_flags else None)
    return CorpusReport(pages=tuple(records),
                        aggregate=EvalReport.from_counts(counts),
                        skew_errors=tuple(skew_errors),
                        rotation_accuracy=rotation_accuracy,
                        failure_count=failures)
