"""Skew estimation and quarter-turn orientation correction.

Skew is found by maximizing the variance of the horizontal projection
profile under a shear of the ink map: at the true angle the text rows
stack into sharp peaks.  Quarter-turn orientation is decided from the
matra-line statistics of the page and its 90-degree-clockwise copy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classify import LineMetrics, line_metrics
from .config import DecompositionConfig
from .raster import BinaryMap, GrayImage, rotate_by_angle, rotate_quarter


class NoContentError(Exception):
    """The ink map has no black pixels at all."""


class OrientationUndecidableError(Exception):
    """Neither orientation shows a text-like line band."""


@dataclass(frozen=True)
class SkewEstimate:
    """angle: degrees, positive = counter-clockwise content tilt."""

    angle: float
    score: float
    source_turns: int = 0


@dataclass(frozen=True)
class OrientationDecision:
    """turns: counter-clockwise quarter turns that make the page upright."""

    turns: int
    pixel_ratio_0: float
    pixel_ratio_90: float
    matra_test_passed: bool


@dataclass(frozen=True)
class OrientOutcome:
    """auto_orient result; flags list what could not be decided."""

    page: GrayImage
    skew: SkewEstimate | None
    decision: OrientationDecision | None
    flags: tuple[str, ...] = ()


def _content_bounds(ink: BinaryMap) -> tuple[int, int, int, int]:
    rows = np.flatnonzero(ink.any(axis=1))
    cols = np.flatnonzero(ink.any(axis=0))
    if len(rows) == 0:
        raise NoContentError("ink map is empty")
    return int(cols[0]), int(rows[0]), int(cols[-1]), int(rows[-1])


def _shear_scores(ink: BinaryMap, angles: np.ndarray) -> np.ndarray:
    """Contrast of the sheared horizontal projection at each angle.

    Contrast is the profile variance divided by its squared mean, so
    the value is dimensionless and comparable across quarter-turn
    copies of the same page, whose profile lengths differ.  Shearing
    remaps row y of column x to y + x*tan(angle), with x measured from
    the content bounding box's left edge so the score is exactly
    invariant under translation of the ink.
    """
    x0, y0, x1, y1 = _content_bounds(ink)
    window = ink[y0:y1 + 1, x0:x1 + 1]
    h, w = window.shape
    prefix = np.zeros((h, w + 1), dtype=np.int32)
    np.cumsum(window, axis=1, out=prefix[:, 1:])
    total = int(prefix[:, -1].sum())
    max_tan = max(abs(math.tan(math.radians(float(a)))) for a in angles)
    pad = int(math.ceil((w - 1) * max_tan)) + 1
    support = h + 2 * pad
    xs = np.arange(w)
    # buf rows hold per-shift column-group sums; reading its flat memory
    # back with one column less per row lands row k shifted k places, so
    # summing the reread rows builds the sheared profile with no loop
    kmax = 2 * pad + 1
    line = h + kmax
    buf = np.zeros((kmax, line), dtype=np.int32)
    sheared = np.lib.stride_tricks.as_strided(
        buf, shape=(kmax, line - 1), strides=(4 * (line - 1), 4))
    scores = np.empty(len(angles), dtype=np.float64)
    for i, angle in enumerate(angles):
        tan_t = math.tan(math.radians(float(angle)))
        shifts = np.rint(xs * tan_t).astype(np.int64)
        # shifts are monotone in x, so equal-shift columns are contiguous
        bounds = np.flatnonzero(np.diff(shifts)) + 1
        starts = np.concatenate(([0], bounds))
        ends = np.concatenate((bounds, [w]))
        groups = (prefix[:, ends] - prefix[:, starts]).T
        if tan_t < 0:
            groups = groups[::-1]
        k = groups.shape[0]
        buf[:k, :h] = groups
        profile = sheared[:k].sum(axis=0, dtype=np.int64)
        ssq = float(np.dot(profile, profile))
        # variance over the fixed-length support, zeros included, so
        # scores stay comparable across angles of one sweep
        mean = total / support
        scores[i] = (ssq / support - mean * mean) / (mean * mean)
    return scores


def _best_angle(angles: np.ndarray, scores: np.ndarray) -> tuple[float, float]:
    """Highest score wins; ties prefer small |angle|, then smaller angle."""
    order = sorted(range(len(angles)),
                   key=lambda i: (-scores[i], abs(angles[i]), angles[i]))
    top = order[0]
    return float(angles[top]), float(scores[top])


def skew_angle(ink: BinaryMap, half_range: float = 10.0,
               coarse_step: float = 0.5, fine_step: float = 0.1,
               flatness_min: float = 1.5) -> SkewEstimate:
    """Estimate content tilt in degrees by coarse-to-fine profile search.

    Returns 0 when the coarse sweep is too flat to trust (its peak is
    within flatness_min of its mean): a structureless profile otherwise
    yields arbitrary large angles that would win the four-way vote.
    """
    if half_range > 15:
        raise ValueError(f"half_range must be <= 15, got {half_range}")
    if fine_step > coarse_step:
        raise ValueError("fine_step must be <= coarse_step")
    if not ink.any():
        raise NoContentError("ink map is empty")
    n = int(round(half_range / coarse_step))
    coarse = np.round(np.arange(-n, n + 1) * coarse_step, 10)
    coarse = coarse[np.abs(coarse) <= half_range + 1e-9]
    coarse_scores = _shear_scores(ink, coarse)
    mean_score = float(coarse_scores.mean())
    best, best_score = _best_angle(coarse, coarse_scores)
    if mean_score > 0 and float(coarse_scores.max()) <= flatness_min * mean_score:
        zero_score = coarse_scores[np.argmin(np.abs(coarse))]
        return SkewEstimate(angle=0.0, score=float(zero_score))
    m = int(round(coarse_step / fine_step))
    fine = np.round(best + np.arange(-m, m + 1) * fine_step, 10)
    fine = fine[np.abs(fine) <= half_range + 1e-9]
    fine_scores = _shear_scores(ink, fine)
    angle, score = _best_angle(fine, fine_scores)
    return SkewEstimate(angle=angle, score=score)


# A quarter-turn copy joins the four-way vote only if its profile
# contrast reaches this fraction of the best copy's.  Sideways copies of
# an upright page occasionally clear the flatness guard with a small
# spurious angle, but always at a fraction of the text sides' contrast.
_FOUR_WAY_SCORE_FLOOR = 0.5


def four_way_skew(ink: BinaryMap, cfg: DecompositionConfig) -> SkewEstimate:
    """skew_angle on all four quarter-turn copies; largest |angle| wins.

    A page whose text runs vertically gives a flat profile and a zeroed
    estimate, so the two text-bearing copies decide.  They measure the
    same physical tilt, so the winning angle applies to the original
    map directly.  Copies whose profile contrast falls below the score
    floor are dropped before the vote.  Ties go to fewer turns.
    """
    estimates = []
    for turns in range(4):
        est = skew_angle(rotate_quarter(ink, turns),
                         half_range=cfg.skew_half_range,
                         coarse_step=cfg.skew_coarse_step,
                         fine_step=cfg.skew_fine_step,
                         flatness_min=cfg.skew_flatness_min)
        estimates.append(SkewEstimate(angle=est.angle, score=est.score,
                                      source_turns=turns))
    floor = _FOUR_WAY_SCORE_FLOOR * max(e.score for e in estimates)
    viable = [e for e in estimates if e.score >= floor]
    return max(viable, key=lambda e: (abs(e.angle), -e.source_turns))


def deskew(page: GrayImage, est: SkewEstimate,
           fine_step: float = 0.1) -> GrayImage:
    """Undo an estimated tilt; angles below the fine step are noise."""
    if abs(est.angle) < fine_step:
        return page.copy()
    return rotate_by_angle(page, -est.angle, fill=255)


# A side must show at least this many same-height peaked bands before its
# bands count as text lines; fewer is noise or sideways column blocks.
_MIN_TEXT_BANDS = 3
# Text lines are short next to the page width; column blocks seen sideways
# are not.  Bands taller than width / _BAND_HEIGHT_DIV are rejected.
_BAND_HEIGHT_DIV = 8
# Accepted spread of line heights around the modal height.
_REGULAR_LO = 0.6
_REGULAR_HI = 1.66
# Surviving bands must jointly cover this fraction of the map height;
# a handful of thin slivers (photo frame edges seen sideways) cannot.
_MIN_COVER_FRAC = 0.05


def _text_like_bands(ink: BinaryMap, alpha: float,
                     peak_min: float) -> list[LineMetrics]:
    """Line bands that look like a page of text lines, not stray blobs.

    Three structural requirements, applied in order:
    - the matra row clearly peaks above the band's mean row ink
      (solid blobs such as photos or frames project nearly flat);
    - the band is short next to the map width (column blocks read
      sideways project page-tall bands);
    - at least _MIN_TEXT_BANDS survivors share the modal band height
      to within [_REGULAR_LO, _REGULAR_HI], jointly covering at least
      _MIN_COVER_FRAC of the map height, and only those regulars are
      returned: text comes as a stack of equal-height lines filling a
      real share of the page.
    """
    profile = ink.sum(axis=1)
    height_cap = ink.shape[1] // _BAND_HEIGHT_DIV
    peaked = []
    for m in line_metrics(ink, alpha):
        if m.line_height > height_cap:
            continue
        band_mean = float(profile[m.band_top:m.band_bottom + 1].mean())
        if band_mean > 0 and m.matra_black >= peak_min * band_mean:
            peaked.append(m)
    if not peaked:
        return []
    heights = [m.line_height for m in peaked]
    counts: dict[int, int] = {}
    for hgt in heights:
        counts[hgt] = counts.get(hgt, 0) + 1
    mode = min(counts, key=lambda hgt: (-counts[hgt], hgt))
    regular = [m for m in peaked
               if _REGULAR_LO * mode <= m.line_height <= _REGULAR_HI * mode]
    if len(regular) < _MIN_TEXT_BANDS:
        return []
    cover = sum(m.line_height for m in regular)
    if cover < _MIN_COVER_FRAC * ink.shape[0]:
        return []
    return regular


def _orientation_ratio(ink: BinaryMap, cfg: DecompositionConfig,
                       ) -> tuple[float, LineMetrics | None]:
    """Pixel ratio (matra ink / line height) of the measuring band.

    The first text-like band is used unless none starts in the top
    fraction of the page (an image sits there), in which case the last
    one is used.  Returns ratio 0 with no band when nothing text-like
    exists.
    """
    bands = _text_like_bands(ink, cfg.line_band_alpha,
                             cfg.orient_matra_peak_min)
    if not bands:
        return 0.0, None
    if cfg.orient_use_mean_ratio:
        ratio = float(np.mean([b.matra_black / b.line_height for b in bands]))
        return ratio, bands[0]
    top_limit = cfg.orient_top_frac * ink.shape[0]
    band = bands[0] if bands[0].band_top < top_limit else bands[-1]
    return band.matra_black / band.line_height, band


def decide_rotation(page_ink: BinaryMap,
                    cfg: DecompositionConfig) -> OrientationDecision:
    """Choose the quarter turns that make text upright.

    Compares the page against its 90-degree-clockwise copy: whichever
    shows the stronger matra concentration has horizontal text.  Within
    that copy, a matra row in the top half of its band means upright
    text; in the bottom half the page is upside down.
    """
    ratio_0, band_0 = _orientation_ratio(page_ink, cfg)
    rotated = rotate_quarter(page_ink, 3)
    ratio_90, band_90 = _orientation_ratio(rotated, cfg)
    if band_0 is None and band_90 is None:
        raise OrientationUndecidableError(
            "no text-like line bands in either orientation")
    use_original = ratio_0 >= ratio_90 and band_0 is not None
    band = band_0 if use_original else band_90
    upright = band.matra_index < band.line_height / 2
    if use_original:
        turns = 0 if upright else 2
    else:
        turns = 3 if upright else 1
    return OrientationDecision(turns=turns, pixel_ratio_0=ratio_0,
                               pixel_ratio_90=ratio_90,
                               matra_test_passed=upright)


def auto_orient(page: GrayImage, cfg: DecompositionConfig) -> OrientOutcome:
    """De-skew then de-rotate a page; failures become flags, not aborts."""
    ink = page < cfg.ink_threshold
    if not ink.any():
        return OrientOutcome(page=page.copy(), skew=None, decision=None,
                             flags=("no_content",))
    est = four_way_skew(ink, cfg)
    corrected = deskew(page, est, cfg.skew_fine_step)
    try:
        decision = decide_rotation(corrected < cfg.ink_threshold, cfg)
    except OrientationUndecidableError:
        return OrientOutcome(page=corrected, skew=est, decision=None,
                             flags=("orientation_undecidable",))
    corrected = rotate_quarter(corrected, decision.turns)
    return OrientOutcome(page=corrected, skew=est, decision=decision)
