"""Edge detection: Gaussian blur, Sobel gradients, and a Canny pipeline.

Self-contained on purpose; the rest of the package consumes only the
final boolean edge map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import BinaryMap, GrayImage


@dataclass(frozen=True)
class GradientField:
    """Per-pixel gradient data, float arrays of the image shape."""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray


def gaussian_kernel(sigma: float, radius: int | None = None) -> np.ndarray:
    """1-D normalized Gaussian; default radius ceil(2*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if radius is None:
        radius = math.ceil(2.0 * sigma)
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_rows(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    radius = len(kernel) // 2
    padded = np.pad(img, ((0, 0), (radius, radius)), mode="edge")
    out = np.zeros_like(img)
    for i, kv in enumerate(kernel):
        out += float(kv) * padded[:, i:i + img.shape[1]]
    return out


def gaussian_blur(img: GrayImage, sigma: float = 1.4,
                  radius: int | None = None) -> np.ndarray:
    """Separable Gaussian blur; borders replicate the edge row/column."""
    kernel = gaussian_kernel(sigma, radius)
    tmp = _convolve_rows(np.asarray(img, dtype=np.float32), kernel)
    return _convolve_rows(np.ascontiguousarray(tmp.T), kernel).T


_SOBEL_X = np.array([[-1, 0, 1],
                     [-2, 0, 2],
                     [-1, 0, 1]], dtype=np.float64)


def sobel(img: np.ndarray) -> GradientField:
    """3x3 Sobel operator; the one-pixel border gets zero magnitude.

    gx responds to left-to-right brightening, gy to top-to-bottom
    brightening (gy kernel is the transpose of the gx kernel).
    """
    arr = np.asarray(img, dtype=np.float32)
    h, w = arr.shape
    if h < 3 or w < 3:
        raise ValueError(f"sobel needs at least a 3x3 image, got {h}x{w}")
    gx = np.zeros_like(arr)
    gy = np.zeros_like(arr)
    for dy in range(3):
        for dx in range(3):
            kx = float(_SOBEL_X[dy, dx])
            ky = float(_SOBEL_X[dx, dy])
            if kx == 0 and ky == 0:
                continue
            window = arr[dy:dy + h - 2, dx:dx + w - 2]
            if kx != 0:
                gx[1:h - 1, 1:w - 1] += kx * window
            if ky != 0:
                gy[1:h - 1, 1:w - 1] += ky * window
    magnitude = np.hypot(gx, gy)
    return GradientField(gx=gx, gy=gy, magnitude=magnitude)


# Quantized gradient directions: for each bin, the (dx, dy) step toward one
# of the two neighbors along the gradient; the other is its negation.
_DIR_OFFSETS = ((1, 0), (1, 1), (0, 1), (-1, 1))


def quantize_direction(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Map gradient angles to bins 0..3 (0, 45, 90, 135 degrees).

    Bin b covers angles mod 180 in [45b - 22.5, 45b + 22.5), decided by
    slope comparisons against tan(22.5) and tan(67.5) rather than a full
    arctangent.
    """
    t1 = math.tan(math.radians(22.5))
    t2 = math.tan(math.radians(67.5))
    # normalize to the upper half-plane; gy == 0 keeps gx as-is (bin 0)
    neg = gy < 0
    ax = np.where(neg, -gx, gx)
    ay = np.where(neg, -gy, gy)
    bins = np.zeros(ax.shape, dtype=np.uint8)
    right = ax > 0
    bins[right & (ay >= t1 * ax)] = 1
    bins[right & (ay >= t2 * ax)] = 2
    bins[(ax == 0) & (ay > 0)] = 2
    left = ax < 0
    bins[left & (ay <= t2 * -ax)] = 3
    bins[left & (ay > t2 * -ax)] = 2
    bins[left & (ay <= t1 * -ax)] = 0
    return bins


def non_maximum_suppression(magnitude: np.ndarray,
                            direction: np.ndarray) -> np.ndarray:
    """Keep pixels that are local maxima along their gradient direction.

    The keep rule is asymmetric (>= toward one neighbor, > toward the
    other) so a two-wide plateau keeps exactly one side.
    """
    h, w = magnitude.shape
    padded = np.zeros((h + 2, w + 2), dtype=magnitude.dtype)
    padded[1:-1, 1:-1] = magnitude
    out = np.zeros_like(magnitude)
    for b, (dx, dy) in enumerate(_DIR_OFFSETS):
        sel = direction == b
        nxt = padded[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx]
        prv = padded[1 - dy:h + 1 - dy, 1 - dx:w + 1 - dx]
        keep = sel & (magnitude >= prv) & (magnitude > nxt)
        out[keep] = magnitude[keep]
    return out


def _thin_collinear(mask: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Clear pixels whose both along-gradient neighbors also survive.

    NMS already forbids this when the three pixels share a direction bin,
    but mixed bins can leave 2 px thick spots.  One in-place row-major
    pass suffices: pixels are only ever cleared, so a pixel kept because
    a flank was below it stays valid to the end.  Only pixels whose both
    flanks are set in the INITIAL mask can ever be cleared, so the scan
    visits just those, in row-major order.
    """
    h, w = mask.shape
    out = mask.copy()
    flanked = np.zeros_like(mask)
    for b, (dx, dy) in enumerate(_DIR_OFFSETS):
        fwd = np.zeros_like(mask)
        bwd = np.zeros_like(mask)
        ys0, ys1 = max(dy, 0), h + min(dy, 0)
        xs0, xs1 = max(dx, 0), w + min(dx, 0)
        fwd[ys0 - dy:ys1 - dy, xs0 - dx:xs1 - dx] = mask[ys0:ys1, xs0:xs1]
        bwd[ys0:ys1, xs0:xs1] = mask[ys0 - dy:ys1 - dy, xs0 - dx:xs1 - dx]
        flanked |= (direction == b) & fwd & bwd
    for y, x in np.argwhere(mask & flanked):
        dx, dy = _DIR_OFFSETS[direction[y, x]]
        if out[y + dy, x + dx] and out[y - dy, x - dx]:
            out[y, x] = False
    return out


def hysteresis(strong: BinaryMap, weak: BinaryMap) -> BinaryMap:
    """Grow strong pixels through 8-connected weak pixels (BFS dilation)."""
    reach = strong.copy()
    frontier = strong.copy()
    while frontier.any():
        grown = np.zeros_like(reach)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                shifted = np.zeros_like(reach)
                ys = slice(max(dy, 0), reach.shape[0] + min(dy, 0))
                yd = slice(max(-dy, 0), reach.shape[0] + min(-dy, 0))
                xs = slice(max(dx, 0), reach.shape[1] + min(dx, 0))
                xd = slice(max(-dx, 0), reach.shape[1] + min(-dx, 0))
                shifted[yd, xd] = frontier[ys, xs]
                grown |= shifted
        frontier = grown & weak & ~reach
        reach |= frontier
    return reach


def canny(img: GrayImage, low: float = 50.0, high: float = 150.0,
          sigma: float = 1.4, radius: int | None = None) -> BinaryMap:
    """Boolean edge map of a grayscale page.

    Requires 0 < low < high.  Magnitudes are clamped to 255 before
    thresholding, so high above 255 yields no edges at all.
    """
    if not (0 < low < high):
        raise ValueError(f"need 0 < low < high, got low={low} high={high}")
    blurred = gaussian_blur(img, sigma=sigma, radius=radius)
    grad = sobel(blurred)
    direction = quantize_direction(grad.gx, grad.gy)
    thin = non_maximum_suppression(grad.magnitude, direction)
    thin = np.minimum(thin, 255.0)
    survivors = thin > 0
    survivors = _thin_collinear(survivors, direction)
    thin = np.where(survivors, thin, 0.0)
    strong = thin >= high
    weak = thin >= low
    return hysteresis(strong, weak)
