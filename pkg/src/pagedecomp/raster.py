"""Grayscale raster primitives: loading, saving, and geometric transforms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# GrayImage: 2-D uint8 array, shape (height, width); 0 = black, 255 = white.
# BinaryMap: 2-D bool array, same shape convention; True = black/ink/edge.
# x grows rightward, y grows downward, origin at the top-left pixel.
GrayImage = np.ndarray
BinaryMap = np.ndarray

_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)
_FORMATS = {"PNG", "PPM"}  # Pillow reports PGM under its PPM plugin


class PageLoadError(Exception):
    """An input page could not be decoded."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box with inclusive corners: (x1, y1) is inside the box."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError(f"degenerate box {self.as_tuple()}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)

    def intersects(self, other: "BBox") -> bool:
        return (self.x0 <= other.x1 and other.x0 <= self.x1
                and self.y0 <= other.y1 and other.y0 <= self.y1)

    def intersection_area(self, other: "BBox") -> int:
        if not self.intersects(other):
            return 0
        w = min(self.x1, other.x1) - max(self.x0, other.x0) + 1
        h = min(self.y1, other.y1) - max(self.y0, other.y0) + 1
        return w * h

    def union(self, other: "BBox") -> "BBox":
        return BBox(min(self.x0, other.x0), min(self.y0, other.y0),
                    max(self.x1, other.x1), max(self.y1, other.y1))

    def shifted(self, dx: int, dy: int) -> "BBox":
        return BBox(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def clipped(self, width: int, height: int) -> "BBox | None":
        """Intersection with the [0,width)x[0,height) frame, or None."""
        x0, y0 = max(self.x0, 0), max(self.y0, 0)
        x1, y1 = min(self.x1, width - 1), min(self.y1, height - 1)
        if x1 < x0 or y1 < y0:
            return None
        return BBox(x0, y0, x1, y1)


def _to_gray(im: Image.Image, path: Path) -> GrayImage:
    if im.mode == "L":
        return np.asarray(im, dtype=np.uint8).copy()
    if im.mode == "1":
        return (np.asarray(im, dtype=np.uint8) * 255).astype(np.uint8)
    if im.mode == "LA":
        return np.asarray(im, dtype=np.uint8)[:, :, 0].copy()
    if im.mode == "P":
        im = im.convert("RGBA")
    if im.mode in ("RGB", "RGBA"):
        rgb = np.asarray(im, dtype=np.float64)[:, :, :3]
        luma = np.rint(rgb @ _LUMA)
        return np.clip(luma, 0, 255).astype(np.uint8)
    raise PageLoadError(f"unsupported pixel mode {im.mode!r} in {path}")


def load_page(path: str | Path) -> GrayImage:
    """Decode a PNG or binary PGM file to an 8-bit grayscale array.

    Color input is reduced with round(0.299*R + 0.587*G + 0.114*B); any
    alpha channel is ignored.
    """
    p = Path(path)
    try:
        with Image.open(p) as im:
            if im.format not in _FORMATS:
                raise PageLoadError(f"unsupported format {im.format!r} in {p}")
            im.load()
            gray = _to_gray(im, p)
    except FileNotFoundError:
        raise PageLoadError(f"cannot read {p}: no such file") from None
    except UnidentifiedImageError:
        raise PageLoadError(f"cannot decode {p}: not a PNG or PGM file") from None
    except (OSError, SyntaxError, ValueError) as exc:
        raise PageLoadError(f"cannot decode {p}: {exc}") from None
    if gray.ndim != 2 or gray.shape[0] < 1 or gray.shape[1] < 1:
        raise PageLoadError(f"zero-dimension image in {p}")
    return gray


def save_page(img: GrayImage, path: str | Path) -> None:
    """Write a grayscale array as PNG or binary PGM, chosen by suffix."""
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix not in (".png", ".pgm"):
        raise ValueError(f"unsupported output suffix {suffix!r} for {p}")
    arr = np.ascontiguousarray(img, dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(p)


def rotate_quarter(img: np.ndarray, turns: int) -> np.ndarray:
    """Rotate by `turns` counter-clockwise quarter turns (lossless)."""
    return np.rot90(img, int(turns) % 4).copy()


def rotate_by_angle(img: GrayImage, degrees: float, fill: int = 255) -> GrayImage:
    """Rotate counter-clockwise by `degrees` with bilinear resampling.

    The canvas expands so nothing is cropped; uncovered pixels are set to
    `fill`.  |degrees| must be <= 45: larger corrections are quarter turns
    composed with a small residual.
    """
    if abs(degrees) > 45:
        raise ValueError(f"|degrees| must be <= 45, got {degrees}")
    if degrees == 0:
        return img.copy()
    h, w = img.shape
    t = math.radians(degrees)
    c, s = math.cos(t), math.sin(t)
    ow = math.ceil(w * abs(c) + h * abs(s))
    oh = math.ceil(w * abs(s) + h * abs(c))
    # inverse mapping: dest pixel -> source coordinates about the centers
    # (float32 is exact to ~1e-4 px here, well under a gray level)
    xd = np.arange(ow, dtype=np.float32) - np.float32((ow - 1) / 2.0)
    yd = np.arange(oh, dtype=np.float32) - np.float32((oh - 1) / 2.0)
    sx = np.float32(c) * xd[None, :] - np.float32(s) * yd[:, None]
    sx += np.float32((w - 1) / 2.0)
    sy = np.float32(s) * xd[None, :] + np.float32(c) * yd[:, None]
    sy += np.float32((h - 1) / 2.0)
    valid = (sx > -1.0) & (sx < w) & (sy > -1.0) & (sy < h)
    fx = sx - np.floor(sx)
    fy = sy - np.floor(sy)
    # pin the weight at the low borders where floor lands off-image
    fx[sx < 0] = 0.0
    fy[sy < 0] = 0.0
    x0 = np.clip(np.floor(sx).astype(np.int32), 0, w - 1)
    y0 = np.clip(np.floor(sy).astype(np.int32), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    a = img[y0, x0].astype(np.float32)
    b = img[y0, x1].astype(np.float32)
    cpx = img[y1, x0].astype(np.float32)
    d = img[y1, x1].astype(np.float32)
    top = a + (b - a) * fx
    bot = cpx + (d - cpx) * fx
    val = top + (bot - top) * fy
    out = np.where(valid, np.rint(val), np.float32(fill))
    return np.clip(out, 0, 255).astype(np.uint8)


def crop(img: np.ndarray, box: BBox) -> np.ndarray:
    h, w = img.shape[:2]
    if box.x0 < 0 or box.y0 < 0 or box.x1 >= w or box.y1 >= h:
        raise ValueError(f"box {box.as_tuple()} outside {w}x{h} image")
    return img[box.y0:box.y1 + 1, box.x0:box.x1 + 1].copy()
