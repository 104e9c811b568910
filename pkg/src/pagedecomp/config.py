"""Threshold configuration for the whole pipeline.

Most geometric thresholds default to None, meaning "derive from the page
scale": smear, segmentation and image-filter values are multiples of the
estimated body line height, and text-label thresholds are multiples of
the dominant line height found during classification.  Any field can be
pinned to an absolute value instead, via constructor, config file, or
CLI override.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any


class ConfigError(Exception):
    """A config file or override is malformed; message names the key."""


@dataclass(frozen=True)
class ResolvedScale:
    """Concrete pixel thresholds for one page, derived from scale."""

    scale: int
    h_thresh: int
    v_thresh: int
    final_h: int
    min_h_gap: int
    min_v_gap: int
    min_area: int
    img_min_w: int
    img_min_h: int
    img_density_min: float
    img_density_max: float


@dataclass(frozen=True)
class TextThresholds:
    """Concrete text-label thresholds derived from the dominant height."""

    gap1: float
    gap2: float
    x1: float
    x2: float
    x3: float


# scale-relative coefficients used when the matching field is None
_SCALE_COEFFS = {
    "h_thresh": 1.0,
    "v_thresh": 0.8,
    "final_h": 0.5,
    "min_h_gap": 0.4,
    "min_v_gap": 0.6,
    "img_min_w": 3.0,
    "img_min_h": 3.0,
}
_TEXT_COEFFS = {"gap1": 0.8, "gap2": 0.3, "x1": 1.2, "x2": 2.0, "x3": 2.0}
# edge density of a box scales inversely with line height (edges are thin
# outlines), so the density band is expressed as coeff / scale; measured
# on synthetic fixtures: photos sit near 0.7/L, text blocks above 2.5/L
_DENSITY_MIN_COEFF = 0.25
_DENSITY_MAX_COEFF = 1.5


@dataclass(frozen=True)
class DecompositionConfig:
    # edge detection
    sigma: float = 1.4
    blur_radius: int | None = None
    canny_low: float = 50.0
    canny_high: float = 150.0
    # binarization and projection profiles
    ink_threshold: int = 128
    line_band_alpha: float = 0.1
    # smear / separators (None = multiple of estimated line height)
    h_thresh: int | None = None
    v_thresh: int | None = None
    final_h: int | None = None
    min_h_gap: int | None = None
    min_v_gap: int | None = None
    # segmentation
    min_area: int | None = None
    # image filters
    img_min_w: int | None = None
    img_min_h: int | None = None
    img_density_min: float | None = None
    img_density_max: float | None = None
    img_aspect_min: float = 0.2
    img_aspect_max: float = 5.0
    # text labeling (None = multiple of dominant line height)
    gap1: float | None = None
    gap2: float | None = None
    x1: float | None = None
    x2: float | None = None
    x3: float | None = None
    # skew search
    skew_half_range: float = 10.0
    skew_coarse_step: float = 0.5
    skew_fine_step: float = 0.1
    skew_flatness_min: float = 1.5
    # rotation decision
    orient_top_frac: float = 0.30
    orient_matra_peak_min: float = 1.4
    orient_use_mean_ratio: bool = False
    # scale estimation fallback when no line bands are found
    fallback_line_height: int = 20

    def __post_init__(self) -> None:
        if not (0 < self.line_band_alpha < 1):
            raise ConfigError(f"line_band_alpha must be in (0,1), "
                              f"got {self.line_band_alpha}")
        if not (0 < self.canny_low < self.canny_high):
            raise ConfigError("need 0 < canny_low < canny_high, got "
                              f"{self.canny_low}, {self.canny_high}")
        if self.skew_half_range > 15:
            raise ConfigError(f"skew_half_range must be <= 15, "
                              f"got {self.skew_half_range}")
        if self.skew_fine_step > self.skew_coarse_step:
            raise ConfigError("skew_fine_step must be <= skew_coarse_step")
        if self.skew_fine_step <= 0 or self.skew_coarse_step <= 0:
            raise ConfigError("skew steps must be positive")
        if not (self.img_aspect_min < self.img_aspect_max):
            raise ConfigError("need img_aspect_min < img_aspect_max")
        if (self.img_density_min is not None
                and self.img_density_max is not None
                and not self.img_density_min < self.img_density_max):
            raise ConfigError("need img_density_min < img_density_max")
        if (self.gap1 is not None and self.gap2 is not None
                and self.gap2 > self.gap1):
            raise ConfigError("need gap2 <= gap1")
        self._check_x_order(self.x1, self.x2, self.x3)
        if self.fallback_line_height < 3:
            raise ConfigError("fallback_line_height must be >= 3")

    @staticmethod
    def _check_x_order(x1: float | None, x2: float | None,
                       x3: float | None) -> None:
        if x1 is not None and x2 is not None and not x1 < x2:
            raise ConfigError(f"need x1 < x2, got {x1}, {x2}")
        if x2 is not None and x3 is not None and not x2 <= x3:
            raise ConfigError(f"need x2 <= x3, got {x2}, {x3}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DecompositionConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path: str | Path) -> "DecompositionConfig":
        p = Path(path)
        try:
            data = json.loads(p.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {p}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {p} must hold a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, data: dict[str, Any]) -> "DecompositionConfig":
        known = {f.name for f in fields(self)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
        return replace(self, **data)

    def resolve_scale(self, line_height: int) -> ResolvedScale:
        """Pin every geometry threshold to pixels for a given line height."""
        if line_height < 1:
            raise ConfigError(f"line height must be >= 1, got {line_height}")
        pix = {}
        for name, coeff in _SCALE_COEFFS.items():
            value = getattr(self, name)
            pix[name] = int(value) if value is not None \
                else max(1, round(coeff * line_height))
        min_area = self.min_area if self.min_area is not None \
            else max(1, round((0.5 * line_height) ** 2))
        dmin = self.img_density_min if self.img_density_min is not None \
            else _DENSITY_MIN_COEFF / line_height
        dmax = self.img_density_max if self.img_density_max is not None \
            else _DENSITY_MAX_COEFF / line_height
        if not dmin < dmax:
            raise ConfigError("need img_density_min < img_density_max")
        return ResolvedScale(scale=line_height, min_area=int(min_area),
                             img_density_min=dmin, img_density_max=dmax,
                             **pix)

    def text_thresholds(self, dominant: int) -> TextThresholds:
        """Pin the text-label thresholds for a given dominant height."""
        if dominant < 1:
            raise ConfigError(f"dominant height must be >= 1, got {dominant}")
        out = {}
        for name, coeff in _TEXT_COEFFS.items():
            value = getattr(self, name)
            out[name] = float(value) if value is not None \
                else coeff * dominant
        if out["gap2"] > out["gap1"]:
            raise ConfigError("need gap2 <= gap1")
        self._check_x_order(out["x1"], out["x2"], out["x3"])
        return TextThresholds(**out)

    def snapshot(self, scale: ResolvedScale | None = None,
                 text: TextThresholds | None = None) -> dict[str, Any]:
        """Every threshold as actually used, for the run manifest."""
        snap: dict[str, Any] = {
            f.name: getattr(self, f.name) for f in fields(self)
        }
        if self.blur_radius is None:
            snap["blur_radius"] = math.ceil(2.0 * self.sigma)
        if scale is not None:
            snap["resolved_line_height"] = scale.scale
            for f in fields(ResolvedScale):
                if f.name != "scale":
                    snap[f.name] = getattr(scale, f.name)
        if text is not None:
            for f in fields(TextThresholds):
                snap[f.name] = getattr(text, f.name)
        return snap
