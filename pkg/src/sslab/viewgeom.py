"""Crop-rectangle sampling and the scale quantities attached to it.

Views are axis-aligned integer rectangles cut from a source image and later
resized to a fixed output resolution. Two numbers summarize a view's
geometry: its crop scale (fraction of the source area it covers) and its
pixel scale (output resolution squared over crop area). Everything here is
pure: randomness comes in through an explicit numpy Generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GLOBAL = "global"
LOCAL = "local"

DEFAULT_ASPECT_LO = 3.0 / 4.0
DEFAULT_ASPECT_HI = 4.0 / 3.0
DEFAULT_MAX_RETRIES = 10


class ViewGeomError(ValueError):
    """Invalid crop-sampling inputs (degenerate source, bad scale range)."""


@dataclass(frozen=True)
class CropRect:
    """Integer crop rectangle in source-image coordinates."""

    x: int
    y: int
    w: int
    h: int
    src_w: int
    src_h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ViewGeomError(f"crop must have positive size, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0 or self.x + self.w > self.src_w or self.y + self.h > self.src_h:
            raise ViewGeomError(
                f"crop ({self.x},{self.y},{self.w},{self.h}) exceeds source {self.src_w}x{self.src_h}"
            )

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def scale(self) -> float:
        """Fraction of source area covered by this crop."""
        return self.area / (self.src_w * self.src_h)


@dataclass(frozen=True)
class PixelScale:
    """Ratio of output resolution squared to crop area: the 'size of the pixel'."""

    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ViewGeomError(f"pixel scale must be positive, got {self.value}")


@dataclass(frozen=True)
class PairCounts:
    """Ordered view-pair counts: global-global and global-local."""

    p_gg: int
    p_gl: int


@dataclass(frozen=True)
class ViewSetSpec:
    """Full multi-crop sampling policy.

    Globals are drawn from the scale range (s_g, 1.0) and resized to gc;
    locals from (s_min_local, s_l) and resized to lc.
    """

    s_g: float
    s_l: float
    gc: int
    lc: int
    n_g: int = 2
    n_l: int = 6
    s_min_local: float = 0.05
    aspect_lo: float = DEFAULT_ASPECT_LO
    aspect_hi: float = DEFAULT_ASPECT_HI
    max_retries: int = DEFAULT_MAX_RETRIES

    def __post_init__(self):
        if not (0 < self.s_g <= 1):
            raise ViewGeomError(f"s_g must be in (0,1], got {self.s_g}")
        if not (self.s_min_local < self.s_l <= 1):
            raise ViewGeomError(f"need s_min_local < s_l <= 1, got {self.s_min_local}, {self.s_l}")
        if self.aspect_lo > self.aspect_hi or self.aspect_lo <= 0:
            raise ViewGeomError(f"bad aspect range ({self.aspect_lo}, {self.aspect_hi})")
        if not (self.gc >= self.lc > 0):
            raise ViewGeomError(f"need gc >= lc > 0, got gc={self.gc}, lc={self.lc}")
        if self.n_g < 1 or self.n_l < 0:
            raise ViewGeomError(f"need n_g >= 1 and n_l >= 0, got {self.n_g}, {self.n_l}")


def _fallback_rect(src_w: int, src_h: int, aspect_lo: float, aspect_hi: float) -> CropRect:
    # Largest centered rectangle with aspect ratio clamped into range.
    in_ratio = src_w / src_h
    if in_ratio < aspect_lo:
        w = src_w
        h = min(src_h, max(1, round(w / aspect_lo)))
    elif in_ratio > aspect_hi:
        h = src_h
        w = min(src_w, max(1, round(h * aspect_hi)))
    else:
        w, h = src_w, src_h
    x = (src_w - w) // 2
    y = (src_h - h) // 2
    return CropRect(x, y, w, h, src_w, src_h)


def sample_crop(
    rng: np.random.Generator,
    src_w: int,
    src_h: int,
    scale_lo: float,
    scale_hi: float,
    aspect_lo: float = DEFAULT_ASPECT_LO,
    aspect_hi: float = DEFAULT_ASPECT_HI,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> CropRect:
    """Draw one random crop rectangle.

    Area fraction is uniform in [scale_lo, scale_hi], aspect ratio w/h
    log-uniform in [aspect_lo, aspect_hi]. A draw whose rounded rectangle
    does not fit inside the source is retried; after max_retries the
    largest centered rectangle with clamped aspect is returned.
    """
    if src_w <= 0 or src_h <= 0:
        raise ViewGeomError(f"degenerate source {src_w}x{src_h}")
    if not (0 < scale_lo <= scale_hi <= 1):
        raise ViewGeomError(f"bad scale range ({scale_lo}, {scale_hi})")
    if aspect_lo > aspect_hi or aspect_lo <= 0:
        raise ViewGeomError(f"bad aspect range ({aspect_lo}, {aspect_hi})")

    src_area = src_w * src_h
    log_lo, log_hi = math.log(aspect_lo), math.log(aspect_hi)
    for _ in range(max_retries):
        area = src_area * rng.uniform(scale_lo, scale_hi)
        aspect = math.exp(rng.uniform(log_lo, log_hi))
        w = round(math.sqrt(area * aspect))
        h = round(math.sqrt(area / aspect))
        if 0 < w <= src_w and 0 < h <= src_h:
            # floor(u * n) keeps the position draw identical to the batched sampler
            x = int(rng.uniform() * (src_w - w + 1))
            y = int(rng.uniform() * (src_h - h + 1))
            return CropRect(x, y, w, h, src_w, src_h)
    return _fallback_rect(src_w, src_h, aspect_lo, aspect_hi)


def sample_crops(
    rng: np.random.Generator,
    src_w: int,
    src_h: int,
    scale_lo: float,
    scale_hi: float,
    n: int,
    aspect_lo: float = DEFAULT_ASPECT_LO,
    aspect_hi: float = DEFAULT_ASPECT_HI,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> np.ndarray:
    """Vectorized batch of `sample_crop` draws.

    Returns an (n, 4) int64 array of (x, y, w, h). Same per-crop
    distribution as `sample_crop` (retry loop included) but consumes the
    generator in batched order, so the two are not stream-compatible.
    """
    if src_w <= 0 or src_h <= 0:
        raise ViewGeomError(f"degenerate source {src_w}x{src_h}")
    if not (0 < scale_lo <= scale_hi <= 1):
        raise ViewGeomError(f"bad scale range ({scale_lo}, {scale_hi})")
    if aspect_lo > aspect_hi or aspect_lo <= 0:
        raise ViewGeomError(f"bad aspect range ({aspect_lo}, {aspect_hi})")

    src_area = src_w * src_h
    log_lo, log_hi = math.log(aspect_lo), math.log(aspect_hi)
    out = np.empty((n, 4), dtype=np.int64)
    pending = np.arange(n)
    for _ in range(max_retries):
        if pending.size == 0:
            break
        m = pending.size
        area = src_area * rng.uniform(scale_lo, scale_hi, size=m)
        aspect = np.exp(rng.uniform(log_lo, log_hi, size=m))
        w = np.rint(np.sqrt(area * aspect)).astype(np.int64)
        h = np.rint(np.sqrt(area / aspect)).astype(np.int64)
        ux = rng.uniform(size=m)
        uy = rng.uniform(size=m)
        ok = (w > 0) & (w <= src_w) & (h > 0) & (h <= src_h)
        idx = pending[ok]
        out[idx, 2] = w[ok]
        out[idx, 3] = h[ok]
        out[idx, 0] = (ux[ok] * (src_w - w[ok] + 1)).astype(np.int64)
        out[idx, 1] = (uy[ok] * (src_h - h[ok] + 1)).astype(np.int64)
        pending = pending[~ok]
    if pending.size:
        fb = _fallback_rect(src_w, src_h, aspect_lo, aspect_hi)
        out[pending] = (fb.x, fb.y, fb.w, fb.h)
    return out


def pixel_scale(crop: CropRect, output_res: int) -> PixelScale:
    """Pixel scale of a crop resized to output_res: output_res^2 / crop area."""
    if output_res <= 0:
        raise ViewGeomError(f"output resolution must be positive, got {output_res}")
    return PixelScale((output_res * output_res) / crop.area)


def make_view_set(
    rng: np.random.Generator, src_w: int, src_h: int, spec: ViewSetSpec
) -> list[tuple[CropRect, str]]:
    """Sample one multi-crop view set: n_g globals then n_l locals.

    Globals come from (s_g, 1.0), locals from (s_min_local, s_l). Sampling
    order is fixed (globals first) so a given generator state yields a
    reproducible list.
    """
    views: list[tuple[CropRect, str]] = []
    for _ in range(spec.n_g):
        crop = sample_crop(
            rng, src_w, src_h, spec.s_g, 1.0, spec.aspect_lo, spec.aspect_hi, spec.max_retries
        )
        views.append((crop, GLOBAL))
    for _ in range(spec.n_l):
        crop = sample_crop(
            rng, src_w, src_h, spec.s_min_local, spec.s_l,
            spec.aspect_lo, spec.aspect_hi, spec.max_retries,
        )
        views.append((crop, LOCAL))
    return views


def pair_counts(spec: ViewSetSpec) -> PairCounts:
    """Ordered (teacher global, student view) pair counts."""
    return PairCounts(p_gg=spec.n_g * (spec.n_g - 1), p_gl=spec.n_g * spec.n_l)
