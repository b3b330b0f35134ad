"""Image and flow containers plus the sampling/warping/pyramid primitives.

Conventions used across the package:

- An image is a float64 ndarray shaped (H, W) or (H, W, C) with C in {1, 3},
  storing finite, non-negative linear-light intensities.  Gamma is applied
  only at PNG import/export (see :mod:`dxvfi.io`).
- A flow field is a float64 ndarray shaped (H, W, 2) holding per-pixel
  (u, v) displacements in pixels.  A flow F aligned with image A maps A's
  pixel x to the corresponding location x + F(x) in the other image, so the
  warp operator samples the other image at x + F(x).
- Pyramids are lists of arrays from level 0 (full resolution) down, with a
  spatial factor of 2 per level; flow pyramids also halve the displacement
  values per level.

All operations here are pure functions; border handling is replicate-clamp
everywhere so sampling is total.
"""

import math

import numpy as np

from . import _kernels
from .errors import InputError, NumericalError

__all__ = [
    "as_image",
    "check_flow",
    "zero_flow",
    "bilinear_sample",
    "backward_warp",
    "downsample2x",
    "build_pyramid",
    "upsample_bilinear",
    "upsample_flow2x",
    "downsample_flow2x",
]


def as_image(arr: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate an image and return it as float64 (H, W, C)."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise InputError(f"{name}: expected (H, W) or (H, W, C) with C in {{1, 3}}, got {arr.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"{name}: empty image {arr.shape}")
    if not np.isfinite(a).all():
        raise NumericalError(f"{name}: non-finite values")
    return a


def check_flow(flow: np.ndarray, name: str = "flow") -> np.ndarray:
    """Validate a flow field and return it as float64 (H, W, 2)."""
    f = np.asarray(flow, dtype=np.float64)
    if f.ndim != 3 or f.shape[2] != 2:
        raise InputError(f"{name}: expected (H, W, 2), got {flow.shape}")
    if not np.isfinite(f).all():
        raise NumericalError(f"{name}: non-finite values")
    return f


def zero_flow(height: int, width: int) -> np.ndarray:
    return np.zeros((height, width, 2), dtype=np.float64)


def _same_hw(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape[0] != b.shape[0] or a.shape[1] != b.shape[1]:
        raise InputError(f"{what}: dimension mismatch {a.shape[:2]} vs {b.shape[:2]}")


def bilinear_sample(img: np.ndarray, x: float, y: float, channel: int = 0) -> float:
    """Sample one channel at a float coordinate with replicate clamping."""
    a = as_image(img)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise NumericalError("invalid coordinate")
    if channel < 0 or channel >= a.shape[2]:
        raise InputError(f"channel {channel} out of range for {a.shape[2]}-channel image")
    h, w = a.shape[:2]
    sx = min(max(float(x), 0.0), w - 1.0)
    sy = min(max(float(y), 0.0), h - 1.0)
    x0 = int(sx)
    y0 = int(sy)
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    c = channel
    top = a[y0, x0, c] * (1.0 - fx) + a[y0, x1, c] * fx
    bot = a[y1, x0, c] * (1.0 - fx) + a[y1, x1, c] * fx
    return float(top * (1.0 - fy) + bot * fy)


def sample_at(img: np.ndarray, map_x: np.ndarray, map_y: np.ndarray) -> np.ndarray:
    """Dense bilinear gather of img at float coordinate maps (replicate clamp)."""
    a = as_image(img)
    return _kernels.warp_bilinear(a, np.asarray(map_x, np.float64), np.asarray(map_y, np.float64))


def backward_warp(img: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """out(x) = img(x + flow(x)) per channel, bilinear with border clamp."""
    a = as_image(img)
    f = check_flow(flow)
    _same_hw(a, f, "backward_warp")
    h, w = a.shape[:2]
    gy, gx = np.mgrid[0:h, 0:w]
    out = _kernels.warp_bilinear(a, gx + f[..., 0], gy + f[..., 1])
    if img_was_2d(img):
        return out[..., 0]
    return out


def img_was_2d(arr: np.ndarray) -> bool:
    return np.asarray(arr).ndim == 2


def warp_field(field: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Backward-warp an arbitrary-channel field (e.g. a flow) by a flow."""
    f = check_flow(flow)
    a = np.asarray(field, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    _same_hw(a, f, "warp_field")
    h, w = a.shape[:2]
    gy, gx = np.mgrid[0:h, 0:w]
    return _kernels.warp_bilinear(np.ascontiguousarray(a), gx + f[..., 0], gy + f[..., 1])


def _block_mean_2x(a: np.ndarray) -> np.ndarray:
    """Mean over 2x2 blocks; odd trailing row/column averaged over what exists."""
    h, w = a.shape[:2]
    oh, ow = (h + 1) // 2, (w + 1) // 2
    acc = np.zeros((oh, ow) + a.shape[2:], dtype=np.float64)
    cnt = np.zeros((oh, ow) + (1,) * (a.ndim - 2), dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            part = a[dy::2, dx::2]
            acc[: part.shape[0], : part.shape[1]] += part
            cnt[: part.shape[0], : part.shape[1]] += 1.0
    return acc / cnt


def downsample2x(img: np.ndarray) -> np.ndarray:
    """Halve an image by 2x2 box filtering."""
    a = as_image(img)
    out = _block_mean_2x(a)
    if img_was_2d(img):
        return out[..., 0]
    return out


def build_pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    """Box-filter image pyramid; level 0 is the input."""
    a = as_image(img)
    if levels < 1:
        raise InputError("pyramid needs at least one level")
    min_dim = min(a.shape[0], a.shape[1])
    if math.ceil(min_dim / 2 ** (levels - 1)) < 8:
        raise InputError(
            f"image {a.shape[1]}x{a.shape[0]} too small for {levels} pyramid levels (min dim >= 8 required at the top)"
        )
    pyr = [a]
    for _ in range(levels - 1):
        pyr.append(_block_mean_2x(pyr[-1]))
    return pyr


def upsample_bilinear(arr: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """2x bilinear upsampling with the out(x) = in(x / 2) convention.

    Integer output positions at even coordinates copy input samples exactly;
    the convention pairs with 2x2 box downsampling.
    """
    a = np.asarray(arr, dtype=np.float64)
    squeeze = a.ndim == 2
    if squeeze:
        a = a[:, :, None]
    gy, gx = np.mgrid[0:target_h, 0:target_w]
    out = _kernels.warp_bilinear(np.ascontiguousarray(a), gx * 0.5, gy * 0.5)
    return out[..., 0] if squeeze else out


def upsample_flow2x(flow: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Spatially upsample a flow by 2 and double its displacement values."""
    f = check_flow(flow)
    h, w = f.shape[:2]
    if target_w not in (2 * w - 1, 2 * w) or target_h not in (2 * h - 1, 2 * h):
        raise InputError(
            f"upsample_flow2x: target {target_w}x{target_h} incompatible with source {w}x{h}"
        )
    return upsample_bilinear(f, target_h, target_w) * 2.0


def downsample_flow2x(flow: np.ndarray) -> np.ndarray:
    """Halve a flow spatially (2x2 box) and halve its displacement values."""
    f = check_flow(flow)
    return _block_mean_2x(f) * 0.5
