"""Analytic synthetic scenes: textured sprites on a textured background.

Sprites translate along polynomial trajectories

    offset(t) = v * t + a * t^2 / 2 + j * t^3 / 6

so frames can be rendered at arbitrary times and the correspondence flow
between any two times is known in closed form.  Rendering is antialiased:
pixel coverage of the sprite rectangle is computed exactly and the sprite
texture is sampled bilinearly, so sub-pixel motion is smooth and an integer
translation shifts the rendered sprite exactly.

These scenes are the ground-truth oracle used throughout the test suite.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import core
from .errors import InputError

__all__ = [
    "Sprite",
    "Scene",
    "smooth_texture",
    "make_sprite_scene",
    "render",
    "render_sequence",
    "flow_between",
    "visibility_change_mask",
    "generate_synthetic_scene",
]


@dataclass
class Sprite:
    texture: np.ndarray  # (h, w, C) linear intensities
    position: tuple[float, float]  # top-left (x, y) at t = 0
    velocity: tuple[float, float] = (0.0, 0.0)
    accel: tuple[float, float] = (0.0, 0.0)
    jerk: tuple[float, float] = (0.0, 0.0)

    def offset(self, t: float) -> tuple[float, float]:
        return (
            self.velocity[0] * t + 0.5 * self.accel[0] * t * t + self.jerk[0] * t**3 / 6.0,
            self.velocity[1] * t + 0.5 * self.accel[1] * t * t + self.jerk[1] * t**3 / 6.0,
        )

    def origin(self, t: float) -> tuple[float, float]:
        ox, oy = self.offset(t)
        return (self.position[0] + ox, self.position[1] + oy)


@dataclass
class Scene:
    background: np.ndarray  # (H, W, C)
    sprites: list[Sprite] = field(default_factory=list)

    @property
    def shape(self):
        return self.background.shape


def smooth_texture(
    height: int,
    width: int,
    channels: int = 1,
    rng: np.random.Generator | None = None,
    sigma: float = 2.0,
    lo: float = 0.1,
    hi: float = 0.9,
) -> np.ndarray:
    """Gaussian-smoothed noise normalized to [lo, hi]; deterministic per rng."""
    if rng is None:
        rng = np.random.default_rng(0)
    n = rng.standard_normal((height, width, channels))
    n = ndimage.gaussian_filter(n, sigma=(sigma, sigma, 0), mode="wrap")
    n_min, n_max = n.min(), n.max()
    if n_max - n_min < 1e-12:
        return np.full((height, width, channels), 0.5 * (lo + hi))
    return lo + (hi - lo) * (n - n_min) / (n_max - n_min)


def make_sprite_scene(
    height: int = 128,
    width: int = 128,
    sprite_size: int = 48,
    position: tuple[float, float] = (16.0, 40.0),
    velocity: tuple[float, float] = (4.0, 0.0),
    accel: tuple[float, float] = (8.0, 0.0),
    jerk: tuple[float, float] = (0.0, 0.0),
    channels: int = 1,
    seed: int = 0,
    texture_sigma: float = 2.0,
) -> Scene:
    """One moving textured sprite over a static textured background."""
    rng = np.random.default_rng(seed)
    bg = smooth_texture(height, width, channels, rng, sigma=texture_sigma, lo=0.05, hi=0.45)
    tex = smooth_texture(sprite_size, sprite_size, channels, rng, sigma=texture_sigma, lo=0.5, hi=0.95)
    sprite = Sprite(texture=tex, position=position, velocity=velocity, accel=accel, jerk=jerk)
    return Scene(background=bg, sprites=[sprite])


def _coverage_1d(centers: np.ndarray, lo: float, hi: float) -> np.ndarray:
    # pixel footprint [c - 0.5, c + 0.5] intersected with [lo, hi]
    return np.clip(np.minimum(centers + 0.5, hi) - np.maximum(centers - 0.5, lo), 0.0, 1.0)


def _sprite_coverage(sprite: Sprite, t: float, height: int, width: int) -> np.ndarray:
    ox, oy = sprite.origin(t)
    th, tw = sprite.texture.shape[:2]
    cov_x = _coverage_1d(np.arange(width, dtype=np.float64), ox, ox + tw)
    cov_y = _coverage_1d(np.arange(height, dtype=np.float64), oy, oy + th)
    return cov_y[:, None] * cov_x[None, :]


def render(scene: Scene, t: float) -> np.ndarray:
    """Render the scene at time t; later sprites composite on top."""
    out = scene.background.copy()
    h, w = out.shape[:2]
    gy, gx = np.mgrid[0:h, 0:w]
    for sprite in scene.sprites:
        ox, oy = sprite.origin(t)
        cov = _sprite_coverage(sprite, t, h, w)
        if not (cov > 0).any():
            continue
        # texel k spans local coordinate [k, k+1); sample at center offset
        tex = core.sample_at(sprite.texture, gx - ox - 0.5, gy - oy - 0.5)
        out = out * (1.0 - cov[..., None]) + tex * cov[..., None]
    return out


def render_sequence(scene: Scene, times) -> list[np.ndarray]:
    times = list(times)
    h, w = scene.shape[:2]
    for idx, sprite in enumerate(scene.sprites):
        if not any((_sprite_coverage(sprite, t, h, w) > 0).any() for t in times):
            raise InputError(f"sprite {idx} never intersects the canvas at the requested times")
    return [render(scene, t) for t in times]


def _owner_map(scene: Scene, t: float) -> np.ndarray:
    """Topmost owner per pixel center: -1 background, else sprite index."""
    h, w = scene.shape[:2]
    owner = np.full((h, w), -1, dtype=np.int64)
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    for idx, sprite in enumerate(scene.sprites):
        ox, oy = sprite.origin(t)
        th, tw = sprite.texture.shape[:2]
        inside_x = (xs >= ox - 0.5) & (xs < ox + tw - 0.5)
        inside_y = (ys >= oy - 0.5) & (ys < oy + th - 0.5)
        owner[np.ix_(inside_y, inside_x)] = idx
    return owner


def _owner_at_points(scene: Scene, t: float, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    owner = np.full(px.shape, -1, dtype=np.int64)
    for idx, sprite in enumerate(scene.sprites):
        ox, oy = sprite.origin(t)
        th, tw = sprite.texture.shape[:2]
        inside = (px >= ox - 0.5) & (px < ox + tw - 0.5) & (py >= oy - 0.5) & (py < oy + th - 0.5)
        owner[inside] = idx
    return owner


def flow_between(scene: Scene, t0: float, t1: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact correspondence flow aligned with the frame at t0, plus validity.

    flow(x) maps the pixel at x in the t0 frame to its position in the t1
    frame.  A pixel is valid when its surface is visible at both times and
    the target position stays inside the canvas.
    """
    h, w = scene.shape[:2]
    owner0 = _owner_map(scene, t0)
    flow = core.zero_flow(h, w)
    for idx, sprite in enumerate(scene.sprites):
        x0, y0 = sprite.offset(t0)
        x1, y1 = sprite.offset(t1)
        on = owner0 == idx
        flow[..., 0][on] = x1 - x0
        flow[..., 1][on] = y1 - y0
    gy, gx = np.mgrid[0:h, 0:w]
    px = gx + flow[..., 0]
    py = gy + flow[..., 1]
    owner1 = _owner_at_points(scene, t1, px, py)
    in_bounds = (px >= 0) & (px <= w - 1) & (py >= 0) & (py <= h - 1)
    valid = (owner1 == owner0) & in_bounds
    return flow, valid


def visibility_change_mask(scene: Scene, times, dilate_px: int = 2) -> np.ndarray:
    """Pixels whose sprite coverage differs across the given times, dilated.

    This is the occlusion-boundary band to exclude when scoring warped
    reconstructions against analytic renders.
    """
    h, w = scene.shape[:2]
    covs = []
    for t in times:
        total = np.zeros((h, w))
        for sprite in scene.sprites:
            c = _sprite_coverage(sprite, t, h, w)
            total = np.maximum(total, c)
        covs.append(total)
    band = np.zeros((h, w), dtype=bool)
    full = [c >= 1.0 for c in covs]
    any_cover = [c > 0.0 for c in covs]
    for i in range(len(covs)):
        band |= any_cover[i] & ~full[i]  # antialiased sprite edge
        for k in range(i + 1, len(covs)):
            band |= any_cover[i] != any_cover[k]
            band |= full[i] != full[k]
    if dilate_px > 0:
        band = ndimage.binary_dilation(band, iterations=dilate_px)
    return band


def generate_synthetic_scene(scene: Scene, times):
    """Render a frame sequence plus an analytic flow oracle.

    Returns (frames, flow_fn) where flow_fn(t0, t1) gives the exact flow and
    validity mask between two sample times.
    """
    frames = render_sequence(scene, times)
    return frames, lambda t0, t1: flow_between(scene, t0, t1)


def _main(argv=None) -> int:
    """Write a rendered frame sequence to a directory (demo helper)."""
    import argparse
    from pathlib import Path

    from . import io as dio

    ap = argparse.ArgumentParser(description="render analytic demo frames")
    ap.add_argument("--out", required=True)
    ap.add_argument("--frames", type=int, default=16)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--velocity", type=float, nargs=2, default=(4.0, 0.0))
    ap.add_argument("--accel", type=float, nargs=2, default=(8.0, 0.0))
    ap.add_argument("--channels", type=int, default=3, choices=(1, 3))
    ap.add_argument("--format", default="png", choices=("png", "pfm"))
    args = ap.parse_args(argv)

    scene = make_sprite_scene(
        height=args.size,
        width=args.size,
        velocity=tuple(args.velocity),
        accel=tuple(args.accel),
        channels=args.channels,
        seed=args.seed,
    )
    # time axis matches the sensor timeline: t = 0 at frame index 3, t = 1 at 15
    inter_end = args.frames - 4 if args.frames > 4 else args.frames
    times = [(k - 3) / inter_end for k in range(args.frames)]
    frames = render_sequence(scene, times)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, frame in enumerate(frames):
        dio.write_image(out / f"frame_{k:04d}.{args.format}", frame)
    print(f"wrote {len(frames)} frames to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(_main())
