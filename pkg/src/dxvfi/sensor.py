"""Dual-exposure sensor simulation from high-framerate frame sequences.

A capture window of ``2 * exposure_frames + gap_frames - 1`` source frames
(16 with defaults) yields two dual-exposure frames whose long exposures sum
``exposure_frames`` consecutive source frames (clipped at the saturation
level) and whose short exposures are the final source frame of each window,
so both exposures end at the same instant.  Normalized time puts t = 0 at the
first frame's exposure end and t = 1 at the second frame's exposure end; the
intra-exposure span is tau = (exposure_frames - 1) / inter_end_interval,
0.25 with defaults.  Default target times 0.25 and 0.5 land on source frames
7 and 10 (1-based) of a 16-frame window.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as dio
from .core import as_image
from .errors import InputError

__all__ = [
    "ExposureTimeline",
    "DualExposureFrame",
    "SynthSample",
    "simulate_long_exposure",
    "reject_saturated_patch",
    "saturated_fraction",
    "interleave_columns",
    "deinterleave_columns",
    "synthesize_sample",
    "sample_from_scene",
    "save_sample",
    "load_sample",
]


@dataclass(frozen=True)
class ExposureTimeline:
    exposure_frames: int = 4
    gap_frames: int = 9
    ratio: float = 4.0
    target_times: tuple[float, ...] = (0.25, 0.5)

    def __post_init__(self):
        if self.exposure_frames < 2:
            raise InputError("exposure_frames must be >= 2")
        if self.gap_frames < 1:
            raise InputError("gap_frames must be >= 1")
        if self.ratio <= 1.0:
            raise InputError("exposure ratio must be > 1")
        if not 0.0 < self.tau < 1.0:
            raise InputError(f"tau = {self.tau} out of (0, 1)")
        for t in self.target_times:
            if not 0.0 < t < 1.0:
                raise InputError(f"target time {t} must lie strictly inside (0, 1)")

    @property
    def inter_end_interval(self) -> int:
        # sub-frame intervals between the two exposure ends
        return (self.exposure_frames - 1) + self.gap_frames

    @property
    def tau(self) -> float:
        return (self.exposure_frames - 1) / self.inter_end_interval

    @property
    def total_frames(self) -> int:
        return 2 * self.exposure_frames + self.gap_frames - 1

    @property
    def keyframe_indices(self) -> tuple[int, int, int, int]:
        """0-based (start0, end0, start1, end1); (0, 3, 12, 15) with defaults."""
        e = self.exposure_frames
        return (0, e - 1, e - 1 + self.gap_frames, self.total_frames - 1)

    @property
    def target_indices(self) -> tuple[int, ...]:
        end0 = self.keyframe_indices[1]
        out = []
        for t in self.target_times:
            pos = t * self.inter_end_interval
            idx = round(pos)
            if abs(pos - idx) > 1e-9:
                raise InputError(
                    f"target time {t} does not land on a source frame (needs t * {self.inter_end_interval} integral)"
                )
            out.append(end0 + idx)
        return tuple(out)

    def frame_time(self, index: int) -> float:
        """Normalized time of a 0-based source frame index."""
        return (index - self.keyframe_indices[1]) / self.inter_end_interval

    def to_dict(self) -> dict:
        return {
            "exposure_frames": self.exposure_frames,
            "gap_frames": self.gap_frames,
            "ratio": self.ratio,
            "target_times": list(self.target_times),
            "tau": self.tau,
            "inter_end_interval": self.inter_end_interval,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExposureTimeline":
        return ExposureTimeline(
            exposure_frames=int(d.get("exposure_frames", 4)),
            gap_frames=int(d.get("gap_frames", 9)),
            ratio=float(d.get("ratio", 4.0)),
            target_times=tuple(d.get("target_times", (0.25, 0.5))),
        )


@dataclass
class DualExposureFrame:
    raw: np.ndarray  # full width; long in even columns, short in odd columns
    short: np.ndarray  # half horizontal resolution
    long: np.ndarray  # half horizontal resolution
    saturation_level: float = 1.0
    short_full: np.ndarray | None = None  # full-resolution ground truth
    long_full: np.ndarray | None = None


@dataclass
class SynthSample:
    frame0: DualExposureFrame
    frame1: DualExposureFrame
    sharp_0s: np.ndarray
    sharp_0e: np.ndarray
    sharp_1s: np.ndarray
    sharp_1e: np.ndarray
    targets: list[tuple[float, np.ndarray]]
    timeline: ExposureTimeline
    gt_intra_0: np.ndarray | None = None  # end -> start, aligned with sharp_0e
    gt_intra_1: np.ndarray | None = None
    gt_cross_01: np.ndarray | None = None  # end0 -> end1, aligned with sharp_0e
    gt_cross_10: np.ndarray | None = None
    rejected: bool = False
    saturated_fraction: float = 0.0
    meta: dict = field(default_factory=dict)

    def target_at(self, t: float, tol: float = 1e-9) -> np.ndarray:
        for tt, img in self.targets:
            if abs(tt - t) <= tol:
                return img
        raise InputError(f"no ground-truth target at t = {t}")


def simulate_long_exposure(frames, saturation_level: float) -> np.ndarray:
    """Sum consecutive frames, clipping at the saturation level.

    The result is the long exposure spanning the first through last input
    frame, aligned with the last one (exposure end).
    """
    if len(frames) < 2:
        raise InputError("long exposure needs at least 2 frames")
    imgs = [as_image(f, f"frame {i}") for i, f in enumerate(frames)]
    shape = imgs[0].shape
    for i, im in enumerate(imgs[1:], 1):
        if im.shape != shape:
            raise InputError(f"frame {i}: dimension mismatch {im.shape} vs {shape}")
    acc = np.zeros(shape, dtype=np.float64)
    for im in imgs:
        acc += im
    return np.minimum(acc, saturation_level)


def saturated_fraction(patch: np.ndarray, saturation_level: float) -> float:
    """Fraction of pixels at or above the saturation level (any channel)."""
    a = as_image(patch, "patch")
    sat = (a >= saturation_level).any(axis=2)
    return float(sat.mean())


def reject_saturated_patch(patch: np.ndarray, saturation_level: float, threshold: float = 0.2) -> bool:
    """True (reject) iff strictly more than ``threshold`` of pixels saturate."""
    return saturated_fraction(patch, saturation_level) > threshold


def interleave_columns(short: np.ndarray, long: np.ndarray) -> np.ndarray:
    """Build the sensor raw frame: even columns long, odd columns short."""
    s = as_image(short, "short")
    lo = as_image(long, "long")
    if s.shape != lo.shape:
        raise InputError(f"interleave_columns: shape mismatch {s.shape} vs {lo.shape}")
    h, w, c = s.shape
    out = np.empty((h, 2 * w, c), dtype=np.float64)
    out[:, 0::2] = lo
    out[:, 1::2] = s
    return out


def deinterleave_columns(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`interleave_columns`: returns (short, long)."""
    r = as_image(raw, "raw")
    if r.shape[1] % 2 != 0:
        raise InputError("raw frame width must be even")
    return r[:, 1::2].copy(), r[:, 0::2].copy()


def _dual_exposure(frames, timeline: ExposureTimeline, saturation_level: float) -> DualExposureFrame:
    long_full = simulate_long_exposure(frames, saturation_level)
    # short integrates exposure_frames / ratio sub-frame units, ending with the
    # last frame; with the defaults (4, ratio 4) it is that frame unchanged
    short_full = as_image(frames[-1]) * (timeline.exposure_frames / timeline.ratio)
    if short_full.shape[1] % 2 != 0:
        raise InputError("source frame width must be even for column interleaving")
    short_half = short_full[:, 1::2].copy()
    long_half = long_full[:, 0::2].copy()
    raw = interleave_columns(short_half, long_half)
    return DualExposureFrame(
        raw=raw,
        short=short_half,
        long=long_half,
        saturation_level=saturation_level,
        short_full=short_full,
        long_full=long_full,
    )


def synthesize_sample(
    frames,
    timeline: ExposureTimeline | None = None,
    saturation_level: float = 1.0,
    reject_threshold: float = 0.2,
) -> SynthSample:
    """Turn one window of source frames into a dual-exposure training sample.

    ``frames`` must hold exactly ``timeline.total_frames`` images of equal
    size.  The sample is flagged (not dropped) when more than
    ``reject_threshold`` of any source frame is already saturated.
    """
    tl = timeline or ExposureTimeline()
    if len(frames) != tl.total_frames:
        raise InputError(f"expected {tl.total_frames} frames, got {len(frames)}")
    imgs = [as_image(f, f"frame {i}") for i, f in enumerate(frames)]
    shape = imgs[0].shape
    for i, im in enumerate(imgs):
        if im.shape != shape:
            raise InputError(f"frame {i}: dimension mismatch {im.shape} vs {shape}")

    s0, e0, s1, e1 = tl.keyframe_indices
    frame0 = _dual_exposure(imgs[s0 : e0 + 1], tl, saturation_level)
    frame1 = _dual_exposure(imgs[s1 : e1 + 1], tl, saturation_level)
    targets = [(tl.target_times[i], imgs[idx]) for i, idx in enumerate(tl.target_indices)]

    frac = max(saturated_fraction(im, saturation_level) for im in imgs)
    return SynthSample(
        frame0=frame0,
        frame1=frame1,
        sharp_0s=imgs[s0],
        sharp_0e=imgs[e0],
        sharp_1s=imgs[s1],
        sharp_1e=imgs[e1],
        targets=targets,
        timeline=tl,
        rejected=frac > reject_threshold,
        saturated_fraction=frac,
        meta={"keyframe_indices": [s0, e0, s1, e1], "target_indices": list(tl.target_indices)},
    )


def sample_from_scene(
    scene,
    timeline: ExposureTimeline | None = None,
    saturation_level: float = 1.0,
    reject_threshold: float = 0.2,
) -> SynthSample:
    """Synthesize a sample from an analytic scene, attaching exact flows."""
    from . import scenes as sc

    tl = timeline or ExposureTimeline()
    times = [tl.frame_time(k) for k in range(tl.total_frames)]
    frames = sc.render_sequence(scene, times)
    sample = synthesize_sample(frames, tl, saturation_level, reject_threshold)
    tau = tl.tau
    sample.gt_intra_0, _ = sc.flow_between(scene, 0.0, -tau)
    sample.gt_intra_1, _ = sc.flow_between(scene, 1.0, 1.0 - tau)
    sample.gt_cross_01, _ = sc.flow_between(scene, 0.0, 1.0)
    sample.gt_cross_10, _ = sc.flow_between(scene, 1.0, 0.0)
    return sample


def _static_zero_flows(sample: SynthSample) -> None:
    h, w = sample.sharp_0e.shape[:2]
    sample.gt_intra_0 = zero_flow(h, w)
    sample.gt_intra_1 = zero_flow(h, w)
    sample.gt_cross_01 = zero_flow(h, w)
    sample.gt_cross_10 = zero_flow(h, w)


def save_sample(sample: SynthSample, out_dir, srgb_decoded: bool = True) -> None:
    """Write a sample directory: PFM images, .flo ground truth, manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dio.write_pfm(out / "raw_0.pfm", sample.frame0.raw)
    dio.write_pfm(out / "raw_1.pfm", sample.frame1.raw)
    for tag, fr in (("0", sample.frame0), ("1", sample.frame1)):
        dio.write_pfm(out / f"short_{tag}.pfm", fr.short)
        dio.write_pfm(out / f"long_{tag}.pfm", fr.long)
    dio.write_pfm(out / "sharp_0s.pfm", sample.sharp_0s)
    dio.write_pfm(out / "sharp_0e.pfm", sample.sharp_0e)
    dio.write_pfm(out / "sharp_1s.pfm", sample.sharp_1s)
    dio.write_pfm(out / "sharp_1e.pfm", sample.sharp_1e)
    for t, img in sample.targets:
        dio.write_pfm(out / f"target_{t:.4f}.pfm", img)
    gt = out / "gt"
    flows = {
        "intra_0": sample.gt_intra_0,
        "intra_1": sample.gt_intra_1,
        "cross_01": sample.gt_cross_01,
        "cross_10": sample.gt_cross_10,
    }
    written = []
    if any(v is not None for v in flows.values()):
        gt.mkdir(exist_ok=True)
        for name, fl in flows.items():
            if fl is not None:
                dio.write_flo(gt / f"{name}.flo", fl)
                written.append(name)
    manifest = {
        "format_version": 1,
        "timeline": sample.timeline.to_dict(),
        "saturation_level": sample.frame0.saturation_level,
        "rejected": sample.rejected,
        "saturated_fraction": sample.saturated_fraction,
        "targets": [t for t, _ in sample.targets],
        "gt_flows": sorted(written),
        "srgb_decoded": srgb_decoded,
        "meta": sample.meta,
    }
    dio.write_json(out / "manifest.json", manifest)


def load_sample(sample_dir) -> SynthSample:
    d = Path(sample_dir)
    manifest = dio.read_json(d / "manifest.json")
    tl = ExposureTimeline.from_dict(manifest["timeline"])
    level = float(manifest.get("saturation_level", 1.0))

    def frame(tag: str) -> DualExposureFrame:
        return DualExposureFrame(
            raw=dio.read_pfm(d / f"raw_{tag}.pfm"),
            short=dio.read_pfm(d / f"short_{tag}.pfm"),
            long=dio.read_pfm(d / f"long_{tag}.pfm"),
            saturation_level=level,
        )

    targets = []
    for t in manifest["targets"]:
        targets.append((float(t), dio.read_pfm(d / f"target_{float(t):.4f}.pfm")))

    def flo(name: str):
        p = d / "gt" / f"{name}.flo"
        return dio.read_flo(p) if p.exists() else None

    return SynthSample(
        frame0=frame("0"),
        frame1=frame("1"),
        sharp_0s=dio.read_pfm(d / "sharp_0s.pfm"),
        sharp_0e=dio.read_pfm(d / "sharp_0e.pfm"),
        sharp_1s=dio.read_pfm(d / "sharp_1s.pfm"),
        sharp_1e=dio.read_pfm(d / "sharp_1e.pfm"),
        targets=targets,
        timeline=tl,
        gt_intra_0=flo("intra_0"),
        gt_intra_1=flo("intra_1"),
        gt_cross_01=flo("cross_01"),
        gt_cross_10=flo("cross_10"),
        rejected=bool(manifest.get("rejected", False)),
        saturated_fraction=float(manifest.get("saturated_fraction", 0.0)),
        meta=dict(manifest.get("meta", {})),
    )


def synthesize_directory(
    input_dir,
    out_dir,
    timeline: ExposureTimeline | None = None,
    saturation_level: float = 1.0,
    reject_threshold: float = 0.2,
    linear: bool = False,
) -> dict:
    """Split a frame directory into non-overlapping windows and save samples.

    Returns a summary dict; rejected windows are recorded but not written.
    """
    tl = timeline or ExposureTimeline()
    in_dir = Path(input_dir)
    if not in_dir.is_dir():
        raise InputError(f"not a directory: {in_dir}")
    paths = sorted(
        p for p in in_dir.iterdir() if p.suffix.lower() in (".png", ".pfm", ".jpg", ".jpeg")
    )
    if len(paths) < tl.total_frames:
        raise InputError(f"need at least {tl.total_frames} frames, found {len(paths)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"samples": [], "rejected": [], "srgb_decoded": not linear}
    n_windows = len(paths) // tl.total_frames
    for wi in range(n_windows):
        window = paths[wi * tl.total_frames : (wi + 1) * tl.total_frames]
        frames = [dio.read_image(p, linear=linear) for p in window]
        sample = synthesize_sample(frames, tl, saturation_level, reject_threshold)
        name = f"sample_{wi:04d}"
        if sample.rejected:
            summary["rejected"].append({"name": name, "saturated_fraction": sample.saturated_fraction})
            continue
        save_sample(sample, out / name, srgb_decoded=not linear)
        summary["samples"].append(name)
    dio.write_json(out / "dataset.json", summary)
    return summary


# dataclasses.asdict chokes on ndarrays; explicit serializers above are the API
_ = dataclasses
