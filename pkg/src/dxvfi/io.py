"""File formats: PFM (linear/HDR), PNG 8/16-bit (LDR, sRGB), Middlebury .flo.

PNG ingestion decodes sRGB to linear by default and export encodes linear to
sRGB; pass ``linear=True`` to skip the transfer curve on either side.  PFM and
.flo always carry raw linear values.
"""

import json
import struct
from pathlib import Path

import cv2
import numpy as np

from .errors import InputError

FLO_MAGIC = 202021.25

__all__ = [
    "srgb_to_linear",
    "linear_to_srgb",
    "read_pfm",
    "write_pfm",
    "read_flo",
    "write_flo",
    "read_image",
    "write_image",
    "read_json",
    "write_json",
]


def srgb_to_linear(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= 0.04045, x / 12.92, ((x + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(x: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return np.where(x <= 0.0031308, x * 12.92, 1.055 * x ** (1.0 / 2.4) - 0.055)


# ---------------------------------------------------------------------------
# PFM: float32, little-endian (scale -1.0), rows stored bottom to top
# ---------------------------------------------------------------------------


def write_pfm(path, img: np.ndarray) -> None:
    a = np.asarray(img, dtype=np.float32)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise InputError(f"PFM supports 1 or 3 channels, got shape {img.shape}")
    h, w, c = a.shape
    header = b"PF\n" if c == 3 else b"Pf\n"
    with open(path, "wb") as f:
        f.write(header)
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        data = a[::-1]  # bottom-up row order
        if c == 1:
            data = data[:, :, 0]
        f.write(np.ascontiguousarray(data.astype("<f4")).tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic == b"PF":
            channels = 3
        elif magic == b"Pf":
            channels = 1
        else:
            raise InputError(f"{path}: not a PFM file (header {magic!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise InputError(f"{path}: malformed PFM dimensions")
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        endian = "<" if scale < 0 else ">"
        count = w * h * channels
        raw = np.frombuffer(f.read(count * 4), dtype=endian + "f4", count=count)
    if raw.size != count:
        raise InputError(f"{path}: truncated PFM payload")
    a = raw.reshape(h, w, channels)[::-1].astype(np.float64)
    if abs(scale) not in (0.0, 1.0):
        a = a * abs(scale)
    return a if channels == 3 else a[:, :, :1]


# ---------------------------------------------------------------------------
# Middlebury .flo
# ---------------------------------------------------------------------------


def write_flo(path, flow: np.ndarray) -> None:
    f = np.asarray(flow, dtype=np.float32)
    if f.ndim != 3 or f.shape[2] != 2:
        raise InputError(f".flo expects (H, W, 2), got {flow.shape}")
    h, w = f.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", FLO_MAGIC))
        fh.write(struct.pack("<ii", w, h))
        fh.write(np.ascontiguousarray(f.astype("<f4")).tobytes())


def read_flo(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = struct.unpack("<f", fh.read(4))[0]
        if magic != FLO_MAGIC:
            raise InputError(f"{path}: bad .flo magic {magic}")
        w, h = struct.unpack("<ii", fh.read(8))
        if w <= 0 or h <= 0:
            raise InputError(f"{path}: bad .flo dimensions {w}x{h}")
        data = np.frombuffer(fh.read(w * h * 2 * 4), dtype="<f4", count=w * h * 2)
    if data.size != w * h * 2:
        raise InputError(f"{path}: truncated .flo payload")
    return data.reshape(h, w, 2).astype(np.float64)


# ---------------------------------------------------------------------------
# PNG / generic images
# ---------------------------------------------------------------------------


def _png_read(path, linear: bool) -> np.ndarray:
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise InputError(f"cannot read image {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise InputError(f"{path}: unsupported PNG sample type {raw.dtype}")
    a = raw.astype(np.float64) / scale
    if a.ndim == 3:
        if a.shape[2] == 4:
            a = a[:, :, :3]
        a = a[:, :, ::-1]  # BGR -> RGB
    else:
        a = a[:, :, None]
    if not linear:
        a = srgb_to_linear(a)
    return np.ascontiguousarray(a)


def _png_write(path, img: np.ndarray, linear: bool, bits: int) -> None:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.shape[2] not in (1, 3):
        raise InputError(f"PNG export supports 1 or 3 channels, got {img.shape}")
    a = np.clip(a, 0.0, 1.0)
    if not linear:
        a = linear_to_srgb(a)
    if bits == 8:
        q = np.round(a * 255.0).astype(np.uint8)
    elif bits == 16:
        q = np.round(a * 65535.0).astype(np.uint16)
    else:
        raise InputError("PNG bit depth must be 8 or 16")
    if q.shape[2] == 3:
        q = q[:, :, ::-1]  # RGB -> BGR
    else:
        q = q[:, :, 0]
    if not cv2.imwrite(str(path), q):
        raise InputError(f"cannot write image {path}")


def read_image(path, linear: bool = False) -> np.ndarray:
    """Load an image as linear float64 (H, W, C).

    PFM passes through unchanged (already linear); PNG/JPG go through the
    sRGB decode unless ``linear`` is set.
    """
    p = Path(path)
    if not p.exists():
        raise InputError(f"no such file: {p}")
    suffix = p.suffix.lower()
    if suffix == ".pfm":
        return read_pfm(p)
    if suffix == ".flo":
        raise InputError(f"{p}: flow files are not images (use read_flo)")
    return _png_read(p, linear)


def write_image(path, img: np.ndarray, linear: bool = False, bits: int = 8) -> None:
    p = Path(path)
    if p.suffix.lower() == ".pfm":
        write_pfm(p, img)
        return
    _png_write(p, img, linear, bits)


def read_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise InputError(f"no such file: {p}")
    try:
        with open(p, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InputError(f"{p}: invalid JSON ({e})") from e


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
