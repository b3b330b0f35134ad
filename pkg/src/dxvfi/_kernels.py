"""Hot per-pixel kernels with two interchangeable backends.

The default backend compiles the inner loops with numba ``@njit(cache=True,
nogil=True)``.  Setting ``DXVFI_DISABLE_NUMBA=1`` (or ``true``/``yes``) in the
environment before import selects the pure-numpy implementations instead; the
numpy path is also picked automatically when numba cannot be imported.  Both
backends implement identical arithmetic (results agree to float rounding) and
are individually deterministic: no kernel accumulates across threads.

``benchmarks/bench_kernels.py`` times the two backends side by side.
"""

import os

import numpy as np

__all__ = [
    "USING_NUMBA",
    "warp_bilinear",
    "box_sum",
    "splat_reverse",
    "fill_holes",
    "NUMPY_IMPL",
    "NUMBA_IMPL",
]


def _numba_disabled() -> bool:
    flag = os.environ.get("DXVFI_DISABLE_NUMBA", "")
    return flag.strip().lower() in {"1", "true", "yes"}


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------


def _np_warp_bilinear(img: np.ndarray, map_x: np.ndarray, map_y: np.ndarray) -> np.ndarray:
    """Sample img (H,W,C) at float coordinates, replicate-clamped at borders."""
    h, w = img.shape[:2]
    x = np.clip(map_x, 0.0, w - 1.0)
    y = np.clip(map_y, 0.0, h - 1.0)
    x0 = x.astype(np.int64)  # non-negative after clip, so trunc == floor
    y0 = y.astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def _np_box_sum_1d(a: np.ndarray, radius: int, axis: int) -> np.ndarray:
    n = a.shape[axis]
    pad = [(0, 0)] * a.ndim
    pad[axis] = (radius, radius)
    p = np.pad(a, pad, mode="edge")
    c = np.cumsum(p, axis=axis)
    zshape = list(c.shape)
    zshape[axis] = 1
    c = np.concatenate([np.zeros(zshape, dtype=c.dtype), c], axis=axis)
    hi = [slice(None)] * a.ndim
    lo = [slice(None)] * a.ndim
    hi[axis] = slice(2 * radius + 1, 2 * radius + 1 + n)
    lo[axis] = slice(0, n)
    return c[tuple(hi)] - c[tuple(lo)]


def _np_box_sum(a: np.ndarray, radius: int) -> np.ndarray:
    """(2r+1)^2 window sum of a 2D array with replicate padding."""
    return _np_box_sum_1d(_np_box_sum_1d(a, radius, 1), radius, 0)


def _np_splat_reverse(flow: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Scatter -flow onto the 4 integer neighbours of each target position.

    Returns the unnormalized accumulator (H,W,2) and the weight sum (H,W).
    """
    h, w = flow.shape[:2]
    gy, gx = np.mgrid[0:h, 0:w]
    tx = gx + flow[..., 0]
    ty = gy + flow[..., 1]
    x0 = np.floor(tx).astype(np.int64)
    y0 = np.floor(ty).astype(np.int64)
    acc = np.zeros((h, w, 2), dtype=np.float64)
    wsum = np.zeros((h, w), dtype=np.float64)
    inv_sigma2 = 1.0 / (sigma * sigma)
    neg_u = -flow[..., 0]
    neg_v = -flow[..., 1]
    for dy in (0, 1):
        for dx in (0, 1):
            nx = x0 + dx
            ny = y0 + dy
            ddx = tx - nx
            ddy = ty - ny
            wgt = np.exp(-(ddx * ddx + ddy * ddy) * inv_sigma2)
            m = (nx >= 0) & (nx < w) & (ny >= 0) & (ny < h)
            iy = ny[m]
            ix = nx[m]
            np.add.at(acc, (iy, ix, np.zeros_like(iy)), neg_u[m] * wgt[m])
            np.add.at(acc, (iy, ix, np.ones_like(iy)), neg_v[m] * wgt[m])
            np.add.at(wsum, (iy, ix), wgt[m])
    return acc, wsum


def _np_fill_holes(field: np.ndarray, valid: np.ndarray, max_iter: int) -> np.ndarray:
    """Fill invalid pixels by synchronous 3x3 averaging of valid neighbours."""
    h, w = field.shape[:2]
    cur = field.copy()
    val = valid.astype(bool).copy()
    for _ in range(max_iter):
        if val.all():
            break
        vf = np.where(val[..., None], cur, 0.0)
        nsum = np.zeros_like(cur)
        ncnt = np.zeros((h, w), dtype=np.float64)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                dst_y = slice(max(0, -dy), h - max(0, dy))
                dst_x = slice(max(0, -dx), w - max(0, dx))
                src_y = slice(max(0, dy), h - max(0, -dy))
                src_x = slice(max(0, dx), w - max(0, -dx))
                nsum[dst_y, dst_x] += vf[src_y, src_x]
                ncnt[dst_y, dst_x] += val[src_y, src_x]
        fillable = (~val) & (ncnt > 0)
        if not fillable.any():
            break
        cur[fillable] = nsum[fillable] / ncnt[fillable][:, None]
        val = val | fillable
    return cur


NUMPY_IMPL = {
    "warp_bilinear": _np_warp_bilinear,
    "box_sum": _np_box_sum,
    "splat_reverse": _np_splat_reverse,
    "fill_holes": _np_fill_holes,
}


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

USING_NUMBA = False
NUMBA_IMPL = None

if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None

    if njit is not None:

        @njit(cache=True, nogil=True)
        def _nb_warp_bilinear(img, map_x, map_y, out):
            h, w, c = img.shape
            for y in range(h):
                for x in range(w):
                    sx = map_x[y, x]
                    sy = map_y[y, x]
                    if sx < 0.0:
                        sx = 0.0
                    elif sx > w - 1.0:
                        sx = w - 1.0
                    if sy < 0.0:
                        sy = 0.0
                    elif sy > h - 1.0:
                        sy = h - 1.0
                    x0 = int(sx)
                    y0 = int(sy)
                    x1 = x0 + 1
                    if x1 > w - 1:
                        x1 = w - 1
                    y1 = y0 + 1
                    if y1 > h - 1:
                        y1 = h - 1
                    fx = sx - x0
                    fy = sy - y0
                    for ch in range(c):
                        top = img[y0, x0, ch] * (1.0 - fx) + img[y0, x1, ch] * fx
                        bot = img[y1, x0, ch] * (1.0 - fx) + img[y1, x1, ch] * fx
                        out[y, x, ch] = top * (1.0 - fy) + bot * fy

        @njit(cache=True, nogil=True)
        def _nb_box_sum(a, radius, out):
            h, w = a.shape
            tmp = np.empty((h, w), dtype=np.float64)
            for y in range(h):
                for x in range(w):
                    s = 0.0
                    for d in range(-radius, radius + 1):
                        xx = x + d
                        if xx < 0:
                            xx = 0
                        elif xx > w - 1:
                            xx = w - 1
                        s += a[y, xx]
                    tmp[y, x] = s
            for y in range(h):
                for x in range(w):
                    s = 0.0
                    for d in range(-radius, radius + 1):
                        yy = y + d
                        if yy < 0:
                            yy = 0
                        elif yy > h - 1:
                            yy = h - 1
                        s += tmp[yy, x]
                    out[y, x] = s

        @njit(cache=True, nogil=True)
        def _nb_splat_reverse(flow, inv_sigma2, acc, wsum):
            h, w = flow.shape[:2]
            for y in range(h):
                for x in range(w):
                    u = flow[y, x, 0]
                    v = flow[y, x, 1]
                    tx = x + u
                    ty = y + v
                    x0 = int(np.floor(tx))
                    y0 = int(np.floor(ty))
                    for dy in range(2):
                        ny = y0 + dy
                        if ny < 0 or ny >= h:
                            continue
                        for dx in range(2):
                            nx = x0 + dx
                            if nx < 0 or nx >= w:
                                continue
                            ddx = tx - nx
                            ddy = ty - ny
                            wgt = np.exp(-(ddx * ddx + ddy * ddy) * inv_sigma2)
                            acc[ny, nx, 0] += -u * wgt
                            acc[ny, nx, 1] += -v * wgt
                            wsum[ny, nx] += wgt

        @njit(cache=True, nogil=True)
        def _nb_fill_holes(field, valid, max_iter):
            h, w = field.shape[:2]
            cur = field.copy()
            nxt = field.copy()
            val = valid.copy()
            nval = valid.copy()
            for _ in range(max_iter):
                holes = 0
                for y in range(h):
                    for x in range(w):
                        if val[y, x]:
                            nxt[y, x, 0] = cur[y, x, 0]
                            nxt[y, x, 1] = cur[y, x, 1]
                            nval[y, x] = True
                            continue
                        s0 = 0.0
                        s1 = 0.0
                        cnt = 0
                        for dy in range(-1, 2):
                            yy = y + dy
                            if yy < 0 or yy >= h:
                                continue
                            for dx in range(-1, 2):
                                if dy == 0 and dx == 0:
                                    continue
                                xx = x + dx
                                if xx < 0 or xx >= w:
                                    continue
                                if val[yy, xx]:
                                    cnt += 1
                                    s0 += cur[yy, xx, 0]
                                    s1 += cur[yy, xx, 1]
                        if cnt > 0:
                            nxt[y, x, 0] = s0 / cnt
                            nxt[y, x, 1] = s1 / cnt
                            nval[y, x] = True
                        else:
                            nxt[y, x, 0] = cur[y, x, 0]
                            nxt[y, x, 1] = cur[y, x, 1]
                            nval[y, x] = False
                            holes += 1
                cur, nxt = nxt, cur
                val, nval = nval, val
                if holes == 0:
                    break
            return cur

        def _numba_warp_bilinear(img, map_x, map_y):
            img = np.ascontiguousarray(img, dtype=np.float64)
            out = np.empty_like(img)
            _nb_warp_bilinear(
                img,
                np.ascontiguousarray(map_x, dtype=np.float64),
                np.ascontiguousarray(map_y, dtype=np.float64),
                out,
            )
            return out

        def _numba_box_sum(a, radius):
            a = np.ascontiguousarray(a, dtype=np.float64)
            out = np.empty_like(a)
            _nb_box_sum(a, radius, out)
            return out

        def _numba_splat_reverse(flow, sigma):
            flow = np.ascontiguousarray(flow, dtype=np.float64)
            h, w = flow.shape[:2]
            acc = np.zeros((h, w, 2), dtype=np.float64)
            wsum = np.zeros((h, w), dtype=np.float64)
            _nb_splat_reverse(flow, 1.0 / (sigma * sigma), acc, wsum)
            return acc, wsum

        def _numba_fill_holes(field, valid, max_iter):
            field = np.ascontiguousarray(field, dtype=np.float64)
            valid = np.ascontiguousarray(valid.astype(np.bool_))
            return _nb_fill_holes(field, valid, max_iter)

        NUMBA_IMPL = {
            "warp_bilinear": _numba_warp_bilinear,
            "box_sum": _numba_box_sum,
            "splat_reverse": _numba_splat_reverse,
            "fill_holes": _numba_fill_holes,
        }
        USING_NUMBA = True


_ACTIVE = NUMBA_IMPL if USING_NUMBA else NUMPY_IMPL

warp_bilinear = _ACTIVE["warp_bilinear"]
box_sum = _ACTIVE["box_sum"]
splat_reverse = _ACTIVE["splat_reverse"]
fill_holes = _ACTIVE["fill_holes"]
