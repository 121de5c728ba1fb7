"""BT.601 full-range color conversion (the JFIF convention)."""

from __future__ import annotations

import numpy as np
from numba import njit

# Fixed-point constants used by common JPEG decoders for YCbCr -> RGB:
# FIX(x) = round(x * 2**16). Reproducing the integer arithmetic exactly
# keeps our decode output bit-identical to the reference decoder.
_SCALEBITS = 16
_ONE_HALF = 1 << (_SCALEBITS - 1)
_FIX_1_40200 = 91881
_FIX_1_77200 = 116130
_FIX_0_71414 = 46802
_FIX_0_34414 = 22554


def rgb_to_ycbcr(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Convert an (H, W, 3) uint8 RGB image to full-range YCbCr planes.

    Y  =  0.299 R + 0.587 G + 0.114 B
    Cb = -0.168736 R - 0.331264 G + 0.5 B + 128
    Cr =  0.5 R - 0.418688 G - 0.081312 B + 128

    Returns three (H, W) uint8 planes, rounded to nearest.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    out = []
    for plane in (y, cb, cr):
        out.append(np.clip(np.rint(plane), 0, 255).astype(np.uint8))
    return out[0], out[1], out[2]


def ycbcr_to_rgb(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_ycbcr` in real arithmetic.

    Composing the two reproduces the original RGB within +/-1 per sample
    (the error budget of rounding each plane to 8 bits).
    """
    y = np.asarray(y, dtype=np.float64)
    cb = np.asarray(cb, dtype=np.float64) - 128.0
    cr = np.asarray(cr, dtype=np.float64) - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


# Decode-side conversion tables indexed by the raw uint8 chroma sample.
_i = np.arange(256, dtype=np.int32) - 128
_CR_R_TAB = (_FIX_1_40200 * _i + _ONE_HALF) >> _SCALEBITS
_CB_B_TAB = (_FIX_1_77200 * _i + _ONE_HALF) >> _SCALEBITS
_CR_G_TAB = -_FIX_0_71414 * _i
_CB_G_TAB = -_FIX_0_34414 * _i + _ONE_HALF
del _i


@njit(cache=True)
def _ycc_rgb_batch(y, cb, cr, crr, cbb, crg, cbg, out):  # pragma: no cover
    flat_y = y.reshape(-1)
    flat_cb = cb.reshape(-1)
    flat_cr = cr.reshape(-1)
    flat_out = out.reshape(-1, 3)
    for i in range(flat_y.shape[0]):
        yy = np.int32(flat_y[i])
        b_ = flat_cb[i]
        r_ = flat_cr[i]
        v = yy + crr[r_]
        flat_out[i, 0] = 0 if v < 0 else (255 if v > 255 else v)
        v = yy + ((cbg[b_] + crg[r_]) >> _SCALEBITS)
        flat_out[i, 1] = 0 if v < 0 else (255 if v > 255 else v)
        v = yy + cbb[b_]
        flat_out[i, 2] = 0 if v < 0 else (255 if v > 255 else v)


def ycbcr_to_rgb_int(y: np.ndarray, cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    """Fixed-point YCbCr -> RGB used on the decode path.

    Matches the integer table arithmetic of libjpeg's ycc_rgb_convert, so
    decoded pixels agree bit-for-bit with the reference decoder given
    identical Y/Cb/Cr inputs.
    """
    y = np.asarray(y)
    if y.dtype == np.uint8 and y.ndim >= 2:
        cb8 = np.ascontiguousarray(cb, dtype=np.uint8)
        cr8 = np.ascontiguousarray(cr, dtype=np.uint8)
        out = np.empty(y.shape + (3,), dtype=np.uint8)
        _ycc_rgb_batch(
            np.ascontiguousarray(y), cb8, cr8,
            _CR_R_TAB, _CB_B_TAB, _CR_G_TAB, _CB_G_TAB, out,
        )
        return out
    y = y.astype(np.int32, copy=False)
    cb = np.asarray(cb)
    cr = np.asarray(cr)
    out = np.empty(y.shape + (3,), dtype=np.uint8)

    t = _CR_R_TAB[cr]
    t += y
    np.clip(t, 0, 255, out=t)
    out[..., 0] = t

    np.add(_CB_G_TAB[cb], _CR_G_TAB[cr], out=t)
    t >>= _SCALEBITS
    t += y
    np.clip(t, 0, 255, out=t)
    out[..., 1] = t

    np.add(_CB_B_TAB[cb], y, out=t)
    np.clip(t, 0, 255, out=t)
    out[..., 2] = t
    return out
