"""8x8 DCT-II with JPEG normalization, plus the decoder's integer IDCT.

The float forward/inverse pair is the mathematical reference used by the
encoder and by the proxy classifier's band-energy features. The decode
path instead uses a fixed-point inverse transform that reproduces the
arithmetic of the widespread libjpeg "islow" IDCT bit-for-bit, so decoded
samples agree with the reference decoder exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Orthonormal DCT-II basis: DCT_MATRIX[u, x] = 0.5 * C(u) * cos((2x+1)u*pi/16)
_u = np.arange(8).reshape(8, 1)
_x = np.arange(8).reshape(1, 8)
DCT_MATRIX = 0.5 * np.cos((2 * _x + 1) * _u * np.pi / 16)
DCT_MATRIX[0, :] *= 1 / np.sqrt(2)
del _u, _x


def forward_dct(blocks: np.ndarray) -> np.ndarray:
    """2D DCT-II of level-shifted spatial blocks, shape (8, 8) or (n, 8, 8)."""
    blocks = np.asarray(blocks, dtype=np.float64)
    return DCT_MATRIX @ blocks @ DCT_MATRIX.T


def inverse_dct(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`forward_dct`; round-trips within 1e-9 per entry."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return DCT_MATRIX.T @ coeffs @ DCT_MATRIX


def quantize(coeffs: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Divide by the table and round half away from zero.

    Shapes broadcast elementwise: (8, 8), (n, 8, 8), or zig-zag (n, 64)
    against a matching divisor layout. Returns int32 levels.
    """
    scaled = np.asarray(coeffs, dtype=np.float64) / qtable
    scaled += np.copysign(0.5, scaled)
    return np.trunc(scaled, out=scaled).astype(np.int32)


@njit(cache=True)
def quantize_rows(coeffs, divisors, out):  # pragma: no cover - jitted
    """Row-batched :func:`quantize` with a shared 64-entry divisor vector.

    Bit-identical to the vectorized form (same IEEE ops in the same
    order); exists because the evaluator calls it in a hot loop.
    """
    for i in range(coeffs.shape[0]):
        for k in range(64):
            x = coeffs[i, k] / divisors[k]
            if x >= 0.0:
                x += 0.5
            else:
                x -= 0.5
            out[i, k] = np.int32(x)


def dequantize(levels: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Multiply quantized levels back up to coefficient scale."""
    return np.asarray(levels, dtype=np.int32) * np.asarray(qtable, dtype=np.int32)


# ---------------------------------------------------------------------------
# Fixed-point inverse DCT (libjpeg "islow" arithmetic, CONST_BITS=13).
# ---------------------------------------------------------------------------

_CONST_BITS = 13
_PASS1_BITS = 2

_FIX_0_298631336 = 2446
_FIX_0_390180644 = 3196
_FIX_0_541196100 = 4433
_FIX_0_765366865 = 6270
_FIX_0_899976223 = 7373
_FIX_1_175875602 = 9633
_FIX_1_501321110 = 12299
_FIX_1_847759065 = 15137
_FIX_1_961570560 = 16069
_FIX_2_053119869 = 16819
_FIX_2_562915447 = 20995
_FIX_3_072711026 = 25172


@njit(cache=True)
def idct_islow_batch(levels, qtable, out):  # pragma: no cover - jitted
    """Dequantize + integer IDCT + level shift for a batch of blocks.

    levels: (n, 8, 8) int32 quantized coefficients in raster order.
    qtable: (8, 8) int32.
    out: (n, 8, 8) uint8 output samples.
    """
    n = levels.shape[0]
    ws = np.empty((8, 8), dtype=np.int64)
    for b in range(n):
        blk = levels[b]
        # Pass 1: columns. Intermediates scaled up by PASS1_BITS.
        for col in range(8):
            if (blk[1, col] | blk[2, col] | blk[3, col] | blk[4, col]
                    | blk[5, col] | blk[6, col] | blk[7, col]) == 0:
                dcval = np.int64(blk[0, col]) * qtable[0, col] << _PASS1_BITS
                for row in range(8):
                    ws[row, col] = dcval
                continue

            z2 = np.int64(blk[2, col]) * qtable[2, col]
            z3 = np.int64(blk[6, col]) * qtable[6, col]
            z1 = (z2 + z3) * _FIX_0_541196100
            tmp2 = z1 + z3 * (-_FIX_1_847759065)
            tmp3 = z1 + z2 * _FIX_0_765366865

            z2 = np.int64(blk[0, col]) * qtable[0, col]
            z3 = np.int64(blk[4, col]) * qtable[4, col]
            tmp0 = (z2 + z3) << _CONST_BITS
            tmp1 = (z2 - z3) << _CONST_BITS

            tmp10 = tmp0 + tmp3
            tmp13 = tmp0 - tmp3
            tmp11 = tmp1 + tmp2
            tmp12 = tmp1 - tmp2

            t0 = np.int64(blk[7, col]) * qtable[7, col]
            t1 = np.int64(blk[5, col]) * qtable[5, col]
            t2 = np.int64(blk[3, col]) * qtable[3, col]
            t3 = np.int64(blk[1, col]) * qtable[1, col]

            z1 = t0 + t3
            z2 = t1 + t2
            z3 = t0 + t2
            z4 = t1 + t3
            z5 = (z3 + z4) * _FIX_1_175875602

            t0 = t0 * _FIX_0_298631336
            t1 = t1 * _FIX_2_053119869
            t2 = t2 * _FIX_3_072711026
            t3 = t3 * _FIX_1_501321110
            z1 = z1 * (-_FIX_0_899976223)
            z2 = z2 * (-_FIX_2_562915447)
            z3 = z3 * (-_FIX_1_961570560) + z5
            z4 = z4 * (-_FIX_0_390180644) + z5

            t0 += z1 + z3
            t1 += z2 + z4
            t2 += z2 + z3
            t3 += z1 + z4

            shift = _CONST_BITS - _PASS1_BITS
            half = np.int64(1) << (shift - 1)
            ws[0, col] = (tmp10 + t3 + half) >> shift
            ws[7, col] = (tmp10 - t3 + half) >> shift
            ws[1, col] = (tmp11 + t2 + half) >> shift
            ws[6, col] = (tmp11 - t2 + half) >> shift
            ws[2, col] = (tmp12 + t1 + half) >> shift
            ws[5, col] = (tmp12 - t1 + half) >> shift
            ws[3, col] = (tmp13 + t0 + half) >> shift
            ws[4, col] = (tmp13 - t0 + half) >> shift

        # Pass 2: rows. Final descale by CONST_BITS+PASS1_BITS+3.
        shift = _CONST_BITS + _PASS1_BITS + 3
        half = np.int64(1) << (shift - 1)
        for row in range(8):
            if (ws[row, 1] | ws[row, 2] | ws[row, 3] | ws[row, 4]
                    | ws[row, 5] | ws[row, 6] | ws[row, 7]) == 0:
                dc = ((ws[row, 0] + (1 << (_PASS1_BITS + 2))) >> (_PASS1_BITS + 3)) + 128
                if dc < 0:
                    dc = 0
                elif dc > 255:
                    dc = 255
                for col in range(8):
                    out[b, row, col] = dc
                continue

            z2 = ws[row, 2]
            z3 = ws[row, 6]
            z1 = (z2 + z3) * _FIX_0_541196100
            tmp2 = z1 + z3 * (-_FIX_1_847759065)
            tmp3 = z1 + z2 * _FIX_0_765366865

            tmp0 = (ws[row, 0] + ws[row, 4]) << _CONST_BITS
            tmp1 = (ws[row, 0] - ws[row, 4]) << _CONST_BITS

            tmp10 = tmp0 + tmp3
            tmp13 = tmp0 - tmp3
            tmp11 = tmp1 + tmp2
            tmp12 = tmp1 - tmp2

            t0 = ws[row, 7]
            t1 = ws[row, 5]
            t2 = ws[row, 3]
            t3 = ws[row, 1]

            z1 = t0 + t3
            z2 = t1 + t2
            z3 = t0 + t2
            z4 = t1 + t3
            z5 = (z3 + z4) * _FIX_1_175875602

            t0 = t0 * _FIX_0_298631336
            t1 = t1 * _FIX_2_053119869
            t2 = t2 * _FIX_3_072711026
            t3 = t3 * _FIX_1_501321110
            z1 = z1 * (-_FIX_0_899976223)
            z2 = z2 * (-_FIX_2_562915447)
            z3 = z3 * (-_FIX_1_961570560) + z5
            z4 = z4 * (-_FIX_0_390180644) + z5

            t0 += z1 + z3
            t1 += z2 + z4
            t2 += z2 + z3
            t3 += z1 + z4

            ws[row, 0] = tmp10 + t3
            ws[row, 1] = tmp11 + t2
            ws[row, 2] = tmp12 + t1
            ws[row, 3] = tmp13 + t0
            ws[row, 4] = tmp13 - t0
            ws[row, 5] = tmp12 - t1
            ws[row, 6] = tmp11 - t2
            ws[row, 7] = tmp10 - t3
            for col in range(8):
                v = ((ws[row, col] + half) >> shift) + 128
                if v < 0:
                    v = 0
                elif v > 255:
                    v = 255
                out[b, row, col] = v


def idct_islow(levels: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Batched fixed-point inverse DCT; returns (n, 8, 8) uint8 samples."""
    levels = np.ascontiguousarray(levels, dtype=np.int32)
    if levels.ndim == 2:
        levels = levels[None]
    out = np.empty(levels.shape, dtype=np.uint8)
    idct_islow_batch(levels, np.ascontiguousarray(qtable, dtype=np.int32), out)
    return out
