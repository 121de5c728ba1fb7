"""Zig-zag serialization order for 8x8 coefficient blocks."""

import numpy as np

# ZIGZAG_ORDER[k] is the raster (row-major) index of the k-th coefficient in
# zig-zag scan order: DC first, then increasing spatial frequency.
ZIGZAG_ORDER = np.array([
    0,  1,  8, 16,  9,  2,  3, 10,
    17, 24, 32, 25, 18, 11,  4,  5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13,  6,  7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
], dtype=np.int64)

# INVERSE_ZIGZAG[r] is the zig-zag position of raster index r.
INVERSE_ZIGZAG = np.argsort(ZIGZAG_ORDER)


def to_zigzag(block: np.ndarray) -> np.ndarray:
    """Serialize an 8x8 block (or a batch of them) into zig-zag order.

    Accepts shape (8, 8) or (n, 8, 8); returns shape (64,) or (n, 64).
    """
    flat = np.asarray(block).reshape(*block.shape[:-2], 64)
    return flat[..., ZIGZAG_ORDER]


def from_zigzag(seq: np.ndarray) -> np.ndarray:
    """Rebuild an 8x8 block (or a batch) from a zig-zag sequence."""
    seq = np.asarray(seq)
    flat = seq[..., INVERSE_ZIGZAG]
    return flat.reshape(*seq.shape[:-1], 8, 8)
