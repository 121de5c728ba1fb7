"""Frequency-band proxy classifier.

A deterministic, dependency-free stand-in for a real vision model: it
classifies an image by the distribution of its DCT energy across the
low/mid/high frequency bands, matched against a fixed codebook of class
centroids. Because the features are exactly the quantities a Q-table
distorts, classification accuracy degrades when quantization damages the
band that carries a class's signature.

It makes the whole test suite runnable with no ML dependency. It is not
a model of any real network's behavior.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .jpeg.dct import DCT_MATRIX
from .qtable import FrequencyBands, default_bands
from .zigzag import INVERSE_ZIGZAG

__all__ = ["ProxyClassifier", "class_centroids", "FLAT_CLASS"]

# Class 0 is reserved for images with (near-)zero AC energy.
FLAT_CLASS = 0

# Mean absolute AC energy below this counts as "no texture at all".
_FLAT_ENERGY_THRESHOLD = 1e-3


def class_centroids(n_classes: int) -> np.ndarray:
    """Codebook of band-energy-ratio centroids for classes 1..n_classes-1.

    Textured classes sit on a triangular lattice over the (lf, mf, hf)
    simplex, shrunk toward the center so every band keeps a nonzero
    share; when fewer classes are requested than lattice points, an
    evenly strided subset keeps the spread. Row 0 (the flat class) has no
    centroid and is filled with NaN.
    """
    if n_classes < 2:
        raise ValueError("need at least 2 classes (flat + one textured)")
    k = n_classes - 1
    m = 1
    while (m + 1) * (m + 2) // 2 < k:
        m += 1
    grid = np.array(
        [(i, j, m - i - j) for i in range(m + 1) for j in range(m + 1 - i)],
        dtype=np.float64,
    ) / m
    pick = np.round(np.linspace(0, len(grid) - 1, k)).astype(int)
    out = np.full((n_classes, 3), np.nan)
    out[1:] = 0.76 * grid[pick] + 0.24 / 3.0
    return out


@njit(cache=True)
def _luma_rows(rgb, out):  # pragma: no cover - jitted
    flat = rgb.reshape(-1, 3)
    flat_out = out.reshape(-1)
    for i in range(flat.shape[0]):
        y = 0.299 * flat[i, 0] + 0.587 * flat[i, 1] + 0.114 * flat[i, 2]
        flat_out[i] = np.uint8(np.rint(y))


@njit(cache=True)
def _band_energies_kernel(lumas, dctm, weights, out):  # pragma: no cover
    """Per-image weighted mean |DCT| over 8x8 luma blocks.

    lumas: (n, H, W) uint8 with H, W multiples of 8; weights: (3, 8, 8)
    per-band coefficient weights in raster layout; out: (n, 3).
    """
    n, height, width = lumas.shape
    bh, bw = height // 8, width // 8
    tmp = np.empty((8, 8), dtype=np.float64)
    for img in range(n):
        e0 = 0.0
        e1 = 0.0
        e2 = 0.0
        for by in range(bh):
            for bx in range(bw):
                for u in range(8):
                    for x in range(8):
                        s = 0.0
                        for k in range(8):
                            s += dctm[u, k] * (
                                np.float64(lumas[img, by * 8 + k, bx * 8 + x]) - 128.0
                            )
                        tmp[u, x] = s
                for u in range(8):
                    for v in range(8):
                        s = 0.0
                        for k in range(8):
                            s += tmp[u, k] * dctm[v, k]
                        a = abs(s)
                        e0 += weights[0, u, v] * a
                        e1 += weights[1, u, v] * a
                        e2 += weights[2, u, v] * a
        nb = bh * bw
        out[img, 0] = e0 / nb
        out[img, 1] = e1 / nb
        out[img, 2] = e2 / nb


class ProxyClassifier:
    """Nearest-centroid classifier over DCT band-energy ratios."""

    def __init__(self, n_classes: int, bands: FrequencyBands | None = None):
        self.n_classes = n_classes
        self.bands = bands if bands is not None else default_bands()
        self.centroids = class_centroids(n_classes)
        # Zig-zag position -> band weight, normalized to a per-band mean;
        # DC carries brightness, not texture, so it is excluded.
        masks = np.zeros((3, 64), dtype=np.float64)
        for row, positions in enumerate((self.bands.lf, self.bands.mf, self.bands.hf)):
            for p in positions:
                if p != 0:
                    masks[row, p] = 1.0
        masks /= masks.sum(axis=1, keepdims=True)
        self._band_masks = masks
        # Same weights laid out over raster (u, v) cells for the kernel.
        self._band_weights = np.ascontiguousarray(
            masks[:, INVERSE_ZIGZAG.reshape(8, 8)]
        )

    # -- features ----------------------------------------------------------

    def band_energies(self, image: np.ndarray) -> np.ndarray:
        """Mean absolute DCT coefficient per band over all luma blocks."""
        image = np.asarray(image)
        luma = np.empty(image.shape[:2], dtype=np.uint8)
        _luma_rows(np.ascontiguousarray(image), luma)
        return self.band_energies_of_luma(luma)

    def band_energies_of_luma(self, luma: np.ndarray) -> np.ndarray:
        h, w = luma.shape
        if h < 8 or w < 8:
            raise ValueError("image must be at least 8x8")
        return self._energies_stack(luma[None, : h - h % 8, : w - w % 8])[0]

    def _energies_stack(self, lumas: np.ndarray) -> np.ndarray:
        out = np.empty((lumas.shape[0], 3), dtype=np.float64)
        _band_energies_kernel(
            np.ascontiguousarray(lumas), DCT_MATRIX, self._band_weights, out
        )
        return out

    # -- classification ----------------------------------------------------

    def classify(self, image: np.ndarray) -> int:
        """Deterministic class label for one RGB image."""
        return self.classify_from_energies(self.band_energies(image))

    def classify_from_energies(self, energies: np.ndarray) -> int:
        total = energies.sum()
        if total < _FLAT_ENERGY_THRESHOLD:
            return FLAT_CLASS
        ratios = energies / total
        dist = np.sum((self.centroids[1:] - ratios) ** 2, axis=1)
        return 1 + int(np.argmin(dist))

    def classify_energies_batch(self, energies: np.ndarray) -> np.ndarray:
        """Vectorized labels from an (n, 3) array of band energies."""
        energies = np.asarray(energies, dtype=np.float64)
        totals = energies.sum(axis=1)
        safe = np.where(totals > 0, totals, 1.0)
        ratios = energies / safe[:, None]
        dist = ((ratios[:, None, :] - self.centroids[None, 1:, :]) ** 2).sum(axis=2)
        labels = 1 + np.argmin(dist, axis=1)
        labels[totals < _FLAT_ENERGY_THRESHOLD] = FLAT_CLASS
        return labels.astype(np.int64)

    def classify_batch(self, images) -> np.ndarray:
        """Labels for a sequence of images, batching same-shape groups."""
        images = list(images)
        labels = np.empty(len(images), dtype=np.int64)
        groups: dict[tuple, list] = {}
        for i, img in enumerate(images):
            groups.setdefault(np.asarray(img).shape, []).append(i)
        for shape, idxs in groups.items():
            stack = np.stack([np.asarray(images[i]) for i in idxs])
            n, h, w = stack.shape[:3]
            lumas = np.empty((n, h, w), dtype=np.uint8)
            _luma_rows(np.ascontiguousarray(stack), lumas)
            lumas = lumas[:, : h - h % 8, : w - w % 8]
            labels[idxs] = self.classify_energies_batch(self._energies_stack(lumas))
        return labels
