"""Quantization tables: standard tables, quality scaling, sampling, bounds.

The 8x8 quantization table is the search variable of the whole toolkit.
This module owns its representation and the table-generating machinery:
the ITU-T T.81 Annex K typical tables, IJG quality-factor scaling, sorted
random sampling along the zig-zag order, and the boundary matrices derived
from Pareto-frontier tables that bounded search strategies sample within.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .zigzag import ZIGZAG_ORDER

__all__ = [
    "QTable",
    "SampleRange",
    "Bounds",
    "FrequencyBands",
    "standard_table",
    "scale_by_quality",
    "sorted_random_sample",
    "compute_bounds",
    "default_bands",
    "EmptyWindowError",
]

# ITU-T T.81 Annex K "typical" quantization tables (the libjpeg defaults).
STANDARD_LUMA = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int32)

STANDARD_CHROMA = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.int32)


class QTable:
    """An 8x8 integer quantization table with entries in [1, 255].

    Immutable value type: the backing array is copied on construction and
    marked read-only, so tables can be shared freely across threads and
    used as cache keys.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        arr = np.asarray(entries, dtype=np.int32)
        if arr.shape != (8, 8):
            raise ValueError(f"Q-table must be 8x8, got shape {arr.shape}")
        if arr.min() < 1 or arr.max() > 255:
            raise ValueError(
                f"Q-table entries must lie in [1, 255], got range "
                f"[{arr.min()}, {arr.max()}]"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        self._entries = arr

    @property
    def entries(self) -> np.ndarray:
        """Read-only (8, 8) int32 view of the table."""
        return self._entries

    def zigzag_vector(self) -> np.ndarray:
        """Entries serialized along the standard zig-zag order."""
        return self._entries.reshape(64)[ZIGZAG_ORDER]

    def transposed(self) -> "QTable":
        return QTable(self._entries.T)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    def __hash__(self) -> int:
        return hash(self._entries.tobytes())

    def __repr__(self) -> str:
        return f"QTable({self._entries.tolist()!r})"

    # -- serialization ----------------------------------------------------

    def to_text(self) -> str:
        """8 lines x 8 space-separated integers, row-major."""
        return "\n".join(" ".join(str(v) for v in row) for row in self._entries) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QTable":
        values = [int(tok) for tok in text.split()]
        if len(values) != 64:
            raise ValueError(f"expected 64 integers, got {len(values)}")
        return cls(np.array(values, dtype=np.int32).reshape(8, 8))

    def to_json(self) -> str:
        return json.dumps(self._entries.tolist())

    @classmethod
    def from_json(cls, text: str) -> "QTable":
        return cls(np.array(json.loads(text), dtype=np.int32))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "QTable":
        """Load from a .json (array-of-arrays) or text (8x8 integers) file."""
        text = Path(path).read_text()
        stripped = text.lstrip()
        if stripped.startswith("["):
            return cls.from_json(text)
        return cls.from_text(text)

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(self.to_json() + "\n")
        else:
            path.write_text(self.to_text())


@dataclass(frozen=True)
class SampleRange:
    """Integer value range [s, e] that sorted random sampling draws from."""

    s: int
    e: int

    def __post_init__(self):
        if not (1 <= self.s < self.e <= 255):
            raise ValueError(f"need 1 <= s < e <= 255, got s={self.s}, e={self.e}")


@dataclass(frozen=True)
class Bounds:
    """Elementwise box constraints for bounded search, kept as reals.

    Integer tables are obtained by rounding samples to the nearest integer
    and clamping into [1, 255].
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != (8, 8) or upper.shape != (8, 8):
            raise ValueError("bounds must be 8x8 matrices")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def full_box(cls) -> "Bounds":
        """The unconstrained table space [1, 255]^64."""
        return cls(np.full((8, 8), 1.0), np.full((8, 8), 255.0))

    def round_clamp(self, values: np.ndarray) -> np.ndarray:
        """Round real-valued table entries to integers inside [1, 255]."""
        return np.clip(np.rint(values), 1, 255).astype(np.int32)

    def contains(self, table: QTable) -> bool:
        """True if every entry is inside the rounded integer box."""
        lo = self.round_clamp(self.lower)
        hi = self.round_clamp(self.upper)
        e = table.entries
        return bool(np.all(e >= lo) and np.all(e <= hi))

    def sample_table(self, rng: np.random.Generator) -> QTable:
        """Draw one table, each entry uniform in its [lower, upper] interval."""
        reals = rng.uniform(self.lower, self.upper)
        return QTable(self.round_clamp(reals))


@dataclass(frozen=True)
class FrequencyBands:
    """Partition of zig-zag positions 0..63 into low/mid/high bands."""

    lf: tuple
    mf: tuple
    hf: tuple

    def __post_init__(self):
        union = set(self.lf) | set(self.mf) | set(self.hf)
        total = len(self.lf) + len(self.mf) + len(self.hf)
        if union != set(range(64)) or total != 64:
            raise ValueError("bands must partition zig-zag positions 0..63")
        if not (max(self.lf) < min(self.mf) < max(self.mf) < min(self.hf)):
            raise ValueError("bands must be contiguous and ordered LF < MF < HF")

    @property
    def area_of_interest(self) -> tuple:
        """Zig-zag positions where quantization changes matter most: LF + MF."""
        return self.lf + self.mf

    def raster_cells(self, positions: Iterable[int]) -> list:
        """Map zig-zag positions to (row, col) cells of the 8x8 table."""
        cells = []
        for p in positions:
            r = int(ZIGZAG_ORDER[p])
            cells.append((r // 8, r % 8))
        return cells


def default_bands(lf_end: int = 10, mf_end: int = 36) -> FrequencyBands:
    """Default band split by zig-zag position: LF 0..9, MF 10..35, HF 36..63.

    The split points are configurable; the defaults are a documented choice,
    not a standard.
    """
    if not (0 < lf_end < mf_end < 64):
        raise ValueError("need 0 < lf_end < mf_end < 64")
    return FrequencyBands(
        lf=tuple(range(0, lf_end)),
        mf=tuple(range(lf_end, mf_end)),
        hf=tuple(range(mf_end, 64)),
    )


def standard_table(channel: str) -> QTable:
    """The Annex-K typical table for 'luma' or 'chroma'."""
    if channel == "luma":
        return QTable(STANDARD_LUMA)
    if channel == "chroma":
        return QTable(STANDARD_CHROMA)
    raise ValueError(f"channel must be 'luma' or 'chroma', got {channel!r}")


def scale_by_quality(base: QTable, quality: int) -> QTable:
    """Scale a base table by an IJG quality factor in [1, 100].

    scale = 5000/q for q < 50, else 200 - 2q; each entry becomes
    floor((entry * scale + 50) / 100), clamped into [1, 255]. Quality 50
    leaves the table unchanged; quality 100 clamps every entry to 1.
    """
    if not (1 <= quality <= 100):
        raise ValueError(f"quality factor must be in [1, 100], got {quality}")
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    scaled = (base.entries.astype(np.int64) * scale + 50) // 100
    return QTable(np.clip(scaled, 1, 255))


def sorted_random_sample(
    sample_range: SampleRange,
    rng: np.random.Generator,
    descending: bool = False,
) -> QTable:
    """Draw 64 uniform integers in [s, e], sort, lay out along the zig-zag.

    Ascending order puts the smallest quantizers at low frequencies, which
    matches the shape of the standard tables. `descending` inverts the
    orientation.
    """
    draws = np.sort(rng.integers(sample_range.s, sample_range.e + 1, size=64))
    if descending:
        draws = draws[::-1]
    flat = np.empty(64, dtype=np.int32)
    flat[ZIGZAG_ORDER] = draws
    return QTable(flat.reshape(8, 8))


class EmptyWindowError(ValueError):
    """No frontier point falls inside the requested compression-rate window."""


def compute_bounds(points: Iterable, cr_window: Sequence[float]) -> Bounds:
    """Boundary matrices from frontier tables in a compression-rate window.

    Takes the points whose compression rate lies in `cr_window`, augments
    them with their transposes, and bounds each cell by the elementwise
    min/max across that population widened by half its population standard
    deviation. Both matrices are symmetric by construction and clamped
    into [1, 255].

    `points` is any iterable of objects with `.qtable` and
    `.compression_rate` attributes (e.g. frontier EvalPoints).
    """
    lo, hi = float(cr_window[0]), float(cr_window[1])
    selected = [p.qtable for p in points if lo <= p.compression_rate <= hi]
    if not selected:
        raise EmptyWindowError(
            f"no frontier point has compression rate in [{lo}, {hi}]"
        )
    stack = np.stack(
        [t.entries for t in selected] + [t.entries.T for t in selected]
    ).astype(np.int64)
    # Population std via exact integer sums: entries are integers, so the
    # only roundings are the final sqrt and division. This makes the
    # output exactly symmetric (the transposed population is the same
    # multiset) and bit-reproducible against a naive reimplementation.
    n = stack.shape[0]
    s1 = stack.sum(axis=0)
    s2 = (stack * stack).sum(axis=0)
    sigma = np.sqrt((n * s2 - s1 * s1).astype(np.float64)) / n
    lower = np.clip(stack.min(axis=0) - 0.5 * sigma, 1, 255)
    upper = np.clip(stack.max(axis=0) + 0.5 * sigma, 1, 255)
    return Bounds(lower, upper)
