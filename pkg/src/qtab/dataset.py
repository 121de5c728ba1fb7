"""Dataset ingestion: PPM/JPEG loading, JSON-lines manifests, synthetic corpus.

A dataset is a list of labeled RGB images held in memory as decoded
originals. The raw-size accounting for compression rates always uses the
decoded bitmap (width x height x 3), independent of how images were
stored on disk.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .jpeg.codec import decode, DecodeError
from .jpeg.dct import inverse_dct
from .proxy import ProxyClassifier, class_centroids, FLAT_CLASS
from .zigzag import from_zigzag

__all__ = [
    "Dataset",
    "ManifestError",
    "SyntheticCorpusSpec",
    "read_ppm",
    "write_ppm",
    "load_manifest",
    "generate_synthetic",
]


class ManifestError(ValueError):
    """Unreadable or inconsistent dataset manifest."""


@dataclass
class Dataset:
    """Labeled images with raw-size accounting.

    raw_bytes is the total uncompressed size (sum of width*height*3 over
    decoded originals); content_hash identifies the exact pixel data and
    labels for caching and log-compatibility checks.
    """

    images: list
    labels: np.ndarray
    class_count: int
    source: str = ""
    raw_bytes: int = field(init=False)
    content_hash: str = field(init=False)

    def __post_init__(self):
        if len(self.images) == 0:
            raise ManifestError("empty dataset")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != len(self.images):
            raise ManifestError("label count does not match image count")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise ManifestError(
                f"labels must lie in [0, {self.class_count}), got range "
                f"[{self.labels.min()}, {self.labels.max()}]"
            )
        self.raw_bytes = int(sum(im.shape[0] * im.shape[1] * 3 for im in self.images))
        digest = hashlib.sha256()
        digest.update(np.int64(self.class_count).tobytes())
        for im, label in zip(self.images, self.labels):
            digest.update(np.int64(im.shape[0]).tobytes())
            digest.update(np.int64(im.shape[1]).tobytes())
            digest.update(np.int64(label).tobytes())
            digest.update(np.ascontiguousarray(im).tobytes())
        self.content_hash = digest.hexdigest()

    def __len__(self) -> int:
        return len(self.images)


# ---------------------------------------------------------------------------
# PPM (P6) reader/writer
# ---------------------------------------------------------------------------

def read_ppm(path: Union[str, Path]) -> np.ndarray:
    """Read a binary P6 PPM with maxval 255 into (H, W, 3) uint8."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 supported, got {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=pos)
    if pixels.size != width * height * 3:
        raise ValueError(f"{path}: truncated pixel data")
    return pixels.reshape(height, width, 3).copy()


def write_ppm(path: Union[str, Path], image: np.ndarray) -> None:
    """Write (H, W, 3) uint8 RGB as binary P6 PPM."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("image must be (H, W, 3)")
    h, w = image.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image).tobytes())


def _load_image(path: Path) -> np.ndarray:
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".pnm"):
        return read_ppm(path)
    if suffix in (".jpg", ".jpeg"):
        try:
            return decode(path.read_bytes())
        except DecodeError as exc:
            raise ManifestError(f"{path}: {exc}") from exc
    raise ManifestError(f"{path}: unsupported image format {suffix!r}")


def load_manifest(path: Union[str, Path]) -> Dataset:
    """Load a JSON-lines manifest: one {"path": str, "label": int} per line.

    Paths are resolved relative to the manifest's directory. Duplicate
    paths are accepted and counted each time they appear.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    root = path.parent
    images, labels = [], []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            img_path = root / entry["path"]
            label = int(entry["label"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"{path}:{lineno}: malformed entry: {exc}") from exc
        if not img_path.is_file():
            raise ManifestError(f"{path}:{lineno}: missing image {img_path}")
        images.append(_load_image(img_path))
        labels.append(label)
    if not images:
        raise ManifestError(f"{path}: empty manifest")
    return Dataset(
        images=images,
        labels=np.array(labels, dtype=np.int64),
        class_count=int(max(labels)) + 1,
        source=str(path),
    )


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticCorpusSpec:
    """Parameters of the generated desk-scale corpus.

    Each textured class lays its DCT energy across the frequency bands in
    proportion to its codebook centroid, through two coefficient
    populations: "beacons" too large for any 8-bit quantizer to zero
    (they anchor the class signature at every compression level) and
    mid-amplitude "fragile" coefficients that coarse quantization kills
    band by band. High-frequency fragiles are what a well-shaped table
    can discard cheaply; tables that keep them pay bytes for nothing.
    """

    n_classes: int
    images_per_class: int
    width: int = 64
    height: int = 64
    seed: int = 0
    beacon_rate: float = 0.020
    fragile_rate: float = 0.55
    beacon_amplitude: float = 170.0
    fragile_amplitude: float = 42.0
    beacon_detune: float = 0.75
    min_proxy_accuracy: float = 0.95

    def __post_init__(self):
        if self.width % 8 or self.height % 8:
            raise ValueError("width and height must be multiples of 8")
        if self.n_classes < 2 or self.images_per_class < 1:
            raise ValueError("need >= 2 classes and >= 1 image per class")


def _place_exact(rng, slots: int, count: int) -> np.ndarray:
    """Choose `count` of `slots` flat indices without replacement."""
    return rng.permutation(slots)[:count]


def _synth_image(spec: SyntheticCorpusSpec, label: int, index: int,
                 centroids: np.ndarray, proxy: ProxyClassifier) -> np.ndarray:
    """One corpus image, deterministic in (seed, label, index)."""
    rng = np.random.default_rng(
        np.random.SeedSequence(spec.seed, spawn_key=(label, index))
    )
    if label == FLAT_CLASS:
        level = int(rng.integers(40, 216))
        gray = np.full((spec.height, spec.width), level, dtype=np.uint8)
        return np.repeat(gray[:, :, None], 3, axis=2)

    target = centroids[label]
    nby, nbx = spec.height // 8, spec.width // 8
    nblocks = nby * nbx
    bands = (proxy.bands.lf, proxy.bands.mf, proxy.bands.hf)
    coeffs_zz = np.zeros((nblocks, 64))

    # Beacons carry a deliberately blurred copy of the signature (shrunk
    # toward the simplex center): when coarse quantization strips the
    # fragile coefficients, the surviving ratios drift off the codebook
    # and accuracy degrades instead of being pinned at 1. The fragile
    # coding compensates so the uncompressed blend still hits the
    # centroid.
    beacon_code = (1 - spec.beacon_detune) * target + spec.beacon_detune / 3.0
    mean_beacon = spec.beacon_amplitude * 1.03   # lognormal(0.25) mean factor
    mean_fragile = spec.fragile_amplitude * 1.15  # lognormal(0.5) x image gain
    beta = (spec.beacon_rate * mean_beacon) / (
        spec.beacon_rate * mean_beacon + spec.fragile_rate * mean_fragile
    )
    fragile_code = np.clip((target - beta * beacon_code) / (1 - beta), 0.015, None)

    img_gain = rng.lognormal(mean=0.0, sigma=0.18)
    for band_row, positions in enumerate(bands):
        active = np.array([p for p in positions if p != 0])
        slots = nblocks * active.size
        # Exact per-image counts (stratified placement): per-band energy
        # then estimates its target with only amplitude noise.
        n_beacon = int(round(spec.beacon_rate * beacon_code[band_row] * slots))
        n_fragile = int(round(spec.fragile_rate * fragile_code[band_row] * slots))
        placement = _place_exact(rng, slots, n_beacon + n_fragile)
        beacon_idx, fragile_idx = placement[:n_beacon], placement[n_beacon:]

        amp_b = spec.beacon_amplitude * rng.lognormal(0.0, 0.25, n_beacon)
        amp_b = np.clip(amp_b, 140.0, 520.0)
        amp_f = spec.fragile_amplitude * rng.lognormal(0.0, 0.5, n_fragile) * img_gain
        amp_f = np.clip(amp_f, 18.0, 122.0)

        flat = np.zeros(slots)
        flat[beacon_idx] = amp_b * rng.choice((-1.0, 1.0), n_beacon)
        flat[fragile_idx] = amp_f * rng.choice((-1.0, 1.0), n_fragile)
        coeffs_zz[:, active] = flat.reshape(nblocks, active.size)

    coeffs_zz[:, 0] = rng.normal(0.0, 60.0, size=nblocks)

    blocks = inverse_dct(from_zigzag(coeffs_zz)) + 128.0
    plane = (
        blocks.reshape(nby, nbx, 8, 8)
        .transpose(0, 2, 1, 3)
        .reshape(spec.height, spec.width)
    )
    gray = np.clip(np.rint(plane), 0, 255).astype(np.uint8)
    return np.repeat(gray[:, :, None], 3, axis=2)


def generate_synthetic(spec: SyntheticCorpusSpec, out_dir: Union[str, Path]) -> Path:
    """Write the synthetic corpus to disk and return the manifest path.

    Generation is deterministic in the spec and self-verifying: it asserts
    the proxy classifier reaches the spec's minimum accuracy on the
    uncompressed images before returning.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    proxy = ProxyClassifier(spec.n_classes)
    centroids = class_centroids(spec.n_classes)

    entries = []
    correct = 0
    total = 0
    for label in range(spec.n_classes):
        class_dir = out_dir / f"class_{label}"
        class_dir.mkdir(exist_ok=True)
        for index in range(spec.images_per_class):
            image = _synth_image(spec, label, index, centroids, proxy)
            rel = f"class_{label}/{index}.ppm"
            write_ppm(out_dir / rel, image)
            entries.append({"path": rel, "label": label})
            correct += int(proxy.classify(image) == label)
            total += 1

    accuracy = correct / total
    if accuracy < spec.min_proxy_accuracy:
        raise AssertionError(
            f"synthetic corpus failed self-check: proxy accuracy "
            f"{accuracy:.3f} < {spec.min_proxy_accuracy}"
        )
    manifest = out_dir / "manifest.jsonl"
    with open(manifest, "w") as fh:
        for entry in entries:
            fh.write(json.dumps(entry) + "\n")
    return manifest


def synthetic_dataset(spec: SyntheticCorpusSpec) -> Dataset:
    """In-memory corpus with the same content as :func:`generate_synthetic`."""
    proxy = ProxyClassifier(spec.n_classes)
    centroids = class_centroids(spec.n_classes)
    images, labels = [], []
    for label in range(spec.n_classes):
        for index in range(spec.images_per_class):
            images.append(_synth_image(spec, label, index, centroids, proxy))
            labels.append(label)
    return Dataset(
        images=images,
        labels=np.array(labels, dtype=np.int64),
        class_count=spec.n_classes,
        source=f"synthetic(seed={spec.seed})",
    )
