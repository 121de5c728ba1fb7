"""Turn (dataset, Q-table) into an EvalPoint: compression rate + accuracy.

The evaluator compresses every image with the candidate table, decodes,
and submits the decoded images to a pluggable evaluator (proxy
classifier, external classifier process, or PSNR threshold). Byte counts
and decoded pixels are exactly those of the streaming codec; the batched
implementation here only skips re-deriving what is already known (forward
DCT of the originals, the lossless entropy round trip) and is
cross-checked against the full codec in the test suite.

Results are memoized in an on-disk cache keyed by dataset content,
evaluator identity, channel policy, and table, so search strategies never
pay twice for the same table.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import Dataset
from .external import ExternalClassifier, EvaluatorProtocolError
from .jpeg import huffman
from .jpeg.codec import (
    build_headers,
    _pad_to_multiple,
    _downsample_2x2,
    _plane_to_blocks,
    _scan_order,
    _h2v2_fancy_upsample,
    _TAB_OF_COMP,
    _ENC_DC_TABLES,
    _ENC_AC_TABLES,
)
from .jpeg.color import rgb_to_ycbcr, ycbcr_to_rgb_int
from .jpeg.dct import forward_dct, quantize, quantize_rows, idct_islow
from .proxy import ProxyClassifier
from .qtable import QTable, standard_table, default_bands
from .zigzag import ZIGZAG_ORDER, INVERSE_ZIGZAG

__all__ = [
    "EvalPoint",
    "EvaluatorSpec",
    "EvalCache",
    "DatasetEvaluator",
    "compression_rate",
    "evaluate",
    "EvaluatorProtocolError",
]


@dataclass(frozen=True)
class EvalPoint:
    """One trial result: the table and what it bought."""

    qtable: QTable
    compression_rate: float
    accuracy: float
    mean_psnr: Optional[float] = None
    trial_index: int = 0
    strategy_tag: str = ""

    def __post_init__(self):
        if not self.compression_rate > 0:
            raise ValueError(f"compression rate must be > 0, got {self.compression_rate}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {self.accuracy}")

    def to_json_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "strategy_tag": self.strategy_tag,
            "compression_rate": self.compression_rate,
            "accuracy": self.accuracy,
            "mean_psnr": self.mean_psnr,
            "qtable": self.qtable.entries.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "EvalPoint":
        return cls(
            qtable=QTable(d["qtable"]),
            compression_rate=d["compression_rate"],
            accuracy=d["accuracy"],
            mean_psnr=d.get("mean_psnr"),
            trial_index=d.get("trial_index", 0),
            strategy_tag=d.get("strategy_tag", ""),
        )


_EVALUATOR_KINDS = {
    "proxy_classifier": (),
    "external_classifier": (),  # needs cmd or host+port, checked below
    "psnr_threshold": ("threshold_db",),
    "oracle": (),  # test-harness evaluator: reads labels from the dataset
}


@dataclass(frozen=True)
class EvaluatorSpec:
    """Which evaluator to run and how to configure it."""

    kind: str
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _EVALUATOR_KINDS:
            raise ValueError(
                f"unknown evaluator kind {self.kind!r}; "
                f"expected one of {sorted(_EVALUATOR_KINDS)}"
            )
        for key in _EVALUATOR_KINDS[self.kind]:
            if key not in self.config:
                raise ValueError(f"evaluator {self.kind!r} requires config key {key!r}")
        if self.kind == "external_classifier":
            has_cmd = "cmd" in self.config
            has_net = "host" in self.config and "port" in self.config
            if not (has_cmd or has_net):
                raise ValueError(
                    "external_classifier requires either 'cmd' or 'host'+'port'"
                )

    def evaluator_id(self) -> str:
        return f"{self.kind}:{json.dumps(self.config, sort_keys=True)}"


# ---------------------------------------------------------------------------
# Evaluator adapters
# ---------------------------------------------------------------------------

class _ProxyAdapter:
    def __init__(self, spec: EvaluatorSpec, dataset: Dataset):
        classes = spec.config.get("classes", dataset.class_count)
        bands = default_bands(
            spec.config.get("lf_end", 10), spec.config.get("mf_end", 36)
        )
        self.proxy = ProxyClassifier(classes, bands)

    def correctness(self, decoded, dataset: Dataset) -> np.ndarray:
        return self.proxy.classify_batch(decoded) == dataset.labels


class _ExternalAdapter:
    def __init__(self, spec: EvaluatorSpec, dataset: Dataset):
        cfg = spec.config
        if "cmd" in cfg:
            self.client = ExternalClassifier(command=cfg["cmd"])
        else:
            self.client = ExternalClassifier(host=cfg["host"], port=int(cfg["port"]))

    def correctness(self, decoded, dataset: Dataset) -> np.ndarray:
        labels = self.client.classify_batch(list(decoded))
        return labels == dataset.labels

    def close(self):
        self.client.close()


class _PsnrThresholdAdapter:
    def __init__(self, spec: EvaluatorSpec, dataset: Dataset):
        self.threshold = float(spec.config["threshold_db"])

    def correctness(self, decoded, dataset: Dataset) -> np.ndarray:
        out = np.zeros(len(dataset), dtype=bool)
        for i, (dec, orig) in enumerate(zip(decoded, dataset.images)):
            mse = np.mean((dec.astype(np.float64) - orig.astype(np.float64)) ** 2)
            db = math.inf if mse == 0 else 10.0 * math.log10(255.0 ** 2 / mse)
            out[i] = db >= self.threshold
        return out


class _OracleAdapter:
    """Always answers the true label (accuracy 1 by construction)."""

    def __init__(self, spec: EvaluatorSpec, dataset: Dataset):
        pass

    def correctness(self, decoded, dataset: Dataset) -> np.ndarray:
        return np.ones(len(dataset), dtype=bool)


_ADAPTERS = {
    "proxy_classifier": _ProxyAdapter,
    "external_classifier": _ExternalAdapter,
    "psnr_threshold": _PsnrThresholdAdapter,
    "oracle": _OracleAdapter,
}


# ---------------------------------------------------------------------------
# Result cache
# ---------------------------------------------------------------------------

class EvalCache:
    """On-disk (dataset, evaluator, policy, table) -> result store.

    One JSON file per key, written atomically; identical keys always map
    to identical values (evaluation is deterministic), so concurrent
    last-writer-wins races are benign.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> Optional[dict]:
        try:
            return json.loads(self._path(key).read_text())
        except (OSError, json.JSONDecodeError):
            return None

    def put(self, key: str, value: dict) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(value, fh)
            os.replace(tmp, self._path(key))
        except OSError:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


# ---------------------------------------------------------------------------
# The evaluator
# ---------------------------------------------------------------------------

# Precomputed forward coefficients above this block count are recomputed
# per call in chunks instead of held in memory (~0.5 KB per block).
_PRECOMPUTE_BLOCK_BUDGET = 2_000_000


class _Geometry:
    """Everything about one (height, width, subsampling) image shape."""

    def __init__(self, h: int, w: int, subsampling: str):
        self.h, self.w = h, w
        if subsampling == "4:2:0":
            self.samplings = [(2, 2), (1, 1), (1, 1)]
            mcu = 16
        else:
            self.samplings = [(1, 1), (1, 1), (1, 1)]
            mcu = 8
        self.pad_h = h + (-h) % mcu
        self.pad_w = w + (-w) % mcu
        self.subsampling = subsampling
        self.mcus_h = self.pad_h // (8 * self.samplings[0][1])
        self.mcus_w = self.pad_w // (8 * self.samplings[0][0])
        self.perm, self.comp_ids = _scan_order(self.samplings, self.mcus_h, self.mcus_w)
        self.nblocks = self.perm.size
        self.comp_grids = []
        self.comp_crops = []
        max_h = max(sh for sh, _ in self.samplings)
        max_v = max(sv for _, sv in self.samplings)
        for sh, sv in self.samplings:
            self.comp_grids.append((self.mcus_h * sv, self.mcus_w * sh))
            self.comp_crops.append(
                (math.ceil(h * sv / max_v), math.ceil(w * sh / max_h))
            )
        self.header_len = len(build_headers(
            h, w, standard_table("luma"), standard_table("chroma"), subsampling
        ))

    def planes_of(self, image: np.ndarray) -> list:
        """The three padded (and possibly downsampled) component planes."""
        y, cb, cr = rgb_to_ycbcr(image)
        if self.subsampling == "4:2:0":
            return [
                _pad_to_multiple(y, 16),
                _downsample_2x2(_pad_to_multiple(cb, 16)),
                _downsample_2x2(_pad_to_multiple(cr, 16)),
            ]
        return [
            _pad_to_multiple(y, 8),
            _pad_to_multiple(cb, 8),
            _pad_to_multiple(cr, 8),
        ]


class _GroupBatch:
    """Batch bookkeeping for n same-geometry images.

    Coefficients are stored component-major across the whole group
    ([all Y blocks][all Cb][all Cr], image-major inside each component) so
    quantization and the IDCT run on contiguous slices; a precomputed
    permutation rearranges quantized levels into per-image scan order for
    the entropy coder.
    """

    def __init__(self, geom: _Geometry, n_img: int):
        self.geom = geom
        self.n_img = n_img
        counts = [bh * bw for bh, bw in geom.comp_grids]
        self.comp_slices = []
        base = 0
        for c in counts:
            self.comp_slices.append(slice(base, base + c * n_img))
            base += c * n_img
        self.total_blocks = base

        # Scan position (image-major) -> row in the component-major layout.
        local_offsets = np.cumsum([0] + counts[:-1])
        comp_of_local = np.repeat(np.arange(3), counts)
        k_of_local = np.arange(geom.nblocks) - local_offsets[comp_of_local]
        comp_base = np.cumsum([0] + [c * n_img for c in counts[:-1]])
        cc = comp_of_local[geom.perm]
        stride = np.array(counts)[cc]
        first = comp_base[cc] + k_of_local[geom.perm]
        self.perm_to_scan = (
            first[None, :] + np.arange(n_img)[:, None] * stride[None, :]
        ).reshape(-1)
        self.comp_ids_full = np.ascontiguousarray(np.tile(geom.comp_ids, n_img))
        self.image_start = np.arange(n_img + 1, dtype=np.int64) * geom.nblocks

    def forward_batch(self, images) -> np.ndarray:
        """Component-major zig-zag DCT coefficients for the whole group."""
        parts = [[], [], []]
        for image in images:
            for ci, plane in enumerate(self.geom.planes_of(image)):
                blocks = _plane_to_blocks(plane).astype(np.float64) - 128.0
                parts[ci].append(forward_dct(blocks).reshape(-1, 64)[:, ZIGZAG_ORDER])
        return np.concatenate([np.concatenate(p) for p in parts])


class DatasetEvaluator:
    """Evaluates Q-tables on one dataset under a fixed channel policy.

    chroma_policy "tuned" applies the candidate table to luma and chroma
    alike (the default: one 8x8 search variable); "standard" holds chroma
    at the Annex-K chroma table and tunes luma only.
    """

    def __init__(
        self,
        dataset: Dataset,
        spec: EvaluatorSpec,
        *,
        chroma_policy: str = "tuned",
        subsampling: str = "4:2:0",
        with_psnr: bool = False,
        cache_dir=None,
    ):
        if chroma_policy not in ("tuned", "standard"):
            raise ValueError(f"unknown chroma policy {chroma_policy!r}")
        self.dataset = dataset
        self.spec = spec
        self.chroma_policy = chroma_policy
        self.subsampling = subsampling
        self.with_psnr = with_psnr
        self.adapter = _ADAPTERS[spec.kind](spec, dataset)
        self.cache = EvalCache(cache_dir) if cache_dir is not None else None
        self._geometries: dict[tuple, _Geometry] = {}
        self._prepared = None
        self._policy_sig = json.dumps(
            {
                "chroma_policy": chroma_policy,
                "subsampling": subsampling,
                "with_psnr": with_psnr,
            },
            sort_keys=True,
        )

    # -- preparation -------------------------------------------------------

    def _geometry(self, h: int, w: int) -> _Geometry:
        key = (h, w)
        if key not in self._geometries:
            self._geometries[key] = _Geometry(h, w, self.subsampling)
        return self._geometries[key]

    def _prepare(self):
        """Group images by shape; precompute coefficients if they fit."""
        if self._prepared is not None:
            return self._prepared
        groups: dict[tuple, list] = {}
        for idx, img in enumerate(self.dataset.images):
            groups.setdefault(img.shape[:2], []).append(idx)
        total_blocks = sum(
            self._geometry(*shape).nblocks * len(idxs)
            for shape, idxs in groups.items()
        )
        keep = total_blocks <= _PRECOMPUTE_BLOCK_BUDGET
        prepared = []
        for shape, idxs in groups.items():
            geom = self._geometry(*shape)
            batch = _GroupBatch(geom, len(idxs))
            coeffs = None
            if keep:
                coeffs = batch.forward_batch(
                    [self.dataset.images[i] for i in idxs]
                )
            prepared.append((geom, batch, np.array(idxs), coeffs))
        self._prepared = prepared
        return prepared

    # -- evaluation --------------------------------------------------------

    def _tables(self, qtable: QTable) -> tuple[QTable, QTable]:
        if self.chroma_policy == "tuned":
            return qtable, qtable
        return qtable, standard_table("chroma")

    def _cache_key(self, qtable: QTable) -> str:
        payload = json.dumps(
            {
                "dataset": self.dataset.content_hash,
                "evaluator": self.spec.evaluator_id(),
                "policy": self._policy_sig,
                "qtable": qtable.entries.tolist(),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def evaluate_detailed(self, qtable: QTable):
        """(sizes, correctness, mean_psnr) per image, computing if needed."""
        key = None
        if self.cache is not None:
            key = self._cache_key(qtable)
            hit = self.cache.get(key)
            if hit is not None:
                return (
                    np.array(hit["sizes"], dtype=np.int64),
                    np.array(hit["correct"], dtype=bool),
                    hit.get("mean_psnr"),
                )
        sizes, correct, mean_psnr = self._evaluate_uncached(qtable)
        if self.cache is not None:
            self.cache.put(key, {
                "sizes": sizes.tolist(),
                "correct": correct.astype(int).tolist(),
                "mean_psnr": mean_psnr,
            })
        return sizes, correct, mean_psnr

    def _evaluate_uncached(self, qtable: QTable):
        luma_q, chroma_q = self._tables(qtable)
        n = len(self.dataset)
        sizes = np.zeros(n, dtype=np.int64)
        decoded: list = [None] * n
        for geom, batch, idxs, coeffs in self._prepare():
            if coeffs is None:
                # Over the memory budget: recompute forward path in chunks.
                chunk = max(1, _PRECOMPUTE_BLOCK_BUDGET // geom.nblocks)
                for start in range(0, len(idxs), chunk):
                    part = idxs[start:start + chunk]
                    sub = _GroupBatch(geom, len(part))
                    part_coeffs = sub.forward_batch(
                        [self.dataset.images[i] for i in part]
                    )
                    self._eval_group(sub, part, part_coeffs,
                                     luma_q, chroma_q, sizes, decoded)
            else:
                self._eval_group(batch, idxs, coeffs,
                                 luma_q, chroma_q, sizes, decoded)

        correct = np.asarray(
            self.adapter.correctness(decoded, self.dataset), dtype=bool
        )
        mean_psnr = None
        if self.with_psnr:
            db = []
            for dec, orig in zip(decoded, self.dataset.images):
                mse = np.mean((dec.astype(np.float64) - orig.astype(np.float64)) ** 2)
                db.append(math.inf if mse == 0 else 10.0 * math.log10(255.0 ** 2 / mse))
            mean_psnr = float(np.mean(db))
        return sizes, correct, mean_psnr

    def _eval_group(self, batch, idxs, coeffs, luma_q, chroma_q, sizes, decoded):
        geom = batch.geom
        n_img = batch.n_img
        lq = luma_q.entries.astype(np.float64).reshape(64)[ZIGZAG_ORDER]
        cq = chroma_q.entries.astype(np.float64).reshape(64)[ZIGZAG_ORDER]

        levels = np.empty((batch.total_blocks, 64), dtype=np.int32)
        for ci, q_zz in enumerate((lq, cq, cq)):
            sl = batch.comp_slices[ci]
            quantize_rows(coeffs[sl], q_zz, levels[sl])
        np.clip(levels[:, 1:], -1023, 1023, out=levels[:, 1:])

        # Exact per-image stream sizes: headers + entropy + EOI.
        entropy = np.zeros(n_img, dtype=np.int64)
        huffman.scan_size_batch(
            np.ascontiguousarray(levels[batch.perm_to_scan]),
            batch.comp_ids_full, batch.image_start,
            _TAB_OF_COMP, _TAB_OF_COMP,
            _ENC_DC_TABLES[0], _ENC_DC_TABLES[1],
            _ENC_AC_TABLES[0], _ENC_AC_TABLES[1],
            entropy,
        )
        sizes[idxs] = geom.header_len + entropy + 2

        # Decode path: per component, IDCT the contiguous slice, reassemble.
        planes = []
        tables = [luma_q.entries, chroma_q.entries, chroma_q.entries]
        for ci in range(3):
            lv = levels[batch.comp_slices[ci]][:, INVERSE_ZIGZAG].reshape(-1, 8, 8)
            samples = idct_islow(lv, tables[ci])
            bh, bw = geom.comp_grids[ci]
            plane = (
                samples.reshape(n_img, bh, bw, 8, 8)
                .transpose(0, 1, 3, 2, 4)
                .reshape(n_img, bh * 8, bw * 8)
            )
            ch, cw = geom.comp_crops[ci]
            plane = plane[:, :ch, :cw]
            if (ch, cw) != (geom.h, geom.w):
                plane = _h2v2_fancy_upsample(plane)
            planes.append(plane[:, :geom.h, :geom.w])
        rgb = ycbcr_to_rgb_int(planes[0], planes[1], planes[2])
        for j, idx in enumerate(idxs):
            decoded[idx] = rgb[j]

    def evaluate(self, qtable: QTable, trial_index: int = 0,
                 strategy_tag: str = "") -> EvalPoint:
        sizes, correct, mean_psnr = self.evaluate_detailed(qtable)
        return EvalPoint(
            qtable=qtable,
            compression_rate=self.dataset.raw_bytes / float(sizes.sum()),
            accuracy=float(correct.mean()),
            mean_psnr=mean_psnr,
            trial_index=trial_index,
            strategy_tag=strategy_tag,
        )

    __call__ = evaluate

    def close(self):
        close = getattr(self.adapter, "close", None)
        if close is not None:
            close()


def compression_rate(dataset: Dataset, qtable: QTable, *,
                     chroma_policy: str = "tuned",
                     subsampling: str = "4:2:0") -> float:
    """Total raw bitmap bytes over total encoded JPEG bytes."""
    ev = DatasetEvaluator(
        dataset, EvaluatorSpec("oracle"),
        chroma_policy=chroma_policy, subsampling=subsampling,
    )
    sizes, _, _ = ev.evaluate_detailed(qtable)
    return dataset.raw_bytes / float(sizes.sum())


def evaluate(dataset: Dataset, qtable: QTable, spec: EvaluatorSpec,
             **kwargs) -> EvalPoint:
    """One-shot evaluation; see DatasetEvaluator for keyword options."""
    ev = DatasetEvaluator(dataset, spec, **kwargs)
    try:
        return ev.evaluate(qtable)
    finally:
        ev.close()
