"""Baseline sequential JFIF encoder/decoder with caller-supplied Q-tables.

Images are (H, W, 3) uint8 RGB numpy arrays. The encoder writes baseline
sequential JPEG (SOI/APP0/DQT/SOF0/DHT/SOS/EOI) with the Annex-K typical
Huffman tables and is fully deterministic: identical inputs produce
byte-identical streams. The decoder handles baseline streams produced by
this encoder as well as foreign baseline files (it reads their DQT/DHT),
and reproduces the reference libjpeg decode path exactly: fixed-point
IDCT, fancy chroma upsampling, and integer color conversion.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from ..zigzag import ZIGZAG_ORDER, INVERSE_ZIGZAG
from .color import rgb_to_ycbcr, ycbcr_to_rgb_int
from .dct import forward_dct, quantize, idct_islow
from . import huffman
from ..qtable import QTable

__all__ = [
    "JpegStream",
    "CodecError",
    "DecodeError",
    "encode",
    "decode",
    "psnr",
    "SUBSAMPLING_MODES",
]

SUBSAMPLING_MODES = ("4:4:4", "4:2:0")

# Marker codes.
_SOI = 0xD8
_EOI = 0xD9
_APP0 = 0xE0
_DQT = 0xDB
_SOF0 = 0xC0
_SOF1 = 0xC1
_DHT = 0xC4
_SOS = 0xDA
_DRI = 0xDD
_COM = 0xFE


class CodecError(ValueError):
    """Invalid input to the codec."""


class DecodeError(CodecError):
    """Malformed or unsupported JPEG stream."""


@dataclass(frozen=True)
class JpegStream:
    """An encoded JPEG byte stream."""

    data: bytes

    @property
    def size_bytes(self) -> int:
        return len(self.data)


def _validate_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise CodecError(
            f"image must be (H, W, 3) uint8, got shape {image.shape} "
            f"dtype {image.dtype}"
        )
    h, w = image.shape[:2]
    if h == 0 or w == 0:
        raise CodecError("image dimensions must be nonzero")
    if h < 8 or w < 8:
        raise CodecError(f"image must be at least 8x8, got {w}x{h}")
    return image


def _pad_to_multiple(plane: np.ndarray, multiple: int) -> np.ndarray:
    """Edge-replicate a plane up to the next multiple of `multiple`."""
    h, w = plane.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return plane
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")


def _downsample_2x2(plane: np.ndarray) -> np.ndarray:
    """Box-filter 2x2 downsample with round-half-up (encoder policy)."""
    h, w = plane.shape
    p = plane.astype(np.uint32).reshape(h // 2, 2, w // 2, 2)
    return ((p.sum(axis=(1, 3)) + 2) >> 2).astype(np.uint8)


def _plane_to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return (
        plane.reshape(h // 8, 8, w // 8, 8)
        .transpose(0, 2, 1, 3)
        .reshape(-1, 8, 8)
    )


def _blocks_to_plane(blocks: np.ndarray, bh: int, bw: int) -> np.ndarray:
    return (
        blocks.reshape(bh, bw, 8, 8)
        .transpose(0, 2, 1, 3)
        .reshape(bh * 8, bw * 8)
    )


def _scan_order(samplings, mcus_h, mcus_w):
    """Block permutation for an interleaved scan.

    samplings: list of (h, v) per component in scan order. Returns
    (perm, comp_ids): perm maps scan position -> global block index where
    blocks are globally numbered component by component in raster order;
    comp_ids labels each scan position with its component.
    """
    parts = []
    ids = []
    offset = 0
    for ci, (h, v) in enumerate(samplings):
        bw = mcus_w * h
        rr = np.arange(mcus_h).reshape(-1, 1, 1, 1) * v
        cc = np.arange(mcus_w).reshape(1, -1, 1, 1) * h
        dv = np.arange(v).reshape(1, 1, -1, 1)
        dh = np.arange(h).reshape(1, 1, 1, -1)
        local = (rr + dv) * bw + (cc + dh) + offset
        parts.append(local.reshape(mcus_h, mcus_w, v * h))
        ids.append(np.full((mcus_h, mcus_w, v * h), ci, dtype=np.uint8))
        offset += mcus_h * v * bw
    perm = np.concatenate(parts, axis=2).reshape(-1)
    comp_ids = np.concatenate(ids, axis=2).reshape(-1)
    return perm, comp_ids


# ---------------------------------------------------------------------------
# Encoder
# ---------------------------------------------------------------------------

def _emit_marker(buf: bytearray, code: int) -> None:
    buf.extend((0xFF, code))


def _emit_segment(buf: bytearray, code: int, payload: bytes) -> None:
    _emit_marker(buf, code)
    buf.extend(struct.pack(">H", len(payload) + 2))
    buf.extend(payload)


def _encode_component(plane: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    """Forward path for one padded plane: DCT, quantize, zig-zag levels."""
    blocks = _plane_to_blocks(plane).astype(np.float64) - 128.0
    coeffs = forward_dct(blocks)
    levels = quantize(coeffs, qtable)
    zz = levels.reshape(-1, 64)[:, ZIGZAG_ORDER]
    # AC magnitudes above 1023 are not representable with the typical
    # Huffman tables (size category 10 max); can only arise from rounding
    # at the extreme coefficient range.
    np.clip(zz[:, 1:], -1023, 1023, out=zz[:, 1:])
    return zz


def encode(
    image: np.ndarray,
    luma_q: QTable,
    chroma_q: Optional[QTable] = None,
    subsampling: str = "4:2:0",
) -> JpegStream:
    """Encode an RGB image as baseline sequential JFIF.

    Args:
        image: (H, W, 3) uint8 RGB, at least 8x8.
        luma_q: quantization table for the Y channel.
        chroma_q: table for Cb/Cr; defaults to luma_q (the single tuned
            table applied to both channels).
        subsampling: "4:2:0" (default) or "4:4:4".

    Returns:
        JpegStream whose embedded tables equal the tables given here.
    """
    image = _validate_image(image)
    if subsampling not in SUBSAMPLING_MODES:
        raise CodecError(f"unsupported subsampling {subsampling!r}")
    if chroma_q is None:
        chroma_q = luma_q
    h, w = image.shape[:2]

    y, cb, cr = rgb_to_ycbcr(image)
    if subsampling == "4:2:0":
        mcu = 16
        y_pad = _pad_to_multiple(y, mcu)
        cb_pad = _downsample_2x2(_pad_to_multiple(cb, mcu))
        cr_pad = _downsample_2x2(_pad_to_multiple(cr, mcu))
        samplings = [(2, 2), (1, 1), (1, 1)]
    else:
        mcu = 8
        y_pad = _pad_to_multiple(y, mcu)
        cb_pad = _pad_to_multiple(cb, mcu)
        cr_pad = _pad_to_multiple(cr, mcu)
        samplings = [(1, 1), (1, 1), (1, 1)]

    lq = np.asarray(luma_q.entries, dtype=np.int32)
    cq = np.asarray(chroma_q.entries, dtype=np.int32)
    zz_all = np.concatenate([
        _encode_component(y_pad, lq),
        _encode_component(cb_pad, cq),
        _encode_component(cr_pad, cq),
    ])

    mcus_h = y_pad.shape[0] // (8 * samplings[0][1])
    mcus_w = y_pad.shape[1] // (8 * samplings[0][0])
    perm, comp_ids = _scan_order(samplings, mcus_h, mcus_w)
    entropy = entropy_encode(zz_all[perm], comp_ids)

    buf = bytearray(build_headers(h, w, luma_q, chroma_q, subsampling))
    buf.extend(entropy)
    _emit_marker(buf, _EOI)
    return JpegStream(bytes(buf))


def build_headers(
    h: int, w: int, luma_q: QTable, chroma_q: QTable, subsampling: str
) -> bytes:
    """All marker segments up to and including SOS (everything but the
    entropy-coded data and the trailing EOI). The length depends only on
    the image dimensions, never on table contents."""
    samplings = [(2, 2), (1, 1), (1, 1)] if subsampling == "4:2:0" else [(1, 1)] * 3
    lq = np.asarray(luma_q.entries, dtype=np.int32)
    cq = np.asarray(chroma_q.entries, dtype=np.int32)
    buf = bytearray()
    _emit_marker(buf, _SOI)
    _emit_segment(buf, _APP0, b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00")
    _emit_segment(buf, _DQT, bytes([0x00]) + bytes(lq.reshape(64)[ZIGZAG_ORDER].astype(np.uint8)))
    _emit_segment(buf, _DQT, bytes([0x01]) + bytes(cq.reshape(64)[ZIGZAG_ORDER].astype(np.uint8)))
    sof = bytearray(struct.pack(">BHHB", 8, h, w, 3))
    for comp_id, (sh, sv), tq in zip((1, 2, 3), samplings, (0, 1, 1)):
        sof.extend((comp_id, (sh << 4) | sv, tq))
    _emit_segment(buf, _SOF0, bytes(sof))
    for tc_th, spec in (
        (0x00, huffman.STD_DC_LUMA),
        (0x10, huffman.STD_AC_LUMA),
        (0x01, huffman.STD_DC_CHROMA),
        (0x11, huffman.STD_AC_CHROMA),
    ):
        _emit_segment(buf, _DHT, bytes([tc_th] + spec.bits + spec.values))
    sos = bytearray([3])
    for comp_id, tabs in zip((1, 2, 3), (0x00, 0x11, 0x11)):
        sos.extend((comp_id, tabs))
    sos.extend((0, 63, 0))
    _emit_segment(buf, _SOS, bytes(sos))
    return bytes(buf)


_ENC_DC_TABLES = huffman.stack_encode_tables([huffman.STD_DC_LUMA, huffman.STD_DC_CHROMA])
_ENC_AC_TABLES = huffman.stack_encode_tables([huffman.STD_AC_LUMA, huffman.STD_AC_CHROMA])
_TAB_OF_COMP = np.array([0, 1, 1], dtype=np.int64)  # Y uses slot 0, Cb/Cr slot 1


def entropy_encode(zz_scan: np.ndarray, comp_ids: np.ndarray) -> bytes:
    """Huffman-encode scan-ordered zig-zag levels with the typical tables."""
    zz_scan = np.ascontiguousarray(zz_scan, dtype=np.int32)
    out = np.empty(zz_scan.shape[0] * 340 + 16, dtype=np.uint8)
    n = huffman.encode_scan(
        zz_scan, np.ascontiguousarray(comp_ids),
        _TAB_OF_COMP, _TAB_OF_COMP,
        _ENC_DC_TABLES[0], _ENC_DC_TABLES[1],
        _ENC_AC_TABLES[0], _ENC_AC_TABLES[1],
        out,
    )
    return out[:n].tobytes()


# ---------------------------------------------------------------------------
# Decoder
# ---------------------------------------------------------------------------

@njit(cache=True)
def _h2v2_upsample_batch(planes, out):  # pragma: no cover - jitted
    """Batched libjpeg triangle-filter 2x upsample, (n, ph, pw) uint8."""
    n, ph, pw = planes.shape
    for b in range(n):
        for r in range(ph):
            up = r - 1 if r > 0 else 0
            dn = r + 1 if r < ph - 1 else ph - 1
            for half, far in ((0, up), (1, dn)):
                orow = 2 * r + half
                prev = np.int32(3) * planes[b, r, 0] + planes[b, far, 0]
                cur = prev
                nxt = prev
                for c in range(pw):
                    cur = np.int32(3) * planes[b, r, c] + planes[b, far, c]
                    if c + 1 < pw:
                        nxt = np.int32(3) * planes[b, r, c + 1] + planes[b, far, c + 1]
                    else:
                        nxt = cur
                    if c == 0:
                        out[b, orow, 0] = (cur * 4 + 8) >> 4
                    else:
                        out[b, orow, 2 * c] = (cur * 3 + prev + 8) >> 4
                    if c == pw - 1:
                        out[b, orow, 2 * c + 1] = (cur * 4 + 7) >> 4
                    else:
                        out[b, orow, 2 * c + 1] = (cur * 3 + nxt + 7) >> 4
                    prev = cur


def _h2v2_fancy_upsample(plane: np.ndarray) -> np.ndarray:
    """2x in both directions with the libjpeg triangle filter.

    Works on (..., H, W); leading axes are treated as a batch.
    """
    if plane.ndim == 3 and plane.dtype == np.uint8:
        out = np.empty(
            (plane.shape[0], 2 * plane.shape[1], 2 * plane.shape[2]), dtype=np.uint8
        )
        _h2v2_upsample_batch(np.ascontiguousarray(plane), out)
        return out
    p = plane.astype(np.int32)
    above = np.concatenate([p[..., :1, :], p[..., :-1, :]], axis=-2)
    below = np.concatenate([p[..., 1:, :], p[..., -1:, :]], axis=-2)
    out = np.empty(p.shape[:-2] + (2 * p.shape[-2], 2 * p.shape[-1]), dtype=np.int32)
    for colsum, rows in (
        (3 * p + above, out[..., 0::2, :]),
        (3 * p + below, out[..., 1::2, :]),
    ):
        left = np.concatenate([colsum[..., :1], colsum[..., :-1]], axis=-1)
        right = np.concatenate([colsum[..., 1:], colsum[..., -1:]], axis=-1)
        even = (3 * colsum + left + 8) >> 4
        odd = (3 * colsum + right + 7) >> 4
        even[..., 0] = (colsum[..., 0] * 4 + 8) >> 4
        odd[..., -1] = (colsum[..., -1] * 4 + 7) >> 4
        rows[..., 0::2] = even
        rows[..., 1::2] = odd
    return out.astype(np.uint8)


def _h2v1_fancy_upsample(plane: np.ndarray) -> np.ndarray:
    """2x horizontal with the libjpeg triangle filter; batched like h2v2."""
    p = plane.astype(np.int32)
    left = np.concatenate([p[..., :1], p[..., :-1]], axis=-1)
    right = np.concatenate([p[..., 1:], p[..., -1:]], axis=-1)
    even = (3 * p + left + 1) >> 2
    odd = (3 * p + right + 2) >> 2
    even[..., 0] = p[..., 0]
    odd[..., -1] = p[..., -1]
    out = np.empty(p.shape[:-1] + (2 * p.shape[-1],), dtype=np.int32)
    out[..., 0::2] = even
    out[..., 1::2] = odd
    return out.astype(np.uint8)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def u8(self) -> int:
        if self.pos >= len(self.data):
            raise DecodeError("unexpected end of stream")
        v = self.data[self.pos]
        self.pos += 1
        return v

    def u16(self) -> int:
        return (self.u8() << 8) | self.u8()

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("unexpected end of stream")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def next_marker(self) -> int:
        """Advance to the next marker, tolerating fill bytes."""
        b = self.u8()
        if b != 0xFF:
            raise DecodeError(f"expected marker, got byte 0x{b:02X}")
        code = self.u8()
        while code == 0xFF:
            code = self.u8()
        return code


@dataclass
class _FrameComponent:
    comp_id: int
    h: int
    v: int
    tq: int
    dc_tab: int = 0
    ac_tab: int = 0


def decode(stream) -> np.ndarray:
    """Decode a baseline sequential JPEG to an (H, W, 3) uint8 RGB image.

    Accepts a JpegStream or raw bytes. Raises DecodeError on malformed or
    unsupported (progressive, arithmetic, >8-bit) streams.
    """
    data = stream.data if isinstance(stream, JpegStream) else bytes(stream)
    r = _Reader(data)
    if r.u8() != 0xFF or r.u8() != _SOI:
        raise DecodeError("missing SOI marker")

    qtables: dict[int, np.ndarray] = {}
    dc_specs: dict[int, huffman.HuffmanSpec] = {}
    ac_specs: dict[int, huffman.HuffmanSpec] = {}
    frame: Optional[list[_FrameComponent]] = None
    size: Optional[tuple[int, int]] = None
    restart_interval = 0

    while True:
        code = r.next_marker()
        if code == _EOI:
            raise DecodeError("no scan data before EOI")
        if code in (0x01,) or 0xD0 <= code <= 0xD7:
            continue  # parameterless markers
        length = r.u16()
        payload = r.take(length - 2)

        if code == _DQT:
            p = 0
            while p < len(payload):
                pq, tq = payload[p] >> 4, payload[p] & 0x0F
                p += 1
                if pq != 0:
                    raise DecodeError("16-bit quantization tables unsupported")
                zz = np.frombuffer(payload[p:p + 64], dtype=np.uint8).astype(np.int32)
                if zz.size != 64:
                    raise DecodeError("truncated DQT segment")
                p += 64
                qtables[tq] = zz[INVERSE_ZIGZAG].reshape(8, 8)
        elif code == _DHT:
            p = 0
            while p < len(payload):
                tc, th = payload[p] >> 4, payload[p] & 0x0F
                p += 1
                bits = list(payload[p:p + 16])
                p += 16
                nvals = sum(bits)
                values = list(payload[p:p + nvals])
                p += nvals
                if len(bits) != 16 or len(values) != nvals:
                    raise DecodeError("truncated DHT segment")
                spec = huffman.HuffmanSpec(bits, values)
                (dc_specs if tc == 0 else ac_specs)[th] = spec
        elif code == _DRI:
            restart_interval = struct.unpack(">H", payload[:2])[0]
        elif code in (_SOF0, _SOF1):
            precision, height, width, ncomp = struct.unpack(">BHHB", payload[:6])
            if precision != 8:
                raise DecodeError(f"unsupported sample precision {precision}")
            if height == 0 or width == 0:
                raise DecodeError("zero frame dimensions (DNL unsupported)")
            if ncomp not in (1, 3):
                raise DecodeError(f"unsupported component count {ncomp}")
            frame = []
            for i in range(ncomp):
                cid, hv, tq = payload[6 + 3 * i:9 + 3 * i]
                frame.append(_FrameComponent(cid, hv >> 4, hv & 0x0F, tq))
            size = (height, width)
        elif 0xC2 <= code <= 0xCF and code != _DHT:
            raise DecodeError(
                f"unsupported frame type SOF{code - 0xC0} "
                "(only baseline/extended sequential Huffman)"
            )
        elif code == _SOS:
            if frame is None:
                raise DecodeError("SOS before SOF")
            ns = payload[0]
            if ns != len(frame):
                raise DecodeError("non-interleaved multi-scan files unsupported")
            by_id = {c.comp_id: c for c in frame}
            for i in range(ns):
                cid, tabs = payload[1 + 2 * i], payload[2 + 2 * i]
                if cid not in by_id:
                    raise DecodeError(f"scan references unknown component {cid}")
                by_id[cid].dc_tab = tabs >> 4
                by_id[cid].ac_tab = tabs & 0x0F
            return _decode_scan_body(
                r, frame, size, qtables, dc_specs, ac_specs, restart_interval
            )
        # else: APPn/COM/unknown -> skipped via payload consumption


def _decode_scan_body(r, frame, size, qtables, dc_specs, ac_specs, restart_interval):
    h, w = size
    max_h = max(c.h for c in frame)
    max_v = max(c.v for c in frame)
    for c in frame:
        if c.h not in (1, 2) or c.v not in (1, 2):
            raise DecodeError(f"unsupported sampling factors {c.h}x{c.v}")
        if c.tq not in qtables:
            raise DecodeError(f"missing quantization table {c.tq}")
        if c.dc_tab not in dc_specs or c.ac_tab not in ac_specs:
            raise DecodeError("missing Huffman table for scan")

    mcus_h = math.ceil(h / (8 * max_v))
    mcus_w = math.ceil(w / (8 * max_h))
    samplings = [(c.h, c.v) for c in frame]
    perm, comp_ids = _scan_order(samplings, mcus_h, mcus_w)
    nblocks = perm.size

    dc_list = sorted(dc_specs)
    ac_list = sorted(ac_specs)
    dc_stack = huffman.stack_decode_tables([dc_specs[i] for i in dc_list])
    ac_stack = huffman.stack_decode_tables([ac_specs[i] for i in ac_list])
    dc_tab_of = np.array([dc_list.index(c.dc_tab) for c in frame], dtype=np.int64)
    ac_tab_of = np.array([ac_list.index(c.ac_tab) for c in frame], dtype=np.int64)

    zz_scan = np.zeros((nblocks, 64), dtype=np.int32)
    blocks_per_mcu = sum(c.h * c.v for c in frame)
    pos, status = huffman.decode_scan(
        np.frombuffer(r.data, dtype=np.uint8), r.pos,
        zz_scan, comp_ids, dc_tab_of, ac_tab_of,
        dc_stack[0], dc_stack[1], dc_stack[2], dc_stack[3],
        ac_stack[0], ac_stack[1], ac_stack[2], ac_stack[3],
        restart_interval, blocks_per_mcu,
    )
    if status == huffman.DECODE_TRUNCATED:
        raise DecodeError("truncated entropy-coded data")
    if status != huffman.DECODE_OK:
        raise DecodeError("corrupt entropy-coded data")

    zz_all = np.empty_like(zz_scan)
    zz_all[perm] = zz_scan

    planes = []
    offset = 0
    for c in frame:
        bh, bw = mcus_h * c.v, mcus_w * c.h
        n = bh * bw
        levels = zz_all[offset:offset + n][:, INVERSE_ZIGZAG].reshape(n, 8, 8)
        offset += n
        samples = idct_islow(levels, qtables[c.tq])
        plane = _blocks_to_plane(samples, bh, bw)
        # Crop to this component's true (downsampled) size before upsampling.
        ch = math.ceil(h * c.v / max_v)
        cw = math.ceil(w * c.h / max_h)
        plane = plane[:ch, :cw]
        if c.h < max_h and c.v < max_v:
            plane = _h2v2_fancy_upsample(plane)
        elif c.h < max_h:
            plane = _h2v1_fancy_upsample(plane)
        elif c.v < max_v:
            raise DecodeError("unsupported vertical-only subsampling")
        planes.append(plane[:h, :w])

    if len(planes) == 1:
        return np.repeat(planes[0][:, :, None], 3, axis=2)
    return ycbcr_to_rgb_int(planes[0], planes[1], planes[2])


# ---------------------------------------------------------------------------
# Quality metric
# ---------------------------------------------------------------------------

def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over all channels; inf if identical."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)
