"""Baseline Huffman entropy coding with the T.81 Annex-K typical tables.

The encoder always uses the fixed typical tables (no per-image
optimization), which keeps stream sizes deterministic. The scan
encoder/decoder inner loops are JIT-compiled; everything around them is
plain numpy.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Annex-K table specs: (bits[16], values[]) per table.
DC_LUMA_BITS = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
DC_LUMA_VALUES = list(range(12))

DC_CHROMA_BITS = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
DC_CHROMA_VALUES = list(range(12))

AC_LUMA_BITS = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 125]
AC_LUMA_VALUES = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12,
    0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16,
    0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39,
    0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79,
    0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98,
    0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4,
    0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA,
    0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
]

AC_CHROMA_BITS = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 119]
AC_CHROMA_VALUES = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21,
    0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
    0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
    0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0,
    0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34,
    0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
    0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38,
    0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
    0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
    0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78,
    0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96,
    0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
    0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4,
    0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
    0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2,
    0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
    0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9,
    0xEA, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
]


class HuffmanSpec:
    """One Huffman table (BITS + HUFFVAL) with derived code tables."""

    def __init__(self, bits, values):
        if len(bits) != 16 or sum(bits) != len(values):
            raise ValueError("inconsistent Huffman table spec")
        self.bits = list(bits)
        self.values = list(values)

        # Canonical code assignment (T.81 C.2).
        sizes, codes = [], []
        code = 0
        for length in range(1, 17):
            for _ in range(bits[length - 1]):
                sizes.append(length)
                codes.append(code)
                code += 1
            code <<= 1

        # Encoder lookup: symbol -> (code, size).
        self.ehufco = np.zeros(256, dtype=np.int64)
        self.ehufsi = np.zeros(256, dtype=np.uint8)
        for sym, c, s in zip(values, codes, sizes):
            self.ehufco[sym] = c
            self.ehufsi[sym] = s

        # Decoder lookup (T.81 F.2.2.3): per code length 1..16.
        self.mincode = np.zeros(17, dtype=np.int64)
        self.maxcode = np.full(17, -1, dtype=np.int64)
        self.valptr = np.zeros(17, dtype=np.int64)
        self.huffval = np.zeros(256, dtype=np.uint8)
        self.huffval[: len(values)] = values
        p = 0
        for length in range(1, 17):
            if bits[length - 1] > 0:
                self.valptr[length] = p
                self.mincode[length] = codes[p]
                p += bits[length - 1]
                self.maxcode[length] = codes[p - 1]


STD_DC_LUMA = HuffmanSpec(DC_LUMA_BITS, DC_LUMA_VALUES)
STD_DC_CHROMA = HuffmanSpec(DC_CHROMA_BITS, DC_CHROMA_VALUES)
STD_AC_LUMA = HuffmanSpec(AC_LUMA_BITS, AC_LUMA_VALUES)
STD_AC_CHROMA = HuffmanSpec(AC_CHROMA_BITS, AC_CHROMA_VALUES)


def stack_encode_tables(specs):
    """Stack encoder lookups for the jit kernel: (ntables, 256) arrays."""
    ehufco = np.stack([s.ehufco for s in specs])
    ehufsi = np.stack([s.ehufsi for s in specs])
    return ehufco, ehufsi


def stack_decode_tables(specs):
    """Stack decoder lookups for the jit kernel."""
    mincode = np.stack([s.mincode for s in specs])
    maxcode = np.stack([s.maxcode for s in specs])
    valptr = np.stack([s.valptr for s in specs])
    huffval = np.stack([s.huffval for s in specs])
    return mincode, maxcode, valptr, huffval


@njit(cache=True)
def encode_scan(zz, comp_ids, dc_tab_of, ac_tab_of,
                dc_co, dc_si, ac_co, ac_si, out):  # pragma: no cover - jitted
    """Huffman-encode an interleaved scan; returns bytes written to `out`.

    zz: (nblocks, 64) int32 levels in scan order; comp_ids gives each
    block's component; dc_tab_of/ac_tab_of map component -> table row in
    the stacked code arrays. Output includes byte stuffing and the final
    1-padding, but no markers.
    """
    nbytes = 0
    bitbuf = np.int64(0)
    bitcnt = 0
    last_dc = np.zeros(4, dtype=np.int64)

    for b in range(zz.shape[0]):
        c = comp_ids[b]
        dtab = dc_tab_of[c]
        atab = ac_tab_of[c]

        # DC: category of the DPCM difference, then the value bits.
        diff = np.int64(zz[b, 0]) - last_dc[c]
        last_dc[c] = zz[b, 0]
        t = diff if diff >= 0 else -diff
        size = 0
        while t > 0:
            size += 1
            t >>= 1
        bitbuf = (bitbuf << dc_si[dtab, size]) | dc_co[dtab, size]
        bitcnt += dc_si[dtab, size]
        if size > 0:
            v = diff if diff >= 0 else diff + (np.int64(1) << size) - 1
            bitbuf = (bitbuf << size) | (v & ((np.int64(1) << size) - 1))
            bitcnt += size
        while bitcnt >= 8:
            bitcnt -= 8
            byte = (bitbuf >> bitcnt) & 0xFF
            out[nbytes] = byte
            nbytes += 1
            if byte == 0xFF:
                out[nbytes] = 0
                nbytes += 1

        # AC: run-length of zeros + category, ZRL for runs of 16, EOB.
        run = 0
        for k in range(1, 64):
            v = np.int64(zz[b, k])
            if v == 0:
                run += 1
                continue
            while run > 15:
                bitbuf = (bitbuf << ac_si[atab, 0xF0]) | ac_co[atab, 0xF0]
                bitcnt += ac_si[atab, 0xF0]
                while bitcnt >= 8:
                    bitcnt -= 8
                    byte = (bitbuf >> bitcnt) & 0xFF
                    out[nbytes] = byte
                    nbytes += 1
                    if byte == 0xFF:
                        out[nbytes] = 0
                        nbytes += 1
                run -= 16
            t = v if v > 0 else -v
            size = 0
            while t > 0:
                size += 1
                t >>= 1
            sym = (run << 4) | size
            bitbuf = (bitbuf << ac_si[atab, sym]) | ac_co[atab, sym]
            bitcnt += ac_si[atab, sym]
            vv = v if v > 0 else v + (np.int64(1) << size) - 1
            bitbuf = (bitbuf << size) | (vv & ((np.int64(1) << size) - 1))
            bitcnt += size
            while bitcnt >= 8:
                bitcnt -= 8
                byte = (bitbuf >> bitcnt) & 0xFF
                out[nbytes] = byte
                nbytes += 1
                if byte == 0xFF:
                    out[nbytes] = 0
                    nbytes += 1
            run = 0
        if run > 0:
            bitbuf = (bitbuf << ac_si[atab, 0x00]) | ac_co[atab, 0x00]
            bitcnt += ac_si[atab, 0x00]
            while bitcnt >= 8:
                bitcnt -= 8
                byte = (bitbuf >> bitcnt) & 0xFF
                out[nbytes] = byte
                nbytes += 1
                if byte == 0xFF:
                    out[nbytes] = 0
                    nbytes += 1

    # Flush, padding the tail with 1-bits.
    if bitcnt > 0:
        pad = 8 - bitcnt
        bitbuf = (bitbuf << pad) | ((np.int64(1) << pad) - 1)
        byte = bitbuf & 0xFF
        out[nbytes] = byte
        nbytes += 1
        if byte == 0xFF:
            out[nbytes] = 0
            nbytes += 1
    return nbytes


@njit(cache=True)
def scan_size_batch(zz, comp_ids, image_start, dc_tab_of, ac_tab_of,
                    dc_co, dc_si, ac_co, ac_si, sizes):  # pragma: no cover - jitted
    """Entropy-coded byte count per image for a batch of scans.

    Identical arithmetic to :func:`encode_scan` (including byte stuffing
    and final padding) run once per image: block range [image_start[i],
    image_start[i+1]) belongs to image i. Only sizes are recorded; no
    stream is materialized.
    """
    for img in range(image_start.shape[0] - 1):
        nbytes = np.int64(0)
        bitbuf = np.int64(0)
        bitcnt = 0
        last_dc = np.zeros(4, dtype=np.int64)
        for b in range(image_start[img], image_start[img + 1]):
            c = comp_ids[b]
            dtab = dc_tab_of[c]
            atab = ac_tab_of[c]

            diff = np.int64(zz[b, 0]) - last_dc[c]
            last_dc[c] = zz[b, 0]
            t = diff if diff >= 0 else -diff
            size = 0
            while t > 0:
                size += 1
                t >>= 1
            bitbuf = (bitbuf << dc_si[dtab, size]) | dc_co[dtab, size]
            bitcnt += dc_si[dtab, size]
            if size > 0:
                v = diff if diff >= 0 else diff + (np.int64(1) << size) - 1
                bitbuf = (bitbuf << size) | (v & ((np.int64(1) << size) - 1))
                bitcnt += size
            while bitcnt >= 8:
                bitcnt -= 8
                byte = (bitbuf >> bitcnt) & 0xFF
                nbytes += 2 if byte == 0xFF else 1

            run = 0
            for k in range(1, 64):
                v = np.int64(zz[b, k])
                if v == 0:
                    run += 1
                    continue
                while run > 15:
                    bitbuf = (bitbuf << ac_si[atab, 0xF0]) | ac_co[atab, 0xF0]
                    bitcnt += ac_si[atab, 0xF0]
                    while bitcnt >= 8:
                        bitcnt -= 8
                        byte = (bitbuf >> bitcnt) & 0xFF
                        nbytes += 2 if byte == 0xFF else 1
                    run -= 16
                t = v if v > 0 else -v
                size = 0
                while t > 0:
                    size += 1
                    t >>= 1
                sym = (run << 4) | size
                bitbuf = (bitbuf << ac_si[atab, sym]) | ac_co[atab, sym]
                bitcnt += ac_si[atab, sym]
                vv = v if v > 0 else v + (np.int64(1) << size) - 1
                bitbuf = (bitbuf << size) | (vv & ((np.int64(1) << size) - 1))
                bitcnt += size
                while bitcnt >= 8:
                    bitcnt -= 8
                    byte = (bitbuf >> bitcnt) & 0xFF
                    nbytes += 2 if byte == 0xFF else 1
                run = 0
            if run > 0:
                bitbuf = (bitbuf << ac_si[atab, 0x00]) | ac_co[atab, 0x00]
                bitcnt += ac_si[atab, 0x00]
                while bitcnt >= 8:
                    bitcnt -= 8
                    byte = (bitbuf >> bitcnt) & 0xFF
                    nbytes += 2 if byte == 0xFF else 1

        if bitcnt > 0:
            pad = 8 - bitcnt
            bitbuf = (bitbuf << pad) | ((np.int64(1) << pad) - 1)
            byte = bitbuf & 0xFF
            nbytes += 2 if byte == 0xFF else 1
        sizes[img] = nbytes


# Decode status codes.
DECODE_OK = 0
DECODE_TRUNCATED = 1
DECODE_BAD_CODE = 2
DECODE_BAD_MARKER = 3


@njit(cache=True)
def decode_scan(data, start, zz, comp_ids, dc_tab_of, ac_tab_of,
                dc_min, dc_max, dc_valptr, dc_vals,
                ac_min, ac_max, ac_valptr, ac_vals,
                restart_interval, blocks_per_mcu):  # pragma: no cover - jitted
    """Huffman-decode an interleaved scan into zz (nblocks, 64) int32.

    Handles byte unstuffing and restart markers. Returns (position after
    the last consumed byte, status code).
    """
    pos = start
    n = len(data)
    bitbuf = np.int64(0)
    bitcnt = 0
    last_dc = np.zeros(4, dtype=np.int64)
    mcu_count = 0
    next_restart = 0

    for b in range(zz.shape[0]):
        if restart_interval > 0 and b % blocks_per_mcu == 0:
            if mcu_count == restart_interval:
                # Byte-align, then expect RSTn.
                bitcnt = 0
                if pos + 1 >= n:
                    return pos, DECODE_TRUNCATED
                if data[pos] != 0xFF or (data[pos + 1] & 0xF8) != 0xD0:
                    return pos, DECODE_BAD_MARKER
                if (data[pos + 1] & 0x07) != next_restart:
                    return pos, DECODE_BAD_MARKER
                pos += 2
                next_restart = (next_restart + 1) & 7
                for i in range(4):
                    last_dc[i] = 0
                mcu_count = 0
            mcu_count += 1

        c = comp_ids[b]
        dtab = dc_tab_of[c]
        atab = ac_tab_of[c]

        # DC coefficient.
        code = np.int64(0)
        length = 0
        while True:
            if bitcnt == 0:
                if pos >= n:
                    return pos, DECODE_TRUNCATED
                byte = data[pos]
                pos += 1
                if byte == 0xFF:
                    if pos >= n:
                        return pos, DECODE_TRUNCATED
                    if data[pos] == 0x00:
                        pos += 1
                    else:
                        return pos - 1, DECODE_TRUNCATED
                bitbuf = np.int64(byte)
                bitcnt = 8
            bitcnt -= 1
            code = (code << 1) | ((bitbuf >> bitcnt) & 1)
            length += 1
            if length > 16:
                return pos, DECODE_BAD_CODE
            if code <= dc_max[dtab, length]:
                break
        size = dc_vals[dtab, dc_valptr[dtab, length] + code - dc_min[dtab, length]]

        diff = np.int64(0)
        if size > 0:
            v = np.int64(0)
            for _ in range(size):
                if bitcnt == 0:
                    if pos >= n:
                        return pos, DECODE_TRUNCATED
                    byte = data[pos]
                    pos += 1
                    if byte == 0xFF:
                        if pos >= n:
                            return pos, DECODE_TRUNCATED
                        if data[pos] == 0x00:
                            pos += 1
                        else:
                            return pos - 1, DECODE_TRUNCATED
                    bitbuf = np.int64(byte)
                    bitcnt = 8
                bitcnt -= 1
                v = (v << 1) | ((bitbuf >> bitcnt) & 1)
            if v < (np.int64(1) << (size - 1)):
                v += (np.int64(-1) << size) + 1
            diff = v
        last_dc[c] += diff
        zz[b, 0] = last_dc[c]

        # AC coefficients.
        k = 1
        while k < 64:
            code = np.int64(0)
            length = 0
            while True:
                if bitcnt == 0:
                    if pos >= n:
                        return pos, DECODE_TRUNCATED
                    byte = data[pos]
                    pos += 1
                    if byte == 0xFF:
                        if pos >= n:
                            return pos, DECODE_TRUNCATED
                        if data[pos] == 0x00:
                            pos += 1
                        else:
                            return pos - 1, DECODE_TRUNCATED
                    bitbuf = np.int64(byte)
                    bitcnt = 8
                bitcnt -= 1
                code = (code << 1) | ((bitbuf >> bitcnt) & 1)
                length += 1
                if length > 16:
                    return pos, DECODE_BAD_CODE
                if code <= ac_max[atab, length]:
                    break
            sym = ac_vals[atab, ac_valptr[atab, length] + code - ac_min[atab, length]]
            run = sym >> 4
            size = sym & 0x0F
            if size == 0:
                if run == 15:
                    k += 16  # ZRL
                    continue
                break  # EOB
            k += run
            if k > 63:
                return pos, DECODE_BAD_CODE
            v = np.int64(0)
            for _ in range(size):
                if bitcnt == 0:
                    if pos >= n:
                        return pos, DECODE_TRUNCATED
                    byte = data[pos]
                    pos += 1
                    if byte == 0xFF:
                        if pos >= n:
                            return pos, DECODE_TRUNCATED
                        if data[pos] == 0x00:
                            pos += 1
                        else:
                            return pos - 1, DECODE_TRUNCATED
                    bitbuf = np.int64(byte)
                    bitcnt = 8
                bitcnt -= 1
                v = (v << 1) | ((bitbuf >> bitcnt) & 1)
            if v < (np.int64(1) << (size - 1)):
                v += (np.int64(-1) << size) + 1
            zz[b, k] = v
            k += 1

    return pos, DECODE_OK
