import io

import numpy as np
import pytest
from PIL import Image

from qtab.jpeg import (
    CodecError,
    DecodeError,
    JpegStream,
    decode,
    encode,
    psnr,
)
from qtab.qtable import QTable, scale_by_quality, standard_table

from conftest import random_test_image


def _tables(quality):
    return (
        scale_by_quality(standard_table("luma"), quality),
        scale_by_quality(standard_table("chroma"), quality),
    )


class TestEncode:
    def test_constant_gray_8x8_round_trips_exactly(self):
        img = np.full((8, 8, 3), 128, dtype=np.uint8)
        lq, cq = _tables(50)
        out = decode(encode(img, lq, cq, subsampling="4:4:4"))
        assert np.array_equal(out, img)

    def test_deterministic_streams(self, rng):
        img = random_test_image(rng, 64, 64)
        lq, cq = _tables(50)
        a = encode(img, lq, cq)
        b = encode(img, lq, cq)
        assert a.data == b.data

    def test_coarser_tables_compress_more(self, rng):
        img = random_test_image(rng, 64, 64, smooth=True)
        s10 = encode(img, *_tables(10))
        s90 = encode(img, *_tables(90))
        assert s10.size_bytes < s90.size_bytes

    def test_small_and_empty_images_rejected(self):
        lq, cq = _tables(50)
        with pytest.raises(CodecError):
            encode(np.zeros((0, 0, 3), dtype=np.uint8), lq, cq)
        with pytest.raises(CodecError):
            encode(np.zeros((4, 4, 3), dtype=np.uint8), lq, cq)

    def test_unknown_subsampling_rejected(self, rng):
        lq, cq = _tables(50)
        with pytest.raises(CodecError):
            encode(random_test_image(rng, 16, 16), lq, cq, subsampling="4:1:1")

    def test_embedded_tables_equal_encoding_tables(self, rng):
        # Pillow exposes the parsed DQT in raster order; it must hold
        # exactly the tables we passed in.
        img = random_test_image(rng, 32, 24)
        lq, cq = _tables(30)
        stream = encode(img, lq, cq)
        pil = Image.open(io.BytesIO(stream.data))
        assert np.array_equal(np.array(pil.quantization[0]).reshape(8, 8), lq.entries)
        assert np.array_equal(np.array(pil.quantization[1]).reshape(8, 8), cq.entries)

    def test_elementwise_dominance_never_grows_streams(self, rng):
        # q1 >= q2 elementwise implies size(q1) <= size(q2).
        for _ in range(5):
            img = random_test_image(rng, 48, 40, smooth=True)
            e2 = rng.integers(1, 200, (8, 8))
            e1 = np.clip(e2 + rng.integers(0, 56, (8, 8)), 1, 255)
            q1, q2 = QTable(e1), QTable(e2)
            assert encode(img, q1, q1).size_bytes <= encode(img, q2, q2).size_bytes


class TestDecode:
    def test_unit_tables_444_round_trip_bound(self, rng):
        # Rounding chain only: color rounding, coefficient rounding at
        # q=1, and the reference-exact integer decode path. Empirical
        # worst case over the fixed-seed corpus is 4 (the decode path
        # matches libjpeg bit-for-bit, which costs more than an idealized
        # float chain would).
        ones = QTable(np.ones((8, 8)))
        worst = 0
        errs = []
        for i in range(20):
            img = random_test_image(rng, 24, 24, smooth=bool(i % 2))
            out = decode(encode(img, ones, ones, subsampling="4:4:4"))
            diff = np.abs(out.astype(int) - img.astype(int))
            worst = max(worst, int(diff.max()))
            errs.append(diff.mean())
        assert worst <= 4
        assert np.mean(errs) < 1.0

    def test_truncated_stream_raises(self, rng):
        stream = encode(random_test_image(rng, 16, 16), *_tables(50))
        with pytest.raises(DecodeError):
            decode(stream.data[: len(stream.data) // 2])

    def test_garbage_rejected(self):
        with pytest.raises(DecodeError):
            decode(b"\x00\x01\x02\x03")
        with pytest.raises(DecodeError):
            decode(b"\xff\xd8\xff\xc2" + b"\x00" * 32)  # progressive SOF2

    def test_matches_reference_decoder_both_subsamplings(self, rng):
        for sub in ("4:4:4", "4:2:0"):
            for size in ((16, 16), (17, 23), (40, 64)):
                img = random_test_image(rng, *size, smooth=True)
                stream = encode(img, *_tables(60), subsampling=sub)
                ours = decode(stream)
                ref = np.asarray(Image.open(io.BytesIO(stream.data)).convert("RGB"))
                assert np.max(np.abs(ours.astype(int) - ref.astype(int))) <= 1

    def test_decodes_foreign_baseline_jpeg(self, rng):
        # A stream produced by an entirely different encoder exercises the
        # DQT/DHT parsing paths; our pixels must agree with the reference
        # decoder's pixels for that same stream.
        img = random_test_image(rng, 37, 51, smooth=True)
        buf = io.BytesIO()
        Image.fromarray(img).save(buf, format="JPEG", quality=65)
        data = buf.getvalue()
        ours = decode(data)
        ref = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
        assert ours.shape == ref.shape
        assert np.max(np.abs(ours.astype(int) - ref.astype(int))) <= 1

    def test_decodes_grayscale_jpeg(self, rng):
        gray = rng.integers(0, 256, (24, 31), dtype=np.int64).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(gray, mode="L").save(buf, format="JPEG", quality=80)
        ours = decode(buf.getvalue())
        assert ours.shape == (24, 31, 3)
        assert np.array_equal(ours[..., 0], ours[..., 1])


class TestPsnr:
    def test_identical_images_infinite(self, rng):
        img = random_test_image(rng, 16, 16)
        assert psnr(img, img) == float("inf")

    def test_unit_offset_matches_formula(self):
        a = np.zeros((10, 10, 3), dtype=np.uint8)
        b = np.ones((10, 10, 3), dtype=np.uint8)
        assert psnr(a, b) == pytest.approx(10 * np.log10(255.0 ** 2), abs=1e-9)
        assert psnr(a, b) == pytest.approx(48.1308036087, abs=1e-6)

    def test_maximal_error_is_zero_db(self):
        a = np.zeros((8, 8, 3), dtype=np.uint8)
        b = np.full((8, 8, 3), 255, dtype=np.uint8)
        assert psnr(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((8, 8, 3)), np.zeros((8, 16, 3)))
