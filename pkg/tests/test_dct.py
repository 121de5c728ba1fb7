import numpy as np
import pytest

from qtab.jpeg.dct import (
    forward_dct,
    inverse_dct,
    quantize,
    quantize_rows,
    dequantize,
    idct_islow,
)

from helpers import naive_dct, naive_idct


class TestForwardDCT:
    def test_level_shifted_constant_block_is_all_zero(self):
        # an all-128 spatial block, level shifted, is the zero block
        block = np.full((8, 8), 128.0) - 128.0
        assert np.max(np.abs(forward_dct(block))) < 1e-12

    def test_impulse_matches_naive_definition(self):
        block = np.zeros((8, 8))
        block[2, 5] = 100.0
        np.testing.assert_allclose(forward_dct(block), naive_dct(block), atol=1e-9)

    def test_random_blocks_match_naive_definition(self, rng):
        for _ in range(25):
            block = rng.uniform(-128, 127, (8, 8))
            np.testing.assert_allclose(forward_dct(block), naive_dct(block), atol=1e-9)

    def test_batched_equals_per_block(self, rng):
        blocks = rng.uniform(-128, 127, (11, 8, 8))
        batched = forward_dct(blocks)
        for i in range(11):
            np.testing.assert_allclose(batched[i], forward_dct(blocks[i]), atol=1e-12)


class TestInverseDCT:
    def test_all_zero_coefficients(self):
        assert np.max(np.abs(inverse_dct(np.zeros((8, 8))))) == 0

    def test_dc_only_gives_constant_block(self):
        coeffs = np.zeros((8, 8))
        coeffs[0, 0] = 80.0
        spatial = inverse_dct(coeffs)
        np.testing.assert_allclose(spatial, np.full((8, 8), 10.0), atol=1e-9)
        np.testing.assert_allclose(spatial, naive_idct(coeffs), atol=1e-9)

    def test_round_trip_within_1e9(self, rng):
        for _ in range(50):
            block = rng.uniform(-128, 127, (8, 8))
            np.testing.assert_allclose(
                inverse_dct(forward_dct(block)), block, atol=1e-9
            )


class TestQuantize:
    def test_unit_table_rounds_coefficients(self, rng):
        coeffs = rng.uniform(-500, 500, (8, 8))
        levels = quantize(coeffs, np.ones((8, 8)))
        expected = np.sign(coeffs) * np.floor(np.abs(coeffs) + 0.5)
        assert np.array_equal(levels, expected.astype(np.int32))

    def test_scalar_division_example(self):
        coeffs = np.full((8, 8), 100.0)
        levels = quantize(coeffs, np.full((8, 8), 16))
        assert np.all(levels == 6)  # round(6.25) = 6

    def test_tie_rounds_away_from_zero(self):
        coeffs = np.full((8, 8), -24.0)
        levels = quantize(coeffs, np.full((8, 8), 16))
        assert np.all(levels == -2)  # -1.5 rounds away from zero
        levels_pos = quantize(-coeffs, np.full((8, 8), 16))
        assert np.all(levels_pos == 2)

    def test_dequantize_inverts_scaling(self, rng):
        q = rng.integers(1, 256, (8, 8))
        levels = rng.integers(-50, 50, (8, 8))
        assert np.array_equal(dequantize(levels, q), levels * q)

    def test_quantize_rows_bit_identical(self, rng):
        coeffs = rng.uniform(-1024, 1024, (200, 64))
        divisors = rng.integers(1, 256, 64).astype(np.float64)
        out = np.empty((200, 64), dtype=np.int32)
        quantize_rows(coeffs, divisors, out)
        assert np.array_equal(out, quantize(coeffs, divisors))


class TestIntegerIDCT:
    def test_dc_only_block(self):
        levels = np.zeros((8, 8), dtype=np.int32)
        levels[0, 0] = 16  # dequantizes to 128 with q=8
        out = idct_islow(levels, np.full((8, 8), 8, dtype=np.int32))
        # float reference: constant 128/8 = 16, +128 level shift = 144
        assert np.all(out == 144)

    def test_close_to_float_reference(self, rng):
        # The fixed-point transform tracks the exact inverse DCT within
        # +/-1 after rounding for in-range data.
        q = np.full((8, 8), 4, dtype=np.int32)
        for _ in range(20):
            levels = (rng.uniform(-40, 40, (8, 8))).astype(np.int32)
            got = idct_islow(levels, q)[0].astype(np.float64)
            ref = np.clip(np.rint(inverse_dct(levels * q) + 128), 0, 255)
            assert np.max(np.abs(got - ref)) <= 1
