"""Side-information wire layout, round trips and rate arithmetic."""

import numpy as np
import pytest

from fisheyemc.motion import Method, MotionField, SearchConfig, Strategy
from fisheyemc.sideinfo import (
    SideInfoError,
    pack_side_info,
    rate_bits_per_pixel,
    side_info_stream,
    unpack_side_info,
)


def make_field(rows, cols, method, seed=None, frame_size=None):
    config = SearchConfig(16, 96, Strategy.DIAMOND, method)
    size = frame_size or (cols * 16, rows * 16)
    field = MotionField.zero(size, config)
    assert field.grid_shape == (rows, cols)
    if seed is not None:
        rng = np.random.default_rng(seed)
        field.mvs[:] = rng.integers(-96, 97, size=field.mvs.shape)
        field.viewports[:] = rng.integers(0, 3, size=field.viewports.shape)
    return field


class TestPack:
    def test_single_block_twos_complement(self):
        field = make_field(1, 1, Method.TMC)
        field.mvs[0, 0] = (3, -2)
        assert pack_side_info(field) == bytes([0x03, 0xFE])

    def test_sizes_for_1088_frame(self):
        field = make_field(68, 68, Method.TMC, frame_size=(1088, 1088))
        assert len(pack_side_info(field)) == 9248
        va = make_field(68, 68, Method.VA_PTMC, frame_size=(1088, 1088))
        assert len(pack_side_info(va)) == 9248 + 1156

    def test_viewport_codes_low_bits_first(self):
        field = make_field(1, 5, Method.VA_PTMC)
        field.viewports[0] = [1, 2, 0, 1, 2]
        raw = pack_side_info(field)
        assert raw[10] == 0b01_00_10_01  # blocks 0..3
        assert raw[11] == 0b00_00_00_10  # block 4, zero padded

    def test_component_overflow_rejected(self):
        field = make_field(2, 2, Method.TMC)
        field.mvs[0, 0, 0] = 128
        with pytest.raises(SideInfoError, match="8-bit"):
            pack_side_info(field)

    def test_round_trip_random_fields(self):
        for seed, method in [(71, Method.TMC), (72, Method.PTMC), (73, Method.VA_PTMC)]:
            field = make_field(9, 13, method, seed=seed)
            mvs, viewports = unpack_side_info(pack_side_info(field), method, (9, 13))
            assert np.array_equal(mvs, field.mvs)
            if method is Method.VA_PTMC:
                assert np.array_equal(viewports, field.viewports)
            else:
                assert viewports is None

    def test_va_adds_quarter_byte_per_block(self):
        for rows, cols in [(3, 5), (8, 8), (7, 11)]:
            tmc = make_field(rows, cols, Method.TMC, seed=74)
            va = make_field(rows, cols, Method.VA_PTMC, seed=74)
            extra = len(pack_side_info(va)) - len(pack_side_info(tmc))
            assert extra == -(-rows * cols // 4)


class TestRate:
    def test_identity_backend_arithmetic(self):
        field = make_field(68, 68, Method.TMC, frame_size=(1088, 1088))
        raw = pack_side_info(field)
        assert rate_bits_per_pixel(raw, "identity", 1088 * 1088) == 0.0625

    def test_zero_field_compresses_far_below_raw(self):
        field = make_field(68, 68, Method.TMC, frame_size=(1088, 1088))
        raw = pack_side_info(field)
        bz2_bpp = rate_bits_per_pixel(raw, "bz2", 1088 * 1088)
        assert bz2_bpp < 0.0625 / 20

    def test_random_field_is_nearly_incompressible(self):
        field = make_field(64, 64, Method.VA_PTMC, seed=75)
        raw = pack_side_info(field)
        assert rate_bits_per_pixel(raw, "bz2", 1) >= 0.9 * len(raw) * 8

    def test_unknown_backend_named(self):
        with pytest.raises(SideInfoError, match="nope"):
            rate_bits_per_pixel(b"xx", "nope", 100)

    def test_stream_round_trip_through_bz2(self):
        import bz2

        field = make_field(12, 12, Method.VA_PTMC, seed=76)
        stream = side_info_stream(field, "bz2")
        assert bz2.decompress(stream.compressed) == stream.raw
        mvs, viewports = unpack_side_info(stream.raw, Method.VA_PTMC, (12, 12))
        assert np.array_equal(mvs, field.mvs)
        assert np.array_equal(viewports, field.viewports)
        assert stream.bits_per_pixel == len(stream.compressed) * 8 / (192 * 192)
