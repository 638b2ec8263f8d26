"""Packing and rate measurement of the per-block side information.

A decoder reproducing the compensated frame needs the motion vectors and,
for the viewport-adaptive method, the per-block viewport decisions. The
packed layout is bit-exact and method dependent:

* vectors: raster block order, dx then dy, signed 8-bit two's complement;
* viewport codes (viewport-adaptive only): 2 bits each, four per byte,
  first code in the least significant bits, zero padded, appended after
  the vector section.

Rates are reported in compressed bits per frame pixel through pluggable
lossless backends; the reference backend is the standard bzip2 stream.
"""

from __future__ import annotations

import bz2
import zlib
from dataclasses import dataclass

import numpy as np

from .geometry import Viewport
from .motion import Method, MotionField

__all__ = [
    "COMPRESSORS",
    "SideInfoError",
    "SideInfoStream",
    "pack_side_info",
    "rate_bits_per_pixel",
    "side_info_stream",
    "unpack_side_info",
]


class SideInfoError(ValueError):
    """Packing contract violation or compression backend failure."""


COMPRESSORS = {
    "bz2": (bz2.compress, bz2.decompress),
    "zlib": (zlib.compress, zlib.decompress),
    "identity": (lambda raw: raw, lambda raw: raw),
}


@dataclass(frozen=True)
class SideInfoStream:
    """Raw and compressed side information of one motion field."""

    raw: bytes
    compressed: bytes
    bits_per_pixel: float
    compressor: str


def pack_side_info(field: MotionField, method: Method | None = None) -> bytes:
    """Serialize a motion field to the wire layout described above."""
    method = method or field.config.method
    mvs = field.mvs
    if np.any(np.abs(mvs) > 127):
        raise SideInfoError(
            f"motion vector component out of signed 8-bit range: "
            f"max |component| = {int(np.max(np.abs(mvs)))}"
        )
    out = bytearray(mvs.astype(np.int8).tobytes())
    if method is Method.VA_PTMC:
        codes = field.viewports.ravel()
        padded = np.zeros(-(-codes.size // 4) * 4, dtype=np.uint8)
        padded[: codes.size] = codes
        grouped = padded.reshape(-1, 4)
        packed = grouped[:, 0] | grouped[:, 1] << 2 | grouped[:, 2] << 4 | grouped[:, 3] << 6
        out += packed.astype(np.uint8).tobytes()
    return bytes(out)


def unpack_side_info(
    raw: bytes, method: Method, grid_shape: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverse of `pack_side_info`: (mvs, viewport codes or None)."""
    rows, cols = grid_shape
    n_blocks = rows * cols
    vec_bytes = 2 * n_blocks
    expected = vec_bytes + (-(-n_blocks // 4) if method is Method.VA_PTMC else 0)
    if len(raw) != expected:
        raise SideInfoError(f"expected {expected} bytes for {grid_shape}, got {len(raw)}")
    mvs = np.frombuffer(raw[:vec_bytes], dtype=np.int8).reshape(rows, cols, 2)
    mvs = mvs.astype(np.int32)
    if method is not Method.VA_PTMC:
        return mvs, None
    packed = np.frombuffer(raw[vec_bytes:], dtype=np.uint8)
    codes = np.stack(
        [packed & 0x3, packed >> 2 & 0x3, packed >> 4 & 0x3, packed >> 6 & 0x3], axis=-1
    ).ravel()[:n_blocks]
    if np.any(codes > max(v.value for v in Viewport)):
        raise SideInfoError("invalid viewport code in stream")
    return mvs, codes.astype(np.uint8).reshape(rows, cols)


def _backend(compressor: str):
    try:
        return COMPRESSORS[compressor]
    except KeyError:
        raise SideInfoError(
            f"unknown compressor {compressor!r}; registered: {sorted(COMPRESSORS)}"
        ) from None


def rate_bits_per_pixel(raw: bytes, compressor: str, pixel_count: int) -> float:
    """Compressed side-information rate in bits per frame pixel.

    The compressed stream is decompressed again and checked against the
    input, so a lying backend cannot produce a rate.
    """
    if pixel_count <= 0:
        raise SideInfoError(f"pixel_count must be positive, got {pixel_count}")
    compress, decompress = _backend(compressor)
    try:
        compressed = compress(raw)
        restored = decompress(compressed)
    except Exception as exc:
        raise SideInfoError(f"compressor {compressor!r} failed: {exc}") from exc
    if restored != raw:
        raise SideInfoError(f"compressor {compressor!r} is not lossless")
    return len(compressed) * 8 / pixel_count


def side_info_stream(
    field: MotionField, compressor: str = "bz2", pixel_count: int | None = None
) -> SideInfoStream:
    """Pack, compress and rate one motion field in a single call."""
    if pixel_count is None:
        pixel_count = field.frame_size[0] * field.frame_size[1]
    raw = pack_side_info(field)
    bpp = rate_bits_per_pixel(raw, compressor, pixel_count)
    compressed = _backend(compressor)[0](raw)
    return SideInfoStream(raw, compressed, bpp, compressor)
