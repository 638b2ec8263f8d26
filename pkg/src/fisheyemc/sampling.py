"""Sub-pixel sampling of luma frames with Keys cubic-convolution interpolation.

Coordinates handed to the sampler are quantized to the nearest 1/8 pixel
first (rounding half away from zero), so any precomputed upsampled plane and
on-demand evaluation agree bit for bit. Out-of-frame coordinates are sampled
with border replication, which makes the sampler total.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Frame",
    "KERNEL_A",
    "SUBPEL_PRECISION",
    "SubpelGrid",
    "cubic_kernel",
    "quantize_coords",
    "sample_at",
]

# Keys kernel parameter and the fractional-pel denominator used for matching.
KERNEL_A = -0.5
SUBPEL_PRECISION = 8


@dataclass(frozen=True)
class Frame:
    """Single-channel integer raster with an explicit bit depth."""

    pixels: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 2 or px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError(f"pixels must be a non-empty 2D array, got shape {px.shape}")
        if not np.issubdtype(px.dtype, np.integer):
            raise ValueError(f"pixels must be an integer array, got dtype {px.dtype}")
        if self.bit_depth < 1:
            raise ValueError(f"bit_depth must be >= 1, got {self.bit_depth}")
        if px.min() < 0 or px.max() > self.max_value:
            raise ValueError(f"samples outside [0, {self.max_value}]")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1


def cubic_kernel(s) -> np.ndarray:
    """Keys cubic-convolution kernel with a = -0.5.

    Interpolating: 1 at s = 0, 0 at every other integer, support |s| < 2.
    """
    s = np.abs(np.asarray(s, dtype=float))
    a = KERNEL_A
    near = (a + 2.0) * s**3 - (a + 3.0) * s**2 + 1.0
    far = a * (s**3 - 5.0 * s**2 + 8.0 * s - 4.0)
    return np.where(s <= 1.0, near, np.where(s < 2.0, far, 0.0))


def quantize_coords(coords, precision: int = SUBPEL_PRECISION) -> np.ndarray:
    """Snap coordinates to the nearest 1/precision pixel, half away from zero."""
    scaled = np.asarray(coords, dtype=float) * precision
    return np.copysign(np.floor(np.abs(scaled) + 0.5), scaled) / precision


_TAPS = np.array([-1, 0, 1, 2])


@dataclass(frozen=True)
class SubpelGrid:
    """A frame prepared for fractional-pel sampling."""

    frame: Frame
    precision: int = SUBPEL_PRECISION
    _pixels: np.ndarray = field(init=False, repr=False, compare=False)
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.precision < 1:
            raise ValueError(f"precision must be >= 1, got {self.precision}")
        object.__setattr__(self, "_pixels", self.frame.pixels.astype(np.float64))
        # quantized coordinates only take `precision` fractional phases, so the
        # kernel weights form a small table; built through cubic_kernel at the
        # exact phase values, it is bit-identical to direct evaluation
        phases = np.arange(self.precision, dtype=float) / self.precision
        object.__setattr__(self, "_weights", cubic_kernel(phases[:, None] - _TAPS))


def sample_at(grid: SubpelGrid, coords) -> np.ndarray:
    """Cubic-convolution sample values at (x, y) coordinates, (..., 2).

    Coordinates are quantized to the grid precision first; samples at
    integer positions reproduce the stored pixels exactly. Results are
    clamped to the frame's valid range but not rounded.
    """
    q = quantize_coords(coords, grid.precision)
    px = grid._pixels
    h, w = px.shape

    qx, qy = q[..., 0], q[..., 1]
    bx = np.floor(qx)
    by = np.floor(qy)
    wx = grid._weights[np.rint((qx - bx) * grid.precision).astype(np.int64) % grid.precision]
    wy = grid._weights[np.rint((qy - by) * grid.precision).astype(np.int64) % grid.precision]
    ix = np.clip(bx.astype(np.int64)[..., None] + _TAPS, 0, w - 1)
    iy = np.clip(by.astype(np.int64)[..., None] + _TAPS, 0, h - 1)

    patch = px[iy[..., :, None], ix[..., None, :]]
    values = np.einsum("...i,...j,...ij->...", wy, wx, patch)
    return np.clip(values, 0.0, float(grid.frame.max_value))
