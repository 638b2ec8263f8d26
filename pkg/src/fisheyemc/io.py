"""Frame input/output for the batch driver.

Supported inputs: directories of still images (grayscale used as-is, color
reduced to luma with the BT.601 weights) and raw planar 4:2:0 video files
whose geometry is declared up front. All pipeline processing is 8-bit luma.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

from .sampling import Frame

__all__ = [
    "FrameSource",
    "ImageDirectorySource",
    "RawVideoSource",
    "open_source",
    "read_frame",
    "write_frame",
    "write_rgb",
]

_IMAGE_SUFFIXES = {".png", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff", ".pgm", ".ppm"}


def read_frame(path) -> Frame:
    """Load one image as an 8-bit luma frame (BT.601 for color inputs)."""
    with Image.open(path) as img:
        # Pillow's "L" conversion applies the ITU-R 601-2 luma transform.
        luma = img.convert("L") if img.mode != "L" else img
        return Frame(np.asarray(luma, dtype=np.uint8), 8)


def write_frame(frame: Frame, path):
    """Write a frame as an 8-bit grayscale PNG (lossless)."""
    if frame.bit_depth != 8:
        raise ValueError(f"only 8-bit frames are written as PNG, got {frame.bit_depth}")
    Image.fromarray(frame.pixels.astype(np.uint8), mode="L").save(path)


def write_rgb(pixels: np.ndarray, path):
    """Write an (H, W, 3) uint8 array as a 24-bit color PNG."""
    Image.fromarray(pixels.astype(np.uint8), mode="RGB").save(path)


class FrameSource:
    """Sequence of equally sized frames addressed by index."""

    name: str

    def __len__(self) -> int:
        raise NotImplementedError

    def frame(self, index: int) -> Frame:
        raise NotImplementedError


class ImageDirectorySource(FrameSource):
    """Frames are the image files of a directory in sorted name order."""

    def __init__(self, directory):
        directory = Path(directory)
        self.files = sorted(
            p for p in directory.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
        )
        if not self.files:
            raise FileNotFoundError(f"no image files in {directory}")
        self.name = directory.name

    def __len__(self) -> int:
        return len(self.files)

    def frame(self, index: int) -> Frame:
        try:
            path = self.files[index]
        except IndexError:
            raise IndexError(f"frame {index} out of range ({len(self.files)} files)") from None
        frame = read_frame(path)
        return frame


class RawVideoSource(FrameSource):
    """Raw planar 4:2:0 file; only the luma plane is read."""

    def __init__(self, path, width: int, height: int):
        self.path = Path(path)
        self.width = width
        self.height = height
        self.luma_bytes = width * height
        self.frame_bytes = self.luma_bytes * 3 // 2
        size = os.path.getsize(self.path)
        if size % self.frame_bytes:
            raise ValueError(
                f"{self.path} size {size} is not a multiple of the "
                f"{width}x{height} 4:2:0 frame size {self.frame_bytes}"
            )
        self._count = size // self.frame_bytes
        self.name = self.path.stem

    def __len__(self) -> int:
        return self._count

    def frame(self, index: int) -> Frame:
        if not 0 <= index < self._count:
            raise IndexError(f"frame {index} out of range ({self._count} frames)")
        with open(self.path, "rb") as fh:
            fh.seek(index * self.frame_bytes)
            data = fh.read(self.luma_bytes)
        pixels = np.frombuffer(data, dtype=np.uint8).reshape(self.height, self.width)
        return Frame(pixels.copy(), 8)


def open_source(path, size: tuple[int, int] | None = None) -> FrameSource:
    """Open a frame sequence: a directory of images or a raw .yuv file."""
    path = Path(path)
    if path.is_dir():
        return ImageDirectorySource(path)
    if path.suffix.lower() in {".yuv", ".raw"}:
        if size is None:
            raise ValueError(f"raw video {path} requires a declared frame size")
        return RawVideoSource(path, *size)
    raise ValueError(f"unsupported input {path}; expected a directory or a .yuv file")
