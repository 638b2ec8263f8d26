"""Masked quality metrics over the circular fisheye image area.

Both metrics ignore everything outside the supplied mask, so the flat frame
corners around the image circle never influence the scores.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .geometry import FisheyeCamera
from .sampling import Frame

__all__ = ["circular_mask", "psnr_masked", "ssim_masked"]


def circular_mask(cam: FisheyeCamera) -> np.ndarray:
    """Boolean raster: pixel centers within the camera's image circle."""
    cx, cy = cam.principal_point
    ys, xs = np.mgrid[0 : cam.height, 0 : cam.width]
    mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= cam.r_max**2
    if not mask.any():
        raise ValueError("image circle does not cover any pixel center")
    return mask


def _check_pair(a: Frame, b: Frame, mask: np.ndarray):
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"frame shape mismatch: {a.pixels.shape} vs {b.pixels.shape}")
    if a.bit_depth != b.bit_depth:
        raise ValueError(f"bit depth mismatch: {a.bit_depth} vs {b.bit_depth}")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.pixels.shape:
        raise ValueError(f"mask shape {mask.shape} does not match frames {a.pixels.shape}")
    if not mask.any():
        raise ValueError("empty mask")
    return mask


def psnr_masked(a: Frame, b: Frame, mask: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over the masked pixels.

    Identical masked content returns +inf.
    """
    mask = _check_pair(a, b, mask)
    diff = a.pixels.astype(np.float64)[mask] - b.pixels.astype(np.float64)[mask]
    mse = np.mean(diff**2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(a.max_value**2 / mse))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) // 2
    g = np.exp(-np.arange(-half, half + 1, dtype=float) ** 2 / (2.0 * sigma**2))
    g /= g.sum()
    return np.outer(g, g)


def ssim_masked(
    a: Frame,
    b: Frame,
    mask: np.ndarray,
    window_size: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
) -> float:
    """Mean structural similarity over windows centered inside the mask.

    Gaussian-weighted 11x11 windows, dynamic range from the bit depth;
    windows near the frame border are filled by replication.
    """
    mask = _check_pair(a, b, mask)
    x = a.pixels.astype(np.float64)
    y = b.pixels.astype(np.float64)
    dynamic_range = float(a.max_value)
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    win = _gaussian_window(window_size, sigma)

    def filt(img):
        return ndimage.correlate(img, win, mode="nearest")

    mu_x = filt(x)
    mu_y = filt(y)
    var_x = filt(x * x) - mu_x**2
    var_y = filt(y * y) - mu_y**2
    cov = filt(x * y) - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    )
    return float(np.mean(ssim_map[mask]))
