"""Pixel-difference quality metrics: MSE and PSNR."""

from __future__ import annotations

import math

import numpy as np

from .pixels import Frame

PEAK = 255


def mse(a: Frame, b: Frame) -> float:
    """Mean squared pixel difference between two frames of equal size."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    # Accumulate in int64 so the sum is exact before the single division.
    diff = a.luma.astype(np.int64) - b.luma.astype(np.int64)
    sse = int(np.sum(diff * diff))
    return sse / (a.width * a.height)


def psnr(a: Frame, b: Frame) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical frames.

    The infinity sentinel is deliberate: reports render it as "inf" and
    aggregate means must skip it rather than fold in a finite cap.
    """
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / err)
