"""Edge scoring and threshold pruning of patches.

The edge score of a patch is the mean Sobel gradient magnitude over the
patch interior. It is a cheap complexity proxy: flat regions score near 0,
textured regions score high, and a threshold keeps only the patches worth
feeding to the encoder and the model builder.
"""

from __future__ import annotations

import numpy as np

from .pixels import PatchView


def sobel_gradients(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel responses (gx, gy) over the interior of a uint8 grid.

    Unnormalized kernels with weights {+-1, +-2}. The returned arrays cover
    the (h-2) x (w-2) interior; borders are not replicated.
    """
    p = pixels.astype(np.int64)
    gx = (
        (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    return gx, gy


def edge_score(patch: PatchView) -> float:
    """Mean Euclidean Sobel magnitude over the patch interior."""
    if patch.size < 3:
        raise ValueError("patch must be at least 3x3 for edge scoring")
    gx, gy = sobel_gradients(patch.pixels)
    mag = np.hypot(gx.astype(np.float64), gy.astype(np.float64))
    return float(mag.mean())


def prune(patches: list[PatchView], threshold: float) -> list[PatchView]:
    """Keep exactly the patches whose edge score strictly exceeds threshold.

    Input order is preserved. The comparison is strict, so threshold -inf or
    any negative value retains everything and +inf retains nothing.
    """
    return [p for p in patches if edge_score(p) > threshold]
