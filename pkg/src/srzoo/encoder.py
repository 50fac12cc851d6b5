"""Patch feature extraction and cosine similarity.

Embeddings are unit-norm float64 vectors. The built-in encoder is a fully
deterministic, dependency-free feature stack; callers who precompute
embeddings with an external network can instead load them from the binary
format documented below and wrap them in ImportedEmbeddings.

Embedding file layout (little-endian):
    magic   8 bytes  b"RIVEMB1\\n"
    D       u32      vector dimension
    n       u64      record count
    records n x (u32 frame_index, u16 grid_row, u16 grid_col, D x f32)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .edges import sobel_gradients
from .errors import FormatError
from .pixels import PatchView

EMBED_MAGIC = b"RIVEMB1\n"

DEFAULT_DIMENSION = 88
_POOL_GRID = 8
_ORIENT_BINS = 16
_INTENSITY_BINS = 8


def unit(vec: np.ndarray) -> np.ndarray:
    """Normalize to unit L2 norm; near-zero vectors map to the first basis axis."""
    v = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        out = np.zeros_like(v)
        out[0] = 1.0
        return out
    return v / norm


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1]."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


class PatchEncoder:
    """Interface: a deterministic map from patch pixels to a unit vector."""

    dimension: int

    def encode(self, patch: PatchView) -> np.ndarray:
        raise NotImplementedError


class DefaultEncoder(PatchEncoder):
    """Deterministic 88-dim feature stack standing in for a learned encoder.

    Features, in fixed order:
      - 8x8 mean-pooled luma grid scaled to [0, 1]   (64 dims)
      - 16-bin gradient-orientation histogram weighted by Sobel magnitude,
        normalized by total gradient mass            (16 dims)
      - 8-bin intensity histogram, mass-normalized   (8 dims)
    The concatenation is L2-normalized. All features are non-negative before
    normalization, so similarities between built-in embeddings lie in [0, 1].
    """

    dimension = DEFAULT_DIMENSION

    def encode(self, patch: PatchView) -> np.ndarray:
        if patch.size < 8:
            raise ValueError("built-in encoder requires patches of at least 8x8")
        px = patch.pixels
        s = patch.size

        pooled = np.empty(_POOL_GRID * _POOL_GRID, dtype=np.float64)
        bounds = [(i * s) // _POOL_GRID for i in range(_POOL_GRID + 1)]
        k = 0
        for r in range(_POOL_GRID):
            for c in range(_POOL_GRID):
                block = px[bounds[r] : bounds[r + 1], bounds[c] : bounds[c + 1]]
                pooled[k] = block.mean() / 255.0
                k += 1

        gx, gy = sobel_gradients(px)
        mag = np.hypot(gx.astype(np.float64), gy.astype(np.float64))
        angle = np.arctan2(gy.astype(np.float64), gx.astype(np.float64))
        bins = np.floor((angle + np.pi) / (2.0 * np.pi / _ORIENT_BINS)).astype(np.int64)
        bins = np.clip(bins, 0, _ORIENT_BINS - 1)
        orient = np.bincount(bins.ravel(), weights=mag.ravel(), minlength=_ORIENT_BINS)
        mass = float(orient.sum())
        if mass > 0.0:
            orient = orient / mass

        counts = np.bincount((px >> 5).ravel(), minlength=_INTENSITY_BINS)
        intensity = counts.astype(np.float64) / px.size

        return unit(np.concatenate([pooled, orient, intensity]))


class ImportedEmbeddings(PatchEncoder):
    """Encoder backed by a table of externally computed embeddings.

    Lookups are keyed by (frame_index, grid_row, grid_col); a patch with no
    precomputed vector is an error because silently falling back to another
    encoder would mix feature spaces.
    """

    def __init__(self, table: dict[tuple[int, int, int], np.ndarray], dimension: int):
        self.table = table
        self.dimension = dimension

    def encode(self, patch: PatchView) -> np.ndarray:
        key = (patch.frame_index, patch.grid_row, patch.grid_col)
        try:
            return self.table[key]
        except KeyError:
            raise KeyError(
                f"no imported embedding for frame {patch.frame_index} "
                f"patch ({patch.grid_row}, {patch.grid_col})"
            ) from None


def import_embeddings(path) -> tuple[dict[tuple[int, int, int], np.ndarray], int]:
    """Load an embedding file; returns (mapping, dimension).

    Every vector is re-normalized to unit length on load. Non-finite values,
    truncated payloads, and count mismatches are format errors.
    """
    data = Path(path).read_bytes()
    if data[:8] != EMBED_MAGIC:
        raise FormatError(f"{path}: bad magic, not an embedding file")
    if len(data) < 20:
        raise FormatError(f"{path}: truncated header")
    dim, n = struct.unpack_from("<IQ", data, 8)
    if dim == 0:
        raise FormatError(f"{path}: dimension must be positive")
    record = 8 + dim * 4
    expected = 20 + n * record
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload length {len(data) - 20} does not match "
            f"count {n} of dimension {dim}"
        )
    table: dict[tuple[int, int, int], np.ndarray] = {}
    off = 20
    for _ in range(n):
        frame_index, row, col = struct.unpack_from("<IHH", data, off)
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off + 8).astype(
            np.float64
        )
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"{path}: non-finite embedding at record for "
                              f"frame {frame_index} patch ({row}, {col})")
        table[(frame_index, row, col)] = unit(vec)
        off += record
    return table, dim


def export_embeddings(table: dict[tuple[int, int, int], np.ndarray], dim: int, path):
    """Write embeddings in the documented binary layout (keys sorted)."""
    out = bytearray()
    out += EMBED_MAGIC
    out += struct.pack("<IQ", dim, len(table))
    for key in sorted(table):
        vec = np.asarray(table[key], dtype=np.float64)
        if vec.shape != (dim,):
            raise ValueError(f"embedding for {key} has wrong dimension")
        out += struct.pack("<IHH", *key)
        out += vec.astype("<f4").tobytes()
    Path(path).write_bytes(bytes(out))
