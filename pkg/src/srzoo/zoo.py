"""The model lookup table: entries pairing a model id with cluster centers.

Each entry encodes one fitted model by the cluster centers of the patch
embeddings it was trained on. Retrieval is an exhaustive argmax over all
centers of all entries: at the scales this table sees (tens of entries,
about five centers each) a linear scan is faster to reason about than any
index and keeps tie-breaking exact.

Table file layout (little-endian):
    magic   8 bytes  b"RIVZOO1\\n"
    D       u32      embedding dimension
    K       u32      configured cluster count
    R       u32      entry count
    entries R x (u32 model_id, u64 size_bytes, u32 k_effective,
                 k_effective x D x f32)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .clustering import spherical_kmeans
from .errors import FormatError
from .pixels import SegmentId

TABLE_MAGIC = b"RIVZOO1\n"


@dataclass(frozen=True)
class ModelId:
    """Registered model: dense id, payload size, and originating segment."""

    id: int
    size_bytes: int
    source_segment: Optional[SegmentId] = None


@dataclass(frozen=True)
class ZooEntry:
    """One table row: a model plus the unit centers that describe its content."""

    model: ModelId
    centers: np.ndarray  # (k_effective, D) float32, unit rows

    @property
    def k_effective(self) -> int:
        return self.centers.shape[0]


def _unit_f32(rows: np.ndarray) -> np.ndarray:
    """Cast rows to float32, renormalizing in the f32 domain.

    A second normalization after the cast keeps every stored row within
    1e-6 of unit length even for high dimensions.
    """
    out = np.asarray(rows, dtype=np.float64)
    out = out / np.linalg.norm(out, axis=1, keepdims=True)
    out = out.astype(np.float32)
    norms = np.linalg.norm(out.astype(np.float64), axis=1, keepdims=True)
    return (out.astype(np.float64) / norms).astype(np.float32)


class LookupTable:
    """Ordered collection of ZooEntry rows sharing one embedding dimension.

    Reads treat the table as immutable; `build_entry` appends and is the only
    mutation. `view(r)` returns a snapshot restricted to the first r entries,
    which is how simulations pin the table state a segment was scheduled
    against.
    """

    def __init__(self, dimension: int, k: int, entries: Optional[list[ZooEntry]] = None):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        if k < 1:
            raise ValueError("k must be >= 1")
        self.dimension = dimension
        self.k = k
        self.entries: list[ZooEntry] = list(entries) if entries else []

    def __len__(self) -> int:
        return len(self.entries)

    def next_model_id(self) -> int:
        return max((e.model.id for e in self.entries), default=-1) + 1

    def view(self, count: int) -> "LookupTable":
        """Snapshot containing only the first `count` entries."""
        return LookupTable(self.dimension, self.k, self.entries[:count])

    def build_entry(
        self,
        embeddings,
        seed: int,
        model_size_bytes: int,
        segment: Optional[SegmentId] = None,
    ) -> ZooEntry:
        """Cluster pruned patch embeddings and append the resulting entry.

        The model itself is represented by a fresh ModelId; fitting real
        weights is outside this library, so registration is the training
        stand-in.
        """
        pts = np.asarray(embeddings, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("segment has no complex patches")
        if pts.shape[1] != self.dimension:
            raise ValueError(
                f"embedding dimension {pts.shape[1]} does not match table "
                f"dimension {self.dimension}"
            )
        result = spherical_kmeans(pts, self.k, seed)
        model = ModelId(
            id=self.next_model_id(),
            size_bytes=model_size_bytes,
            source_segment=segment,
        )
        entry = ZooEntry(model=model, centers=_unit_f32(result.centers))
        self.entries.append(entry)
        return entry


def query_patch(embedding: np.ndarray, table: LookupTable) -> tuple[int, float]:
    """Best entry for an embedding: argmax similarity over all centers.

    Returns (entry index, winning similarity). Ties resolve to the lowest
    entry index, then the lowest center index within the entry.
    """
    if len(table) == 0:
        raise ValueError("no models available")
    emb = np.asarray(embedding, dtype=np.float64)
    if emb.shape != (table.dimension,):
        raise ValueError(
            f"embedding dimension {emb.shape} does not match table "
            f"dimension {table.dimension}"
        )
    best_j = -1
    best_sim = -np.inf
    for j, entry in enumerate(table.entries):
        centers = entry.centers.astype(np.float64)
        for k in range(centers.shape[0]):
            sim = float(np.dot(centers[k], emb))
            if sim > best_sim:
                best_j = j
                best_sim = sim
    return best_j, min(max(best_sim, -1.0), 1.0)


def save_table(table: LookupTable, path) -> None:
    """Serialize a table; the f32 center payload round-trips bit-exactly."""
    out = bytearray()
    out += TABLE_MAGIC
    out += struct.pack("<III", table.dimension, table.k, len(table))
    for entry in table.entries:
        centers = np.ascontiguousarray(entry.centers, dtype="<f4")
        out += struct.pack(
            "<IQI", entry.model.id, entry.model.size_bytes, entry.k_effective
        )
        out += centers.tobytes()
    Path(path).write_bytes(bytes(out))


def load_table(path) -> LookupTable:
    """Load a table file, validating the declared layout field by field."""
    data = Path(path).read_bytes()
    if data[:8] != TABLE_MAGIC:
        raise FormatError(f"{path}: bad magic, not a lookup table file")
    if len(data) < 20:
        raise FormatError(f"{path}: truncated header")
    dim, k, count = struct.unpack_from("<III", data, 8)
    if dim == 0 or k == 0:
        raise FormatError(f"{path}: dimension and k must be positive")
    entries: list[ZooEntry] = []
    off = 20
    for _ in range(count):
        if off + 16 > len(data):
            raise FormatError(f"{path}: truncated entry header")
        model_id, size_bytes, k_eff = struct.unpack_from("<IQI", data, off)
        off += 16
        if k_eff < 1 or k_eff > k:
            raise FormatError(
                f"{path}: entry {model_id} declares k_effective {k_eff} "
                f"outside [1, {k}]"
            )
        nbytes = k_eff * dim * 4
        if off + nbytes > len(data):
            raise FormatError(f"{path}: truncated centers for entry {model_id}")
        centers = (
            np.frombuffer(data, dtype="<f4", count=k_eff * dim, offset=off)
            .reshape(k_eff, dim)
            .copy()
        )
        off += nbytes
        entries.append(
            ZooEntry(model=ModelId(id=model_id, size_bytes=size_bytes), centers=centers)
        )
    if off != len(data):
        raise FormatError(f"{path}: {len(data) - off} trailing bytes after entries")
    return LookupTable(dimension=dim, k=k, entries=entries)
