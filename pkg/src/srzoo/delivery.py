"""Model delivery: transition probabilities, prefetching, cache, bandwidth.

The transfer matrix turns pairwise entry similarity into row-stochastic
transition probabilities; prefetching ships the most probable next models
ahead of need, and a small LRU cache on the client decides what is resident.
Bandwidth accounting checks transmissions against the headroom between the
high- and low-resolution stream bitrates.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .zoo import LookupTable


@dataclass(frozen=True)
class TransferMatrix:
    """Row-stochastic transition probabilities between table entries."""

    probs: np.ndarray  # (R, R) float64
    model_ids: tuple[int, ...]  # entry index -> model id
    source_table_version: int  # entry count of the table it was built from


def transfer_matrix(table: LookupTable) -> TransferMatrix:
    """Transition probabilities from pairwise center similarity.

    For source entry i and target j, every center of i contributes its best
    match among j's centers; the sum is softmaxed over j (stabilized by
    subtracting the row maximum). An entry's self-score equals its center
    count, which is the row maximum, so the diagonal always carries the
    largest probability of its row.
    """
    r = len(table)
    if r == 0:
        raise ValueError("transfer matrix requires a non-empty table")
    centers = [e.centers.astype(np.float64) for e in table.entries]
    scores = np.empty((r, r), dtype=np.float64)
    for i in range(r):
        for j in range(r):
            sims = np.clip(centers[i] @ centers[j].T, -1.0, 1.0)
            scores[i, j] = float(sims.max(axis=1).sum())
    shifted = scores - scores.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)
    return TransferMatrix(
        probs=probs,
        model_ids=tuple(e.model.id for e in table.entries),
        source_table_version=r,
    )


class ClientCache:
    """LRU cache of model ids with a fixed capacity.

    The generic fallback model is always resident on a client and never
    occupies a slot here, so only fitted models are tracked.
    """

    def __init__(self, capacity: int = 3):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: OrderedDict[int, None] = OrderedDict()

    @property
    def entries(self) -> tuple[int, ...]:
        """Cached model ids, least recently used first."""
        return tuple(self._entries)

    def __contains__(self, model_id: int) -> bool:
        return model_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def access(self, model_id: int) -> bool:
        """Request a model: True and refreshed recency on hit, False on miss."""
        if model_id in self._entries:
            self._entries.move_to_end(model_id)
            return True
        return False

    def insert(self, model_ids) -> list[int]:
        """Add models as most recent; returns ids evicted beyond capacity."""
        evicted = []
        for model_id in model_ids:
            if model_id in self._entries:
                self._entries.move_to_end(model_id)
                continue
            self._entries[model_id] = None
            if len(self._entries) > self.capacity:
                evicted.append(self._entries.popitem(last=False)[0])
        return evicted


def prefetch_set(
    current: int,
    matrix: TransferMatrix,
    k_top: int,
    cache: ClientCache,
) -> list[int]:
    """Models to transmit: the k_top most probable successors not yet cached.

    Selection ranks row `current` by probability (ties to the lowest entry
    index); the diagonal-argmax property means the current model itself is
    always part of the selection. Already-cached models are dropped from the
    returned transmission list, which stays in descending probability order.
    """
    row = matrix.probs[current]
    if k_top <= 0:
        return []
    order = sorted(range(len(row)), key=lambda j: (-row[j], j))
    selected = order[: min(k_top, len(row))]
    return [
        matrix.model_ids[j] for j in selected if matrix.model_ids[j] not in cache
    ]


@dataclass(frozen=True)
class BandwidthBudget:
    """Bitrate headroom available to model transmission."""

    b_hr_kbps: float
    b_lr_kbps: float
    interval_seconds: float

    def __post_init__(self):
        if self.b_hr_kbps < self.b_lr_kbps:
            raise ValueError("high-resolution bitrate must be >= low-resolution")
        if self.interval_seconds <= 0:
            raise ValueError("interval_seconds must be positive")

    @property
    def delta_kbps(self) -> float:
        return self.b_hr_kbps - self.b_lr_kbps


def transmission_feasible(size_bytes_list, budget: BandwidthBudget) -> tuple[bool, float]:
    """Check a batch of payloads against the budget.

    Returns (feasible, achieved rate in bits/s); the rate is the batch total
    spread over the budget interval, compared with the bitrate headroom.
    """
    rate_bps = 8.0 * float(sum(size_bytes_list)) / budget.interval_seconds
    return rate_bps <= budget.delta_kbps * 1000.0, rate_bps


def prefetch_record(
    time_s: float,
    current_model,
    prefetched: list[int],
    evicted: list[int],
    hit: bool,
    rate_bps: float,
    feasible: bool,
) -> dict:
    """JSON-ready record for the prefetch/transmission log."""
    return {
        "time": time_s,
        "current_model": current_model,
        "prefetched": prefetched,
        "evicted": evicted,
        "hit": hit,
        "rate_bps": rate_bps,
        "feasible": feasible,
    }
