"""Engine configuration: one flat record covering every tunable.

Configs load from a JSON key-value file, with individual command-line flags
winning over file values. The sha256 of the canonical JSON form is stamped
into every output file header so a report can always be traced back to the
exact settings and seed that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from typing import Optional

from .delivery import BandwidthBudget
from .encoder import DefaultEncoder, ImportedEmbeddings, PatchEncoder, import_embeddings
from .scheduler import SchedulerParams
from .sim.oracle import QualityOracle

DEFAULT_SEED = 90535


@dataclass(frozen=True)
class EngineConfig:
    """All knobs for scheduling, delivery, and the simulator."""

    edge_threshold: float = 10.0
    similarity_threshold: float = 0.8
    vote_threshold: float = 0.65
    k: int = 5
    patch_size: int = 32
    embeddings_path: Optional[str] = None  # None selects the built-in encoder
    generic_db: float = 27.0
    matched_gain_db: float = 2.5
    mismatch_decay_db: float = 12.5
    cache_capacity: int = 3
    k_top: int = 3
    prefetch_period_segments: int = 3
    segment_seconds: float = 10.0
    b_hr_kbps: float = 8000.0
    b_lr_kbps: float = 500.0
    model_size_bytes: int = 2_100_000
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        self.scheduler_params()  # revalidates threshold constraints
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.patch_size < 8:
            raise ValueError("patch_size must be at least 8")
        if self.cache_capacity < 1:
            raise ValueError("cache_capacity must be >= 1")
        if self.k_top < 0:
            raise ValueError("k_top must be non-negative")
        if self.prefetch_period_segments < 1:
            raise ValueError("prefetch_period_segments must be >= 1")
        if self.segment_seconds <= 0:
            raise ValueError("segment_seconds must be positive")
        if self.b_hr_kbps < self.b_lr_kbps:
            raise ValueError("b_hr_kbps must be >= b_lr_kbps")
        if self.model_size_bytes < 0:
            raise ValueError("model_size_bytes must be non-negative")

    def scheduler_params(self) -> SchedulerParams:
        return SchedulerParams(
            edge_threshold=self.edge_threshold,
            similarity_threshold=self.similarity_threshold,
            vote_threshold=self.vote_threshold,
        )

    def oracle(self) -> QualityOracle:
        return QualityOracle(
            generic_db=self.generic_db,
            matched_gain_db=self.matched_gain_db,
            mismatch_decay_db=self.mismatch_decay_db,
        )

    def budget(self, interval_seconds: float) -> BandwidthBudget:
        return BandwidthBudget(
            b_hr_kbps=self.b_hr_kbps,
            b_lr_kbps=self.b_lr_kbps,
            interval_seconds=interval_seconds,
        )

    def make_encoder(self) -> PatchEncoder:
        if self.embeddings_path is None:
            return DefaultEncoder()
        table, dim = import_embeddings(self.embeddings_path)
        return ImportedEmbeddings(table, dim)

    def config_hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_config(path: Optional[str] = None, **overrides) -> EngineConfig:
    """Build a config from an optional JSON file plus keyword overrides."""
    values: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config file must hold a JSON object")
        known = set(EngineConfig.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        values.update(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return EngineConfig(**values)


def with_overrides(config: EngineConfig, **overrides) -> EngineConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
