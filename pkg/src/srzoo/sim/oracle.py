"""Calibrated quality stand-in for measuring enhanced-frame fidelity.

Training and running real enhancement models is out of scope, so quality is
modeled directly: a fitted model scores its baseline plus a gain, minus a
penalty proportional to how far the patch sits from the model's closest
center. The default constants are calibration choices, not measurements:
they are picked so a model reused on a later segment of the same scene loses
roughly a tenth of a dB, while a model dragged onto unrelated content drops
below the generic baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..zoo import ZooEntry


@dataclass(frozen=True)
class QualityOracle:
    """Maps (model, patch embedding) to a dB-scale quality score."""

    generic_db: float = 27.0
    matched_gain_db: float = 2.5
    mismatch_decay_db: float = 12.5

    @property
    def floor_db(self) -> float:
        return self.generic_db - 5.0

    @property
    def ceiling_db(self) -> float:
        return self.generic_db + self.matched_gain_db

    def quality(self, entry: Optional[ZooEntry], embedding: np.ndarray) -> float:
        """Score one patch under one resident model (None means generic)."""
        if entry is None:
            return self.generic_db
        sims = entry.centers.astype(np.float64) @ np.asarray(embedding, np.float64)
        best = float(np.clip(sims.max(), -1.0, 1.0))
        q = self.generic_db + self.matched_gain_db - self.mismatch_decay_db * (1.0 - best)
        return float(np.clip(q, self.floor_db, self.ceiling_db))

    def frame_quality(self, entry: Optional[ZooEntry], embeddings) -> float:
        """Mean score over all patches of a frame, retained or not."""
        if entry is None:
            return self.generic_db
        return float(np.mean([self.quality(entry, e) for e in embeddings]))
