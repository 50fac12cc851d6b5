"""Content-aware model zoo for enhanced video delivery, with a simulator.

The library builds a lookup table of fitted-model encodings from video patch
features, schedules per-frame model retrieval online, decides when a segment
needs a newly fitted model, and simulates prefetching and caching of model
payloads under a bandwidth budget. Real enhancement networks are out of
scope: models are ids plus their content encodings, and a calibrated oracle
scores delivered quality.
"""

__version__ = "0.1.0"

from .pixels import Frame, PatchView, SegmentId, StreamId, load_pgm, partition, save_pgm  # noqa: F401
from .metrics import mse, psnr  # noqa: F401
from .edges import edge_score, prune  # noqa: F401
from .encoder import (  # noqa: F401
    DefaultEncoder,
    ImportedEmbeddings,
    PatchEncoder,
    cosine_similarity,
    export_embeddings,
    import_embeddings,
)
from .clustering import ClusterResult, spherical_kmeans  # noqa: F401
from .zoo import LookupTable, ModelId, ZooEntry, load_table, query_patch, save_table  # noqa: F401
from .scheduler import (  # noqa: F401
    FrameDecision,
    SchedulerParams,
    SegmentDecision,
    plurality_vote,
    schedule_frame,
    schedule_segment,
)
from .delivery import (  # noqa: F401
    BandwidthBudget,
    ClientCache,
    TransferMatrix,
    prefetch_set,
    transfer_matrix,
    transmission_feasible,
)
from .config import EngineConfig, load_config  # noqa: F401
from .errors import FormatError  # noqa: F401
