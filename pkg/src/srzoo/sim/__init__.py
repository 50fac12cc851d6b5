"""Synthetic traces, the quality oracle, and the end-to-end experiment."""

from .scenes import SceneClass, build_classes, render_frame  # noqa: F401
from .oracle import QualityOracle  # noqa: F401
from .trace import SegmentSpec, SimTrace, TraceSpec, generate_trace, load_trace_spec  # noqa: F401
from .experiment import (  # noqa: F401
    POLICIES,
    SimReport,
    run_experiment,
    write_report_files,
)
from .presets import calibration_corpus, prefetch_suite_spec, table_replica_spec  # noqa: F401
