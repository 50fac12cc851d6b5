"""Command-line entry point.

Subcommands wire the library together: build a lookup table from frames or
a synthetic trace, schedule frames against a table, run the full delivery
simulation, and inspect metrics, edge scores, or transition matrices.

Exit codes: 0 success, 1 internal error, 2 usage or input error, 3 format
error in a binary or config artifact.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, rng
from .config import EngineConfig, load_config, with_overrides
from .delivery import transfer_matrix
from .errors import FormatError
from .metrics import psnr
from .pixels import load_frame_dir, load_pgm, partition
from .edges import edge_score
from .scheduler import decision_record, schedule_frame, schedule_segment
from .sim import generate_trace, load_trace_spec
from .sim.experiment import run_experiment, run_scheduling, write_report_files
from .sim.presets import prefetch_suite_spec, table_replica_spec
from .zoo import LookupTable, load_table, save_table

EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3

PRESETS = {
    "table-replica": table_replica_spec,
    "prefetch-suite": prefetch_suite_spec,
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int, help="root seed for all randomness")
    p.add_argument("--k", type=int, help="cluster centers per model encoding")
    p.add_argument("--patch-size", type=int, dest="patch_size")
    p.add_argument("--edge-threshold", type=float, dest="edge_threshold")
    p.add_argument("--similarity-threshold", type=float, dest="similarity_threshold")
    p.add_argument("--vote-threshold", type=float, dest="vote_threshold")
    p.add_argument("--embeddings", dest="embeddings_path",
                   help="precomputed embedding file instead of the built-in encoder")


def _config_from(args) -> EngineConfig:
    overrides = {
        k: getattr(args, k, None)
        for k in (
            "seed",
            "k",
            "patch_size",
            "edge_threshold",
            "similarity_threshold",
            "vote_threshold",
            "embeddings_path",
        )
    }
    return load_config(getattr(args, "config", None), **overrides)


def _load_trace(args):
    if getattr(args, "trace", None):
        return load_trace_spec(args.trace)
    preset = PRESETS[args.preset]
    if args.preset == "table-replica":
        spec = preset() if args.seed is None else preset(args.seed)
    else:
        spec = preset(args.seed if args.seed is not None else 1000)
    return generate_trace(spec)


def _segment_chunks(frames, size):
    for i in range(0, len(frames), size):
        yield i // size, frames[i : i + size]


def cmd_build_zoo(args) -> int:
    config = _config_from(args)
    encoder = config.make_encoder()
    params = config.scheduler_params()
    if args.frames:
        frames = load_frame_dir(args.frames)
        if not frames:
            print(f"no frames found in {args.frames}", file=sys.stderr)
            return EXIT_USAGE
        table = LookupTable(dimension=encoder.dimension, k=config.k)
        prev = None
        for ordinal, chunk in _segment_chunks(frames, args.segment_frames):
            seg_seed = rng.derive_seed(config.seed, "model", "frames", ordinal)
            decision, frame_decisions, table = schedule_segment(
                chunk, table, params, encoder, config.patch_size,
                seed=seg_seed, model_size_bytes=config.model_size_bytes,
                prev_model=prev,
            )
            prev = frame_decisions[-1].chosen
            if decision.warning:
                print(f"warning: {decision.warning}", file=sys.stderr)
    else:
        trace = _load_trace(args)
        table, _, _ = run_scheduling(trace, with_overrides(config, seed=trace.seed))
    if len(table) == 0:
        print("no complex patches found; table is empty", file=sys.stderr)
        return EXIT_USAGE
    save_table(table, args.out)
    print(f"entries={len(table)} dimension={table.dimension} k={table.k}")
    for entry in table.entries:
        print(f"model {entry.model.id}: k_effective={entry.k_effective} "
              f"size_bytes={entry.model.size_bytes}")
    return 0


def cmd_schedule(args) -> int:
    config = _config_from(args)
    encoder = config.make_encoder()
    params = config.scheduler_params()
    table = load_table(args.table)
    frames = load_frame_dir(args.frames)
    if not frames:
        print(f"no frames found in {args.frames}", file=sys.stderr)
        return EXIT_USAGE
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        header = {"srzoo": __version__, "seed": config.seed, "config": config.config_hash()}
        out.write(json.dumps(header, sort_keys=True) + "\n")
        prev = None
        for frame in frames:
            decision = schedule_frame(
                frame, table, params, encoder, config.patch_size, prev_model=prev
            )
            prev = decision.chosen
            segment = frame.index // args.segment_frames
            out.write(json.dumps(decision_record(args.stream, segment, decision),
                                 sort_keys=True) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_simulate(args) -> int:
    config = _config_from(args)
    trace = _load_trace(args)
    config = with_overrides(config, seed=trace.seed,
                            segment_seconds=trace.spec.segment_seconds,
                            patch_size=trace.spec.patch_size)
    report = run_experiment(trace, config)
    written = write_report_files(report, args.out_dir, config, __version__)
    print(f"fine_tuned={report.fine_tuned_segments}/{report.total_segments}")
    for policy, mean in report.policy_means.items():
        print(f"mean_quality[{policy}]={mean:.4f}")
    for policy, ratios in report.hit_ratios.items():
        overall = sum(ratios.values()) / len(ratios)
        print(f"hit_ratio[{policy}]={overall:.4f}")
    print(f"wrote {', '.join(written)} to {args.out_dir}")
    return 0


def cmd_psnr(args) -> int:
    a = load_pgm(args.a)
    b = load_pgm(args.b)
    value = psnr(a, b)
    print("inf" if value == float("inf") else f"{value:.4f}")
    return 0


def cmd_edges(args) -> int:
    config = _config_from(args)
    frame = load_pgm(args.frame)
    patches = partition(frame, config.patch_size)
    if not patches:
        print("frame smaller than one patch", file=sys.stderr)
        return EXIT_USAGE
    retained = 0
    for p in patches:
        score = edge_score(p)
        keep = score > config.edge_threshold
        retained += keep
        print(f"{p.grid_row} {p.grid_col} {score:.4f} {int(keep)}")
    print(f"retained {retained}/{len(patches)} "
          f"({retained / len(patches):.3f}) at threshold {config.edge_threshold}")
    return 0


def cmd_transfer_matrix(args) -> int:
    table = load_table(args.table)
    matrix = transfer_matrix(table)
    print("," + ",".join(f"m{m}" for m in matrix.model_ids))
    for i, row in enumerate(matrix.probs):
        print(f"m{matrix.model_ids[i]}," + ",".join(repr(float(v)) for v in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srzoo",
        description="Content-aware model zoo builder, scheduler, and delivery simulator",
    )
    parser.add_argument("--version", action="version", version=f"srzoo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-zoo", help="build a lookup table from frames or a trace")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--frames", help="directory of frame_%%06d.pgm files")
    src.add_argument("--trace", help="trace spec JSON file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="bundled trace")
    p.add_argument("--segment-frames", type=int, default=300,
                   help="frames per segment when chunking a frame directory")
    p.add_argument("--out", required=True, help="output table file")
    _add_config_flags(p)
    p.set_defaults(func=cmd_build_zoo)

    p = sub.add_parser("schedule", help="schedule frames against a table")
    p.add_argument("--frames", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--stream", default="stream-0", help="stream name for the log")
    p.add_argument("--segment-frames", type=int, default=300)
    p.add_argument("--out", help="decision log path (default stdout)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="run the full delivery experiment")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", help="trace spec JSON file")
    src.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out-dir", required=True, help="directory for report files")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("psnr", help="PSNR between two PGM frames")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_psnr)

    p = sub.add_parser("edges", help="per-patch edge scores and retained mask")
    p.add_argument("frame")
    _add_config_flags(p)
    p.set_defaults(func=cmd_edges)

    p = sub.add_parser("transfer-matrix", help="print a table's transition matrix")
    p.add_argument("table")
    p.set_defaults(func=cmd_transfer_matrix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, NotADirectoryError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
