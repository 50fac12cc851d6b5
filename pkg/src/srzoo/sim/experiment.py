"""End-to-end experiment: schedule a trace, then replay delivery policies.

The run has two passes. The scheduling pass walks segments in arrival order
against a single growing lookup table, recording per-frame decisions, patch
embeddings, and fine-tune events; this pass is shared by every policy that
builds models. The evaluation pass then replays each stream per policy with
its own client cache, moving models according to the policy's transmission
rule and scoring every frame with the quality oracle against the model that
was actually resident.

Policies:
  generic              no fitted models at all, the baseline
  random-reuse         per segment, a uniformly random fitted model
  retrieval-noprefetch scheduled model shipped once per segment on demand
  retrieval-prefetch   top-k transition prefetch every few segments

A model fine-tuned for a stream is delivered to that stream's client at the
next segment boundary under both retrieval policies; it is the training
response, not part of the periodic shipping budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import rng
from ..delivery import ClientCache, prefetch_record, prefetch_set, transfer_matrix, transmission_feasible
from ..edges import edge_score
from ..pixels import partition
from ..scheduler import decide_frame, decision_record
from ..zoo import LookupTable, ZooEntry, query_patch
from .trace import SimTrace

POLICY_GENERIC = "generic"
POLICY_RANDOM = "random-reuse"
POLICY_NOPREFETCH = "retrieval-noprefetch"
POLICY_PREFETCH = "retrieval-prefetch"
POLICIES = (POLICY_GENERIC, POLICY_RANDOM, POLICY_NOPREFETCH, POLICY_PREFETCH)
_CACHE_POLICIES = (POLICY_NOPREFETCH, POLICY_PREFETCH)


@dataclass
class ScheduledSegment:
    """Everything the evaluation pass needs about one scheduled segment."""

    stream: str
    ordinal: int
    scene: str
    table_size_before: int
    requested: list[Optional[int]]  # model id per frame, None means generic
    flagged: int
    fine_tuned: bool
    entry_id: Optional[int]
    warning: Optional[str]
    embeddings: list[np.ndarray]  # per frame, (patches, D)
    query_sim_sum: float
    query_count: int


@dataclass
class SimReport:
    """Aggregated outcome of one experiment run."""

    fine_tuned_segments: int
    total_segments: int
    policy_means: dict[str, float]
    hit_ratios: dict[str, dict[str, float]]  # policy -> stream -> ratio
    feasibility: dict[str, dict[str, int]]  # policy -> feasible/infeasible counts
    stream_rows: list[dict]
    decisions: list[dict]
    events: list[dict]
    timeline: list[dict]
    warnings: list[str]
    mean_retrieval_similarity: float
    table_size: int

    def stream_mean(self, policy: str, stream: str) -> float:
        for row in self.stream_rows:
            if row["policy"] == policy and row["stream"] == stream:
                return row["mean_quality"]
        raise KeyError((policy, stream))


def run_scheduling(trace: SimTrace, config) -> tuple[LookupTable, list[ScheduledSegment], list[dict]]:
    """Shared pass: schedule all segments in arrival order, growing the table."""
    encoder = config.make_encoder()
    params = config.scheduler_params()
    table = LookupTable(dimension=encoder.dimension, k=config.k)
    prev: dict[str, Optional[int]] = {}
    records: list[ScheduledSegment] = []
    decision_log: list[dict] = []

    for seg in trace.arrival_order():
        frames = trace.synthesize(seg)
        before = len(table)
        snapshot = table.view(before)
        carried = prev.get(seg.stream)
        requested: list[Optional[int]] = []
        embeddings: list[np.ndarray] = []
        retained_all: list[np.ndarray] = []
        flagged = 0
        sim_sum, sim_count = 0.0, 0
        for frame in frames:
            patches = partition(frame, config.patch_size)
            embs = np.stack([encoder.encode(p) for p in patches])
            keep = [i for i, p in enumerate(patches) if edge_score(p) > params.edge_threshold]
            retained = [embs[i] for i in keep]
            decision = decide_frame(
                retained, snapshot, params, frame_index=frame.index, prev_model=carried
            )
            carried = decision.chosen
            if decision.needs_fine_tune:
                flagged += 1
            if len(snapshot) > 0:
                for emb in retained:
                    _, s = query_patch(emb, snapshot)
                    sim_sum += s
                    sim_count += 1
            requested.append(decision.chosen)
            embeddings.append(embs)
            retained_all.extend(retained)
            decision_log.append(decision_record(seg.stream, seg.ordinal, decision))
        prev[seg.stream] = carried

        fine_tuned = flagged > params.vote_threshold * len(frames)
        entry_id: Optional[int] = None
        warning: Optional[str] = None
        if fine_tuned:
            if retained_all:
                entry = table.build_entry(
                    retained_all,
                    seed=rng.derive_seed(trace.seed, "model", seg.stream, seg.ordinal),
                    model_size_bytes=config.model_size_bytes,
                    segment=seg.segment_id(),
                )
                entry_id = entry.model.id
            else:
                warning = (
                    f"{seg.stream} segment {seg.ordinal}: fine-tune requested "
                    "but no complex patches survived pruning"
                )
        records.append(
            ScheduledSegment(
                stream=seg.stream,
                ordinal=seg.ordinal,
                scene=seg.scene,
                table_size_before=before,
                requested=requested,
                flagged=flagged,
                fine_tuned=fine_tuned,
                entry_id=entry_id,
                warning=warning,
                embeddings=embeddings,
                query_sim_sum=sim_sum,
                query_count=sim_count,
            )
        )
    return table, records, decision_log


def _entries_by_id(table: LookupTable) -> dict[int, ZooEntry]:
    return {e.model.id: e for e in table.entries}


def _evaluate_stream_cached(
    policy: str,
    stream_records: list[ScheduledSegment],
    table: LookupTable,
    config,
    oracle,
    timeline: list[dict],
    events: list[dict],
) -> tuple[float, int, int]:
    """Replay one stream's segments under a cache policy.

    Returns (quality sum, hits, misses). Events and per-frame rows are
    appended to the shared logs.
    """
    by_id = _entries_by_id(table)
    cache = ClientCache(config.cache_capacity)
    matrices: dict[int, object] = {}
    pending: Optional[int] = None
    quality_sum = 0.0
    hits = misses = 0

    def log_event(time_s, current, shipped, evicted, was_hit, interval):
        sizes = [by_id[m].model.size_bytes for m in shipped]
        feasible, rate = transmission_feasible(sizes, config.budget(interval))
        events.append(
            dict(
                prefetch_record(time_s, current, shipped, evicted, was_hit, rate, feasible),
                policy=policy,
                stream=stream_records[0].stream,
            )
        )

    for rec in stream_records:
        t0 = rec.ordinal * config.segment_seconds
        snapshot = table.view(rec.table_size_before)
        if pending is not None:
            was_cached = pending in cache
            if not was_cached:
                evicted = cache.insert([pending])
                log_event(t0, pending, [pending], evicted, was_cached, config.segment_seconds)
            pending = None
        first = rec.requested[0]
        if policy == POLICY_PREFETCH:
            if rec.ordinal % config.prefetch_period_segments == 0 and first is not None:
                if rec.table_size_before not in matrices:
                    matrices[rec.table_size_before] = transfer_matrix(snapshot)
                matrix = matrices[rec.table_size_before]
                cur_index = matrix.model_ids.index(first)
                was_cached = first in cache
                ships = prefetch_set(cur_index, matrix, config.k_top, cache)
                evicted = cache.insert(ships)
                log_event(
                    t0,
                    first,
                    ships,
                    evicted,
                    was_cached,
                    config.prefetch_period_segments * config.segment_seconds,
                )
        else:
            if first is not None and first not in cache:
                evicted = cache.insert([first])
                log_event(t0, first, [first], evicted, False, config.segment_seconds)
        frame_seconds = config.segment_seconds / len(rec.requested)
        for i, req in enumerate(rec.requested):
            if req is None:
                resident = None
                hit = True  # the generic model is always resident
            else:
                hit = cache.access(req)
                resident = by_id[req] if hit else None
            if hit:
                hits += 1
            else:
                misses += 1
            q = oracle.frame_quality(resident, rec.embeddings[i])
            quality_sum += q
            timeline.append(
                {
                    "policy": policy,
                    "stream": rec.stream,
                    "segment": rec.ordinal,
                    "frame": i,
                    "time_s": t0 + i * frame_seconds,
                    "quality_db": q,
                    "hit": hit,
                }
            )
        if rec.fine_tuned and rec.entry_id is not None:
            pending = rec.entry_id
    return quality_sum, hits, misses


def _evaluate_stream_plain(
    policy: str,
    stream_records: list[ScheduledSegment],
    table: LookupTable,
    config,
    oracle,
    seed: int,
    timeline: list[dict],
) -> float:
    """Generic and random-reuse replay: no cache, models assumed available."""
    quality_sum = 0.0
    for rec in stream_records:
        entry: Optional[ZooEntry] = None
        if policy == POLICY_RANDOM and rec.table_size_before > 0:
            pick = int(
                rng.generator(seed, "random-reuse", rec.stream, rec.ordinal).integers(
                    rec.table_size_before
                )
            )
            entry = table.entries[pick]
        t0 = rec.ordinal * config.segment_seconds
        frame_seconds = config.segment_seconds / len(rec.embeddings)
        for i, embs in enumerate(rec.embeddings):
            q = oracle.frame_quality(entry, embs)
            quality_sum += q
            timeline.append(
                {
                    "policy": policy,
                    "stream": rec.stream,
                    "segment": rec.ordinal,
                    "frame": i,
                    "time_s": t0 + i * frame_seconds,
                    "quality_db": q,
                    "hit": True,
                }
            )
    return quality_sum


def run_experiment(trace: SimTrace, config, policies=POLICIES) -> SimReport:
    """Schedule a trace once, then replay and score the requested policies."""
    table, records, decision_log = run_scheduling(trace, config)
    oracle = config.oracle()

    streams: list[str] = []
    for rec in records:
        if rec.stream not in streams:
            streams.append(rec.stream)
    grouped = {
        s: sorted((r for r in records if r.stream == s), key=lambda r: r.ordinal)
        for s in streams
    }
    frames_per_stream = {
        s: sum(len(r.requested) for r in grouped[s]) for s in streams
    }

    timeline: list[dict] = []
    events: list[dict] = []
    stream_rows: list[dict] = []
    policy_sums: dict[str, float] = {}
    hit_ratios: dict[str, dict[str, float]] = {}
    feasibility: dict[str, dict[str, int]] = {}

    for policy in policies:
        policy_sums[policy] = 0.0
        if policy in _CACHE_POLICIES:
            hit_ratios[policy] = {}
        for stream in streams:
            recs = grouped[stream]
            if policy in _CACHE_POLICIES:
                qsum, hits, misses = _evaluate_stream_cached(
                    policy, recs, table, config, oracle, timeline, events
                )
                ratio = hits / (hits + misses)
                hit_ratios[policy][stream] = ratio
                row_hit = {"hit_ratio": ratio, "hits": hits, "misses": misses}
            else:
                qsum = _evaluate_stream_plain(
                    policy, recs, table, config, oracle, trace.seed, timeline
                )
                row_hit = {"hit_ratio": None, "hits": None, "misses": None}
            policy_sums[policy] += qsum
            stream_rows.append(
                {
                    "stream": stream,
                    "policy": policy,
                    "frames": frames_per_stream[stream],
                    "mean_quality": qsum / frames_per_stream[stream],
                    **row_hit,
                }
            )

    total_frames = sum(frames_per_stream.values())
    policy_means = {p: policy_sums[p] / total_frames for p in policies}
    for policy in _CACHE_POLICIES:
        if policy not in policies:
            continue
        rows = [e for e in events if e["policy"] == policy]
        feasibility[policy] = {
            "feasible": sum(1 for e in rows if e["feasible"]),
            "infeasible": sum(1 for e in rows if not e["feasible"]),
        }

    sim_sum = sum(r.query_sim_sum for r in records)
    sim_count = sum(r.query_count for r in records)
    return SimReport(
        fine_tuned_segments=sum(1 for r in records if r.fine_tuned),
        total_segments=len(records),
        policy_means=policy_means,
        hit_ratios=hit_ratios,
        feasibility=feasibility,
        stream_rows=stream_rows,
        decisions=decision_log,
        events=events,
        timeline=timeline,
        warnings=[r.warning for r in records if r.warning],
        mean_retrieval_similarity=(sim_sum / sim_count) if sim_count else 0.0,
        table_size=len(table),
    )


def _header_comment(config, version: str) -> str:
    return f"# srzoo={version} seed={config.seed} config={config.config_hash()}"


def _header_json(config, version: str) -> str:
    return json.dumps(
        {"srzoo": version, "seed": config.seed, "config": config.config_hash()},
        sort_keys=True,
    )


def write_report_files(report: SimReport, out_dir, config, version: str) -> list[str]:
    """Write the CSV/JSON report bundle; returns the written file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    lines = [_header_comment(config, version)]
    lines.append("stream,policy,frames,mean_quality,hit_ratio,hits,misses")
    for row in report.stream_rows:
        ratio = "" if row["hit_ratio"] is None else repr(row["hit_ratio"])
        hits = "" if row["hits"] is None else str(row["hits"])
        misses = "" if row["misses"] is None else str(row["misses"])
        lines.append(
            f"{row['stream']},{row['policy']},{row['frames']},"
            f"{row['mean_quality']!r},{ratio},{hits},{misses}"
        )
    (out / "report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append("report.csv")

    summary = {
        "srzoo": version,
        "seed": config.seed,
        "config": config.config_hash(),
        "fine_tuned_segments": report.fine_tuned_segments,
        "total_segments": report.total_segments,
        "policy_mean_quality_db": report.policy_means,
        "hit_ratios": report.hit_ratios,
        "bandwidth_feasibility": report.feasibility,
        "mean_retrieval_similarity": report.mean_retrieval_similarity,
        "table_size": report.table_size,
        "warnings": report.warnings,
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append("summary.json")

    with open(out / "decisions.jsonl", "w", encoding="utf-8") as fh:
        fh.write(_header_json(config, version) + "\n")
        for rec in report.decisions:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    written.append("decisions.jsonl")

    with open(out / "transmissions.jsonl", "w", encoding="utf-8") as fh:
        fh.write(_header_json(config, version) + "\n")
        for rec in report.events:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    written.append("transmissions.jsonl")

    lines = [_header_comment(config, version)]
    lines.append("policy,stream,segment,frame,time_s,quality_db,hit")
    for row in report.timeline:
        lines.append(
            f"{row['policy']},{row['stream']},{row['segment']},{row['frame']},"
            f"{row['time_s']!r},{row['quality_db']!r},{int(row['hit'])}"
        )
    (out / "timeline.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append("timeline.csv")
    return written
