"""Online per-frame model selection and the segment fine-tune policy.

Every frame is partitioned, pruned by edge score, and its surviving patches
vote for the table entry they match best (votes require similarity above a
threshold). The plurality winner serves the whole frame so the client never
switches models mid-frame. A frame whose top vote count falls short of the
vote threshold is flagged; a segment with more than the threshold fraction
of flagged frames gets a new fitted model appended to the table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .edges import edge_score
from .encoder import PatchEncoder
from .pixels import Frame, SegmentId, partition
from .zoo import LookupTable, ZooEntry, query_patch


@dataclass(frozen=True)
class SchedulerParams:
    """Thresholds for pruning, vote eligibility, and fine-tune triggering."""

    edge_threshold: float = 10.0
    similarity_threshold: float = 0.8
    vote_threshold: float = 0.65

    def __post_init__(self):
        if not (0.0 < self.vote_threshold <= 1.0):
            raise ValueError("vote_threshold must be in (0, 1]")
        if self.similarity_threshold > 1.0:
            raise ValueError("similarity_threshold must be <= 1")


@dataclass(frozen=True)
class FrameDecision:
    """Outcome of scheduling one frame."""

    frame_index: int
    chosen: Optional[int]  # model id, absent when nothing matched
    votes: dict[int, int]  # entry index -> vote count
    count_p: int  # patches surviving pruning
    needs_fine_tune: bool

    @property
    def max_vote(self) -> int:
        return max(self.votes.values(), default=0)


@dataclass(frozen=True)
class SegmentDecision:
    """Outcome of scheduling one segment."""

    frames_flagged: int
    total_frames: int
    fine_tune_segment: bool
    entry: Optional[ZooEntry] = None
    warning: Optional[str] = None


def plurality_vote(votes: dict[int, int]) -> int:
    """Index with the highest count; ties resolve to the lowest index."""
    if not votes:
        raise ValueError("votes must be non-empty")
    best = max(votes.values())
    return min(i for i, v in votes.items() if v == best)


def decide_frame(
    retained_embeddings,
    table: LookupTable,
    params: SchedulerParams,
    frame_index: int = 0,
    prev_model: Optional[int] = None,
) -> FrameDecision:
    """Voting decision for a frame given its pruned patch embeddings.

    An all-flat frame (nothing retained) carries no evidence about the table:
    it inherits the previous frame's model and is never flagged.
    """
    count_p = len(retained_embeddings)
    votes: dict[int, int] = {}
    if len(table) > 0:
        for emb in retained_embeddings:
            j, sim = query_patch(emb, table)
            if sim > params.similarity_threshold:
                votes[j] = votes.get(j, 0) + 1
    if count_p == 0:
        return FrameDecision(
            frame_index=frame_index,
            chosen=prev_model,
            votes={},
            count_p=0,
            needs_fine_tune=False,
        )
    max_vote = max(votes.values(), default=0)
    needs_fine_tune = max_vote < params.vote_threshold * count_p
    chosen = None
    if votes:
        chosen = table.entries[plurality_vote(votes)].model.id
    return FrameDecision(
        frame_index=frame_index,
        chosen=chosen,
        votes=votes,
        count_p=count_p,
        needs_fine_tune=needs_fine_tune,
    )


def schedule_frame(
    frame: Frame,
    table: LookupTable,
    params: SchedulerParams,
    encoder: PatchEncoder,
    patch_size: int,
    prev_model: Optional[int] = None,
) -> FrameDecision:
    """Partition, prune, encode, and vote for one frame."""
    decision, _ = _schedule_frame_collect(
        frame, table, params, encoder, patch_size, prev_model
    )
    return decision


def _schedule_frame_collect(frame, table, params, encoder, patch_size, prev_model):
    retained = [
        encoder.encode(p)
        for p in partition(frame, patch_size)
        if edge_score(p) > params.edge_threshold
    ]
    decision = decide_frame(
        retained, table, params, frame_index=frame.index, prev_model=prev_model
    )
    return decision, retained


def schedule_segment(
    frames: list[Frame],
    table: LookupTable,
    params: SchedulerParams,
    encoder: PatchEncoder,
    patch_size: int,
    seed: int,
    model_size_bytes: int,
    segment: Optional[SegmentId] = None,
    prev_model: Optional[int] = None,
) -> tuple[SegmentDecision, list[FrameDecision], LookupTable]:
    """Schedule a segment's frames and fine-tune if enough were flagged.

    All frames are scheduled against the table as it stood when the segment
    started; a new entry (if any) only becomes visible to later segments.
    The fine-tune comparison is strict: flagged > vote_threshold * total.
    """
    if not frames:
        raise ValueError("segment must contain at least one frame")
    decisions: list[FrameDecision] = []
    pruned: list[np.ndarray] = []
    prev = prev_model
    for frame in frames:
        decision, retained = _schedule_frame_collect(
            frame, table, params, encoder, patch_size, prev
        )
        decisions.append(decision)
        pruned.extend(retained)
        # A flat frame inherits the previous frame's model; a textured frame
        # that matched nothing resets the carry, clients fall back to generic.
        prev = decision.chosen
    flagged = sum(1 for d in decisions if d.needs_fine_tune)
    fine_tune = flagged > params.vote_threshold * len(frames)
    entry = None
    warning = None
    if fine_tune:
        if pruned:
            entry = table.build_entry(
                pruned, seed=seed, model_size_bytes=model_size_bytes, segment=segment
            )
        else:
            warning = "fine-tune requested but segment has no complex patches"
    seg_decision = SegmentDecision(
        frames_flagged=flagged,
        total_frames=len(frames),
        fine_tune_segment=fine_tune,
        entry=entry,
        warning=warning,
    )
    return seg_decision, decisions, table


def decision_record(stream: str, segment: int, decision: FrameDecision) -> dict:
    """JSON-ready record for the per-frame decision log."""
    return {
        "stream": stream,
        "segment": segment,
        "frame": decision.frame_index,
        "chosen": decision.chosen,
        "count_p": decision.count_p,
        "max_vote": decision.max_vote,
        "needs_fine_tune": decision.needs_fine_tune,
    }
