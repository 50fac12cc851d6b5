"""Trace specifications: which stream plays which scene when.

A trace spec is a small key-value tree (JSON on disk) declaring frame
geometry, per-segment scene classes for each stream, and the root seed.
Frames are synthesized on demand; the whole trace is a pure function of the
spec, so two loads of the same file produce bit-identical pixels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..pixels import Frame, SegmentId, StreamId
from .scenes import SceneClass, build_classes, render_frame

DEFAULT_FRAMES_PER_SEGMENT = 300  # ten seconds at thirty frames per second
DEFAULT_SEGMENT_SECONDS = 10.0


@dataclass(frozen=True)
class SegmentSpec:
    """One scheduled segment of one stream."""

    stream: str
    stream_index: int
    ordinal: int
    scene: str
    start_frame: int
    duration_frames: int

    def segment_id(self) -> SegmentId:
        return SegmentId(
            stream=StreamId(self.stream),
            segment_ordinal=self.ordinal,
            duration_frames=self.duration_frames,
        )


@dataclass(frozen=True)
class TraceSpec:
    """Validated trace declaration."""

    seed: int
    frame_width: int
    frame_height: int
    patch_size: int
    frames_per_segment: int
    segment_seconds: float
    streams: tuple[tuple[str, tuple[str, ...]], ...]
    class_specs: tuple[dict, ...]


class SimTrace:
    """A trace spec bound to its scene classes, ready to synthesize frames."""

    def __init__(self, spec: TraceSpec):
        self.spec = spec
        self.classes: dict[str, SceneClass] = build_classes(
            spec.class_specs, seed=spec.seed
        )
        for _, scenes in spec.streams:
            for scene in scenes:
                if scene not in self.classes:
                    raise ValueError(f"unknown scene class {scene!r}")

    @property
    def seed(self) -> int:
        return self.spec.seed

    def segments(self) -> list[SegmentSpec]:
        """All segments grouped by stream, in stream order."""
        out = []
        for si, (stream, scenes) in enumerate(self.spec.streams):
            for ordinal, scene in enumerate(scenes):
                out.append(
                    SegmentSpec(
                        stream=stream,
                        stream_index=si,
                        ordinal=ordinal,
                        scene=scene,
                        start_frame=ordinal * self.spec.frames_per_segment,
                        duration_frames=self.spec.frames_per_segment,
                    )
                )
        return out

    def arrival_order(self) -> list[SegmentSpec]:
        """Segments interleaved round-robin across streams.

        Within a stream segments stay time-ordered; across streams the
        ordering is an explicit convention standing in for random arrival.
        """
        per_stream: list[list[SegmentSpec]] = [[] for _ in self.spec.streams]
        for seg in self.segments():
            per_stream[seg.stream_index].append(seg)
        out = []
        depth = max(len(s) for s in per_stream)
        for level in range(depth):
            for segs in per_stream:
                if level < len(segs):
                    out.append(segs[level])
        return out

    def synthesize(self, seg: SegmentSpec) -> list[Frame]:
        """Render all frames of a segment; frame indexes are stream ordinals."""
        cls = self.classes[seg.scene]
        return [
            render_frame(
                cls,
                seg.start_frame + i,
                self.spec.frame_width,
                self.spec.frame_height,
                self.spec.patch_size,
                self.spec.seed,
            )
            for i in range(seg.duration_frames)
        ]


def generate_trace(spec: dict) -> SimTrace:
    """Validate a spec tree and bind it to its scene classes."""
    return SimTrace(_parse_spec(spec))


def load_trace_spec(path) -> SimTrace:
    """Load a JSON trace spec from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return generate_trace(json.load(fh))


def save_trace_spec(spec: dict, path) -> None:
    Path(path).write_text(
        json.dumps(spec, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _parse_spec(raw: dict) -> TraceSpec:
    try:
        seed = int(raw["seed"])
        width = int(raw["frame_width"])
        height = int(raw["frame_height"])
        patch = int(raw["patch_size"])
        streams_raw = raw["streams"]
    except KeyError as exc:
        raise ValueError(f"trace spec missing required key {exc.args[0]!r}") from exc
    frames = int(raw.get("frames_per_segment", DEFAULT_FRAMES_PER_SEGMENT))
    seconds = float(raw.get("segment_seconds", DEFAULT_SEGMENT_SECONDS))
    if patch < 8:
        raise ValueError("patch_size must be at least 8")
    if width % patch or height % patch:
        raise ValueError("frame dimensions must be multiples of patch_size")
    if frames < 1:
        raise ValueError("frames_per_segment must be positive")
    if seconds <= 0:
        raise ValueError("segment_seconds must be positive")
    if not streams_raw:
        raise ValueError("trace spec declares no streams")

    streams = []
    seen = set()
    referenced: list[str] = []
    for s in streams_raw:
        name = s["name"]
        if name in seen:
            raise ValueError(f"duplicate stream name {name!r}")
        seen.add(name)
        scenes = tuple(s["segments"])
        if not scenes:
            raise ValueError(f"stream {name!r} has no segments")
        streams.append((name, scenes))
        for scene in scenes:
            if scene not in referenced:
                referenced.append(scene)

    class_specs = raw.get("classes")
    if class_specs is None:
        class_specs = [{"name": n} for n in referenced]
    return TraceSpec(
        seed=seed,
        frame_width=width,
        frame_height=height,
        patch_size=patch,
        frames_per_segment=frames,
        segment_seconds=seconds,
        streams=tuple(streams),
        class_specs=tuple(class_specs),
    )
