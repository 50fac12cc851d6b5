"""Frames, patch partitioning, and PGM input/output.

A frame is a single 8-bit luma plane. Color inputs are out of scope; callers
converting RGB should apply BT.601 weights before constructing a Frame.
Frames and patches are immutable after construction and safe to share.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError


@dataclass(frozen=True)
class Frame:
    """One luma frame: height x width uint8 grid plus its stream ordinal."""

    width: int
    height: int
    luma: np.ndarray
    index: int = 0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        if self.index < 0:
            raise ValueError("frame index must be non-negative")
        luma = np.ascontiguousarray(self.luma, dtype=np.uint8)
        if luma.ndim == 1:
            if luma.size != self.width * self.height:
                raise ValueError("luma length must equal width*height")
            luma = luma.reshape(self.height, self.width)
        elif luma.shape != (self.height, self.width):
            raise ValueError("luma shape must be (height, width)")
        luma.setflags(write=False)
        object.__setattr__(self, "luma", luma)

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.index == other.index
            and np.array_equal(self.luma, other.luma)
        )


@dataclass(frozen=True)
class PatchView:
    """A size x size window of a frame at grid position (grid_row, grid_col)."""

    frame_index: int
    grid_row: int
    grid_col: int
    size: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("patch size must be positive")
        if self.pixels.shape != (self.size, self.size):
            raise ValueError("pixel window shape must be (size, size)")

    def __eq__(self, other):
        if not isinstance(other, PatchView):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and self.grid_row == other.grid_row
            and self.grid_col == other.grid_col
            and self.size == other.size
            and np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class StreamId:
    """Opaque identifier of one video stream."""

    name: str


@dataclass(frozen=True)
class SegmentId:
    """Position of a fixed-duration segment within a stream."""

    stream: StreamId
    segment_ordinal: int
    duration_frames: int

    def __post_init__(self):
        if self.segment_ordinal < 0:
            raise ValueError("segment ordinal must be non-negative")
        if self.duration_frames <= 0:
            raise ValueError("duration_frames must be positive")


def partition(frame: Frame, patch_size: int) -> list[PatchView]:
    """Split a frame into non-overlapping patches in row-major order.

    Only full windows are returned: right and bottom remainder pixels are
    dropped, so the count is floor(width/patch_size) * floor(height/patch_size).
    """
    if patch_size <= 0:
        raise ValueError("patch_size must be >= 1")
    rows = frame.height // patch_size
    cols = frame.width // patch_size
    patches = []
    for r in range(rows):
        for c in range(cols):
            window = frame.luma[
                r * patch_size : (r + 1) * patch_size,
                c * patch_size : (c + 1) * patch_size,
            ]
            patches.append(
                PatchView(
                    frame_index=frame.index,
                    grid_row=r,
                    grid_col=c,
                    size=patch_size,
                    pixels=window,
                )
            )
    return patches


def load_pgm(path, index: int = 0) -> Frame:
    """Read a binary PGM (P5, maxval 255) file into a Frame."""
    data = Path(path).read_bytes()
    pos = 0

    def next_token():
        nonlocal pos
        while True:
            while pos < len(data) and data[pos : pos + 1].isspace():
                pos += 1
            if pos < len(data) and data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
                continue
            break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: unexpected EOF in header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise FormatError(f"{path}: unsupported magic {magic!r}, expected P5")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric header field") from exc
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: non-positive dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}, expected 255")
    pos += 1  # single whitespace byte separates header from payload
    payload = data[pos : pos + width * height]
    if len(payload) < width * height:
        raise FormatError(f"{path}: unexpected EOF in pixel payload")
    luma = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Frame(width=width, height=height, luma=luma, index=index)


def save_pgm(frame: Frame, path) -> None:
    """Write a Frame as binary PGM (P5, maxval 255). Round-trips bit-exactly."""
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + frame.luma.tobytes())


_FRAME_FILE = re.compile(r"^frame_(\d{6})\.pgm$")


def load_frame_dir(path) -> list[Frame]:
    """Load a frame_%06d.pgm sequence from a directory, ordered by index."""
    entries = []
    for p in Path(path).iterdir():
        m = _FRAME_FILE.match(p.name)
        if m:
            entries.append((int(m.group(1)), p))
    entries.sort()
    return [load_pgm(p, index=i) for i, p in entries]


def save_frame_dir(frames, path) -> None:
    """Write frames to a directory using the frame_%06d.pgm convention."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    for frame in frames:
        save_pgm(frame, out / f"frame_{frame.index:06d}.pgm")
