"""Scene classes and deterministic frame synthesis.

A scene class is a small set of procedural patch generators. Textured
prototypes are coarse 8x8 two-level patterns taken from the 2-D Walsh basis
(steps, stripes, and checkers of various frequencies); distinct classes use
distinct basis patterns, which keeps their embeddings well separated no
matter how the trace is seeded. Classes belonging to one family share base
patterns but flip disjoint cell sets, landing their mutual similarity in a
band above strangers yet below the scheduler's vote threshold. Flat
prototypes render as near-constant patches that the edge filter prunes.

Every pixel is a pure function of (class, root seed, frame index, patch
slot). A bounded per-cell sinusoidal drift, incommensurate with the segment
length, makes frames of the same class similar but never identical, which
is what separates "model fitted on this very segment" from "model reused
from an earlier segment of the same scene".
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import rng
from ..pixels import Frame

PROTOS_PER_CLASS = 3
DRIFT_PERIOD_FRAMES = 97  # coprime with common segment lengths
_GRID = 8
_CELLS = _GRID * _GRID

# Family members flip exactly 4 bright and 4 dark cells of the shared base
# pattern, disjointly per member. Balanced flips pin the bright-cell overlap,
# which dominates cosine between non-negative features: two siblings agree on
# exactly 48 cells with exactly 24 bright-bright matches, and no adversarial
# flip alignment between unrelated masks can exceed those same counts. The
# family contrast below puts that agreement level safely under the vote
# threshold for every seed.
_FAMILY_FLIPS_PER_SIDE = 4
MAX_FAMILY_SIZE = 5  # flip sets must stay disjoint within 32 cells per side

_DEFAULT_LO = 0.12
_DEFAULT_HI = 0.88
_DEFAULT_DRIFT = 0.08
_FAMILY_LO = 0.02
_FAMILY_HI = 0.92
_FAMILY_DRIFT = 0.02
_FLAT_LEVELS = (0.3, 0.55, 0.8)


def _popcount_sign(i: int, j: int) -> int:
    return -1 if bin(i & j).count("1") % 2 else 1


def walsh_mask(index: int) -> np.ndarray:
    """8x8 boolean mask from the 2-D Walsh basis; index in [1, 63]."""
    if not (1 <= index <= _CELLS - 1):
        raise ValueError("walsh index must be in [1, 63]")
    i, j = index // _GRID, index % _GRID
    rows = np.array([_popcount_sign(i, r) for r in range(_GRID)])
    cols = np.array([_popcount_sign(j, c) for c in range(_GRID)])
    return np.outer(rows, cols) > 0


@dataclass(frozen=True)
class PatchProto:
    """One textured prototype: a Walsh base pattern plus flipped cells."""

    walsh_index: int
    flips: tuple[int, ...] = ()

    def mask(self) -> np.ndarray:
        m = walsh_mask(self.walsh_index).copy()
        for cell in self.flips:
            m[cell // _GRID, cell % _GRID] = not m[cell // _GRID, cell % _GRID]
        return m


@dataclass(frozen=True)
class SceneClass:
    """Procedural content generator for all segments of one scene."""

    name: str
    prototypes: tuple[PatchProto, ...]
    lo: float = _DEFAULT_LO
    hi: float = _DEFAULT_HI
    drift: float = _DEFAULT_DRIFT  # cell drift amplitude on the [0, 1] scale
    noise_levels: int = 1  # per-pixel uniform noise amplitude
    texture_parity: int = 0  # rounds the textured slot count up or down
    flat_levels: tuple[float, ...] = _FLAT_LEVELS


def build_classes(specs, seed: int = 0) -> dict[str, SceneClass]:
    """Construct SceneClass objects from declaration dicts.

    Each spec is {"name": str, "family": str | None, "drift": float | None,
    "noise": int | None}. Standalone classes and families consume Walsh base
    patterns in declaration order; family members additionally flip disjoint
    cell sets so siblings stay distinguishable.
    """
    consumers: list[str] = []  # family names and standalone class names
    members: dict[str, list[str]] = {}
    order: list[dict] = []
    for spec in specs:
        name = spec["name"]
        family = spec.get("family")
        key = family if family else name
        if key not in consumers:
            consumers.append(key)
            members[key] = []
        members[key].append(name)
        order.append(spec)

    base_index: dict[str, int] = {}
    next_walsh = 1
    for key in consumers:
        base_index[key] = next_walsh
        next_walsh += PROTOS_PER_CLASS

    classes: dict[str, SceneClass] = {}
    for idx, spec in enumerate(order):
        name = spec["name"]
        if name in classes:
            raise ValueError(f"duplicate scene class {name!r}")
        family = spec.get("family")
        key = family if family else name
        sibling_pos = members[key].index(name)
        if family and sibling_pos >= MAX_FAMILY_SIZE:
            raise ValueError(f"family {family!r} exceeds {MAX_FAMILY_SIZE} members")
        protos = []
        for p in range(PROTOS_PER_CLASS):
            walsh = 1 + (base_index[key] + p - 1) % (_CELLS - 1)
            flips: tuple[int, ...] = ()
            if family:
                base = walsh_mask(walsh).ravel()
                gen = rng.generator(seed, "family-flips", family, p)
                hi_cells = gen.permutation(np.flatnonzero(base))
                lo_cells = gen.permutation(np.flatnonzero(~base))
                lowi = sibling_pos * _FAMILY_FLIPS_PER_SIDE
                highi = lowi + _FAMILY_FLIPS_PER_SIDE
                flips = tuple(
                    int(c) for c in np.concatenate(
                        [hi_cells[lowi:highi], lo_cells[lowi:highi]]
                    )
                )
            protos.append(PatchProto(walsh_index=walsh, flips=flips))
        if family:
            lo, hi, drift = _FAMILY_LO, _FAMILY_HI, _FAMILY_DRIFT
        else:
            lo, hi, drift = _DEFAULT_LO, _DEFAULT_HI, _DEFAULT_DRIFT
        classes[name] = SceneClass(
            name=name,
            prototypes=tuple(protos),
            lo=lo,
            hi=hi,
            drift=float(spec.get("drift", drift)),
            noise_levels=int(spec.get("noise", 1)),
            texture_parity=idx % 2,
        )
    return classes


@lru_cache(maxsize=None)
def slot_plan(cls: SceneClass, rows: int, cols: int, seed: int):
    """Assign each patch slot a prototype index, or -1 for a flat slot.

    Roughly half the slots are textured; the exact count alternates between
    floor and ceil across classes so a mixed corpus centers near one half.
    """
    n = rows * cols
    textured = (n + cls.texture_parity) // 2
    perm = rng.generator(seed, "slot-plan", cls.name, rows, cols).permutation(n)
    plan = np.full(n, -1, dtype=np.int64)
    for rank, slot in enumerate(perm[:textured]):
        plan[slot] = rank % len(cls.prototypes)
    return plan


@lru_cache(maxsize=None)
def _phase_grid(seed: int, cls_name: str, proto_index: int) -> np.ndarray:
    phases = np.empty(_CELLS, dtype=np.float64)
    for cell in range(_CELLS):
        h = rng.derive_seed(seed, "drift-phase", cls_name, proto_index, cell)
        phases[cell] = (h / 2.0**64) * 2.0 * np.pi
    return phases.reshape(_GRID, _GRID)


def render_patch(
    cls: SceneClass,
    proto_index: int,
    slot: tuple[int, int],
    frame_index: int,
    size: int,
    seed: int,
) -> np.ndarray:
    """Render one patch; identical inputs give identical pixels."""
    r, c = slot
    gen = rng.generator(seed, "pixel-noise", cls.name, frame_index, r, c)
    if proto_index < 0:
        level = cls.flat_levels[
            rng.derive_seed(seed, "flat-level", cls.name, r, c) % len(cls.flat_levels)
        ]
        base = np.full((size, size), level * 255.0)
    else:
        proto = cls.prototypes[proto_index]
        cells = np.where(proto.mask(), cls.hi, cls.lo)
        theta = 2.0 * np.pi * frame_index / DRIFT_PERIOD_FRAMES
        cells = cells + cls.drift * np.sin(theta + _phase_grid(seed, cls.name, proto_index))
        bounds = [(i * size) // _GRID for i in range(_GRID + 1)]
        base = np.empty((size, size), dtype=np.float64)
        for i in range(_GRID):
            for j in range(_GRID):
                base[bounds[i] : bounds[i + 1], bounds[j] : bounds[j + 1]] = cells[i, j]
        base *= 255.0
    noise = gen.integers(-cls.noise_levels, cls.noise_levels + 1, size=(size, size))
    return np.clip(np.rint(base) + noise, 0, 255).astype(np.uint8)


def render_frame(
    cls: SceneClass,
    frame_index: int,
    width: int,
    height: int,
    patch_size: int,
    seed: int,
) -> Frame:
    """Synthesize a full frame of one scene class."""
    rows, cols = height // patch_size, width // patch_size
    if rows * patch_size != height or cols * patch_size != width:
        raise ValueError("frame dimensions must be multiples of patch_size")
    plan = slot_plan(cls, rows, cols, seed)
    luma = np.zeros((height, width), dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            patch = render_patch(
                cls, int(plan[r * cols + c]), (r, c), frame_index, patch_size, seed
            )
            luma[
                r * patch_size : (r + 1) * patch_size,
                c * patch_size : (c + 1) * patch_size,
            ] = patch
    return Frame(width=width, height=height, luma=luma, index=frame_index)
