"""Bundled trace specifications and the pruning calibration corpus."""

from __future__ import annotations

from .. import rng
from ..pixels import Frame
from .scenes import build_classes, render_frame
from .trace import SimTrace, generate_trace

TABLE_REPLICA_SEED = 20113


def table_replica_spec(seed: int = TABLE_REPLICA_SEED) -> dict:
    """The 36-segment mixed-stability trace: 12 streams of 3 segments each.

    Seven stable streams keep one scene for all three segments, two streams
    change scene for their last segment, and three streams change scene every
    segment. Every scene is unique to its stream, so the scheduler must fit
    exactly one model per distinct scene: 7 + 2*2 + 3*3 = 20 of 36 segments.
    Desk-scale geometry (96x96 frames, 30 frames per segment) keeps the run
    in seconds.
    """
    streams = []
    scene = 0

    def next_scene() -> str:
        nonlocal scene
        name = f"scene-{scene:02d}"
        scene += 1
        return name

    for i in range(7):
        c = next_scene()
        streams.append({"name": f"stable-{i}", "segments": [c, c, c]})
    for i in range(2):
        x, y = next_scene(), next_scene()
        streams.append({"name": f"shift-{i}", "segments": [x, x, y]})
    for i in range(3):
        a, b, c = next_scene(), next_scene(), next_scene()
        streams.append({"name": f"churn-{i}", "segments": [a, b, c]})

    return {
        "seed": seed,
        "frame_width": 96,
        "frame_height": 96,
        "patch_size": 32,
        "frames_per_segment": 30,
        "segment_seconds": 10.0,
        "streams": streams,
    }


def prefetch_suite_spec(seed: int) -> dict:
    """A seeded trace for the prefetch-versus-on-demand comparison.

    Each stream draws its segments from a private pool of at most three
    scenes forming one family, matching the client cache capacity; two
    streams are fully coherent (single scene). Family structure makes the
    transition probabilities rank a stream's own scenes above strangers.
    """
    gen = rng.generator(seed, "prefetch-suite")
    classes = []
    streams = []
    n_segments = 6

    def add_class(name: str, family=None) -> str:
        spec = {"name": name}
        if family is not None:
            spec["family"] = family
        classes.append(spec)
        return name

    for i in range(2):
        c = add_class(f"steady-{i}")
        streams.append({"name": f"coherent-{i}", "segments": [c] * n_segments})
    for i in range(2):
        family = f"fam-{i}"
        pool = [add_class(f"{family}-{j}", family=family) for j in range(3)]
        # Visit every pool scene, then wander the pool at random.
        segments = list(pool)
        segments += [pool[int(gen.integers(3))] for _ in range(n_segments - 3)]
        streams.append({"name": f"roaming-{i}", "segments": segments})

    return {
        "seed": seed,
        "frame_width": 64,
        "frame_height": 64,
        "patch_size": 32,
        "frames_per_segment": 20,
        "segment_seconds": 10.0,
        "streams": streams,
        "classes": classes,
    }


def table_replica_trace(seed: int = TABLE_REPLICA_SEED) -> SimTrace:
    return generate_trace(table_replica_spec(seed))


def calibration_corpus(seed: int = TABLE_REPLICA_SEED, frames_per_class: int = 3) -> list[Frame]:
    """Frames sampled across many scenes, used to calibrate edge pruning.

    The corpus mixes every scene of the 36-segment trace so the retained
    fraction under the default edge threshold reflects the whole generator,
    not one lucky class.
    """
    spec = table_replica_spec(seed)
    names = sorted({c for s in spec["streams"] for c in s["segments"]})
    classes = build_classes([{"name": n} for n in names], seed=seed)
    frames = []
    for name in names:
        for i in range(frames_per_class):
            frames.append(
                render_frame(
                    classes[name],
                    i * 7,
                    spec["frame_width"],
                    spec["frame_height"],
                    spec["patch_size"],
                    seed,
                )
            )
    return frames
