"""Deterministic seed derivation.

All randomness in the package flows from a single u64 root seed. Consumers
derive independent sub-streams with `derive_seed(root, *labels)`, which chains
a splitmix64 finalizer over the root and a stable hash of each label. The
same (root, labels) always yields the same sub-seed on every platform, so any
experiment is reproducible from one number.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step: mixes a 64-bit value into a well-scrambled one."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _label_hash(label) -> int:
    # FNV-1a over the utf-8 of the label's repr-ish form; ints pass through.
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK
    h = 0xCBF29CE484222325
    for b in str(label).encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


def derive_seed(root: int, *labels) -> int:
    """Derive a sub-seed from a root seed and a path of labels."""
    h = splitmix64(root & _MASK)
    for label in labels:
        h = splitmix64(h ^ _label_hash(label))
    return h


def generator(root: int, *labels) -> np.random.Generator:
    """A numpy Generator seeded from the derived sub-seed."""
    return np.random.Generator(np.random.PCG64(derive_seed(root, *labels)))
