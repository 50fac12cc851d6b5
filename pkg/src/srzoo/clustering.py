"""Spherical k-means: Lloyd iterations under cosine similarity.

Centers are unit vectors, assignment maximizes cosine similarity, and the
objective is the sum of (1 - similarity) over points. Everything is
deterministic for a fixed seed: ++-style seeding draws from a seeded
generator, argmax ties resolve to the lowest index, and center sums reduce
in point order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .encoder import unit

_SAME = 1.0 - 1e-12  # similarity at which a point is "at" its center


@dataclass(frozen=True)
class ClusterResult:
    """Outcome of one clustering run."""

    centers: np.ndarray  # (k_effective, D) unit rows
    assignment: np.ndarray  # (n,) center index per point
    objective: float  # sum over points of 1 - cos(point, center)
    objective_history: tuple[float, ...]  # one value per Lloyd iteration

    @property
    def k_effective(self) -> int:
        return self.centers.shape[0]


def _seed_centers(points: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    """k-means++ seeding with cosine distance (1 - similarity)."""
    n = points.shape[0]
    chosen = [int(gen.integers(n))]
    best_sim = points @ points[chosen[0]]
    while len(chosen) < k:
        dist = np.maximum(1.0 - best_sim, 0.0)
        total = float(dist.sum())
        if total < 1e-12:
            # All remaining points coincide with a chosen center; take the
            # lowest-index unchosen point so the run stays deterministic.
            taken = set(chosen)
            pick = next(i for i in range(n) if i not in taken)
        else:
            pick = int(gen.choice(n, p=dist / total))
        chosen.append(pick)
        best_sim = np.maximum(best_sim, points @ points[pick])
    return points[chosen].copy()


def _refine(points: np.ndarray, k: int, assignment: np.ndarray, history: list[float]):
    """Single-point improvement passes after Lloyd converges.

    Lloyd's fixed points are not always local optima of the objective; moving
    one point between clusters (and re-normalizing both centers) can still
    help. Passes repeat in point order until no move improves, so the result
    is deterministic and the objective keeps decreasing.
    """
    n, _ = points.shape
    sums = np.zeros((k, points.shape[1]), dtype=np.float64)
    for idx in range(k):
        members = points[assignment == idx]
        if members.shape[0]:
            sums[idx] = members.sum(axis=0)
    norms = np.linalg.norm(sums, axis=1)
    for _ in range(100):
        improved = False
        for p in range(n):
            src = int(assignment[p])
            vec = points[p]
            src_norm_without = float(np.linalg.norm(sums[src] - vec))
            best_gain, best_dst = 1e-12, -1
            for dst in range(k):
                if dst == src:
                    continue
                gain = (
                    src_norm_without
                    + float(np.linalg.norm(sums[dst] + vec))
                    - norms[src]
                    - norms[dst]
                )
                if gain > best_gain:
                    best_gain, best_dst = gain, dst
            if best_dst >= 0:
                sums[src] -= vec
                sums[best_dst] += vec
                norms[src] = src_norm_without
                norms[best_dst] = float(np.linalg.norm(sums[best_dst]))
                assignment[p] = best_dst
                improved = True
        history.append(float(n - norms.sum()))
        if not improved:
            break
    return assignment


def _lloyd(points: np.ndarray, k: int, gen: np.random.Generator, max_iters: int):
    n = points.shape[0]
    centers = _seed_centers(points, k, gen)
    assignment = np.full(n, -1, dtype=np.int64)
    history: list[float] = []

    for _ in range(max_iters):
        sims = points @ centers.T
        new_assignment = np.argmax(sims, axis=1)  # ties -> lowest center index
        own_sim = sims[np.arange(n), new_assignment]

        counts = np.bincount(new_assignment, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # Repair: split off the point farthest from its current center,
            # provided it is not already exactly at one (duplicate inputs).
            movable = (counts[new_assignment] > 1) & (own_sim < _SAME)
            if not np.any(movable):
                continue
            cand = int(np.flatnonzero(movable)[np.argmin(own_sim[movable])])
            counts[new_assignment[cand]] -= 1
            counts[empty] += 1
            new_assignment[cand] = empty
            own_sim[cand] = 1.0

        converged = np.array_equal(new_assignment, assignment)
        assignment = new_assignment

        norms = np.zeros(k, dtype=np.float64)
        for idx in range(k):
            members = points[assignment == idx]
            if members.shape[0] == 0:
                continue
            total = members.sum(axis=0)
            norm = float(np.linalg.norm(total))
            if norm < 1e-12:
                centers[idx] = unit(total)
                norms[idx] = 0.0
            else:
                centers[idx] = total / norm
                norms[idx] = norm
        # Identity: sum of member similarities to a normalized mean direction
        # equals the norm of the member sum, so the objective is cheap.
        occupied = np.bincount(assignment, minlength=k) > 0
        history.append(float(n - norms[occupied].sum()))
        if converged:
            break

    assignment = _refine(points, k, assignment.copy(), history)

    keep = np.flatnonzero(np.bincount(assignment, minlength=k) > 0)
    remap = {int(old): new for new, old in enumerate(keep)}
    assignment = np.array([remap[int(a)] for a in assignment], dtype=np.int64)
    centers = np.stack([unit(points[assignment == idx].sum(axis=0)) for idx in range(len(keep))])
    sims = points @ centers.T
    objective = float(np.sum(1.0 - sims[np.arange(n), assignment]))
    return centers, assignment, objective, tuple(history)


def spherical_kmeans(
    points,
    k: int,
    seed: int,
    max_iters: int = 100,
    restarts: int | None = None,
) -> ClusterResult:
    """Cluster unit vectors into at most k groups by cosine similarity.

    Runs several independently seeded attempts and keeps the lowest
    objective (ties go to the earliest attempt). When `restarts` is None the
    count adapts to the input: 8 normally, 50 for tiny instances where
    attempts are cheapest and local optima proportionally worst. If there
    are fewer distinct points than k, the result carries fewer centers.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-D array")
    if k < 1:
        raise ValueError("k must be >= 1")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    pts = np.stack([unit(p) for p in pts])

    k = min(k, pts.shape[0])
    if restarts is None:
        attempts = 50 if pts.shape[0] <= 12 else 8
    else:
        attempts = max(restarts, 1)
    best = None
    for attempt in range(attempts):
        gen = rng.generator(seed, "kmeans", attempt)
        centers, assignment, objective, history = _lloyd(pts, k, gen, max_iters)
        if best is None or objective < best[2] - 1e-15:
            best = (centers, assignment, objective, history)
    centers, assignment, objective, history = best
    return ClusterResult(
        centers=centers,
        assignment=assignment,
        objective=objective,
        objective_history=history,
    )
