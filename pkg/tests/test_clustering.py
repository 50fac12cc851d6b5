import itertools

import numpy as np
import pytest

from srzoo.clustering import spherical_kmeans
from srzoo.encoder import unit


def random_unit_points(gen, n, d):
    return np.stack([unit(gen.normal(size=d)) for _ in range(n)])


def exhaustive_optimum(points, k) -> float:
    """Best objective over every assignment of points into at most k groups.

    Uses the identity: sum of member similarities to the normalized mean
    direction equals the norm of the member sum, so the objective of a
    partition is n - sum of cluster-sum norms.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    best = float(n)
    for labels in itertools.product(range(k), repeat=n):
        total = 0.0
        arr = np.asarray(labels)
        for c in range(k):
            members = pts[arr == c]
            if members.shape[0]:
                total += float(np.linalg.norm(members.sum(axis=0)))
        best = min(best, n - total)
    return best


def test_k1_center_is_mean_direction():
    gen = np.random.default_rng(0)
    pts = random_unit_points(gen, 9, 6)
    result = spherical_kmeans(pts, 1, seed=3)
    expected = unit(pts.sum(axis=0))
    assert result.k_effective == 1
    assert np.allclose(result.centers[0], expected, atol=1e-12)


def test_k_equals_n_distinct_points_perfect_fit():
    gen = np.random.default_rng(1)
    pts = random_unit_points(gen, 6, 5)
    result = spherical_kmeans(pts, 6, seed=4)
    assert result.k_effective == 6
    assert result.objective < 1e-12
    assert sorted(result.assignment.tolist()) == sorted(range(6))


def test_two_antipodal_groups():
    gen = np.random.default_rng(2)
    axis = unit(gen.normal(size=5))
    group_a = [unit(axis + 0.05 * gen.normal(size=5)) for _ in range(5)]
    group_b = [unit(-axis + 0.05 * gen.normal(size=5)) for _ in range(5)]
    pts = np.stack(group_a + group_b)
    result = spherical_kmeans(pts, 2, seed=5)
    assert result.k_effective == 2
    # Same partition each side, and the objective matches brute force.
    labels = result.assignment
    assert len(set(labels[:5])) == 1 and len(set(labels[5:])) == 1
    assert labels[0] != labels[5]
    assert abs(result.objective - exhaustive_optimum(pts, 2)) < 1e-9
    mean_a = unit(np.stack(group_a).sum(axis=0))
    sims = [float(c @ mean_a) for c in result.centers]
    assert max(sims) > 1.0 - 1e-9


def test_deterministic_for_fixed_seed():
    gen = np.random.default_rng(3)
    pts = random_unit_points(gen, 20, 8)
    a = spherical_kmeans(pts, 4, seed=11)
    b = spherical_kmeans(pts, 4, seed=11)
    assert a.objective == b.objective
    assert np.array_equal(a.assignment, b.assignment)
    assert a.centers.tobytes() == b.centers.tobytes()


def test_objective_history_non_increasing():
    gen = np.random.default_rng(4)
    for trial in range(25):
        pts = random_unit_points(gen, int(gen.integers(4, 30)), int(gen.integers(2, 10)))
        result = spherical_kmeans(pts, int(gen.integers(1, 6)), seed=trial)
        hist = result.objective_history
        assert all(a >= b - 1e-9 for a, b in zip(hist, hist[1:]))
        assert 0.0 <= result.objective <= 2.0 * pts.shape[0] + 1e-9


def test_duplicates_collapse_k_effective():
    a = unit(np.array([1.0, 0.0, 0.0]))
    b = unit(np.array([0.0, 1.0, 0.0]))
    pts = np.stack([a, a, a, b, b, b])
    result = spherical_kmeans(pts, 5, seed=0)
    assert result.k_effective == 2
    assert result.objective < 1e-9


def test_small_instances_sound_and_as_good_as_restarts():
    gen = np.random.default_rng(5)
    for trial in range(8):
        n = int(gen.integers(4, 9))
        pts = random_unit_points(gen, n, 4)
        k = int(gen.integers(2, 4))
        result = spherical_kmeans(pts, k, seed=trial)
        # Sanity: nobody beats the true optimum over all partitions.
        assert result.objective >= exhaustive_optimum(pts, k) - 1e-9
        # And the default call is no worse than a 50-restart protocol.
        best50 = min(
            spherical_kmeans(pts, k, seed=s, restarts=1).objective for s in range(50)
        )
        assert result.objective <= best50 + 1e-9


def test_input_validation():
    with pytest.raises(ValueError):
        spherical_kmeans(np.empty((0, 4)), 2, seed=0)
    with pytest.raises(ValueError):
        spherical_kmeans(np.ones((3, 4)), 0, seed=0)
