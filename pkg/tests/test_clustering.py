import numpy as np
import pytest

from data_consortium.clustering import MAX_ITERATIONS, cluster_members, member_features
from data_consortium.config import GenSpec
from data_consortium.errors import PreconditionError
from data_consortium.sampling import CLUSTER_SEED_STREAM, stream
from data_consortium.synthgen import generate

from .conftest import make_dataset


def partition(clusters):
    groups = {}
    for member_id, cluster_id in clusters.items():
        groups.setdefault(cluster_id, set()).add(member_id)
    return {frozenset(group) for group in groups.values()}


def test_one_cluster_per_member(seeded_dataset):
    clusters = cluster_members(seeded_dataset, k=8, seed=0)
    assert sorted(clusters.values()) == list(range(8))


def test_single_cluster(seeded_dataset):
    assert set(cluster_members(seeded_dataset, k=1, seed=0).values()) == {0}


@pytest.mark.parametrize("k", [0, 9])
def test_cluster_count_out_of_range(seeded_dataset, k):
    with pytest.raises(PreconditionError):
        cluster_members(seeded_dataset, k=k, seed=0)


def test_identical_groups_are_recovered():
    rows = [(f"u{i}", "urban", 100.0, 140.0) for i in range(3)] + [(f"r{i}", "rural", 100.0, 80.0) for i in range(4)]
    dataset = make_dataset(rows, {"urban": 0.5, "rural": 0.5})

    for seed in range(5):
        assert partition(cluster_members(dataset, k=2, seed=seed)) == {
            frozenset({"u0", "u1", "u2"}), frozenset({"r0", "r1", "r2", "r3"})}


def test_features_layout():
    dataset = make_dataset([("a", "x", 100.0, 110.0), ("b", "y", 100.0, 50.0)], {"x": 0.5, "y": 0.5})
    ids, features = member_features(dataset)

    assert ids == ["a", "b"]
    assert np.allclose(features, [[0.1, 1.0, 0.0, 0.0], [-0.5, 0.0, 1.0, 0.0]])


def replay(features, k, seed):
    rng = stream(seed, CLUSTER_SEED_STREAM)
    chosen = [int(rng.integers(len(features)))]
    while len(chosen) < k:
        gaps = [min(float(np.sum((f - features[c]) ** 2)) for c in chosen) for f in features]
        chosen.append(int(np.argmax(gaps)))
    centroids = [features[c].copy() for c in chosen]

    labels = None
    for _ in range(MAX_ITERATIONS):
        new = [min(range(k), key=lambda j: (float(np.sum((f - centroids[j]) ** 2)), j)) for f in features]
        if new == labels:
            break
        labels = new
        for j in range(k):
            rows = [f for f, label in zip(features, labels) if label == j]
            if rows:
                centroids[j] = np.mean(rows, axis=0)
    return labels


def test_assignments_replay_the_procedure():
    dataset = generate(GenSpec(n_members=15, n_carriers=4, noise_scale=0.3, seed=19))
    ids, features = member_features(dataset)

    clusters = cluster_members(dataset, k=3, seed=19)

    assert [clusters[member_id] for member_id in ids] == replay(features, 3, 19)
