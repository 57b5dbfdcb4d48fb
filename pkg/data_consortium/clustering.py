"""
Group members by their data so Shapley values can be estimated per cluster.

Features per member: normalized signal, one-hot segment, and volume scaled to
[0, 1]. Partitioning is Lloyd's iteration from farthest-first seeds under
squared Euclidean distance.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import PipelineConfig
from .domain import MemberDataset
from .errors import PreconditionError
from .pipeline import normalize_signals
from .sampling import CLUSTER_SEED_STREAM, stream

MAX_ITERATIONS = 100


def member_features(dataset: MemberDataset, config: Optional[PipelineConfig] = None) -> Tuple[List[str], np.ndarray]:
    member_ids = dataset.member_ids
    signals = normalize_signals(dataset, config)
    segments = sorted(set(dataset.target_shares) | {member.segment for member in dataset.members})
    volumes = np.array([dataset.member(member_id).volume for member_id in member_ids], dtype=float)
    span = volumes.max() - volumes.min() if len(volumes) else 0.0
    scaled = (volumes - volumes.min()) / span if span > 0 else np.zeros_like(volumes)

    rows = []
    for i, member_id in enumerate(member_ids):
        segment = dataset.member(member_id).segment
        one_hot = [1.0 if segment == label else 0.0 for label in segments]
        rows.append([signals[member_id]] + one_hot + [scaled[i]])
    return member_ids, np.array(rows, dtype=float).reshape(len(member_ids), len(segments) + 2)


def farthest_first(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    chosen = [int(rng.integers(len(features)))]
    nearest = ((features - features[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        pick = int(np.argmax(nearest))
        chosen.append(pick)
        nearest = np.minimum(nearest, ((features - features[pick]) ** 2).sum(axis=1))
    return features[chosen].copy()


def lloyd(features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    assignment = None
    for _ in range(MAX_ITERATIONS):
        distances = ((features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        updated = np.argmin(distances, axis=1)
        if assignment is not None and np.array_equal(updated, assignment):
            break
        assignment = updated
        for cluster in range(len(centroids)):
            members = features[assignment == cluster]
            if len(members):
                centroids[cluster] = members.mean(axis=0)
    return assignment


def cluster_members(dataset: MemberDataset, k: int, seed: int,
                    config: Optional[PipelineConfig] = None) -> Dict[str, int]:
    member_ids, features = member_features(dataset, config)
    n = len(member_ids)
    if not 1 <= k <= n:
        raise PreconditionError(f"cluster count k={k} must lie in [1, {n}]")
    if k == n:
        return {member_id: i for i, member_id in enumerate(member_ids)}
    centroids = farthest_first(features, k, stream(seed, CLUSTER_SEED_STREAM))
    assignment = lloyd(features, centroids)
    return {member_id: int(cluster) for member_id, cluster in zip(member_ids, assignment)}
