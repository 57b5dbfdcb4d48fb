"""
Shapley values of consortium members for the trading game.

Four ways to get them:

- ``exact_shapley``: subset enumeration with the size-weighted formula,
  2^N characteristic-function queries.
- ``permutation_shapley``: average marginal contributions over uniformly
  sampled orderings.
- ``stratified_shapley``: per member, removal chains give one marginal
  contribution at every coalition size; averaging the size strata uniformly
  is unbiased because a uniform ordering puts the member after a uniform
  coalition of each size with probability 1/N.
- ``clustered_shapley``: cluster members by their data, estimate a sample of
  each cluster with the stratified estimator, assign the cluster mean.

Sampling estimators are pure functions of (game, parameters, seed); the
worker count only changes wall time.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from .chains import marginal_profile_bsearch, marginal_profile_scan, sample_chain
from .clustering import cluster_members
from .errors import CapacityError, PreconditionError
from .game import GameHandle
from .sampling import CLUSTER_SAMPLE_STREAM, PERMUTATION_STREAM, fan_out, stream

MAX_EXACT_MEMBERS = 20

EXACT = "exact"
PERMUTATION = "permutation"
STRATIFIED = "stratified"
CLUSTER = "cluster"


@dataclass(frozen=True)
class ValuationEstimate:
    member_id: str
    method: str
    value: float
    std_error: float
    samples: int
    evals: int


@dataclass
class ValuationReport:
    method: str
    estimates: List[ValuationEstimate]
    grand_value: float
    evals: int
    pipeline_runs: int
    fallbacks: int = 0
    flip_histogram: Dict[int, int] = field(default_factory=dict)
    residual_std_error: float = 0.0
    clusters: Dict[str, int] = field(default_factory=dict)

    @property
    def residual(self) -> float:
        """Efficiency residual v(M) - sum of estimates (v(empty) is 0)."""
        return self.grand_value - math.fsum(estimate.value for estimate in self.estimates)

    def values(self) -> Dict[str, float]:
        return {estimate.member_id: estimate.value for estimate in self.estimates}

    def summary(self) -> str:
        return (f"method={self.method} members={len(self.estimates)} grand_value={self.grand_value!r} "
                f"efficiency_residual={self.residual!r} residual_std_error={self.residual_std_error!r} "
                f"evals={self.evals} fallbacks={self.fallbacks}")


def _standard_error(samples: np.ndarray) -> float:
    if len(samples) < 2:
        return 0.0
    return float(np.std(samples, ddof=1) / np.sqrt(len(samples)))


def exact_shapley(game: GameHandle) -> ValuationReport:
    n = game.n
    if n > MAX_EXACT_MEMBERS:
        raise CapacityError(
            f"exact Shapley over {n} members exceeds the {MAX_EXACT_MEMBERS}-member limit; "
            "use the permutation, stratified or cluster method")
    start, runs = game.eval_count, game.pipeline_runs
    size = 1 << n
    values = np.array([game.v(bits) for bits in range(size)])
    evals = game.eval_count - start

    index = np.arange(size)
    popcount = np.zeros(size, dtype=int)
    for i in range(n):
        popcount += (index >> i) & 1
    weights = np.array([
        math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n) for s in range(n)
    ])

    estimates = []
    for i, member_id in enumerate(game.member_ids):
        bit = 1 << i
        without = index[(index & bit) == 0]
        phi = float(np.sum(weights[popcount[without]] * (values[without | bit] - values[without])))
        estimates.append(ValuationEstimate(member_id, EXACT, phi, 0.0, size >> 1, evals))

    grand = float(values[-1]) if n else 0.0
    logger.debug("exact Shapley over {} members: {} queries", n, evals)
    return ValuationReport(EXACT, estimates, grand, evals, game.pipeline_runs - runs)


def _permutation_batch(shared: Tuple[GameHandle, int], batch: Sequence[int]):
    game, seed = shared
    results = []
    for index in batch:
        start, runs = game.eval_count, game.pipeline_runs
        order = stream(seed, PERMUTATION_STREAM, index).permutation(game.n)
        marginals = np.zeros(game.n)
        bits, previous = 0, 0.0
        for position in order:
            bits |= 1 << int(position)
            current = game.v(bits)
            marginals[position] = current - previous
            previous = current
        results.append((marginals, game.eval_count - start, game.pipeline_runs - runs))
    return results


def permutation_shapley(game: GameHandle, n_permutations: int, seed: int, workers: int = 1) -> ValuationReport:
    if n_permutations < 1:
        raise PreconditionError("n_permutations must be at least 1")
    results = fan_out(_permutation_batch, (game, seed), range(n_permutations), workers)
    marginals = np.stack([result[0] for result in results])
    evals = sum(result[1] for result in results)
    runs = sum(result[2] for result in results)

    estimates = [
        ValuationEstimate(member_id, PERMUTATION, float(marginals[:, i].mean()),
                          _standard_error(marginals[:, i]), n_permutations, evals)
        for i, member_id in enumerate(game.member_ids)
    ]
    return ValuationReport(PERMUTATION, estimates, game.v(game.full_bits), evals, runs)


def _chain_batch(shared: Tuple[GameHandle, int, bool], batch: Sequence[Tuple[str, int]]):
    game, seed, use_bsearch = shared
    profile_of = marginal_profile_bsearch if use_bsearch else marginal_profile_scan
    results = []
    for subject, index in batch:
        runs = game.pipeline_runs
        profile = profile_of(game, sample_chain(subject, game.member_ids, seed, index))
        results.append((profile, game.pipeline_runs - runs))
    return results


def stratified_shapley(game: GameHandle, n_chains: int, seed: int, use_bsearch: bool = True,
                       workers: int = 1, subjects: Optional[Sequence[str]] = None) -> ValuationReport:
    if n_chains < 1:
        raise PreconditionError("n_chains must be at least 1")
    subjects = list(game.member_ids if subjects is None else subjects)
    units = [(subject, index) for subject in subjects for index in range(n_chains)]
    results = fan_out(_chain_batch, (game, seed, use_bsearch), units, workers)

    estimates = []
    histogram: Counter = Counter()
    fallbacks = evals = 0
    for s, subject in enumerate(subjects):
        profiles = [profile for profile, _ in results[s * n_chains:(s + 1) * n_chains]]
        deltas = np.stack([profile.deltas for profile in profiles])
        queries = sum(profile.queries for profile in profiles)
        strata = deltas.mean(axis=0)
        estimates.append(ValuationEstimate(subject, STRATIFIED, float(strata.mean()),
                                           _standard_error(deltas.mean(axis=1)), n_chains, queries))
        histogram.update(profile.first_flip for profile in profiles)
        fallbacks += sum(profile.fell_back for profile in profiles)
        evals += queries
    runs = sum(run for _, run in results)

    if fallbacks:
        logger.info("{} of {} chains fell back to a full scan", fallbacks, len(units))
    return ValuationReport(STRATIFIED, estimates, game.v(game.full_bits), evals, runs,
                           fallbacks=fallbacks, flip_histogram=dict(sorted(histogram.items())),
                           residual_std_error=math.sqrt(sum(e.std_error ** 2 for e in estimates)))


def sample_clusters(clusters: Dict[str, int], sample_per_cluster: int, seed: int) -> Dict[int, List[str]]:
    """Members drawn without replacement from each cluster, keyed by cluster id."""
    groups: Dict[int, List[str]] = {}
    for member_id in sorted(clusters):
        groups.setdefault(clusters[member_id], []).append(member_id)
    sampled = {}
    for cluster_id in sorted(groups):
        group = groups[cluster_id]
        take = min(sample_per_cluster, len(group))
        picks = stream(seed, CLUSTER_SAMPLE_STREAM, cluster_id).choice(len(group), size=take, replace=False)
        sampled[cluster_id] = [group[i] for i in sorted(int(p) for p in picks)]
    return sampled


def clustered_shapley(game: GameHandle, k: int, sample_per_cluster: int, n_chains: int, seed: int,
                      use_bsearch: bool = True, workers: int = 1,
                      clusters: Optional[Dict[str, int]] = None) -> ValuationReport:
    if k < 1 or sample_per_cluster < 1:
        raise PreconditionError("k and sample_per_cluster must be at least 1")
    if clusters is None:
        if game.dataset is None:
            raise PreconditionError("clustering needs a dataset-backed game or explicit clusters")
        clusters = cluster_members(game.dataset, k, seed, game.config)

    sampled = sample_clusters(clusters, sample_per_cluster, seed)
    subjects = [member_id for cluster_id in sorted(sampled) for member_id in sampled[cluster_id]]
    inner = stratified_shapley(game, n_chains, seed, use_bsearch, workers, subjects=subjects)
    by_member = {estimate.member_id: estimate for estimate in inner.estimates}

    assigned: Dict[str, ValuationEstimate] = {}
    residual_variance = 0.0
    for cluster_id, picks in sampled.items():
        chosen = [by_member[member_id] for member_id in picks]
        value = float(np.mean([estimate.value for estimate in chosen]))
        std_error = math.sqrt(sum(estimate.std_error ** 2 for estimate in chosen)) / len(chosen)
        samples = len(chosen) * n_chains
        evals = sum(estimate.evals for estimate in chosen)
        group = [member_id for member_id in clusters if clusters[member_id] == cluster_id]
        for member_id in group:
            assigned[member_id] = ValuationEstimate(member_id, CLUSTER, value, std_error, samples, evals)
        residual_variance += (len(group) * std_error) ** 2

    estimates = [assigned[member_id] for member_id in sorted(assigned)]
    report = ValuationReport(CLUSTER, estimates, inner.grand_value, inner.evals, inner.pipeline_runs,
                             fallbacks=inner.fallbacks, flip_histogram=inner.flip_histogram,
                             residual_std_error=math.sqrt(residual_variance), clusters=dict(clusters))
    logger.debug("clustered estimate: {} clusters, {} sampled members", len(sampled), len(subjects))
    return report
