"""
Removal chains and marginal-contribution profiles along them.

A chain starts from every member except the subject and removes the others
in a random order. Prefix coalition T_k is what is left after k removals,
so |T_k| = N - 1 - k and the chain visits one coalition of every size.
The profile is Delta(k) = v(T_k + subject) - v(T_k) for k = 0..N-1.

The binary-search profile searches for the first k where the subject's
outcome difference is on, evaluates Delta explicitly from there on and
checks the region below it. A step where both coalitions are certainly
NoTrade (the game's null certificate, such as the sample-size gate) costs
no query. On a game promised to be single-ascent the region below is
checked at three points; otherwise every step is checked. Any difference
found below the searched step falls back to the full scan. Without the
promise the profile always equals the scan's.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger

from .errors import PreconditionError
from .game import GameHandle, outcomes_differ
from .sampling import CHAIN_STREAM, stream


@dataclass(frozen=True)
class RemovalChain:
    subject: str
    order: Tuple[str, ...]


@dataclass
class MarginalProfile:
    deltas: np.ndarray
    flips: List[int] = field(default_factory=list)
    first_flip: int = 0
    queries: int = 0
    fell_back: bool = False


def sample_chain(subject: str, members: Sequence[str], seed: int, index: int) -> RemovalChain:
    ordered = sorted(members)
    if subject not in ordered:
        raise PreconditionError(f"subject {subject!r} is not a member")
    others = [member for member in ordered if member != subject]
    rng = stream(seed, CHAIN_STREAM, ordered.index(subject), index)
    return RemovalChain(subject, tuple(others[i] for i in rng.permutation(len(others))))


def _prefixes(game: GameHandle, chain: RemovalChain) -> Tuple[int, List[int]]:
    subject_bit = 1 << game.position[chain.subject]
    prefix = game.full_bits & ~subject_bit
    prefixes = [prefix]
    for member_id in chain.order:
        prefix &= ~(1 << game.position[member_id])
        prefixes.append(prefix)
    return subject_bit, prefixes


class _ChainWalker:
    """Evaluates (Delta(k), differs(k)) at most once per k along one chain.

    With ``certify`` set, a step whose two coalitions are both certainly
    NoTrade is (0.0, False) without querying the game.
    """

    def __init__(self, game: GameHandle, chain: RemovalChain, certify: bool = False):
        self.game = game
        self.certify = certify
        self.subject_bit, self.prefixes = _prefixes(game, chain)
        self.n = len(self.prefixes)
        self.seen: Dict[int, Tuple[float, bool]] = {}
        self.start = game.eval_count

    def at(self, k: int) -> Tuple[float, bool]:
        if k not in self.seen:
            prefix = self.prefixes[k]
            if (self.certify and self.game.certainly_null(prefix)
                    and self.game.certainly_null(prefix | self.subject_bit)):
                self.seen[k] = (0.0, False)
            else:
                with_subject = self.game.value_bits(prefix | self.subject_bit)
                without = self.game.value_bits(prefix)
                self.seen[k] = (with_subject.value - without.value, outcomes_differ(with_subject, without))
        return self.seen[k]

    @property
    def queries(self) -> int:
        return self.game.eval_count - self.start

    def scan(self) -> MarginalProfile:
        deltas = np.array([self.at(k)[0] for k in range(self.n)])
        flips = [k for k in range(self.n) if self.at(k)[1]]
        first = flips[0] if flips else self.n
        return MarginalProfile(deltas, flips, first, self.queries)


def marginal_profile_scan(game: GameHandle, chain: RemovalChain) -> MarginalProfile:
    return _ChainWalker(game, chain).scan()


def _region_checkpoints(low: int, high: int, evaluated: Sequence[int]) -> List[int]:
    centre = (low + high) / 2
    inside = [k for k in evaluated if low <= k <= high]
    middle = min(inside, key=lambda k: (abs(k - centre), k)) if inside else (low + high + 1) // 2
    return sorted({low, high, middle})


def marginal_profile_bsearch(game: GameHandle, chain: RemovalChain) -> MarginalProfile:
    walker = _ChainWalker(game, chain, certify=True)
    n = walker.n

    low, high = 0, n
    while low < high:
        mid = (low + high) // 2
        if walker.at(mid)[1]:
            high = mid
        else:
            low = mid + 1
    first = low

    if first > 0:
        if game.single_ascent:
            below = _region_checkpoints(0, first - 1, list(walker.seen))
        else:
            below = range(first)
        for k in below:
            if walker.at(k)[1]:
                logger.debug("chain for {} flips at k={} below the searched step k*={}; scanning",
                             chain.subject, k, first)
                profile = walker.scan()
                profile.fell_back = True
                return profile

    deltas = np.zeros(n)
    flips = []
    for k in range(first, n):
        delta, differs = walker.at(k)
        deltas[k] = delta
        if differs:
            flips.append(k)
    return MarginalProfile(deltas, flips, first, walker.queries)
