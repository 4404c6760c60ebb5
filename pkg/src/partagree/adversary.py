"""Adversaries choosing each round's topology with at most p components."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

from partagree.analysis import legal_topologies, mins_of, next_mins, potential
from partagree.netcore import RoundTopology, validate_p_partitioned
from partagree.protocol import ProcessState

EXHAUSTIVE_CUTOFF = 4


@dataclass(frozen=True)
class AdversaryContext:
    """Everything an adaptive adversary may look at when picking E(t)."""

    round: int
    states: tuple[ProcessState, ...]
    n: int
    p: int
    rng: random.Random = field(compare=False, repr=False, default_factory=lambda: random.Random(0))


class StaticPath:
    name = "static_path"

    def next_topology(self, ctx: AdversaryContext) -> RoundTopology:
        return RoundTopology.path(range(ctx.n), ctx.n)


class Scripted:
    """Replays a fixed schedule; the last entry repeats once it runs out."""

    name = "scripted"

    def __init__(self, schedule: Sequence[RoundTopology]):
        if not schedule:
            raise ValueError("scripted adversary needs a nonempty schedule")
        self.schedule = list(schedule)

    def next_topology(self, ctx: AdversaryContext) -> RoundTopology:
        return self.schedule[min(ctx.round, len(self.schedule) - 1)]


def random_forest(n: int, groups: int, rng: random.Random, density: float = 0.0) -> RoundTopology:
    """Random assignment to `groups` parts, each joined by a random spanning tree."""
    parts: list[list[int]] = [[] for _ in range(groups)]
    for v in range(n):
        parts[rng.randrange(groups)].append(v)
    edges = set()
    for part in parts:
        rng.shuffle(part)
        for idx in range(1, len(part)):
            edges.add((part[rng.randrange(idx)], part[idx]))
        if density > 0:
            for a, b in itertools.combinations(part, 2):
                if rng.random() < density:
                    edges.add((a, b))
    return RoundTopology(n, frozenset(edges))


class RandomPartition:
    """Oblivious random adversary: 1..p random trees each round."""

    name = "random_partition"

    def __init__(self, density: float = 0.0):
        self.density = density

    def next_topology(self, ctx: AdversaryContext) -> RoundTopology:
        groups = ctx.rng.randint(1, min(ctx.p, ctx.n))
        return random_forest(ctx.n, groups, ctx.rng, self.density)


def _blocks_to_topology(order: Sequence[int], cuts: Sequence[int], n: int) -> RoundTopology:
    edges = set()
    bounds = [0, *cuts, len(order)]
    for lo, hi in zip(bounds, bounds[1:]):
        edges.update(zip(order[lo:hi - 1], order[lo + 1:hi]))
    return RoundTopology(n, frozenset(edges))


def _sorted_path_candidates(mins: Sequence[int], p: int, limit: int):
    """Value-sorted paths cut into <= p blocks, cuts only at class boundaries."""
    n = len(mins)
    order = sorted(range(n), key=lambda v: (mins[v], v))
    boundaries = [i for i in range(1, n) if mins[order[i]] != mins[order[i - 1]]]
    produced = 0
    for c in range(min(p, len(boundaries) + 1)):
        for cuts in itertools.combinations(boundaries, c):
            if produced >= limit:
                return
            yield _blocks_to_topology(order, cuts, n)
            produced += 1


def greedy_min_phi_topology(
    states,
    p: int,
    candidate_budget: int = 200,
    level: int | None = None,
    rng: random.Random | None = None,
) -> RoundTopology:
    """Pick the candidate topology minimizing Phi(t+1) at `level` (default p).

    Exhaustive over all legal graphs when n <= EXHAUSTIVE_CUTOFF; otherwise
    half the budget goes to value-sorted paths split at class boundaries and
    the rest to random forests. Ties go to the smallest sorted edge list.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mins = mins_of(states)
    n = len(mins)
    level = p if level is None else level
    if n <= EXHAUSTIVE_CUTOFF:
        candidates = list(legal_topologies(n, p))
    else:
        rng = rng if rng is not None else random.Random(0)
        budget = max(candidate_budget, 1)
        candidates = list(_sorted_path_candidates(mins, p, max(budget // 2, 1)))
        while len(candidates) < budget:
            candidates.append(random_forest(n, rng.randint(1, min(p, n)), rng))
    return min(candidates, key=lambda t: (potential(next_mins(mins, t), level), t.sorted_edges()))


class GreedyMinPhi:
    name = "greedy_min_phi"

    def __init__(self, candidate_budget: int = 200, level: int | None = None):
        self.candidate_budget = candidate_budget
        self.level = level

    def next_topology(self, ctx: AdversaryContext) -> RoundTopology:
        return greedy_min_phi_topology(ctx.states, ctx.p, self.candidate_budget, self.level, ctx.rng)


@dataclass(frozen=True)
class PhasedPathParams:
    """Path of k+1 segments of 2t+1 processes; segment i holds input i.

    In phase i the middle of segment i is cut off and its two path
    neighbors are joined, for exactly `quiet_period` rounds.
    """

    k: int
    segment_halfwidth: int
    quiet_period: int

    def __post_init__(self):
        if self.k < 1 or self.segment_halfwidth < 1 or self.quiet_period < 1:
            raise ValueError("k, segment_halfwidth and quiet_period must be positive")
        if self.segment_halfwidth <= self.k * self.quiet_period:
            raise ValueError(
                f"segment_halfwidth t={self.segment_halfwidth} must exceed "
                f"k*quiet_period={self.k * self.quiet_period}"
            )

    @property
    def segment_size(self) -> int:
        return 2 * self.segment_halfwidth + 1

    @property
    def n(self) -> int:
        return (self.k + 1) * self.segment_size

    @property
    def horizon(self) -> int:
        return (self.k + 1) * self.quiet_period

    def inputs(self) -> list[int]:
        return [v // self.segment_size + 1 for v in range(self.n)]

    def isolated(self, phase: int) -> int:
        """Index of a_phase, the middle process of segment `phase` (1-based)."""
        return (phase - 1) * self.segment_size + self.segment_halfwidth

    def phase_of(self, round: int) -> int:
        return round // self.quiet_period + 1


def phased_path_topology(params: PhasedPathParams, round: int) -> RoundTopology:
    if not 0 <= round < params.horizon:
        raise ValueError(f"round {round} outside the construction's horizon {params.horizon}")
    a = params.isolated(params.phase_of(round))
    order = [v for v in range(params.n) if v != a]
    return RoundTopology.path(order, params.n)


class PhasedPath:
    name = "phased_path"

    def __init__(self, params: PhasedPathParams):
        self.params = params

    def next_topology(self, ctx: AdversaryContext) -> RoundTopology:
        if ctx.n != self.params.n:
            raise ValueError(f"phased path built for n={self.params.n}, run has n={ctx.n}")
        return phased_path_topology(self.params, ctx.round)


def next_topology(strategy, ctx: AdversaryContext) -> RoundTopology:
    """Ask `strategy` for E(t) and enforce the at-most-p-components contract."""
    topo = strategy.next_topology(ctx)
    if topo.n != ctx.n:
        raise ValueError(f"{strategy.name} produced a topology on {topo.n} != {ctx.n} processes")
    validate_p_partitioned(topo, ctx.p, ctx.round)
    return topo
