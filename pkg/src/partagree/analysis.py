"""Per-round analytics: value classes, potential, quotient graph, verdicts.

Everything here works on the vector of current minima (one int per
process); ProcessState sequences are accepted wherever a vector is.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from partagree.netcore import RoundTopology, count_components
from partagree.protocol import ProcessState

BRUTE_FORCE_CUTOFF = 4


def mins_of(states) -> tuple[int, ...]:
    return tuple(s.current_min if isinstance(s, ProcessState) else int(s) for s in states)


@dataclass(frozen=True)
class ValueClasses:
    """S(t) sorted ascending, |V_i(t)| and A_i(t) for every distinct value.

    `level` marks where the residual class begins: classes past index
    `level` are lumped into V_{level+1} by the potential and quotient graph.
    """

    distinct_values: tuple[int, ...]
    class_sizes: tuple[int, ...]
    prefix_counts: tuple[int, ...]
    level: int

    def rank(self, value: int) -> int:
        """0-based class index of `value`, capped at the residual class."""
        return min(self.distinct_values.index(value), self.level)

    def prefix(self, i: int) -> int:
        """A_i for 1-based i; equals n once i runs past |S|."""
        return self.prefix_counts[min(i, len(self.prefix_counts)) - 1]


def value_classes(states, level: int) -> ValueClasses:
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    mins = mins_of(states)
    distinct = tuple(sorted(set(mins)))
    sizes = tuple(mins.count(v) for v in distinct)
    return ValueClasses(distinct, sizes, tuple(itertools.accumulate(sizes)), level)


def potential(states, level: int) -> int:
    """Phi = sum_{i<=level} (level+1-i) |V_i| = A_1 + ... + A_level (A_i capped at n)."""
    vc = value_classes(states, level)
    return sum((level - i) * size for i, size in enumerate(vc.class_sizes[:level]))


def max_potential_while_disagreeing(n: int, p: int) -> int:
    """Largest Phi at level p that still has more than p distinct values."""
    return p * (n - p) + p * (p - 1) // 2


@dataclass(frozen=True)
class QuotientGraph:
    """Graph on the nonempty classes V_1..V_{level+1} (0-based ids)."""

    n_classes: int
    edges: frozenset[tuple[int, int]]
    level: int

    def components(self) -> list[list[int]]:
        labels = count_components(RoundTopology(self.n_classes, self.edges)).labels
        groups: dict[int, list[int]] = {}
        for cls, lab in enumerate(labels):
            groups.setdefault(lab, []).append(cls)
        return list(groups.values())


def quotient_graph(states, topo: RoundTopology, level: int) -> QuotientGraph:
    mins = mins_of(states)
    if len(mins) != topo.n:
        raise ValueError(f"{len(mins)} states for a topology on {topo.n} processes")
    vc = value_classes(mins, level)
    rank = {v: vc.rank(v) for v in vc.distinct_values}
    edges = set()
    for i, j in topo.edges:
        a, b = rank[mins[i]], rank[mins[j]]
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return QuotientGraph(min(len(vc.distinct_values), level + 1), frozenset(edges), level)


def phi_increase_lower_bound(quotient: QuotientGraph) -> int:
    """Guaranteed Phi growth this round: sum over components of (size - 1)."""
    return sum(len(c) - 1 for c in quotient.components())


def next_mins(mins: Sequence[int], topo: RoundTopology) -> tuple[int, ...]:
    """One round of min-flooding applied to a bare vector (no decision logic)."""
    out = list(mins)
    for i, j in topo.edges:
        if mins[j] < out[i]:
            out[i] = mins[j]
        if mins[i] < out[j]:
            out[j] = mins[i]
    return tuple(out)


def round_violations(
    before: Sequence[int],
    after: Sequence[int],
    topo: RoundTopology,
    p: int,
    level: int,
) -> list[str]:
    """Check the per-round growth lemmas for one transition before -> after.

    `level` is the k of the quotient-graph lemma (any k >= p). An empty
    list means every lemma held; the topology is assumed to have at most
    p components.
    """
    problems = []
    n = len(before)
    s_before, s_after = set(before), set(after)
    if not s_after <= s_before:
        problems.append(f"S grew: {sorted(s_after - s_before)} new")
    if any(b > a for a, b in zip(before, after)):
        problems.append("some current_min increased")

    vb, va = value_classes(before, p), value_classes(after, p)
    for i in range(1, len(vb.distinct_values) + 1):
        if va.prefix(i) < vb.prefix(i):
            problems.append(f"A_{i} decreased {vb.prefix(i)} -> {va.prefix(i)}")
    if len(s_before) > p:
        phi_b, phi_a = potential(before, p), potential(after, p)
        if phi_a < phi_b + 1:
            problems.append(f"Phi_p stalled {phi_b} -> {phi_a} with |S|={len(s_before)}")
        cap = max_potential_while_disagreeing(n, p)
        if phi_b > cap:
            problems.append(f"Phi_p={phi_b} above cap {cap} with |S|>p")

    bound = phi_increase_lower_bound(quotient_graph(before, topo, level))
    gain = potential(after, level) - potential(before, level)
    if gain < bound:
        problems.append(f"Phi_{level} grew {gain} < quotient bound {bound}")
    return problems


@dataclass(frozen=True)
class Verdict:
    agreement_k: int
    decision_set: frozenset[int]
    validity_ok: bool
    termination_ok: bool
    rounds_used: int

    def satisfies(self, target: int) -> bool:
        return self.agreement_k <= target and self.validity_ok and self.termination_ok


def check_run(trace, scenario=None) -> Verdict:
    """Agreement / validity / termination over a finished trace.

    Only decided processes contribute to W; any undecided process makes
    termination_ok false. `trace` needs `final_states`, `inputs` and
    `rounds`; `scenario` is accepted for interface symmetry and unused.
    """
    decisions = [s.decided for s in trace.final_states]
    W = frozenset(d for d in decisions if d is not None)
    return Verdict(
        agreement_k=len(W),
        decision_set=W,
        validity_ok=W <= set(trace.inputs),
        termination_ok=all(d is not None for d in decisions),
        rounds_used=trace.rounds,
    )


@lru_cache(maxsize=None)
def legal_topologies(n: int, p: int) -> tuple[RoundTopology, ...]:
    """Every graph on n labelled vertices with at most p components."""
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for mask in range(1 << len(pairs)):
        topo = RoundTopology(n, frozenset(e for b, e in enumerate(pairs) if mask >> b & 1))
        if count_components(topo).count <= p:
            out.append(topo)
    return tuple(out)


def brute_force_worst_rounds(n: int, p: int, inputs=None, horizon: int | None = None) -> int:
    """Exact worst case, over every adversary, of the first round with |S(t)| <= p.

    Searches the min-vector state space with memoization. Inputs default to
    1..n. If `horizon` is given, the answer is capped at it.
    """
    if n > BRUTE_FORCE_CUTOFF:
        raise ValueError(f"brute force refused for n={n} > {BRUTE_FORCE_CUTOFF}")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    start = tuple(inputs) if inputs is not None else tuple(range(1, n + 1))
    if len(start) != n:
        raise ValueError(f"{len(start)} inputs for n={n}")
    topos = legal_topologies(n, p)
    cap = horizon if horizon is not None else float("inf")
    memo: dict[tuple[int, ...], int] = {}

    def worst(mins: tuple[int, ...], depth: int) -> int:
        if len(set(mins)) <= p or depth >= cap:
            return 0
        if mins in memo:
            return memo[mins]
        # every legal topology strictly lowers sum(mins) here, so recursion terminates
        best = 1 + max(worst(next_mins(mins, t), depth + 1) for t in topos)
        if horizon is None:
            memo[mins] = best
        return best

    result = worst(start, 0)
    return int(min(result, cap))
