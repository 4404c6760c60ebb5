"""Per-round communication graphs and component counting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

Edge = tuple[int, int]


class TopologyError(ValueError):
    """Structurally malformed topology (bad index, self-loop)."""


class PartitionViolation(Exception):
    """A round topology has more connected components than allowed."""

    def __init__(self, count: int, p: int, round: int | None = None):
        self.count = count
        self.p = p
        self.round = round
        where = "" if round is None else f" in round {round}"
        super().__init__(f"topology has {count} components{where}, at most {p} allowed")


def _normalize(edges: Iterable[Iterable[int]], n: int) -> frozenset[Edge]:
    out = set()
    for pair in edges:
        i, j = pair
        i, j = int(i), int(j)
        if i == j:
            raise TopologyError(f"self-loop at {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise TopologyError(f"edge ({i}, {j}) out of range for n={n}")
        out.add((i, j) if i < j else (j, i))
    return frozenset(out)


@dataclass(frozen=True)
class RoundTopology:
    """Undirected edge set E(t) over processes 0..n-1.

    Edges are stored with the smaller endpoint first; duplicates and
    reversed pairs collapse.
    """

    n: int
    edges: frozenset[Edge] = frozenset()

    def __post_init__(self):
        if self.n < 1:
            raise TopologyError(f"n must be positive, got {self.n}")
        object.__setattr__(self, "edges", _normalize(self.edges, self.n))

    @classmethod
    def path(cls, order: Iterable[int], n: int) -> RoundTopology:
        order = list(order)
        return cls(n, frozenset(zip(order, order[1:])))

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.sorted_edges():
            adj[i].append(j)
            adj[j].append(i)
        return adj


@dataclass(frozen=True)
class ComponentLabeling:
    labels: tuple[int, ...]
    count: int

    def members(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.count)]
        for v, c in enumerate(self.labels):
            groups[c].append(v)
        return groups


def _find(parent: list[int], x: int) -> int:
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def count_components(topo: RoundTopology) -> ComponentLabeling:
    """Label connected components; ids follow each component's smallest index."""
    parent = list(range(topo.n))
    for i, j in topo.edges:
        ri, rj = _find(parent, i), _find(parent, j)
        if ri != rj:
            # keep the smaller index as root so roots are component minima
            if ri < rj:
                parent[rj] = ri
            else:
                parent[ri] = rj
    labels = []
    ids: dict[int, int] = {}
    for v in range(topo.n):
        root = _find(parent, v)
        if root not in ids:
            ids[root] = len(ids)
        labels.append(ids[root])
    return ComponentLabeling(tuple(labels), len(ids))


def validate_p_partitioned(topo: RoundTopology, p: int, round: int | None = None) -> int:
    """Return the component count, raising PartitionViolation if it exceeds p."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    count = count_components(topo).count
    if count > p:
        raise PartitionViolation(count, p, round)
    return count


def format_edges(topo: RoundTopology) -> str:
    return ",".join(f"{i}-{j}" for i, j in topo.sorted_edges())


def parse_edges(text: str, n: int) -> RoundTopology:
    text = text.strip()
    if not text:
        return RoundTopology(n)
    pairs = []
    for token in text.split(","):
        a, sep, b = token.strip().partition("-")
        if not sep:
            raise TopologyError(f"bad edge token {token!r}")
        pairs.append((int(a), int(b)))
    return RoundTopology(n, frozenset(pairs))


def format_round_line(t: int, topo: RoundTopology) -> str:
    """`round=<t> edges=<i-j,...>` with pairs ascending."""
    return f"round={t} edges={format_edges(topo)}"


def parse_round_line(line: str, n: int) -> tuple[int, RoundTopology]:
    head, _, tail = line.strip().partition(" ")
    if not head.startswith("round=") or not tail.startswith("edges="):
        raise TopologyError(f"bad round line {line!r}")
    return int(head[len("round="):]), parse_edges(tail[len("edges="):], n)
