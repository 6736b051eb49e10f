"""Signed graphs, faction partitions and the sign-arrangement classifier."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CountExceedsEdges,
    DuplicateEdge,
    IndexOutOfRange,
    InvalidSign,
    InvalidSizes,
    SelfLoop,
)

Edge = tuple[int, int]
SignedEdge = tuple[int, int, int]

BALANCE_CLASSES = ("structural_m1", "structural_m2", "clustering", "none")


@dataclass(frozen=True)
class SignedGraph:
    """Undirected simple graph on vertices ``0..n-1`` with +1/-1 edge labels.

    ``edges`` is kept canonical: every pair stored as ``(i, j, sign)`` with
    ``i < j``, sorted ascending by ``(i, j)``. That ordering is also the
    ordering used when sampling edges, so it must not change.
    """

    n: int
    edges: tuple[SignedEdge, ...]
    _sign: dict[Edge, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_sign", {(i, j): s for i, j, s in self.edges})

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def positive_edges(self) -> list[Edge]:
        return [(i, j) for i, j, s in self.edges if s > 0]

    @property
    def negative_edges(self) -> list[Edge]:
        return [(i, j) for i, j, s in self.edges if s < 0]

    def sign(self, i: int, j: int) -> int:
        """Sign of edge {i, j}; KeyError if absent."""
        return self._sign[(i, j) if i < j else (j, i)]

    def has_edge(self, i: int, j: int) -> bool:
        return ((i, j) if i < j else (j, i)) in self._sign

    def edge_index(self, i: int, j: int) -> int:
        """Position of {i, j} in the canonical edge ordering."""
        key = (i, j) if i < j else (j, i)
        if key not in self._sign:
            raise KeyError(key)
        lo, hi = 0, len(self.edges)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.edges[mid][:2] < key:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def neighbors(self, v: int, sign: int | None = None) -> list[int]:
        out = []
        for i, j, s in self.edges:
            if sign is not None and s != sign:
                continue
            if i == v:
                out.append(j)
            elif j == v:
                out.append(i)
        return out

    @property
    def is_complete(self) -> bool:
        return self.m == self.n * (self.n - 1) // 2

    @property
    def is_connected(self) -> bool:
        return len(_components(self.n, [(i, j) for i, j, _ in self.edges])) == 1

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Endpoint and sign arrays in canonical edge order."""
        arr = np.asarray(self.edges, dtype=np.int64).reshape(-1, 3)
        return arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()


@dataclass(frozen=True)
class FactionPartition:
    """Disjoint vertex blocks, ordered by their smallest member."""

    blocks: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.blocks)

    def labels(self, n: int | None = None) -> np.ndarray:
        size = n if n is not None else sum(len(b) for b in self.blocks)
        lab = np.full(size, -1, dtype=np.int64)
        for idx, block in enumerate(self.blocks):
            lab[list(block)] = idx
        return lab

    def block_of(self, v: int) -> int:
        for idx, block in enumerate(self.blocks):
            if v in block:
                return idx
        raise KeyError(v)


@dataclass(frozen=True)
class ArrangementReport:
    n: int
    connected: bool
    complete: bool
    k: int
    satisfies_arrangement: bool
    violating_edges: tuple[Edge, ...]
    balance_class: str

    def describe(self) -> str:
        if self.balance_class == "clustering":
            verdict = f"k={self.k} clustering balance"
        elif self.balance_class.startswith("structural"):
            verdict = f"k={self.k} structural balance"
        elif self.satisfies_arrangement:
            verdict = f"k={self.k} sign arrangement (graph not complete, balance class not asserted)"
        else:
            reasons = []
            if not self.connected:
                reasons.append("graph not connected")
            if self.n < 3:
                reasons.append("fewer than 3 vertices")
            if self.violating_edges:
                reasons.append(f"{len(self.violating_edges)} negative edge(s) inside a faction")
            verdict = f"k={self.k} no sign arrangement: " + "; ".join(reasons)
        return verdict


def build_signed_graph(n: int, signed_edges: Iterable[Sequence[int]]) -> SignedGraph:
    """Validate ``(i, j, sign)`` triples and return a canonical SignedGraph."""
    if int(n) != n or n < 1:
        raise IndexOutOfRange(f"vertex count must be a positive integer, got {n!r}")
    n = int(n)
    seen: dict[Edge, int] = {}
    for item in signed_edges:
        i, j, s = (int(v) for v in item)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRange(f"edge ({i}, {j}) has an endpoint outside [0, {n})")
        if i == j:
            raise SelfLoop(f"self-loop at vertex {i}")
        if s not in (1, -1):
            raise InvalidSign(f"edge ({i}, {j}) has sign {s}; expected +1 or -1")
        key = (i, j) if i < j else (j, i)
        if key in seen:
            raise DuplicateEdge(f"edge {key} listed more than once")
        seen[key] = s
    edges = tuple((i, j, seen[(i, j)]) for i, j in sorted(seen))
    return SignedGraph(n, edges)


def _components(n: int, pairs: Iterable[Edge]) -> list[tuple[int, ...]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in pairs:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    blocks = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        members = []
        while queue:
            v = queue.popleft()
            members.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        blocks.append(tuple(sorted(members)))
    return blocks


def positive_components(g: SignedGraph) -> FactionPartition:
    """Connected components of the positive subgraph, by smallest member."""
    return FactionPartition(tuple(_components(g.n, g.positive_edges)))


def classify_arrangement(g: SignedGraph) -> ArrangementReport:
    part = positive_components(g)
    label = part.labels(g.n)
    violating = tuple((i, j) for i, j in g.negative_edges if label[i] == label[j])
    connected = g.is_connected
    satisfies = connected and g.n >= 3 and not violating
    balance = "none"
    # the equivalence with structural/clustering balance is only claimed for complete graphs
    if satisfies and g.is_complete:
        balance = {1: "structural_m1", 2: "structural_m2"}.get(part.k, "clustering")
    return ArrangementReport(
        n=g.n,
        connected=connected,
        complete=g.is_complete,
        k=part.k,
        satisfies_arrangement=satisfies,
        violating_edges=violating,
        balance_class=balance,
    )


def generate_complete_clustered(faction_sizes: Sequence[int]) -> tuple[SignedGraph, FactionPartition]:
    """Complete graph, +1 inside each faction and -1 across factions.

    Factions take consecutive vertex ranges in the given order.
    """
    sizes = list(faction_sizes)
    if not sizes or any(int(s) != s or s < 1 for s in sizes):
        raise InvalidSizes(f"faction sizes must be positive integers, got {sizes!r}")
    if len(sizes) > 1 and sum(sizes) < 3:
        raise InvalidSizes("more than one faction needs at least 3 vertices in total")
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = int(labels.size)
    edges = [
        (i, j, 1 if labels[i] == labels[j] else -1)
        for i in range(n)
        for j in range(i + 1, n)
    ]
    g = build_signed_graph(n, edges)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    part = FactionPartition(tuple(tuple(range(starts[b], starts[b + 1])) for b in range(len(sizes))))
    return g, part


def flip_edges(g: SignedGraph, pairs: Iterable[Edge]) -> SignedGraph:
    """Copy of ``g`` with the sign of every listed edge negated."""
    flip = {(i, j) if i < j else (j, i) for i, j in pairs}
    missing = [p for p in flip if not g.has_edge(*p)]
    if missing:
        raise IndexOutOfRange(f"edges not in graph: {sorted(missing)}")
    return SignedGraph(g.n, tuple((i, j, -s if (i, j) in flip else s) for i, j, s in g.edges))


def perturb_flip_edges(
    g: SignedGraph, count: int, rng: np.random.Generator
) -> tuple[SignedGraph, list[Edge]]:
    """Negate the signs of ``count`` distinct edges drawn uniformly from ``rng``."""
    if count < 0 or count > g.m:
        raise CountExceedsEdges(f"cannot flip {count} of {g.m} edges")
    picks = sorted(int(v) for v in rng.choice(g.m, size=count, replace=False))
    flipped = [g.edges[p][:2] for p in picks]
    return flip_edges(g, flipped), flipped
