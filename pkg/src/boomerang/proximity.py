"""Constructive edge sequences that bring two agents close together or far apart.

Every sequence comes with a certificate computed alongside it, in coordinates
normalised to ``y = (x - o_min) / (o_max - o_min)``:

* same faction: only positive edges along one path are used, so the composite
  map on the path is linear, ``y_path -> M y_path`` with ``M`` row stochastic.
  The worst case of ``y_i - y_j`` over the unit box is the positive part sum of
  ``M[i] - M[j]``, which is exact.
* different factions: one negative edge ``{u, w}`` is pumped and its
  extremes are carried along positive paths to ``i`` and ``j``. Upper bounds on
  the low side and lower bounds on the high side are propagated with the
  monotone update maps, and the relative order of ``u`` and ``w`` is certified
  before each pump once it has been established. Both orientations give the
  same bounds by the reflection ``y -> 1 - y``.

The cross-faction construction opens with inward sweeps of both factions and
a tie-break edge, and assumes ``u`` and ``w`` are not exactly tied afterwards.
That excludes a null set of initial states, among them ``x = o_max * 1``,
which is a fixed point of the dynamics, so no finite sequence can separate
anything from there.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .dynamics import ModelParams
from .errors import ArrangementViolated, DynamicsError, IndexOutOfRange, NoPath
from .graph import Edge, FactionPartition, SignedGraph, classify_arrangement, positive_components

MAX_EDGES = 10**6
_MARGIN = 1e-8


class SequenceTooLong(DynamicsError):
    pass


def _bfs_tree(g: SignedGraph, root: int) -> tuple[dict[int, int], dict[int, int | None]]:
    adj = {v: sorted(g.neighbors(v, 1)) for v in range(g.n)}
    dist = {root: 0}
    parent: dict[int, int | None] = {root: None}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for nb in adj[v]:
            if nb not in dist:
                dist[nb] = dist[v] + 1
                parent[nb] = v
                queue.append(nb)
    return dist, parent


def _path_to_root(parent: dict[int, int | None], v: int) -> list[int]:
    out = [v]
    while parent[out[-1]] is not None:
        out.append(parent[out[-1]])
    return out


def positive_path(g: SignedGraph, i: int, j: int) -> list[int]:
    """Shortest path from ``i`` to ``j`` using only positive edges."""
    dist, parent = _bfs_tree(g, j)
    if i not in dist:
        raise NoPath(f"no positive path between {i} and {j}")
    return _path_to_root(parent, i)


def _inward_sweep(g: SignedGraph, root: int) -> list[Edge]:
    dist, parent = _bfs_tree(g, root)
    order = sorted(dist, key=lambda v: (dist[v], v))
    return [(v, parent[v]) for v in reversed(order) if parent[v] is not None]


def _margin(eps_n: float) -> float:
    return min(_MARGIN, eps_n * 1e-3)


def _contract(path: list[int], a: np.ndarray, target: float, budget: int) -> list[Edge]:
    if len(path) == 1:
        return []
    size = len(path)
    M = np.eye(size)
    w = 1.0 - a[path]
    hops = [(k, k + 1) for k in range(size - 1)]
    hops += hops[::-1]
    seq: list[Edge] = []
    while True:
        for p, q in hops:
            rp, rq = M[p].copy(), M[q]
            M[p] = rp + w[p] * (rq - rp)
            M[q] = rq + w[q] * (rp - rq)
            seq.append((path[p], path[q]))
            diff = M[0] - M[-1]
            if diff[diff > 0].sum() < target:
                return seq
            if len(seq) >= budget:
                raise SequenceTooLong(f"contraction needs more than {budget} edges")


def _separate(
    g: SignedGraph,
    label: np.ndarray,
    a: np.ndarray,
    i: int,
    j: int,
    eps_n: float,
    budget: int,
) -> list[Edge]:
    dist_i, par_i = _bfs_tree(g, i)
    dist_j, par_j = _bfs_tree(g, j)
    best = None
    for p, q in g.negative_edges:
        for u, w in ((p, q), (q, p)):
            if label[u] == label[i] and label[w] == label[j]:
                cost = (dist_i[u] + dist_j[w], u, w)
                if best is None or cost < best:
                    best = cost
    if best is None:
        raise NoPath(f"no negative edge joins the factions of {i} and {j}")
    _, u, w = best
    path_a = _path_to_root(par_i, u)  # u ... i
    path_b = _path_to_root(par_j, w)  # w ... j

    seq: list[Edge] = []
    # leaves-to-root sweeps make u and w depend on every member of their faction,
    # so {u, w} can only stay tied if both factions are pinned at the same value
    for root in (u, w):
        seq.extend(_inward_sweep(g, root))
    seq.append((u, w))
    # break an exact tie on {u, w} (e.g. a constant initial vector) with a friend's pull
    if len(path_a) > 1:
        seq.append((u, path_a[1]))
    elif len(path_b) > 1:
        seq.append((w, path_b[1]))
    else:
        friends_u = g.neighbors(u, 1)
        friends_w = g.neighbors(w, 1)
        if friends_u:
            seq.append((u, min(friends_u)))
        elif friends_w:
            seq.append((w, min(friends_w)))

    a_u, a_w = a[u], a[w]
    if len(path_a) == 1 and len(path_b) == 1:
        # joint gap bound: y_w - y_u >= 1 - max(a_u, a_w) * (1 - gap)
        lead = max(a_u, a_w)
        slack = 1.0
        while slack >= eps_n - _margin(eps_n):
            slack *= lead
            seq.append((u, w))
            if len(seq) >= budget:
                raise SequenceTooLong(f"separation needs more than {budget} edges")
        return seq

    delta = eps_n / 2.0 - _margin(eps_n)
    eta = min(delta / 2.0, 0.25 * min(a_u, a_w))
    upper = {v: 1.0 for v in path_a}  # low side, orientation u < w
    lower = {v: 0.0 for v in path_b}  # high side

    def pump(certified: bool) -> None:
        while upper[u] > eta or 1.0 - lower[w] > eta:
            if certified and not upper[u] < lower[w]:
                raise AssertionError("order of the pumped pair is not certified")
            upper[u] *= a_u
            lower[w] = 1.0 - a_w * (1.0 - lower[w])
            seq.append((u, w))
            if len(seq) >= budget:
                raise SequenceTooLong(f"separation needs more than {budget} edges")

    def pull_low(p: int, q: int) -> None:
        up, uq = upper[p], upper[q]
        upper[p] = a[p] * up + (1.0 - a[p]) * uq
        upper[q] = a[q] * uq + (1.0 - a[q]) * up
        seq.append((p, q))

    def pull_high(p: int, q: int) -> None:
        lp, lq = lower[p], lower[q]
        lower[p] = a[p] * lp + (1.0 - a[p]) * lq
        lower[q] = a[q] * lq + (1.0 - a[q]) * lp
        seq.append((p, q))

    # order is preserved by pumping alone, so the first run needs no certificate
    pump(certified=False)
    while not (upper[i] < delta and 1.0 - lower[j] < delta):
        if len(path_a) > 1:
            pull_low(path_a[0], path_a[1])
            pump(certified=True)
        if len(path_b) > 1:
            pull_high(path_b[0], path_b[1])
            pump(certified=True)
        for k in range(1, len(path_a) - 1):
            pull_low(path_a[k], path_a[k + 1])
        for k in range(1, len(path_b) - 1):
            pull_high(path_b[k], path_b[k + 1])
        if len(seq) >= budget:
            raise SequenceTooLong(f"separation needs more than {budget} edges")
    return seq


def build_proximity_sequence(
    g: SignedGraph,
    partition: FactionPartition | None,
    params: ModelParams,
    i: int,
    j: int,
    epsilon: float,
    max_edges: int = MAX_EDGES,
) -> list[Edge]:
    """Edge sequence after which ``|x_i - x_j| < epsilon`` (same faction) or
    ``|x_i - x_j| > (o_max - o_min) - epsilon`` (different factions).

    Requires the 2-sign arrangement property.
    """
    report = classify_arrangement(g)
    if not report.satisfies_arrangement or report.k != 2:
        raise ArrangementViolated(f"graph does not satisfy the 2-sign arrangement ({report.describe()})")
    factions = positive_components(g)
    if partition is not None and tuple(sorted(tuple(sorted(b)) for b in partition.blocks)) != factions.blocks:
        raise ArrangementViolated("supplied partition is not the positive-component partition")
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise IndexOutOfRange(f"pair ({i}, {j}) outside [0, {g.n})")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if params.n != g.n:
        raise ValueError("params and graph disagree on n")
    if i == j:
        return []
    eps_n = epsilon / params.width
    a = np.asarray(params.self_weights)
    label = factions.labels(g.n)
    if label[i] == label[j]:
        if eps_n > 1.0:
            return []
        return _contract(positive_path(g, i, j), a, eps_n - _margin(eps_n), max_edges)
    if eps_n > 1.0:
        return []
    return _separate(g, label, a, i, j, eps_n, max_edges)
