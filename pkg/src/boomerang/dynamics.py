"""Affine boomerang update rule, edge sampling, simulation and replay."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernel
from .errors import (
    EmptyEdgeSet,
    InvalidEdge,
    InvalidInitialOpinion,
    InvalidParams,
    RangeViolation,
    UnknownEdge,
)
from .graph import Edge, SignedGraph

_CHUNK = 1 << 16


@dataclass(frozen=True)
class ModelParams:
    o_min: float
    o_max: float
    self_weights: tuple[float, ...]

    def __post_init__(self):
        if not (np.isfinite(self.o_min) and np.isfinite(self.o_max)) or not self.o_min < self.o_max:
            raise InvalidParams(f"need o_min < o_max, got [{self.o_min}, {self.o_max}]")
        a = np.asarray(self.self_weights, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise InvalidParams("self_weights must be a nonempty 1-d sequence")
        if not np.all((a > 0.0) & (a < 1.0)):
            raise InvalidParams("every self-weight must lie strictly inside (0, 1)")
        object.__setattr__(self, "self_weights", tuple(float(v) for v in a))

    @classmethod
    def uniform(cls, n: int, a: float, o_min: float = 0.0, o_max: float = 1.0) -> ModelParams:
        return cls(float(o_min), float(o_max), (float(a),) * n)

    @property
    def n(self) -> int:
        return len(self.self_weights)

    @property
    def width(self) -> float:
        return self.o_max - self.o_min

    def pull_weights(self) -> np.ndarray:
        """``1 - a_i``: the weight each agent puts on its partner or the bound."""
        return 1.0 - np.asarray(self.self_weights, dtype=np.float64)


@dataclass(frozen=True)
class EdgeDistribution:
    """Selection probabilities aligned with the graph's canonical edge order."""

    edges: tuple[Edge, ...]
    probabilities: tuple[float, ...]
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if len(self.edges) == 0:
            raise EmptyEdgeSet("edge distribution needs at least one edge")
        if p.shape != (len(self.edges),):
            raise InvalidParams("one probability per edge is required")
        if not np.all(p > 0.0):
            raise InvalidParams("every edge needs a positive selection probability")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidParams(f"probabilities sum to {p.sum()!r}, not 1")
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def from_mapping(cls, g: SignedGraph, probabilities: Mapping[Edge, float]) -> EdgeDistribution:
        norm = {((i, j) if i < j else (j, i)): float(p) for (i, j), p in probabilities.items()}
        edges = tuple((i, j) for i, j, _ in g.edges)
        if set(norm) != set(edges):
            raise InvalidParams("probabilities must cover exactly the graph's edges")
        return cls(edges, tuple(norm[e] for e in edges))

    def as_dict(self) -> dict[Edge, float]:
        return dict(zip(self.edges, self.probabilities))

    def sample_indices(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF lookup of uniforms in [0, 1) over the fixed edge order."""
        idx = np.searchsorted(self._cdf, u, side="right")
        return np.minimum(idx, len(self.edges) - 1)


@dataclass(frozen=True)
class OpinionState:
    x: np.ndarray
    t: int = 0

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class Trajectory:
    """Recorded opinion vectors plus the complete log of selected edges.

    ``states[r]`` is the opinion vector at time ``times[r]``; ``edge_idx[t]``
    is the canonical index of the edge selected at step ``t``, i.e. the one
    that maps ``x(t)`` to ``x(t+1)``.
    """

    graph: SignedGraph
    params: ModelParams
    times: np.ndarray
    states: np.ndarray
    edge_idx: np.ndarray
    seed: int | None = None
    stride: int = 1
    stopped: bool = False

    def __len__(self) -> int:
        return len(self.times)

    @property
    def horizon(self) -> int:
        return int(self.edge_idx.size)

    @property
    def edge_log(self) -> np.ndarray:
        ei, ej, _ = self.graph.as_arrays()
        return np.column_stack([ei[self.edge_idx], ej[self.edge_idx]])

    @property
    def initial(self) -> OpinionState:
        return OpinionState(self.states[0], int(self.times[0]))

    @property
    def final(self) -> OpinionState:
        return OpinionState(self.states[-1], int(self.times[-1]))

    def state(self, r: int) -> OpinionState:
        return OpinionState(self.states[r], int(self.times[r]))


def uniform_edge_distribution(g: SignedGraph) -> EdgeDistribution:
    if g.m == 0:
        raise EmptyEdgeSet("graph has no edges to select")
    return EdgeDistribution(tuple((i, j) for i, j, _ in g.edges), (1.0 / g.m,) * g.m)


def check_opinions(x0: Sequence[float], params: ModelParams) -> np.ndarray:
    x = np.array(x0, dtype=np.float64)
    if x.shape != (params.n,):
        raise InvalidInitialOpinion(f"expected {params.n} opinions, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x < params.o_min) or np.any(x > params.o_max):
        raise InvalidInitialOpinion(f"opinions must lie in [{params.o_min}, {params.o_max}]")
    return x


def pair_update(state: OpinionState, edge: Edge, sign: int, params: ModelParams) -> OpinionState:
    """One interaction on edge {i, j}; both agents read time-t values."""
    i, j = (int(v) for v in edge)
    n = params.n
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise InvalidEdge(f"invalid edge {edge!r} for {n} agents")
    if sign not in (1, -1):
        raise InvalidEdge(f"edge sign must be +1 or -1, got {sign!r}")
    x = np.array(state.x, dtype=np.float64)
    ok = _kernel._apply(
        x, i, j, sign, params.pull_weights(), params.o_min, params.o_max,
        _kernel.slack_for(params.o_min, params.o_max),
    )
    if not ok:
        raise RangeViolation(f"update on {edge!r} left [{params.o_min}, {params.o_max}]")
    return OpinionState(x, state.t + 1)


def step(
    state: OpinionState,
    g: SignedGraph,
    dist: EdgeDistribution,
    params: ModelParams,
    rng: np.random.Generator,
) -> tuple[OpinionState, Edge]:
    """Sample one edge and apply the update. Draws exactly one uniform from ``rng``."""
    e = int(dist.sample_indices(rng.random()))
    i, j, s = g.edges[e]
    return pair_update(state, (i, j), s, params), (i, j)


def _as_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    if rng is None:
        raise ValueError("an explicit seed or Generator is required")
    return np.random.default_rng(int(rng)), int(rng)


class _Recorder:
    def __init__(self, g: SignedGraph, params: ModelParams, x0: np.ndarray, horizon: int, stride: int):
        if stride < 1:
            raise ValueError("record_stride must be >= 1")
        self.g = g
        self.params = params
        self.x = x0.copy()
        self.stride = stride
        self.ei, self.ej, self.es = g.as_arrays()
        self.w = params.pull_weights()
        self.slack = _kernel.slack_for(params.o_min, params.o_max)
        cap = horizon // stride + 2
        self.rec = np.empty((cap, g.n), dtype=np.float64)
        self.rec_t = np.empty(cap, dtype=np.int64)
        self.rec[0] = x0
        self.rec_t[0] = 0
        self.r = 1
        self.t = 0

    def advance(self, idx: np.ndarray) -> None:
        p = self.params
        fail, self.r = _kernel.run_edges(
            self.x, idx, self.ei, self.ej, self.es, self.w, p.o_min, p.o_max,
            self.slack, self.t, self.stride, self.rec, self.rec_t, self.r,
        )
        if fail >= 0:
            i, j, _ = self.g.edges[idx[fail]]
            raise RangeViolation(f"update on edge ({i}, {j}) at step {self.t + fail} left the opinion interval")
        self.t += idx.size

    def finish(self, edge_idx: np.ndarray, seed, stopped: bool) -> Trajectory:
        if self.rec_t[self.r - 1] != self.t:
            self.rec[self.r] = self.x
            self.rec_t[self.r] = self.t
            self.r += 1
        return Trajectory(
            graph=self.g,
            params=self.params,
            times=self.rec_t[: self.r].copy(),
            states=self.rec[: self.r].copy(),
            edge_idx=edge_idx,
            seed=seed,
            stride=self.stride,
            stopped=stopped,
        )


def run_trajectory(
    g: SignedGraph,
    dist: EdgeDistribution,
    params: ModelParams,
    x0: Sequence[float],
    horizon: int,
    stop: Callable[[OpinionState], bool] | None = None,
    rng: np.random.Generator | int | None = None,
    record_stride: int = 1,
) -> Trajectory:
    """Iterate the sampled dynamics for ``horizon`` steps.

    ``stop`` is evaluated on every recorded state (including ``x0``); the run
    halts at the first recorded state where it returns True. Uniforms are drawn
    in blocks, which yields the same edge sequence as repeated :func:`step`.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if params.n != g.n or dist.edges != tuple((i, j) for i, j, _ in g.edges):
        raise InvalidParams("graph, distribution and params disagree")
    x = check_opinions(x0, params)
    gen, seed = _as_rng(rng)
    rec = _Recorder(g, params, x, horizon, record_stride)
    chunk = record_stride * max(1, _CHUNK // record_stride)
    logs = []
    if stop is not None and stop(OpinionState(x, 0)):
        return rec.finish(np.empty(0, dtype=np.int64), seed, True)
    while rec.t < horizon:
        r_before = rec.r
        idx = dist.sample_indices(gen.random(min(chunk, horizon - rec.t)))
        rec.advance(idx)
        logs.append(idx)
        if stop is None:
            continue
        for r in range(r_before, rec.r):
            t_hit = int(rec.rec_t[r])
            if stop(OpinionState(rec.rec[r], t_hit)):
                edge_idx = np.concatenate(logs)[:t_hit]
                rec.r = r + 1
                rec.t = t_hit
                return rec.finish(edge_idx, seed, True)
    edge_idx = np.concatenate(logs) if logs else np.empty(0, dtype=np.int64)
    return rec.finish(edge_idx, seed, False)


def edge_indices(g: SignedGraph, edge_sequence: Iterable[Sequence[int]]) -> np.ndarray:
    out = []
    for pos, pair in enumerate(edge_sequence):
        i, j = (int(v) for v in pair)
        if not g.has_edge(i, j):
            raise UnknownEdge(f"edge ({i}, {j}) at position {pos} is not in the graph")
        out.append(g.edge_index(i, j))
    return np.asarray(out, dtype=np.int64)


def replay_sequence(
    g: SignedGraph,
    params: ModelParams,
    x0: Sequence[float],
    edge_sequence: Iterable[Sequence[int]] | np.ndarray,
    record_stride: int = 1,
) -> Trajectory:
    """Apply a prescribed edge sequence; no randomness involved."""
    if params.n != g.n:
        raise InvalidParams("graph and params disagree on n")
    x = check_opinions(x0, params)
    idx = edge_indices(g, edge_sequence)
    rec = _Recorder(g, params, x, idx.size, record_stride)
    rec.advance(idx)
    return rec.finish(idx, None, False)


def replay_indices(g: SignedGraph, params: ModelParams, x0: Sequence[float], idx: np.ndarray) -> np.ndarray:
    """Final state after applying canonical edge indices; no recording."""
    x = check_opinions(x0, params)
    ei, ej, es = g.as_arrays()
    rec = np.empty((1, g.n))
    rec_t = np.empty(1, dtype=np.int64)
    fail, _ = _kernel.run_edges(
        x, np.asarray(idx, dtype=np.int64), ei, ej, es, params.pull_weights(),
        params.o_min, params.o_max, _kernel.slack_for(params.o_min, params.o_max),
        0, idx.size + 1 if idx.size else 1, rec, rec_t, 0,
    )
    if fail >= 0:
        raise RangeViolation(f"update at step {fail} left the opinion interval")
    return x
