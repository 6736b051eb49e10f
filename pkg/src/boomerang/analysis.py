"""Detectors and statistics over recorded trajectories."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .dynamics import OpinionState, Trajectory
from .errors import InvalidEpsilon, NeverSeparated, WrongFactionCount
from .graph import FactionPartition

REPORT_SCHEMA_VERSION = 1

# band codes used by the fluctuation statistics
LOW, CENTER, HIGH = 0, 1, 2


def _vector(state) -> np.ndarray:
    if isinstance(state, OpinionState):
        return state.x
    return np.asarray(state, dtype=np.float64)


def _two_blocks(partition: FactionPartition) -> tuple[list[int], list[int]]:
    if partition.k != 2:
        raise WrongFactionCount(f"expected 2 factions, got {partition.k}")
    return list(partition.blocks[0]), list(partition.blocks[1])


def spread(state) -> float:
    x = _vector(state)
    if x.size == 0:
        raise ValueError("empty state")
    return float(x.max() - x.min())


@dataclass(frozen=True)
class SeparationClass:
    z: int
    low_faction: int | None = None
    high_faction: int | None = None
    gap: float | None = None


def _separation(states: np.ndarray, partition: FactionPartition):
    """Vectorised Z classifier: returns (z, low_block, gap) arrays over rows."""
    b0, b1 = _two_blocks(partition)
    s = np.atleast_2d(states)
    max0, min0 = s[:, b0].max(axis=1), s[:, b0].min(axis=1)
    max1, min1 = s[:, b1].max(axis=1), s[:, b1].min(axis=1)
    low0 = max0 < min1
    low1 = max1 < min0
    z = np.where(low0 | low1, 2, 1)
    low = np.where(low0, 0, np.where(low1, 1, -1))
    gap = np.where(low0, min1 - max0, np.where(low1, min0 - max1, np.nan))
    return z, low, gap


def classify_separation(state, partition: FactionPartition) -> SeparationClass:
    """Z = 2 when one faction lies strictly above the other, else Z = 1."""
    z, low, gap = _separation(_vector(state)[None, :], partition)
    if z[0] == 1:
        return SeparationClass(1)
    return SeparationClass(2, int(low[0]), 1 - int(low[0]), float(gap[0]))


@dataclass(frozen=True)
class ExtremumSeries:
    times: np.ndarray
    low_faction: int
    high_faction: int
    theta_low: np.ndarray  # max over the low faction
    theta_high: np.ndarray  # min over the high faction
    separated_at: int  # first recorded index with Z = 2

    def monotone_after_separation(self) -> bool:
        lo = self.theta_low[self.separated_at:]
        hi = self.theta_high[self.separated_at:]
        return bool(np.all(np.diff(lo) <= 0.0) and np.all(np.diff(hi) >= 0.0))


def extremum_series(traj: Trajectory, partition: FactionPartition) -> ExtremumSeries:
    """Faction extremum series, with roles fixed at the first separated state."""
    z, low, _ = _separation(traj.states, partition)
    hits = np.flatnonzero(z == 2)
    if hits.size == 0:
        raise NeverSeparated("trajectory never reaches a separated state")
    first = int(hits[0])
    lo_f = int(low[first])
    hi_f = 1 - lo_f
    lo_b, hi_b = list(partition.blocks[lo_f]), list(partition.blocks[hi_f])
    return ExtremumSeries(
        times=traj.times,
        low_faction=lo_f,
        high_faction=hi_f,
        theta_low=traj.states[:, lo_b].max(axis=1),
        theta_high=traj.states[:, hi_b].min(axis=1),
        separated_at=first,
    )


def absorbing_audit(traj: Trajectory, partition: FactionPartition) -> bool:
    """True iff no recorded separated state is followed by a non-separated or flipped one."""
    z, low, _ = _separation(traj.states, partition)
    if len(z) < 2:
        return True
    was = z[:-1] == 2
    kept = (z[1:] == 2) & (low[1:] == low[:-1])
    return bool(np.all(kept[was]))


def consensus_value(state) -> float:
    """Mean of ``state``, taken relative to its minimum so a constant vector maps to itself."""
    x = _vector(state)
    lo = x.min()
    return float(lo + (x - lo).mean())


@dataclass(frozen=True)
class ConsensusVerdict:
    converged: bool
    value: float | None
    hit_time: int | None


def detect_consensus(traj: Trajectory, tol: float) -> ConsensusVerdict:
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = traj.states
    spreads = s.max(axis=1) - s.min(axis=1)
    if not spreads[-1] < tol:
        return ConsensusVerdict(False, None, None)
    first = int(np.flatnonzero(spreads < tol)[0])
    return ConsensusVerdict(True, consensus_value(s[-1]), int(traj.times[first]))


@dataclass(frozen=True)
class PolarizationVerdict:
    polarized: bool
    low_faction: int | None
    high_faction: int | None
    hit_time: int | None


def _polarized_rows(states, low_b, high_b, o_min, o_max, tol) -> np.ndarray:
    return np.all(states[:, low_b] - o_min < tol, axis=1) & np.all(o_max - states[:, high_b] < tol, axis=1)


def detect_polarization(traj: Trajectory, partition: FactionPartition, tol: float) -> PolarizationVerdict:
    """Either orientation counts; ``low_faction`` records which block went to o_min."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    b0, b1 = _two_blocks(partition)
    p = traj.params
    s = traj.states
    for low_f, (lo_b, hi_b) in enumerate(((b0, b1), (b1, b0))):
        rows = _polarized_rows(s, lo_b, hi_b, p.o_min, p.o_max, tol)
        if rows[-1]:
            first = int(np.flatnonzero(rows)[0])
            return PolarizationVerdict(True, low_f, 1 - low_f, int(traj.times[first]))
    return PolarizationVerdict(False, None, None, None)


def faction_extremes(state, partition: FactionPartition, o_min: float, o_max: float, tol: float) -> list[str | None]:
    """Per faction: 'low' / 'high' when every member is within tol of that bound."""
    x = _vector(state)
    out: list[str | None] = []
    for block in partition.blocks:
        vals = x[list(block)]
        if np.all(vals - o_min < tol):
            out.append("low")
        elif np.all(o_max - vals < tol):
            out.append("high")
        else:
            out.append(None)
    return out


@dataclass(frozen=True)
class FluctuationStats:
    epsilon: float
    agents: tuple[int, ...]
    visits_low: np.ndarray
    visits_high: np.ndarray
    crossings: np.ndarray
    occupancy: np.ndarray  # (len(agents), 3): low, center, high fractions

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "agents": [
                {
                    "agent": a,
                    "visits_low": int(self.visits_low[k]),
                    "visits_high": int(self.visits_high[k]),
                    "crossings": int(self.crossings[k]),
                    "occupancy": [float(v) for v in self.occupancy[k]],
                }
                for k, a in enumerate(self.agents)
            ],
        }


def bands(values: np.ndarray, o_min: float, o_max: float, epsilon: float) -> np.ndarray:
    """Band codes; the closed bounds themselves count as the outer bands."""
    codes = np.full(values.shape, CENTER, dtype=np.int8)
    codes[values < o_min + epsilon] = LOW
    codes[values > o_max - epsilon] = HIGH
    return codes


def _alternations(code_col: np.ndarray) -> int:
    ext = code_col[code_col != CENTER]
    if ext.size < 2:
        return 0
    return int(np.count_nonzero(ext[1:] != ext[:-1]))


def fluctuation_stats(traj: Trajectory, agents: Sequence[int], epsilon: float) -> FluctuationStats:
    p = traj.params
    if not 0 < epsilon < p.width / 2:
        raise InvalidEpsilon(f"epsilon must lie in (0, {p.width / 2}), got {epsilon}")
    agents = tuple(int(a) for a in agents)
    codes = bands(traj.states[:, list(agents)], p.o_min, p.o_max, epsilon)
    changed = codes[1:] != codes[:-1]
    visits_low = np.count_nonzero(changed & (codes[1:] == LOW), axis=0)
    visits_high = np.count_nonzero(changed & (codes[1:] == HIGH), axis=0)
    crossings = np.array([_alternations(codes[:, k]) for k in range(len(agents))], dtype=np.int64)
    rows = codes.shape[0]
    occupancy = np.stack([np.count_nonzero(codes == b, axis=0) / rows for b in (LOW, CENTER, HIGH)], axis=1)
    return FluctuationStats(float(epsilon), agents, visits_low, visits_high, crossings, occupancy)


def analysis_report(
    traj: Trajectory,
    partition: FactionPartition,
    tol: float,
    epsilon: float | None = None,
    agents: Sequence[int] | None = None,
) -> dict:
    """JSON-ready summary of every detector that applies to ``partition``."""
    report: dict = {"schema_version": REPORT_SCHEMA_VERSION, "t_final": int(traj.times[-1])}
    cons = detect_consensus(traj, tol)
    report["consensus"] = asdict(cons)
    verdict = "converged" if cons.converged else "not-yet"
    report["c"] = cons.value
    report["hit_time"] = cons.hit_time
    report["orientation"] = None
    if partition.k == 2:
        pol = detect_polarization(traj, partition, tol)
        report["polarization"] = asdict(pol)
        if pol.polarized:
            verdict = "polarized"
            report["hit_time"] = pol.hit_time
            report["orientation"] = {"low_faction": pol.low_faction, "high_faction": pol.high_faction}
        report["absorbing_audit"] = absorbing_audit(traj, partition)
        try:
            report["monotone_after_separation"] = extremum_series(traj, partition).monotone_after_separation()
        except NeverSeparated:
            report["monotone_after_separation"] = None
    report["verdict"] = verdict
    if epsilon is not None:
        chosen = range(traj.graph.n) if agents is None else agents
        report["fluctuation"] = fluctuation_stats(traj, chosen, epsilon).as_dict()
    return report
