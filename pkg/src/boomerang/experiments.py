"""Seeded Monte Carlo harness and the named experiment presets."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .analysis import (
    absorbing_audit,
    consensus_value,
    detect_consensus,
    detect_polarization,
    extremum_series,
    faction_extremes,
    fluctuation_stats,
)
from .dynamics import ModelParams, Trajectory, run_trajectory, uniform_edge_distribution
from .errors import (
    ConfigValidationError,
    InvalidWeight,
    NeverSeparated,
    NotSingleFaction,
    SchemaViolation,
    UnknownPreset,
)
from .graph import (
    FactionPartition,
    SignedGraph,
    classify_arrangement,
    generate_complete_clustered,
    perturb_flip_edges,
    positive_components,
)

CONFIG_SCHEMA_VERSION = 1
SUMMARY_SCHEMA_VERSION = 1

PRESETS = ("fig1", "fig2", "fig3", "fluct_lemma")

# horizons follow the acceptance runs; calibration showed far shorter ones suffice
_PRESET_FIELDS = {
    "fig1": dict(faction_sizes=[5, 7], horizon=200_000, trials=100),
    "fig2": dict(faction_sizes=[3, 4, 5], horizon=200_000, trials=100),
    "fig3": dict(faction_sizes=[5, 7], horizon=200_000, trials=100, flip=3),
    "fluct_lemma": dict(faction_sizes=[3, 4, 5], horizon=1_000_000, trials=20, initial="pinned"),
}


class ExperimentConfig(BaseModel):
    """Everything needed to rerun an experiment bit for bit."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    schema_version: Literal[1] = CONFIG_SCHEMA_VERSION
    preset: Literal["fig1", "fig2", "fig3", "fluct_lemma", "custom"] = "custom"
    faction_sizes: list[int] | None = None
    graph_file: str | None = None
    o_min: float = 0.0
    o_max: float = 1.0
    a: float | None = 0.5
    self_weights: list[float] | None = None
    horizon: int
    trials: int = 1
    seed: int | None = None
    tol: float = 1e-3
    epsilon: float = 0.1
    flip: int = 0
    initial: Literal["uniform", "pinned", "fixed"] = "uniform"
    x0: list[float] | None = None
    record_stride: int = 1

    @model_validator(mode="after")
    def _check(self):
        def bad(path, msg):
            raise ValueError(f"@{path}@{msg}")

        if (self.faction_sizes is None) == (self.graph_file is None):
            bad("faction_sizes", "give exactly one of faction_sizes or graph_file")
        if self.faction_sizes is not None and (not self.faction_sizes or min(self.faction_sizes) < 1):
            bad("faction_sizes", "sizes must be positive integers")
        if not self.o_min < self.o_max:
            bad("o_max", "o_min < o_max is required")
        if self.self_weights is None:
            if self.a is None:
                bad("a", "give a uniform self-weight a or self_weights")
            if not 0.0 < self.a < 1.0:
                bad("a", f"self-weight must lie in the open interval (0, 1), got {self.a}")
        else:
            for k, v in enumerate(self.self_weights):
                if not 0.0 < v < 1.0:
                    bad(f"self_weights.{k}", f"self-weight must lie in (0, 1), got {v}")
        if self.horizon < 1:
            bad("horizon", "horizon must be >= 1")
        if self.trials < 1:
            bad("trials", "trials must be >= 1")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            bad("seed", "seed must be an unsigned 64-bit integer")
        if not self.tol > 0:
            bad("tol", "tolerance must be positive")
        if not 0 < self.epsilon < (self.o_max - self.o_min) / 2:
            bad("epsilon", "epsilon must lie in (0, (o_max - o_min) / 2)")
        if self.flip < 0:
            bad("flip", "flip count must be >= 0")
        if self.record_stride < 1:
            bad("record_stride", "record_stride must be >= 1")
        if self.initial == "pinned" and (self.faction_sizes is None or len(self.faction_sizes) < 3):
            bad("initial", "pinned initial conditions need at least 3 factions")
        if (self.initial == "fixed") != (self.x0 is not None):
            bad("x0", "x0 is required exactly when initial is 'fixed'")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        """Validate ``data``; unknown keys raise SchemaViolation, bad values ConfigValidationError."""
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            err = exc.errors()[0]
            loc = ".".join(str(p) for p in err["loc"])
            if err["type"] == "extra_forbidden":
                raise SchemaViolation(f"unknown field {loc!r}") from None
            msg = str(err.get("ctx", {}).get("error", err["msg"]))
            if msg.startswith("@"):
                _, loc, msg = msg.split("@", 2)
            raise ConfigValidationError(loc or "<root>", msg) from None

    def replace(self, **changes) -> ExperimentConfig:
        data = self.model_dump()
        data.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentConfig.from_dict(data)

    def to_dict(self) -> dict:
        return self.model_dump()


def preset(name: str, a: float = 0.5, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    if not 0.0 < a < 1.0:
        raise InvalidWeight(f"self-weight must lie in (0, 1), got {a}")
    data = dict(_PRESET_FIELDS[name], preset=name, a=a, o_min=0.0, o_max=1.0, seed=0)
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


# -- seeds ---------------------------------------------------------------------

def _stream(seed: int, key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(key,))


def trial_seed(master: int, trial: int) -> int:
    """64-bit seed of trial ``trial``; independent of how many trials run."""
    return int(_stream(master, trial + 1).generate_state(1, np.uint64)[0])


def graph_rng(master: int) -> np.random.Generator:
    return np.random.default_rng(_stream(master, 0))


# -- setup ---------------------------------------------------------------------

@dataclass(frozen=True)
class Setup:
    graph: SignedGraph
    factions: FactionPartition
    params: ModelParams
    flipped: tuple[tuple[int, int], ...] = ()


def build_setup(config: ExperimentConfig, graph: SignedGraph | None = None) -> Setup:
    """Graph, factions and parameters implied by ``config``.

    ``graph`` overrides ``graph_file`` (the file is read by the caller).
    """
    if graph is None:
        if config.faction_sizes is None:
            raise ValueError("config names a graph file; load it and pass the graph")
        graph, _ = generate_complete_clustered(config.faction_sizes)
    flipped: list = []
    if config.flip:
        graph, flipped = perturb_flip_edges(graph, config.flip, graph_rng(_require_seed(config)))
    if config.self_weights is not None:
        if len(config.self_weights) != graph.n:
            raise ConfigValidationError("self_weights", f"expected {graph.n} weights")
        params = ModelParams(config.o_min, config.o_max, tuple(config.self_weights))
    else:
        params = ModelParams.uniform(graph.n, config.a, config.o_min, config.o_max)
    if config.faction_sizes is not None:
        _, factions = generate_complete_clustered(config.faction_sizes)
    else:
        factions = positive_components(graph)
    return Setup(graph, factions, params, tuple(flipped))


def initial_opinions(config: ExperimentConfig, setup: Setup, rng: np.random.Generator) -> np.ndarray:
    p = setup.params
    n = setup.graph.n
    if config.initial == "fixed":
        if len(config.x0) != n:
            raise ConfigValidationError("x0", f"expected {n} values")
        return np.asarray(config.x0, dtype=np.float64)
    if config.initial == "uniform":
        return rng.uniform(p.o_min, p.o_max, n)
    x = np.empty(n)
    for idx, block in enumerate(setup.factions.blocks):
        for v in block:
            if idx == 0:
                x[v] = p.o_min
            elif idx == 1:
                x[v] = p.o_max
            else:
                val = rng.uniform(p.o_min, p.o_max)
                while val == p.o_min:
                    val = rng.uniform(p.o_min, p.o_max)
                x[v] = val
    return x


def _require_seed(config: ExperimentConfig) -> int:
    if config.seed is None:
        raise ConfigValidationError("seed", "a master seed is required")
    return config.seed


def simulate_trial(config: ExperimentConfig, setup: Setup, trial: int = 0) -> tuple[Trajectory, np.ndarray]:
    seed = trial_seed(_require_seed(config), trial)
    rng = np.random.default_rng(seed)
    x0 = initial_opinions(config, setup, rng)
    traj = run_trajectory(
        setup.graph,
        uniform_edge_distribution(setup.graph),
        setup.params,
        x0,
        config.horizon,
        rng=rng,
        record_stride=config.record_stride,
    )
    return replace(traj, seed=seed), x0


# -- per-trial evaluation ------------------------------------------------------

@dataclass
class TrialSummary:
    trial: int
    seed: int
    kind: str
    verdict: str
    hit_time: int | None = None
    value: float | None = None
    value_in_hull: bool | None = None
    low_faction: int | None = None
    absorbing: bool | None = None
    monotone: bool | None = None
    polarized_factions: int | None = None
    center_occupancy_min: float | None = None
    visits_low_min: int | None = None
    visits_high_min: int | None = None
    crossings_min: int | None = None
    pinned_constant: bool | None = None
    near_extreme_occupancy: float | None = None
    final_spread: float | None = None


TRIAL_FIELDS = tuple(TrialSummary.__dataclass_fields__)


def experiment_kind(setup: Setup) -> str:
    g, part = setup.graph, positive_components(setup.graph)
    if part.k == 1 and g.is_connected:
        return "consensus"
    report = classify_arrangement(g)
    if report.satisfies_arrangement and report.k == 2:
        return "polarization"
    if report.satisfies_arrangement:
        return "fluctuation"
    return "unbalanced"


def evaluate_trial(config: ExperimentConfig, setup: Setup, trial: int) -> TrialSummary:
    traj, x0 = simulate_trial(config, setup, trial)
    p = setup.params
    kind = experiment_kind(setup)
    final = traj.states[-1]
    out = TrialSummary(trial, int(traj.seed), kind, "not-yet", final_spread=float(final.max() - final.min()))
    if kind == "consensus":
        v = detect_consensus(traj, config.tol)
        if v.converged:
            out.verdict = "converged"
            out.hit_time = v.hit_time
            out.value = v.value
            out.value_in_hull = bool(x0.min() <= v.value <= x0.max())
    elif kind == "polarization":
        factions = positive_components(setup.graph)
        v = detect_polarization(traj, factions, config.tol)
        if v.polarized:
            out.verdict = "polarized"
            out.hit_time = v.hit_time
            out.low_faction = v.low_faction
        out.absorbing = absorbing_audit(traj, factions)
        try:
            out.monotone = extremum_series(traj, factions).monotone_after_separation()
        except NeverSeparated:
            out.monotone = True
    elif kind == "fluctuation":
        factions = setup.factions
        ext = faction_extremes(final, factions, p.o_min, p.o_max, config.tol)
        out.polarized_factions = sum(e is not None for e in ext)
        if config.initial == "pinned":
            pinned = [v for b in factions.blocks[:2] for v in b]
            out.pinned_constant = bool(np.all(traj.states[:, pinned] == x0[pinned]))
            interior = [v for b in factions.blocks[2:] for v in b]
        else:
            interior = [v for b, e in zip(factions.blocks, ext) if e is None for v in b]
        if interior:
            fs = fluctuation_stats(traj, interior, config.epsilon)
            out.center_occupancy_min = float(fs.occupancy[:, 1].min())
            out.visits_low_min = int(fs.visits_low.min())
            out.visits_high_min = int(fs.visits_high.min())
            out.crossings_min = int(fs.crossings.min())
        if out.polarized_factions == 2 and len(factions.blocks) == 3 and (out.center_occupancy_min or 0) > 0:
            out.verdict = "fluctuating"
        elif config.initial == "pinned" and out.pinned_constant and interior and out.crossings_min > 0:
            out.verdict = "fluctuating"
    else:
        s = traj.states
        near = (s < p.o_min + config.epsilon) | (s > p.o_max - config.epsilon)
        out.near_extreme_occupancy = float(near.mean())
        bounded = bool(np.all((s >= p.o_min) & (s <= p.o_max)))
        out.verdict = "bounded" if bounded else "out-of-range"
    return out


# -- aggregation ---------------------------------------------------------------

@dataclass
class ExperimentSummary:
    config: dict
    kind: str
    trials: list[TrialSummary]
    flipped_edges: list = field(default_factory=list)

    @property
    def aggregate(self) -> dict:
        n = len(self.trials)
        verdicts = [t.verdict for t in self.trials]
        hits = np.array([t.hit_time for t in self.trials if t.hit_time is not None], dtype=float)
        agg = {
            "n_trials": n,
            "fraction_converged": verdicts.count("converged") / n,
            "fraction_polarized": verdicts.count("polarized") / n,
            "fraction_fluctuating": verdicts.count("fluctuating") / n,
            "hit_time_quantiles": (
                {q: float(np.quantile(hits, float(q))) for q in ("0.1", "0.5", "0.9")} | {"max": float(hits.max())}
                if hits.size
                else None
            ),
        }
        if self.kind == "consensus":
            agg["consensus_values"] = [t.value for t in self.trials]
            agg["all_values_in_hull"] = all(t.value_in_hull for t in self.trials)
        if self.kind == "polarization":
            agg["all_absorbing"] = all(t.absorbing for t in self.trials)
            agg["all_monotone"] = all(t.monotone for t in self.trials)
        if self.kind == "fluctuation":
            pins = [t.pinned_constant for t in self.trials if t.pinned_constant is not None]
            agg["all_pinned_constant"] = all(pins) if pins else None
            crossings = [t.crossings_min for t in self.trials if t.crossings_min is not None]
            agg["crossings_min"] = min(crossings) if crossings else None
        if self.kind == "unbalanced":
            agg["near_extreme_occupancy_mean"] = float(np.mean([t.near_extreme_occupancy for t in self.trials]))
        return agg

    def to_dict(self) -> dict:
        return {
            "schema_version": SUMMARY_SCHEMA_VERSION,
            "config": self.config,
            "kind": self.kind,
            "flipped_edges": [list(e) for e in self.flipped_edges],
            "aggregate": self.aggregate,
            "trials": [asdict(t) for t in self.trials],
        }


def _evaluate_args(args):
    return evaluate_trial(*args)


def run_monte_carlo(
    config: ExperimentConfig,
    graph: SignedGraph | None = None,
    workers: int = 1,
    trials: list[int] | None = None,
) -> ExperimentSummary:
    """Run ``config.trials`` seeded trials (or the listed subset) and aggregate.

    Results are ordered by trial index, so they do not depend on ``workers``.
    """
    _require_seed(config)
    setup = build_setup(config, graph)
    indices = list(range(config.trials)) if trials is None else sorted(trials)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_evaluate_args, [(config, setup, k) for k in indices]))
    else:
        results = [evaluate_trial(config, setup, k) for k in indices]
    results.sort(key=lambda t: t.trial)
    return ExperimentSummary(config.to_dict(), experiment_kind(setup), results, list(setup.flipped))


def consensus_value_samples(
    config: ExperimentConfig, graph: SignedGraph | None = None
) -> tuple[list[float], list[bool]]:
    """Consensus value per trial and whether it lies in the hull of x(0)."""
    setup = build_setup(config, graph)
    if experiment_kind(setup) != "consensus":
        raise NotSingleFaction("consensus samples need a connected all-positive graph")
    values, in_hull = [], []
    for k in range(config.trials):
        traj, x0 = simulate_trial(config, setup, k)
        c = consensus_value(traj.states[-1])
        values.append(c)
        in_hull.append(bool(x0.min() <= c <= x0.max()))
    return values, in_hull
