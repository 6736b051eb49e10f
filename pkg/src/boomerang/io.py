"""Text formats: graph files, edge sequences, trajectory CSV, configs, summaries."""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import Trajectory
from .errors import BoomerangError, ParseError
from .experiments import TRIAL_FIELDS, ExperimentConfig, ExperimentSummary
from .graph import Edge, SignedGraph, build_signed_graph


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


# -- graph files ---------------------------------------------------------------

def parse_graph(text: str) -> SignedGraph:
    """``n <count>`` header, then ``<i> <j> <+1|-1>`` per edge; ``#`` starts a comment."""
    lines = _content_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("graph file is empty") from None
    parts = header.split()
    if len(parts) != 2 or parts[0] != "n":
        raise ParseError(f"line {lineno}: expected 'n <count>', got {header!r}")
    try:
        n = int(parts[1])
    except ValueError:
        raise ParseError(f"line {lineno}: vertex count {parts[1]!r} is not an integer") from None
    edges = []
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected '<i> <j> <sign>', got {line!r}")
        try:
            edges.append(tuple(int(p) for p in parts))
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer field in {line!r}") from None
    try:
        return build_signed_graph(n, edges)
    except BoomerangError as exc:
        raise ParseError(str(exc)) from exc


def format_graph(g: SignedGraph, comments: Sequence[str] = ()) -> str:
    out = [f"# {c}" for c in comments]
    out.append(f"n {g.n}")
    out.extend(f"{i} {j} {'+1' if s > 0 else '-1'}" for i, j, s in g.edges)
    return "\n".join(out) + "\n"


def read_graph(path) -> SignedGraph:
    return parse_graph(Path(path).read_text())


def write_graph(path, g: SignedGraph, comments: Sequence[str] = ()) -> None:
    Path(path).write_text(format_graph(g, comments))


# -- edge sequences ------------------------------------------------------------

def parse_edges(text: str) -> list[Edge]:
    out = []
    for lineno, line in _content_lines(text):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected '<i> <j>', got {line!r}")
        try:
            out.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer field in {line!r}") from None
    return out


def format_edges(edges: Iterable[Sequence[int]]) -> str:
    return "".join(f"{int(i)} {int(j)}\n" for i, j in edges)


def read_edges(path) -> list[Edge]:
    return parse_edges(Path(path).read_text())


def write_edges(path, edges: Iterable[Sequence[int]]) -> None:
    Path(path).write_text(format_edges(edges))


# -- trajectory CSV ------------------------------------------------------------

def _num(v: float) -> str:
    return format(float(v), ".17g")


def format_trajectory(traj: Trajectory) -> str:
    """One row per recorded state; the edge columns hold the edge that produced it."""
    buf = _io.StringIO()
    n = traj.states.shape[1]
    buf.write(",".join(["t", "edge_i", "edge_j"] + [f"x_{k}" for k in range(n)]) + "\n")
    log = traj.edge_log
    for t, row in zip(traj.times, traj.states):
        if t == 0:
            ei = ej = ""
        else:
            ei, ej = (str(int(v)) for v in log[t - 1])
        buf.write(",".join([str(int(t)), ei, ej] + [_num(v) for v in row]) + "\n")
    return buf.getvalue()


def write_trajectory(path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_trajectory(traj))


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray, list[Edge | None]]:
    """Return ``(times, states, edges)``; ``edges[r]`` is None for the t=0 row."""
    times, states, edges = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:3] != ["t", "edge_i", "edge_j"]:
            raise ParseError(f"{path}: not a trajectory CSV")
        for row in reader:
            try:
                times.append(int(row[0]))
                edges.append(None if row[1] == "" else (int(row[1]), int(row[2])))
                states.append([float(v) for v in row[3:]])
            except (ValueError, IndexError):
                raise ParseError(f"{path}: malformed row {row!r}") from None
    return np.asarray(times, dtype=np.int64), np.asarray(states, dtype=np.float64), edges


# -- configs and summaries -----------------------------------------------------

def parse_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(data)


def dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_config(path, config: ExperimentConfig) -> None:
    Path(path).write_text(dump_json(config.to_dict()))


def write_summary(json_path, csv_path, summary: ExperimentSummary) -> None:
    Path(json_path).write_text(dump_json(summary.to_dict()))
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIAL_FIELDS)
        for t in summary.trials:
            row = []
            for name in TRIAL_FIELDS:
                v = getattr(t, name)
                row.append("" if v is None else _num(v) if isinstance(v, float) else str(v))
            writer.writerow(row)
