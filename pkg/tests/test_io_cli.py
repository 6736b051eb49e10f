import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boomerang import io
from boomerang.cli import main
from boomerang.errors import ParseError, SchemaViolation
from boomerang.experiments import build_setup, preset, simulate_trial
from boomerang.graph import build_signed_graph


@st.composite
def signed_graphs(draw):
    n = draw(st.integers(1, 8))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return build_signed_graph(n, [(i, j, draw(st.sampled_from([1, -1]))) for i, j in chosen])


@given(signed_graphs())
def test_graph_round_trip(g):
    text = io.format_graph(g)
    again = io.parse_graph(text)
    assert again == g
    assert io.format_graph(again) == text


def test_graph_format_and_errors():
    g = build_signed_graph(3, [(2, 0, -1), (0, 1, 1)])
    assert io.format_graph(g, ["demo"]) == "# demo\nn 3\n0 1 +1\n0 2 -1\n"
    assert io.parse_graph("# c\nn 3\n0 1 +1  # friends\n\n0 2 -1\n") == g
    for bad in ("", "x 3\n", "n 3\n0 1\n", "n 3\n0 1 2\n", "n 3\n0 5 1\n", "n 3\na b 1\n"):
        with pytest.raises(ParseError):
            io.parse_graph(bad)


def test_edge_and_config_parsing(tmp_path):
    assert io.parse_edges("0 1\n# skip\n2 3\n") == [(0, 1), (2, 3)]
    with pytest.raises(ParseError):
        io.parse_edges("0 1 2\n")
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        io.parse_config(p)
    p.write_text(json.dumps({"faction_sizes": [5, 7], "horizon": 10, "extra": 1}))
    with pytest.raises(SchemaViolation):
        io.parse_config(p)
    io.write_config(p, preset("fig1"))
    assert io.parse_config(p).faction_sizes == [5, 7]


def test_trajectory_csv_round_trip(tmp_path):
    cfg = preset("fig1", horizon=50, seed=5)
    traj, _ = simulate_trial(cfg, build_setup(cfg))
    io.write_trajectory(tmp_path / "t.csv", traj)
    times, states, edges = io.read_trajectory_csv(tmp_path / "t.csv")
    assert np.array_equal(times, traj.times)
    assert np.array_equal(states, traj.states)  # 17 significant digits round-trip exactly
    assert edges[0] is None
    assert [list(e) for e in edges[1:]] == traj.edge_log.tolist()


# -- CLI -----------------------------------------------------------------------

@pytest.fixture
def files(tmp_path):
    g = build_setup(preset("fig1")).graph
    io.write_graph(tmp_path / "fig1.graph", g)
    io.write_config(tmp_path / "fig1.json", preset("fig1", horizon=3000, trials=4, seed=7))
    (tmp_path / "neg.graph").write_text("n 3\n0 1 -1\n0 2 -1\n1 2 -1\n")
    (tmp_path / "bad.graph").write_text("n 3\n0 1 +1\n1 2 +1\n0 2 -1\n")
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def test_check_balance_exit_codes(files, capsys):
    assert run("check-balance", "--graph", files / "fig1.graph") == 0
    assert "k=2 structural balance" in capsys.readouterr().out
    assert run("check-balance", "--graph", files / "neg.graph") == 0
    assert "k=3 clustering balance" in capsys.readouterr().out
    assert run("check-balance", "--graph", files / "bad.graph") == 1
    assert "violating edge: 0 2" in capsys.readouterr().out
    assert run("check-balance", "--graph", files / "missing.graph") == 2
    (files / "junk.graph").write_text("n two\n")
    assert run("check-balance", "--graph", files / "junk.graph") == 2


def test_simulate_is_byte_identical(files):
    for name in ("a", "b"):
        assert run("simulate", "--config", files / "fig1.json", "--out", files / f"{name}.csv",
                   "--report", files / f"{name}.json") == 0
    assert (files / "a.csv").read_bytes() == (files / "b.csv").read_bytes()
    assert (files / "a.json").read_bytes() == (files / "b.json").read_bytes()
    report = json.loads((files / "a.json").read_text())
    assert report["schema_version"] == 1 and report["verdict"] == "polarized"


def test_seed_flag_and_env(files, monkeypatch):
    assert run("simulate", "--graph", files / "fig1.graph", "--horizon", 10, "--out", files / "x.csv") == 2
    monkeypatch.setenv("BOOMERANG_SEED", "11")
    assert run("simulate", "--graph", files / "fig1.graph", "--horizon", 10, "--out", files / "env.csv") == 0
    monkeypatch.delenv("BOOMERANG_SEED")
    assert run("simulate", "--graph", files / "fig1.graph", "--horizon", 10, "--seed", 11,
               "--out", files / "flag.csv") == 0
    assert (files / "env.csv").read_bytes() == (files / "flag.csv").read_bytes()


def test_replay_reproduces_simulate(files):
    assert run("simulate", "--config", files / "fig1.json", "--out", files / "sim.csv",
               "--edges-out", files / "sim.edges") == 0
    _, sim_states, _ = io.read_trajectory_csv(files / "sim.csv")
    assert run("replay", "--graph", files / "fig1.graph", "--trajectory", files / "sim.csv",
               "--out", files / "rep1.csv") == 0
    x0 = ",".join(io._num(v) for v in sim_states[0])
    assert run("replay", "--graph", files / "fig1.graph", "--x0", x0, "--edges", files / "sim.edges",
               "--out", files / "rep2.csv") == 0
    for name in ("rep1.csv", "rep2.csv"):
        _, states, _ = io.read_trajectory_csv(files / name)
        assert np.array_equal(states[-1], sim_states[-1])
    assert (files / "rep1.csv").read_bytes() == (files / "sim.csv").read_bytes()


def test_montecarlo_outputs(files):
    for name in ("m1", "m2"):
        assert run("montecarlo", "--config", files / "fig1.json", "--out", files / f"{name}.json") == 0
    assert (files / "m1.json").read_bytes() == (files / "m2.json").read_bytes()
    assert (files / "m1.csv").read_bytes() == (files / "m2.csv").read_bytes()
    summary = json.loads((files / "m1.json").read_text())
    assert summary["aggregate"]["n_trials"] == 4
    assert len((files / "m1.csv").read_text().splitlines()) == 5


def test_perturb_and_proximity(files):
    for name in ("p1", "p2"):
        assert run("perturb", "--graph", files / "fig1.graph", "--flip", 3, "--seed", 1,
                   "--out", files / f"{name}.graph") == 0
    assert (files / "p1.graph").read_bytes() == (files / "p2.graph").read_bytes()
    flipped = io.read_graph(files / "p1.graph")
    orig = io.read_graph(files / "fig1.graph")
    assert sum(a != b for a, b in zip(flipped.edges, orig.edges)) == 3

    assert run("proximity", "--graph", files / "fig1.graph", "--pair", 0, 7, "--out", files / "s.txt") == 0
    assert len(io.read_edges(files / "s.txt")) > 0
    assert run("proximity", "--graph", files / "neg.graph", "--pair", 0, 1, "--out", files / "n.txt") == 1
    assert not (files / "n.txt").exists()
    assert run("proximity", "--graph", files / "fig1.graph", "--pair", 0, 40, "--out", files / "o.txt") == 2


def test_inputs_not_mutated(files):
    before = {p.name: p.read_bytes() for p in files.iterdir()}
    run("check-balance", "--graph", files / "fig1.graph")
    run("simulate", "--config", files / "fig1.json", "--out", files / "o1.csv")
    run("montecarlo", "--config", files / "fig1.json", "--out", files / "o2.json")
    run("perturb", "--graph", files / "fig1.graph", "--flip", 2, "--seed", 3, "--out", files / "o3.graph")
    run("proximity", "--graph", files / "fig1.graph", "--pair", 1, 2, "--out", files / "o4.txt")
    run("replay", "--graph", files / "fig1.graph", "--trajectory", files / "o1.csv", "--out", files / "o5.csv")
    for name, data in before.items():
        assert (files / name).read_bytes() == data
