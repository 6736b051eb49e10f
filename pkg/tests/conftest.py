import numpy as np
import pytest

from boomerang.graph import build_signed_graph, classify_arrangement


def random_two_arrangement(rng: np.random.Generator, n_max: int = 12):
    """Random connected graph whose positive part has exactly two components."""
    while True:
        n = int(rng.integers(3, n_max + 1))
        lab = rng.integers(0, 2, n)
        if len(set(lab.tolist())) < 2:
            continue
        edges = {}
        for f in (0, 1):
            vs = [int(v) for v in np.flatnonzero(lab == f)]
            rng.shuffle(vs)
            for k in range(1, len(vs)):
                parent = vs[int(rng.integers(0, k))]
                edges[tuple(sorted((vs[k], parent)))] = 1
        density = rng.uniform(0.1, 0.6)
        for i in range(n):
            for j in range(i + 1, n):
                if (i, j) not in edges and rng.random() < density:
                    edges[(i, j)] = 1 if lab[i] == lab[j] else -1
        g = build_signed_graph(n, [(i, j, s) for (i, j), s in edges.items()])
        rep = classify_arrangement(g)
        if rep.satisfies_arrangement and rep.k == 2:
            return g


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def brute_force_balance(g):
    """Search every vertex partition for one with + inside and - across groups."""
    for part in set_partitions(list(range(g.n))):
        label = {v: b for b, block in enumerate(part) for v in block}
        if all((label[i] == label[j]) == (s > 0) for i, j, s in g.edges):
            return "structural" if len(part) <= 2 else "clustering", len(part)
    return None, None


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request, capsys):
    """Record one ``[PASS]``/``[FAIL]`` line per criterion and print it immediately."""

    def record(number: int, name: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} ({detail})"
        request.config.stash.setdefault(_ACCEPTANCE, []).append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
