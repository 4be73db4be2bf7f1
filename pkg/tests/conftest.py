import random

import pytest

from hypograph.graph import EdgeLabel, LabeledGraph, NodeLabel

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_graph(
    rng: random.Random,
    n: int,
    labels=("C", "N", "O"),
    kinds=("single", "double"),
    extra: float = 0.15,
    connected: bool = True,
    graph_id: str = "g",
) -> LabeledGraph:
    nodes = [NodeLabel(rng.choice(labels)) for _ in range(n)]
    edges = {}
    if connected:
        for v in range(1, n):
            edges[(rng.randrange(v), v)] = rng.choice(kinds)
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra:
                edges[(u, v)] = rng.choice(kinds)
    return LabeledGraph(graph_id, tuple(nodes), tuple((u, v, EdgeLabel(k)) for (u, v), k in sorted(edges.items())))


def random_permutation(rng: random.Random, n: int) -> list[int]:
    perm = list(range(n))
    rng.shuffle(perm)
    return perm


def path(*tokens, kind="single", graph_id="p") -> LabeledGraph:
    nodes = tuple(NodeLabel(t) for t in tokens)
    edges = tuple((i, i + 1, EdgeLabel(kind)) for i in range(len(tokens) - 1))
    return LabeledGraph(graph_id, nodes, edges)


def cycle(*tokens, kind="single", graph_id="c") -> LabeledGraph:
    n = len(tokens)
    nodes = tuple(NodeLabel(t) for t in tokens)
    edges = tuple((i, (i + 1) % n, EdgeLabel(kind)) for i in range(n))
    return LabeledGraph(graph_id, nodes, edges)


def to_networkx(g):
    import networkx as nx

    h = nx.Graph()
    for i, nl in enumerate(g.nodes):
        h.add_node(i, token=nl.token)
    for u, v, e in g.edges:
        h.add_edge(u, v, kind=e.kind)
    return h


@pytest.fixture
def rng():
    return random.Random(12345)
