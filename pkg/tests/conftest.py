"""Shared fixtures: the 15-node reference scenario and random graph families."""

import os
from random import Random

import pytest


@pytest.fixture(autouse=True)
def serial_runs(monkeypatch):
    # Keep CLI-driven batches in-process; parallelism is exercised manually.
    monkeypatch.setenv("ABP_SIM_THREADS", "1")

# 15-node scenario used across election tests: degrees, batteries and the
# expected competence scores (weights 0.4/0.6, penalty 1), plus an adjacency
# consistent with the degree column whose election outcome is heads {1, 10, 14}.
TABLE1_DEGREE = {
    1: 6, 2: 4, 3: 4, 4: 3, 5: 2, 6: 5, 7: 5, 8: 5,
    9: 5, 10: 5, 11: 2, 12: 5, 13: 3, 14: 2, 15: 4,
}
TABLE1_BATTERY = {
    1: 4, 2: 5, 3: 3, 4: 4, 5: 2, 6: 4, 7: 2, 8: 1,
    9: 4, 10: 5, 11: 4, 12: 2, 13: 4, 14: 7, 15: 2,
}
TABLE1_CHC = {
    1: 3.8, 2: 3.6, 3: 2.4, 4: 2.6, 5: 1.0, 6: 3.4, 7: 2.2, 8: 1.6,
    9: 3.4, 10: 4.0, 11: 2.2, 12: 2.2, 13: 2.6, 14: 4.0, 15: 1.8,
}
TABLE1_EDGES = [
    (1, 2), (1, 3), (1, 5), (1, 6), (1, 7), (1, 15),
    (10, 4), (10, 8), (10, 9), (10, 11), (10, 12),
    (14, 5), (14, 11),
    (2, 6), (2, 7), (2, 9),
    (3, 6), (3, 7), (3, 9),
    (4, 13), (4, 12),
    (6, 8), (6, 12),
    (7, 8), (7, 15),
    (8, 9), (8, 15),
    (9, 13),
    (12, 13), (12, 15),
]


def edges_to_graph(nodes, edges):
    graph = {v: set() for v in nodes}
    for a, b in edges:
        graph[a].add(b)
        graph[b].add(a)
    return graph


@pytest.fixture(scope="session")
def table1_graph():
    graph = edges_to_graph(TABLE1_DEGREE, TABLE1_EDGES)
    # The fixture is only valid if it matches the published degree column.
    assert {v: len(graph[v]) for v in graph} == TABLE1_DEGREE
    return graph


def random_graph(seed, max_nodes=10):
    """Erdos-Renyi style graph with seed-dependent size and density."""
    rng = Random(seed)
    n = rng.randint(2, max_nodes)
    p = rng.uniform(0.15, 0.7)
    nodes = list(range(n))
    graph = {v: set() for v in nodes}
    for i in nodes:
        for j in nodes[i + 1 :]:
            if rng.random() < p:
                graph[i].add(j)
                graph[j].add(i)
    return graph


def unit_disk_graph(seed, n=20, side=600.0, radio=150.0):
    """Random placement on a square with closed-disk adjacency."""
    rng = Random(seed)
    pos = {v: (rng.uniform(0, side), rng.uniform(0, side)) for v in range(n)}
    graph = {v: set() for v in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i][0] - pos[j][0]
            dy = pos[i][1] - pos[j][1]
            if dx * dx + dy * dy <= radio * radio:
                graph[i].add(j)
                graph[j].add(i)
    return graph
