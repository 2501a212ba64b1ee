"""Brute-force re-implementations of the baseline clustering rules.

Deliberately written from the prose rules with a different structure than
the library code, so the two can cross-check each other.
"""


def lid_oracle(graph):
    closed = {v: frozenset(graph[v]) | {v} for v in graph}
    heads = {v for v in graph if min(closed[v]) == v}
    assignment = {}
    for v in graph:
        if v in heads:
            assignment[v] = v
            continue
        audible = sorted(h for h in heads if h in graph[v])
        assignment[v] = audible[0] if audible else v
    return assignment


def hd_oracle(graph):
    degree = {v: len(graph[v]) for v in graph}
    unclustered = 255

    def winner(candidates):
        ranked = sorted(candidates, key=lambda u: (-degree[u], u))
        return ranked[0]

    heads = {v for v in graph if winner(graph[v] | {v}) == v}
    assignment = {}
    for v in graph:
        if v in heads:
            assignment[v] = v
            continue
        audible = heads & graph[v]
        assignment[v] = winner(audible) if audible else unclustered
    return assignment
