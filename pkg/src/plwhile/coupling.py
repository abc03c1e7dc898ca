"""Existence of a coupling supported inside a relation, decided by max-flow."""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from math import lcm
from typing import Callable

from .dist import Dist

__all__ = ["coupling", "lift_check", "max_flow"]


def max_flow(n: int, edges: list[tuple[int, int, int]], s: int, t: int) -> tuple[int, dict]:
    """Edmonds-Karp on ``n`` vertices; returns the value and the flow on each input edge."""
    graph: list[list[int]] = [[] for _ in range(n)]
    to: list[int] = []
    cap: list[int] = []
    for u, v, c in edges:
        graph[u].append(len(to))
        to.append(v)
        cap.append(c)
        graph[v].append(len(to))
        to.append(u)
        cap.append(0)
    total = 0
    while True:
        parent = [-1] * n
        parent[s] = -2
        queue = deque([s])
        while queue and parent[t] == -1:
            u = queue.popleft()
            for eid in graph[u]:
                v = to[eid]
                if cap[eid] > 0 and parent[v] == -1:
                    parent[v] = eid
                    queue.append(v)
        if parent[t] == -1:
            break
        push = None
        v = t
        while v != s:
            eid = parent[v]
            push = cap[eid] if push is None else min(push, cap[eid])
            v = to[eid ^ 1]
        v = t
        while v != s:
            eid = parent[v]
            cap[eid] -= push
            cap[eid ^ 1] += push
            v = to[eid ^ 1]
        total += push
    flows = {i: cap[2 * i + 1] for i in range(len(edges))}
    return total, flows


def coupling(rel: Callable[[object, object], bool], d1: Dist, d2: Dist) -> Dist | None:
    """A joint distribution with marginals ``d1``/``d2`` supported in ``rel``, or ``None``."""
    if d1.mass() != d2.mass():
        return None
    a, b = d1.items(), d2.items()
    if not a:
        return Dist()
    scale = lcm(*(p.denominator for _, p in a + b))
    n1, n2 = len(a), len(b)
    s, t = n1 + n2, n1 + n2 + 1
    edges = [(s, i, int(p * scale)) for i, (_, p) in enumerate(a)]
    edges += [(n1 + j, t, int(q * scale)) for j, (_, q) in enumerate(b)]
    pair_edges = []
    big = int(d1.mass() * scale)
    for i, (x, _) in enumerate(a):
        for j, (y, _) in enumerate(b):
            if rel(x, y):
                pair_edges.append((len(edges), x, y))
                edges.append((i, n1 + j, big))
    value, flows = max_flow(n1 + n2 + 2, edges, s, t)
    if value != big:
        return None
    return Dist({(x, y): Fraction(flows[k], scale) for k, x, y in pair_edges if flows[k]})


def lift_check(rel: Callable[[object, object], bool], d1: Dist, d2: Dist) -> bool:
    """True iff ``rel`` lifts to ``(d1, d2)``: equal masses and a coupling inside ``rel``."""
    return coupling(rel, d1, d2) is not None
