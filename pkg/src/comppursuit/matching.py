"""Maximum-weight matching on graphs with self-loops.

The pairing step selects a set of transmitters: a pair edge (i1, i2)
stands for two APs cooperating, a self-loop (i, i) for an AP working
alone.  Feasibility means no physical AP is used twice.  Self-loops make
this a nonstandard matching; cloning each looped vertex and turning the
loop into a plain edge reduces it to classical maximum-weight matching,
solved exactly with the blossom algorithm (networkx).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import networkx as nx


@dataclass(frozen=True)
class PairingGraph:
    """Vertices 0..vertex_count-1; edges (i1, i2, weight) with i1 <= i2.

    i1 == i2 encodes a self-loop.  Weights may have any sign; duplicate
    edges are rejected.
    """

    vertex_count: int
    edges: tuple

    def __init__(self, vertex_count: int, edges):
        canon = []
        seen = set()
        for i1, i2, w in edges:
            a, b = (int(i1), int(i2)) if i1 <= i2 else (int(i2), int(i1))
            if not (0 <= a <= b < vertex_count):
                raise ValueError(f"edge ({i1}, {i2}) outside vertex range")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
            canon.append((a, b, float(w)))
        object.__setattr__(self, "vertex_count", int(vertex_count))
        object.__setattr__(self, "edges", tuple(sorted(canon)))


def selection_weight(graph: PairingGraph, selection) -> float:
    lookup = {(a, b): w for a, b, w in graph.edges}
    return sum(lookup[e] for e in selection)


def _is_feasible(selection) -> bool:
    used = set()
    for a, b in selection:
        verts = {a} if a == b else {a, b}
        if used & verts:
            return False
        used |= verts
    return True


def max_weight_selection(graph: PairingGraph) -> list[tuple[int, int]]:
    """Max-total-weight feasible edge subset; never picks weight <= 0.

    A self-loop covers its vertex once.  The empty selection (weight 0)
    is always feasible, so only strictly positive edges can help.
    Returns edges as sorted (i1, i2) pairs in lexicographic order.
    """
    n = graph.vertex_count
    positive = [(a, b, w) for a, b, w in graph.edges if w > 0]
    if not positive:
        return []
    g = nx.Graph()
    for a, b, w in positive:
        if a == b:
            g.add_edge(a, n + a, weight=w)  # clone vertex carries the loop
        else:
            g.add_edge(a, b, weight=w)
    mate = nx.max_weight_matching(g, maxcardinality=False)
    out = []
    for x, y in mate:
        x, y = (x, y) if x < y else (y, x)
        if y >= n:
            out.append((y - n, y - n))
        else:
            out.append((x, y))
    return sorted(out)


def brute_force_selection(graph: PairingGraph, max_edges: int = 20) -> list[tuple[int, int]]:
    """Exhaustive oracle over all feasible subsets (small graphs only).

    Ties between equal-weight optima resolve to the lexicographically
    smallest edge list.
    """
    if len(graph.edges) > max_edges:
        raise ValueError(f"too many edges for brute force ({len(graph.edges)} > {max_edges})")
    edges = [(a, b) for a, b, w in graph.edges if w > 0]
    weights = {(a, b): w for a, b, w in graph.edges}
    best: list[tuple[int, int]] = []
    best_w = 0.0
    for size in range(1, len(edges) + 1):
        for combo in combinations(edges, size):
            if not _is_feasible(combo):
                continue
            w = sum(weights[e] for e in combo)
            cand = sorted(combo)
            if w > best_w + 0.0 or (w == best_w and best and cand < best):
                best, best_w = cand, w
    return best
