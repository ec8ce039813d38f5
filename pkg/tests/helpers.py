"""Shared test utilities.

Independent oracles (implemented differently from the library on purpose)
and random-graph generators used by both the unit tests and the
acceptance suite.
"""

from __future__ import annotations

import random
import re

from chaingraph import ChainGraph, Edge, NodeAttr

# ---------------------------------------------------------------------------
# rendered-factorization comparison


_TERM_RE = re.compile(r"(?P<name>p|delta|f_\d+)\((?P<args>[^()]*)\)\Z")


def term_key(token: str) -> tuple:
    """Canonical key for one rendered term, insensitive to f-label numbering
    and to the order of names inside a head or conditioning list."""
    if token == "Z^-1":
        return ("Z", (), ())
    m = _TERM_RE.match(token)
    if m is None:
        raise ValueError(f"not a factor term: {token!r}")
    args = m.group("args")
    head, _, given = args.partition("|")
    kind = "f" if m.group("name").startswith("f_") else m.group("name")
    heads = tuple(sorted(x for x in head.split(",") if x))
    givens = tuple(sorted(x for x in given.split(",") if x))
    return (kind, heads, givens)


def term_multiset(rendered: str) -> list[tuple]:
    """Sorted term keys of a flat (plate-free, ratio-free) factorization."""
    return sorted(term_key(tok) for tok in rendered.split())


# ---------------------------------------------------------------------------
# brute-force semi-directed-cycle oracle


def has_semi_directed_cycle(nodes, edges) -> bool:
    """Cycle search that never looks at quotient graphs: a semi-directed
    cycle exists iff some arc u->v admits a semi-directed path v ~> u.

    ``edges`` is an iterable of ``(u, v, directed)`` triples.
    """
    adj: dict[str, set[str]] = {n: set() for n in nodes}
    arcs: list[tuple[str, str]] = []
    for u, v, is_arc in edges:
        adj[u].add(v)
        if is_arc:
            arcs.append((u, v))
        else:
            adj[v].add(u)
    for u, v in arcs:
        seen = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if u in seen:
            return True
    return False


def is_closed_semi_directed_walk(g: ChainGraph, nodes) -> bool:
    """True iff ``nodes`` (in order, wrapping around) is a cycle in ``g``
    whose directed hops all point forward, with at least one directed hop."""
    if len(nodes) < 2:
        return False
    arcs = 0
    for i, u in enumerate(nodes):
        v = nodes[(i + 1) % len(nodes)]
        if v in g.children(u):
            arcs += 1
        elif v not in g.neighbors(u):
            return False
    return arcs >= 1


# ---------------------------------------------------------------------------
# path-based d-separation (directed graphs only)
#
# The library answers queries by moralizing an ancestral subgraph; this is
# the classic active-trail reachability instead, so the two can check each
# other on random DAGs.


def d_connected(g: ChainGraph, a_set, b_set, s_set) -> bool:
    a_set, b_set, s_set = set(a_set), set(b_set), set(s_set)
    anc = set(s_set)
    stack = list(s_set)
    while stack:
        for p in g.parents(stack.pop()):
            if p not in anc:
                anc.add(p)
                stack.append(p)

    visited: set[tuple[str, str]] = set()
    frontier = [(x, "up") for x in a_set]
    while frontier:
        state = frontier.pop()
        if state in visited:
            continue
        visited.add(state)
        x, direction = state
        if x in b_set and x not in s_set:
            return True
        if direction == "up":
            if x in s_set:
                continue
            for p in g.parents(x):
                frontier.append((p, "up"))
            for c in g.children(x):
                frontier.append((c, "down"))
        else:  # arrived from a parent
            if x not in s_set:
                for c in g.children(x):
                    frontier.append((c, "down"))
            if x in anc:  # collider (or its descendant) activated by S
                for p in g.parents(x):
                    frontier.append((p, "up"))
    return False


# ---------------------------------------------------------------------------
# random graph generators


def random_dag(rng: random.Random, n: int, p: float = 0.4, obs_p: float = 0.0) -> ChainGraph:
    """Random DAG; the declaration order doubles as a topological order."""
    names = [f"n{i}" for i in range(n)]
    attrs = {x: NodeAttr(observed=rng.random() < obs_p) for x in names}
    edges = [
        Edge(names[i], names[j], True)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return ChainGraph(attrs, edges)


def random_undirected(rng: random.Random, n: int, p: float = 0.45, obs_p: float = 0.5) -> ChainGraph:
    names = [f"n{i}" for i in range(n)]
    attrs = {x: NodeAttr(observed=rng.random() < obs_p) for x in names}
    edges = [
        Edge(names[i], names[j], False)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return ChainGraph(attrs, edges)


def random_chain_graph(rng: random.Random, n: int, p: float = 0.4) -> ChainGraph:
    """Valid-by-construction chain graph: partition the nodes into ordered
    blocks, wire undirected edges within blocks and arcs forward only."""
    names = [f"n{i}" for i in range(n)]
    block_of: dict[str, int] = {}
    next_block = 0
    for x in names:
        block_of[x] = next_block
        if rng.random() < 0.5:
            next_block += 1
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() >= p:
                continue
            u, v = names[i], names[j]
            if block_of[u] == block_of[v]:
                edges.append(Edge(u, v, False))
            else:
                edges.append(Edge(u, v, True))
    return ChainGraph(names, edges)


def random_mixed(rng: random.Random, n: int, p: float = 0.4) -> ChainGraph:
    """Arbitrary mixed graph; may or may not contain semi-directed cycles."""
    names = [f"n{i}" for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() >= p:
                continue
            u, v = names[i], names[j]
            roll = rng.random()
            if roll < 1 / 3:
                edges.append(Edge(u, v, False))
            elif roll < 2 / 3:
                edges.append(Edge(u, v, True))
            else:
                edges.append(Edge(v, u, True))
    return ChainGraph(names, edges)


# ---------------------------------------------------------------------------
# graph comparison


def edge_signature(g: ChainGraph) -> set[tuple]:
    return {(e.u, e.v, "->") if e.directed else (e.u, e.v, "--") for e in g.edges}


def same_graph(g1: ChainGraph, g2: ChainGraph, check_attrs: bool = True) -> bool:
    """Equality up to node/edge order (names must match exactly)."""
    if set(g1.node_names) != set(g2.node_names):
        return False
    if edge_signature(g1) != edge_signature(g2):
        return False
    if check_attrs and g1.attrs() != g2.attrs():
        return False
    return True
