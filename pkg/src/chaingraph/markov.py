"""Separation queries on chain graphs via moralization.

`implies_ci` answers "does the graph imply A independent of B given S?" by
restricting to the ancestral closure of the query variables, moralizing
(joining every pair of nodes with children in a common chain component,
then dropping arc directions) and testing plain graph separation.  For a
purely directed graph the same procedure degenerates to classic
moralization of parents.

The module also hosts the maximal-clique enumeration used by the
factorizer, and the two conditional-model simplifications: deleting arcs
into fully-observed nodes, and deleting edges between observed nodes whose
common neighbors are all observed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .core import ChainGraph, Edge, GraphError
from .decompose import chain_components


class QueryError(ValueError):
    """Malformed conditional-independence query."""


class CliqueBoundError(RuntimeError):
    """Clique enumeration refused: graph exceeds the node bound."""


MAX_CLIQUE_NODES = 64


@dataclass(frozen=True)
class CiQuery:
    """A _||_ B | S with non-empty, pairwise disjoint A and B."""

    a: frozenset[str]
    b: frozenset[str]
    s: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.a or not self.b:
            raise QueryError("both sides of an independence query must be non-empty")
        if self.a & self.b or self.a & self.s or self.b & self.s:
            raise QueryError("query sets must be pairwise disjoint")

    def text(self, order: Iterable[str] | None = None) -> str:
        def fmt(ns: frozenset[str]) -> str:
            if order is not None:
                idx = {n: i for i, n in enumerate(order)}
                return ",".join(sorted(ns, key=lambda n: idx.get(n, len(idx))))
            return ",".join(sorted(ns))

        out = f"{fmt(self.a)} _||_ {fmt(self.b)}"
        if self.s:
            out += f" | {fmt(self.s)}"
        return out


_QUERY_RE = re.compile(r"^(?P<a>[^|]+?)_\|\|_(?P<b>[^|]+?)(?:\|(?P<s>.*))?$")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def parse_ci_query(text: str) -> CiQuery:
    """Parse ``A _||_ B | S`` with comma-separated node lists.

    Whitespace is insignificant; the ``| S`` part may be absent or empty.
    """
    compact = "".join(text.split())
    m = _QUERY_RE.match(compact)
    if not m:
        raise QueryError(f"cannot parse independence query: {text!r}")

    def names(part: str | None) -> frozenset[str]:
        if part is None or part == "":
            return frozenset()
        items = part.split(",")
        if any(not _NAME_RE.match(it) for it in items):
            raise QueryError(f"malformed node name in query: {text!r}")
        return frozenset(items)

    try:
        return CiQuery(names(m.group("a")), names(m.group("b")), names(m.group("s")))
    except QueryError:
        raise
    except ValueError as exc:  # pragma: no cover - defensive
        raise QueryError(str(exc)) from exc


class UndirectedGraph:
    """Plain undirected graph with the node order of its source graph."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]] = ()):
        self._nodes = tuple(nodes)
        self._index = {n: i for i, n in enumerate(self._nodes)}
        if len(self._index) != len(self._nodes):
            raise GraphError("duplicate node in undirected graph")
        self._adj: dict[str, set[str]] = {n: set() for n in self._nodes}
        for u, v in edges:
            if u not in self._adj or v not in self._adj:
                raise GraphError(f"unknown endpoint in edge ({u!r}, {v!r})")
            if u == v:
                continue
            self._adj[u].add(v)
            self._adj[v].add(u)

    @property
    def node_names(self) -> tuple[str, ...]:
        return self._nodes

    def index(self, name: str) -> int:
        if name not in self._index:
            raise GraphError(f"unknown node {name!r}")
        return self._index[name]

    def neighbors(self, x: str) -> frozenset[str]:
        if x not in self._adj:
            raise GraphError(f"unknown node {x!r}")
        return frozenset(self._adj[x])

    def has_edge(self, u: str, v: str) -> bool:
        return v in self.neighbors(u)

    def edge_pairs(self) -> list[tuple[str, str]]:
        """Edges as (u, v) with u before v canonically, sorted."""
        out = []
        for u in self._nodes:
            for v in self._adj[u]:
                if self._index[u] < self._index[v]:
                    out.append((u, v))
        out.sort(key=lambda p: (self._index[p[0]], self._index[p[1]]))
        return out

    def sorted_nodes(self, names: Iterable[str]) -> tuple[str, ...]:
        names = list(names)
        for n in names:
            self.index(n)
        return tuple(sorted(names, key=self._index.__getitem__))

    def __len__(self) -> int:
        return len(self._nodes)


def moralize_directed(g: ChainGraph) -> UndirectedGraph:
    """Marry each node's parents pairwise, then drop arc directions."""
    if not g.is_directed:
        raise GraphError("moralize_directed requires a purely directed graph")
    pairs = {(e.u, e.v) for e in g.edges}
    marriages = set()
    for x in g.node_names:
        ps = g.sorted_nodes(g.parents(x))
        for i, u in enumerate(ps):
            for v in ps[i + 1 :]:
                marriages.add((u, v))
    return UndirectedGraph(g.node_names, list(pairs) + list(marriages))


def moralize_chain(g: ChainGraph) -> UndirectedGraph:
    """Join every two nodes with children in a common chain component,
    then drop all arc directions."""
    pairs = {(e.u, e.v) for e in g.edges}
    marriages = set()
    for block in chain_components(g):
        ps = g.sorted_nodes(g.parents_of_set(block))
        for i, u in enumerate(ps):
            for v in ps[i + 1 :]:
                marriages.add((u, v))
    return UndirectedGraph(g.node_names, list(pairs) + list(marriages))


def max_cliques(ug: UndirectedGraph, node_bound: int = MAX_CLIQUE_NODES) -> list[frozenset[str]]:
    """All maximal cliques, canonically ordered.

    Bron-Kerbosch with pivoting; exponential in the worst case, so graphs
    larger than ``node_bound`` nodes are refused.
    """
    if len(ug) > node_bound:
        raise CliqueBoundError(
            f"refusing clique enumeration on {len(ug)} nodes (bound {node_bound})"
        )
    if not ug.node_names:
        return []
    adj = {n: set(ug.neighbors(n)) for n in ug.node_names}
    out: list[frozenset[str]] = []

    def expand(r: set[str], p: set[str], x: set[str]) -> None:
        if not p and not x:
            out.append(frozenset(r))
            return
        pivot = max(p | x, key=lambda u: len(adj[u] & p))
        for v in list(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v], )
            p.remove(v)
            x.add(v)

    expand(set(), set(ug.node_names), set())
    out.sort(key=lambda c: tuple(sorted(ug.index(n) for n in c)))
    return out


def separates(ug: UndirectedGraph, q: CiQuery) -> bool:
    """True iff every path from A to B passes through S."""
    for n in q.a | q.b | q.s:
        ug.index(n)
    blocked = set(q.s)
    seen = set(q.a)
    todo = list(q.a)
    while todo:
        x = todo.pop()
        for y in ug.neighbors(x):
            if y in blocked or y in seen:
                continue
            if y in q.b:
                return False
            seen.add(y)
            todo.append(y)
    return True


def implies_ci(g: ChainGraph, q: CiQuery) -> bool:
    """Does the graph imply A _||_ B | S for every distribution it admits?

    Sound for all distributions that factorize according to the graph
    (positivity needed on undirected components); not complete in general.
    """
    closure = g.ancestors_chain(q.a | q.b | q.s)
    moral = moralize_chain(g.induced(closure))
    return separates(moral, q)


def simplify_conditional_directed(g: ChainGraph) -> ChainGraph:
    """Delete arcs into every observed node whose parents are all observed.

    Applies to directed conditional models; repeated until nothing changes.
    The conditional of hidden given observed is preserved.
    """
    if not g.is_directed:
        raise GraphError("simplify_conditional_directed requires a purely directed graph")
    edges = list(g.edges)
    while True:
        drop: set[Edge] = set()
        incoming: dict[str, list[Edge]] = {}
        for e in edges:
            incoming.setdefault(e.v, []).append(e)
        for x in g.node_names:
            if not g.attr(x).observed:
                continue
            parents = {e.u for e in incoming.get(x, ())}
            if parents and all(g.attr(p).observed for p in parents):
                drop.update(incoming[x])
        if not drop:
            break
        edges = [e for e in edges if e not in drop]
    return ChainGraph(g.attrs(), edges)


def simplify_conditional_undirected(g: ChainGraph) -> ChainGraph:
    """Delete each edge between observed nodes whose common neighbors are
    all observed.

    Eligibility is judged against the original adjacency, and all deletions
    happen in one simultaneous pass.
    """
    if not g.is_undirected:
        raise GraphError("simplify_conditional_undirected requires a purely undirected graph")
    drop: set[Edge] = set()
    for e in g.edges:
        if not (g.attr(e.u).observed and g.attr(e.v).observed):
            continue
        common = g.neighbors(e.u) & g.neighbors(e.v)
        if all(g.attr(w).observed for w in common):
            drop.add(e)
    return ChainGraph(g.attrs(), [e for e in g.edges if e not in drop])
