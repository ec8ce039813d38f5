"""Graphviz export.

Drawing conventions: undirected edges are drawn with ``dir=none``, observed
nodes are filled, deterministic nodes get doubled peripheries, and each
plate becomes a cluster labeled with its cardinality symbol.
"""

from __future__ import annotations

from typing import Union

from .core import ChainGraph
from .plates import PlateModel


def _q(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node_stmt(g: ChainGraph, name: str) -> str:
    a = g.attr(name)
    opts: list[str] = []
    if a.observed:
        opts.append("style=filled")
        opts.append("fillcolor=lightgrey")
    if a.deterministic:
        opts.append("peripheries=2")
    suffix = f" [{', '.join(opts)}]" if opts else ""
    return f"{_q(name)}{suffix};"


def to_dot(m: Union[PlateModel, ChainGraph]) -> str:
    """DOT text for a graph or plate model; deterministic for a given input."""
    if isinstance(m, ChainGraph):
        m = PlateModel(m, (), name="G")
    g = m.graph

    lines: list[str] = [f"digraph {_q(m.name)} {{", "    node [shape=ellipse];"]

    # innermost plate wins when clusters nest
    cluster_of: dict[str, str] = {}
    for v in g.node_names:
        chain = m.membership(v)
        if chain:
            cluster_of[v] = chain[-1].name

    children: dict[str | None, list[str]] = {}
    for p in m.plates:
        children.setdefault(p.parent, []).append(p.name)

    def emit_plate(name: str, indent: int) -> None:
        pad = "    " * indent
        p = m.plate(name)
        lines.append(f"{pad}subgraph {_q('cluster_' + name)} {{")
        lines.append(f'{pad}    label="{p.symbol}";')
        lines.append(f"{pad}    labelloc=b;")
        for v in g.node_names:
            if cluster_of.get(v) == name:
                lines.append(f"{pad}    {_node_stmt(g, v)}")
        for child in children.get(name, []):
            emit_plate(child, indent + 1)
        lines.append(f"{pad}}}")

    for root in children.get(None, []):
        emit_plate(root, 1)
    for v in g.node_names:
        if v not in cluster_of:
            lines.append(f"    {_node_stmt(g, v)}")

    for e in g.edges:
        attr = "" if e.directed else " [dir=none]"
        lines.append(f"    {_q(e.u)} -> {_q(e.v)}{attr};")

    lines.append("}")
    return "\n".join(lines) + "\n"
