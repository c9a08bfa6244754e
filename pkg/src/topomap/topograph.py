"""Cluster graph of a map: centroid distances pruned at the longest MST edge."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import quoteattr

import numpy as np

from .datamodel import atomic_write_text


@dataclass(frozen=True)
class TopoGraph:
    nodes: tuple  # (cluster id, size, kill_strength)
    edges: tuple  # (a, b, weight) with a < b, sorted
    mst: tuple
    pruned: bool = True

    @property
    def max_mst_weight(self) -> float:
        return max((w for _, _, w in self.mst), default=0.0)


def complete_edges(centroids):
    C = np.asarray(centroids, dtype=np.float64)
    k = len(C)
    return [(a, b, float(np.sqrt(np.sum((C[a] - C[b]) ** 2))))
            for a in range(k) for b in range(a + 1, k)]


def kruskal(k, edges):
    """Minimum spanning tree; ties broken by (weight, min id, max id)."""
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for a, b, w in sorted(edges, key=lambda e: (e[2], min(e[0], e[1]), max(e[0], e[1]))):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.append((a, b, w))
            if len(tree) == k - 1:
                break
    return tree


def build_topograph(centroids, sizes=None, strengths=None) -> TopoGraph:
    """Complete centroid graph with every edge heavier than the longest MST edge removed.

    ``centroids`` may also be a ClusterModel, in which case node sizes default
    to its assignment counts.
    """
    if hasattr(centroids, "centroids"):
        model = centroids
        centroids = model.centroids
        if sizes is None:
            sizes = np.bincount(model.assignments, minlength=model.k)
    C = np.asarray(centroids, dtype=np.float64)
    k = len(C)
    if k < 1:
        raise ValueError("graph needs at least one cluster")
    sizes = np.zeros(k, dtype=np.int64) if sizes is None else np.asarray(sizes)
    strengths = strengths or {}
    nodes = tuple((i, int(sizes[i]), float(strengths.get(i, 0.0))) for i in range(k))
    edges = complete_edges(C)
    mst = kruskal(k, edges)
    cut = max((w for _, _, w in mst), default=0.0)
    kept = tuple(e for e in edges if e[2] <= cut)
    return TopoGraph(nodes, kept, tuple(sorted(mst)))


def to_dot(g: TopoGraph) -> str:
    lines = ["graph topomap {"]
    for cid, size, strength in g.nodes:
        lines.append(f'  {cid} [size={size}, kill_strength="{strength!r}"];')
    for a, b, w in g.edges:
        lines.append(f'  {a} -- {b} [weight="{w!r}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_gexf(g: TopoGraph) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://gexf.net/1.3" version="1.3">',
        '  <graph mode="static" defaultedgetype="undirected">',
        '    <attributes class="node">',
        '      <attribute id="0" title="size" type="integer"/>',
        '      <attribute id="1" title="kill_strength" type="double"/>',
        "    </attributes>",
        "    <nodes>",
    ]
    for cid, size, strength in g.nodes:
        out.append(f"      <node id={quoteattr(str(cid))} label={quoteattr(str(cid))}>")
        out.append("        <attvalues>")
        out.append(f'          <attvalue for="0" value="{size}"/>')
        out.append(f'          <attvalue for="1" value="{strength!r}"/>')
        out.append("        </attvalues>")
        out.append("      </node>")
    out.append("    </nodes>")
    out.append("    <edges>")
    for i, (a, b, w) in enumerate(g.edges):
        out.append(f'      <edge id="{i}" source="{a}" target="{b}" weight="{w!r}"/>')
    out += ["    </edges>", "  </graph>", "</gexf>"]
    return "\n".join(out) + "\n"


def export_graph(g: TopoGraph, fmt: str, path) -> Path:
    if fmt == "dot":
        text = to_dot(g)
    elif fmt == "gexf":
        text = to_gexf(g)
    else:
        raise ValueError(f"unknown graph format {fmt!r}")
    path = Path(path)
    try:
        atomic_write_text(path, text)
    except OSError as exc:
        raise OSError(f"cannot write graph to {path}: {exc}") from exc
    return path
