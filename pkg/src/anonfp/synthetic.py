"""Small named graphs and a synthetic two-class molecule-like dataset."""
from __future__ import annotations

import numpy as np

from .graphs import GraphSet, MolecularGraph


def complete_graph(n: int, graph_id: int = 0, label: int = 0) -> MolecularGraph:
    return MolecularGraph(graph_id, n, tuple((i, j) for i in range(n) for j in range(i + 1, n)), label)


def cycle_graph(n: int, graph_id: int = 0, label: int = 0) -> MolecularGraph:
    return MolecularGraph(graph_id, n, tuple((i, (i + 1) % n) for i in range(n)), label)


def path_graph(n: int, graph_id: int = 0, label: int = 0) -> MolecularGraph:
    return MolecularGraph(graph_id, n, tuple((i, i + 1) for i in range(n - 1)), label)


def star_graph(leaves: int, graph_id: int = 0, label: int = 0) -> MolecularGraph:
    """Node 0 is the center."""
    return MolecularGraph(graph_id, leaves + 1, tuple((0, i) for i in range(1, leaves + 1)), label)


def relabel(g: MolecularGraph, perm) -> MolecularGraph:
    """Apply the node bijection ``v -> perm[v]``."""
    perm = list(perm)
    return MolecularGraph(g.graph_id, g.n_nodes, tuple((perm[u], perm[v]) for u, v in g.edges),
                          g.label)


def ring_molecule(ring_size: int, n_rings: int, tail: int, rng: np.random.Generator,
                  graph_id: int = 0, label: int = 0) -> MolecularGraph:
    """Chain of ``n_rings`` rings, each fused to the previous by one bond,
    decorated with ``tail`` pendant atoms attached at random positions."""
    edges = []
    n = 0
    prev_attach = None
    for _ in range(n_rings):
        ring = list(range(n, n + ring_size))
        edges += [(ring[i], ring[(i + 1) % ring_size]) for i in range(ring_size)]
        if prev_attach is not None:
            edges.append((prev_attach, ring[0]))
        prev_attach = ring[ring_size // 2]
        n += ring_size
    for _ in range(tail):
        edges.append((int(rng.integers(0, n)), n))
        n += 1
    return MolecularGraph(graph_id, n, tuple(edges), label)


def ring_dataset(n_graphs: int = 60, seed: int = 0, name: str = "RINGS") -> GraphSet:
    """Class 1 molecules are built from 5-rings, class 0 from 6-rings; sizes overlap."""
    rng = np.random.default_rng(seed)
    graphs = []
    for gid in range(n_graphs):
        label = gid % 2
        ring = 5 if label else 6
        graphs.append(ring_molecule(ring, int(rng.integers(1, 4)), int(rng.integers(0, 6)), rng,
                                    graph_id=gid, label=label))
    return GraphSet(tuple(graphs), name=name)
