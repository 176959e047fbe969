"""Graph data model and TU Dortmund flat-file ingestion.

A TU dataset ``NAME`` lives in one directory as::

    NAME_A.txt                 "i, j" per line, 1-indexed global node ids
    NAME_graph_indicator.txt   line k holds the graph id of global node k
    NAME_graph_labels.txt      line g holds the class of graph g
    NAME_node_labels.txt       optional, line k holds the label of node k
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class IngestionError(Exception):
    """A required dataset file is missing or unreadable."""


class FormatError(Exception):
    """A dataset file is readable but violates the TU format."""


@dataclass(frozen=True)
class MolecularGraph:
    """Undirected, unweighted simple graph with local node ids ``0..n-1``.

    ``edges`` holds each undirected edge once as ``(u, v)`` with ``u < v``.
    """

    graph_id: int
    n_nodes: int
    edges: tuple[tuple[int, int], ...]
    label: int = 0
    node_labels: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.n_nodes < 0:
            raise ValueError("n_nodes must be non-negative")
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"graph {self.graph_id}: self-loop on node {u}")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValueError(f"graph {self.graph_id}: edge ({u}, {v}) out of range")
            norm.add((min(u, v), max(u, v)))
        if len(norm) != len(self.edges):
            raise ValueError(f"graph {self.graph_id}: duplicate edges")
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        if self.node_labels is not None and len(self.node_labels) != self.n_nodes:
            raise ValueError(f"graph {self.graph_id}: node_labels length mismatch")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted adjacency in CSR form: ``(indptr, indices)``."""
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        src, dst = [], []
        for u, v in self.edges:
            src += [u, v]
            dst += [v, u]
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        order = np.lexsort((dst, src))
        np.add.at(deg, src, 1)
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        return indptr, dst[order]

    def neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.csr
        return indices[indptr[v]:indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < len(nb) and nb[k] == v)

    def degrees(self) -> np.ndarray:
        return np.diff(self.csr[0])


@dataclass(frozen=True)
class DegreeView:
    degrees: np.ndarray


@dataclass(frozen=True)
class TransitionView:
    """Row ``v`` is a list of ``(neighbor, probability)`` pairs."""

    rows: list[list[tuple[int, float]]]

    def row_sums(self) -> np.ndarray:
        return np.array([sum(p for _, p in row) for row in self.rows])


@dataclass(frozen=True)
class GraphSet:
    graphs: tuple[MolecularGraph, ...]
    name: str = ""
    class_counts: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if not self.class_counts:
            counts: dict[int, int] = {}
            for g in self.graphs:
                counts[g.label] = counts.get(g.label, 0) + 1
            object.__setattr__(self, "class_counts", dict(sorted(counts.items())))

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i) -> MolecularGraph:
        return self.graphs[i]

    @property
    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)

    @property
    def n_positive(self) -> int:
        return self.class_counts.get(1, 0)

    def check_manifest(self, n_graphs: Optional[int] = None, n_positive: Optional[int] = None):
        """Raise :class:`FormatError` if counts disagree with an expected manifest."""
        if n_graphs is not None and len(self) != n_graphs:
            raise FormatError(f"{self.name}: expected {n_graphs} graphs, found {len(self)}")
        if n_positive is not None and self.n_positive != n_positive:
            raise FormatError(
                f"{self.name}: expected {n_positive} positive graphs, found {self.n_positive}")

    def summary(self) -> dict:
        nodes = np.array([g.n_nodes for g in self.graphs], dtype=float)
        edges = np.array([g.n_edges for g in self.graphs], dtype=float)
        return {
            "dataset": self.name,
            "graphs": len(self),
            "positive": self.n_positive,
            "classes": len(self.class_counts),
            "mean_nodes": float(nodes.mean()) if len(nodes) else 0.0,
            "mean_edges": float(edges.mean()) if len(edges) else 0.0,
        }


def degree_view(g: MolecularGraph) -> DegreeView:
    return DegreeView(g.degrees())


def transition_view(g: MolecularGraph) -> TransitionView:
    rows = []
    for v in range(g.n_nodes):
        nb = g.neighbors(v)
        p = 1.0 / len(nb) if len(nb) else 0.0
        rows.append([(int(u), p) for u in nb])
    return TransitionView(rows)


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise IngestionError(f"missing file: {path}")
    try:
        text = path.read_text(encoding="ascii", errors="strict")
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    return [ln.strip() for ln in text.splitlines()]


def _parse_ints(lines: Sequence[str], path: Path, per_line: int) -> list[tuple[int, ...]]:
    out = []
    for lineno, ln in enumerate(lines, start=1):
        if not ln:
            continue
        parts = [p for p in ln.replace(",", " ").split()]
        if len(parts) != per_line:
            raise FormatError(f"{path.name}:{lineno}: expected {per_line} value(s), got {ln!r}")
        try:
            vals = tuple(int(float(p)) if per_line == 1 else int(p) for p in parts)
        except ValueError:
            raise FormatError(f"{path.name}:{lineno}: not an integer: {ln!r}") from None
        out.append(vals + (lineno,))
    return out


def parse_tu_dataset(dir_path, name: str) -> GraphSet:
    """Parse a TU Dortmund dataset into a :class:`GraphSet`.

    Global node ids are remapped to per-graph local ids in ascending global
    order. Edges listed once per direction collapse into one undirected edge.
    Graph labels are mapped to ``{0, 1}`` by ascending value.
    """
    root = Path(dir_path)
    if not root.is_dir():
        raise IngestionError(f"not a directory: {root}")
    a_path = root / f"{name}_A.txt"
    ind_path = root / f"{name}_graph_indicator.txt"
    lab_path = root / f"{name}_graph_labels.txt"
    nl_path = root / f"{name}_node_labels.txt"

    indicator = [(v, ln) for v, ln in _parse_ints(_read_lines(ind_path), ind_path, 1)]
    graph_labels = [v for v, _ in _parse_ints(_read_lines(lab_path), lab_path, 1)]
    edges_raw = _parse_ints(_read_lines(a_path), a_path, 2)
    node_labels = None
    if nl_path.is_file():
        node_labels = [v for v, _ in _parse_ints(_read_lines(nl_path), nl_path, 1)]
        if len(node_labels) != len(indicator):
            raise FormatError(
                f"{nl_path.name}: {len(node_labels)} labels for {len(indicator)} nodes")

    n_graphs = len(graph_labels)
    distinct = sorted(set(graph_labels))
    if len(distinct) > 2:
        raise FormatError(f"{lab_path.name}: expected a binary label set, got {distinct}")
    label_map = {v: i for i, v in enumerate(distinct)}

    # global node k (1-based) -> (graph index, local id)
    owner = np.empty(len(indicator), dtype=np.int64)
    local = np.empty(len(indicator), dtype=np.int64)
    sizes = [0] * n_graphs
    for k, (gid, lineno) in enumerate(indicator):
        if not 1 <= gid <= n_graphs:
            raise FormatError(f"{ind_path.name}:{lineno}: graph id {gid} outside 1..{n_graphs}")
        owner[k] = gid - 1
        local[k] = sizes[gid - 1]
        sizes[gid - 1] += 1

    n_nodes_total = len(indicator)
    per_graph: list[set] = [set() for _ in range(n_graphs)]
    n_listed = 0
    for i, j, lineno in edges_raw:
        if not (1 <= i <= n_nodes_total and 1 <= j <= n_nodes_total):
            raise FormatError(f"{a_path.name}:{lineno}: dangling node id in edge ({i}, {j})")
        gi, gj = owner[i - 1], owner[j - 1]
        if gi != gj:
            raise FormatError(
                f"{a_path.name}:{lineno}: edge ({i}, {j}) crosses graphs {gi + 1} and {gj + 1}")
        if i == j:
            raise FormatError(f"{a_path.name}:{lineno}: self-loop on node {i}")
        u, v = int(local[i - 1]), int(local[j - 1])
        per_graph[gi].add((min(u, v), max(u, v)))
        n_listed += 1
    n_unique = sum(len(s) for s in per_graph)
    if n_listed != n_unique:
        logger.info("%s: collapsed %d duplicate edge lines", name, n_listed - n_unique)

    per_graph_nl: list[list[int]] = [[] for _ in range(n_graphs)]
    if node_labels is not None:
        for k, lab in enumerate(node_labels):
            per_graph_nl[owner[k]].append(lab)

    graphs = []
    for g in range(n_graphs):
        nl = tuple(per_graph_nl[g]) if node_labels is not None else None
        graphs.append(MolecularGraph(
            graph_id=g,
            n_nodes=sizes[g],
            edges=tuple(sorted(per_graph[g])),
            label=label_map[graph_labels[g]],
            node_labels=nl,
        ))
    return GraphSet(tuple(graphs), name=name)


def write_tu_dataset(gs: GraphSet, dir_path, name: Optional[str] = None) -> Path:
    """Write ``gs`` in TU format, listing every edge in both directions."""
    name = name or gs.name
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    a_lines, ind_lines, lab_lines, nl_lines = [], [], [], []
    offset = 0
    has_nl = all(g.node_labels is not None for g in gs) and len(gs) > 0
    for gi, g in enumerate(gs):
        for u, v in g.edges:
            a_lines.append(f"{u + offset + 1}, {v + offset + 1}")
            a_lines.append(f"{v + offset + 1}, {u + offset + 1}")
        ind_lines += [str(gi + 1)] * g.n_nodes
        lab_lines.append(str(g.label))
        if has_nl:
            nl_lines += [str(x) for x in g.node_labels]
        offset += g.n_nodes
    (root / f"{name}_A.txt").write_text("".join(s + "\n" for s in a_lines))
    (root / f"{name}_graph_indicator.txt").write_text("".join(s + "\n" for s in ind_lines))
    (root / f"{name}_graph_labels.txt").write_text("".join(s + "\n" for s in lab_lines))
    if has_nl:
        (root / f"{name}_node_labels.txt").write_text("".join(s + "\n" for s in nl_lines))
    return root
