"""Random walks, anonymization and anonymous-walk corpora."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .graphs import GraphSet, MolecularGraph

logger = logging.getLogger(__name__)

AnonymousWalk = tuple[int, ...]

MAX_COUNT_SCALE = 12
DEFAULT_ENUM_BUDGET = 5_000_000


class WalkError(ValueError):
    pass


class BudgetExceeded(WalkError):
    pass


def graph_rng(master_seed: int, graph_id: int) -> np.random.Generator:
    """Independent stream per graph; output does not depend on processing order."""
    return np.random.default_rng([int(master_seed), int(graph_id)])


def sample_walks(g: MolecularGraph, roots, r: int, rng: np.random.Generator) -> np.ndarray:
    """Sample one ``r``-step walk per entry of ``roots``.

    Returns an integer array of shape ``(len(roots), r + 1)``. Each step picks a
    neighbor uniformly, i.e. with probability ``1 / degree``.
    """
    if r < 1:
        raise WalkError("r must be >= 1")
    roots = np.asarray(roots, dtype=np.int64)
    indptr, indices = g.csr
    deg = np.diff(indptr)
    if roots.size and np.any(deg[roots] == 0):
        raise WalkError("isolated root")
    walks = np.empty((roots.size, r + 1), dtype=np.int64)
    walks[:, 0] = roots
    cur = roots
    for step in range(1, r + 1):
        u = rng.random(roots.size)
        d = deg[cur]
        pick = np.minimum((u * d).astype(np.int64), d - 1)
        cur = indices[indptr[cur] + pick]
        walks[:, step] = cur
    return walks


def sample_walk(g: MolecularGraph, start: int, r: int, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(int(v) for v in sample_walks(g, [start], r, rng)[0])


def anonymize(walk) -> AnonymousWalk:
    """Replace every node by the 1-based rank of its first appearance."""
    first: dict = {}
    out = []
    for v in walk:
        if v not in first:
            first[v] = len(first) + 1
        out.append(first[v])
    return tuple(out)


def anonymize_many(walks: np.ndarray) -> np.ndarray:
    """Row-wise :func:`anonymize` for an ``(m, L)`` integer array."""
    walks = np.asarray(walks)
    m, length = walks.shape
    out = np.zeros((m, length), dtype=np.int64)
    seen = np.zeros(m, dtype=np.int64)
    rows = np.arange(m)
    for i in range(length):
        if i == 0:
            out[:, 0] = 1
            seen[:] = 1
            continue
        match = walks[:, :i] == walks[:, i:i + 1]
        hit = match.any(axis=1)
        first = match.argmax(axis=1)
        seen = seen + (~hit)
        out[:, i] = np.where(hit, out[rows, first], seen)
    return out


def is_anonymous_walk(key: Iterable[int]) -> bool:
    key = tuple(key)
    if not key or key[0] != 1:
        return False
    top = 1
    for prev, a in zip(key, key[1:]):
        if a == prev or a < 1 or a > top + 1:
            return False
        top = max(top, a)
    return True


def key_to_str(key: AnonymousWalk) -> str:
    return "-".join(str(a) for a in key)


def str_to_key(text: str) -> AnonymousWalk:
    return tuple(int(a) for a in text.split("-"))


@dataclass
class WalkCorpus:
    """Per-graph multisets of anonymous walks and the global vocabulary.

    ``per_graph[i]`` is a Counter over anonymous walks of graph ``graph_ids[i]``.
    The vocabulary is the sorted union of all keys.
    """

    graph_ids: list[int]
    per_graph: list[Counter]
    r: int
    t: int
    master_seed: int
    labels: Optional[list[int]] = None
    dedup: bool = False
    vocabulary: dict = field(init=False)

    def __post_init__(self):
        self.vocabulary = build_vocabulary(self.per_graph)

    @property
    def n_graphs(self) -> int:
        return len(self.per_graph)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def total_walks(self) -> int:
        return sum(sum(c.values()) for c in self.per_graph)

    def distinct_counts(self) -> list[int]:
        return [len(c) for c in self.per_graph]

    def frequencies(self) -> np.ndarray:
        """Corpus-wide count per vocabulary index."""
        freq = np.zeros(self.vocab_size, dtype=np.int64)
        for c in self.per_graph:
            for k, n in c.items():
                freq[self.vocabulary[k]] += n
        return freq

    def entries(self):
        """``(graph_row, walk_index, count)`` arrays in deterministic order."""
        g_rows, w_idx, counts = [], [], []
        for i, c in enumerate(self.per_graph):
            for k in sorted(c):
                g_rows.append(i)
                w_idx.append(self.vocabulary[k])
                counts.append(c[k])
        return (np.asarray(g_rows, dtype=np.int64), np.asarray(w_idx, dtype=np.int64),
                np.asarray(counts, dtype=np.int64))

    def empirical(self, i: int) -> dict:
        c = self.per_graph[i]
        total = sum(c.values())
        return {k: n / total for k, n in c.items()} if total else {}


def build_vocabulary(per_graph: Iterable[Counter]) -> dict:
    keys = set()
    for c in per_graph:
        keys.update(c)
    return {k: i for i, k in enumerate(sorted(keys, key=lambda k: (len(k), k)))}


def graph_walk_counts(g: MolecularGraph, r: int, t: int, master_seed: int, dedup: bool = False) -> Counter:
    roots = np.flatnonzero(g.degrees() > 0)
    if roots.size == 0:
        logger.warning("graph %d has no non-isolated node; empty multiset", g.graph_id)
        return Counter()
    rng = graph_rng(master_seed, g.graph_id)
    walks = sample_walks(g, np.repeat(roots, t), r, rng)
    keys, counts = np.unique(anonymize_many(walks), axis=0, return_counts=True)
    return Counter({tuple(int(a) for a in k): (1 if dedup else int(n)) for k, n in zip(keys, counts)})


def build_corpus(gs: GraphSet, r: int, t: int, master_seed: int = 0, dedup: bool = False,
                 workers: int = 1) -> WalkCorpus:
    """Root ``t`` walks of ``r`` steps at every non-isolated node of every graph.

    Each graph draws from its own stream seeded by ``(master_seed, graph_id)``,
    so results are identical for any ``workers`` value.
    """
    if r < 1:
        raise WalkError("r must be >= 1")
    if t < 1:
        raise WalkError("t must be >= 1")
    graphs = list(gs)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as ex:
            per_graph = list(ex.map(lambda g: graph_walk_counts(g, r, t, master_seed, dedup), graphs))
    else:
        per_graph = [graph_walk_counts(g, r, t, master_seed, dedup) for g in graphs]
    return WalkCorpus(
        graph_ids=[g.graph_id for g in graphs],
        per_graph=per_graph,
        r=r, t=t, master_seed=master_seed,
        labels=[g.label for g in graphs],
        dedup=dedup,
    )


def walk_probability(g: MolecularGraph, walk) -> float:
    """Probability of ``walk`` given its root: product of ``1 / degree`` per step."""
    deg = g.degrees()
    p = 1.0
    for u, v in zip(walk, walk[1:]):
        if not g.has_edge(int(u), int(v)):
            raise WalkError(f"nodes {u} and {v} are not adjacent")
        p /= deg[u]
    return p


def anonymous_walk_distribution(g: MolecularGraph, r: int,
                                budget: int = DEFAULT_ENUM_BUDGET) -> dict:
    """Exact law of the anonymous walk of an ``r``-step walk from a uniform root.

    Enumerates every walk depth-first; roots are the non-isolated nodes, each
    with equal weight.
    """
    if r < 1:
        raise WalkError("r must be >= 1")
    deg = g.degrees()
    roots = np.flatnonzero(deg > 0)
    if roots.size == 0:
        raise WalkError("graph has no non-isolated node")
    if g.n_nodes * int(deg.max()) ** r > budget:
        raise BudgetExceeded(
            f"n * max_degree^r = {g.n_nodes * int(deg.max()) ** r} exceeds budget {budget}; "
            "sample with build_corpus instead")
    indptr, indices = g.csr
    dist: dict = {}

    def visit(path, first, key, prob):
        if len(path) == r + 1:
            k = tuple(key)
            dist[k] = dist.get(k, 0.0) + prob
            return
        v = path[-1]
        step = prob / deg[v]
        for u in indices[indptr[v]:indptr[v + 1]]:
            u = int(u)
            new = u not in first
            if new:
                first[u] = len(first) + 1
            path.append(u)
            key.append(first[u])
            visit(path, first, key, step)
            key.pop()
            path.pop()
            if new:
                del first[u]

    for v in roots:
        v = int(v)
        visit([v], {v: 1}, [1], 1.0)
    # one division at the end keeps dyadic cases (e.g. K3) exact
    return {k: float(p) / roots.size for k, p in dist.items()}


def _restricted_sequences(length: int):
    """All anonymous walks of the given length (no repeated consecutive values)."""
    def grow(seq, top):
        if len(seq) == length:
            yield tuple(seq)
            return
        for a in range(1, top + 2):
            if a != seq[-1]:
                seq.append(a)
                yield from grow(seq, max(top, a))
                seq.pop()
    yield from grow([1], 1)


def enumerate_anonymous_walks(r: int) -> list[AnonymousWalk]:
    if not 1 <= r <= MAX_COUNT_SCALE:
        raise WalkError(f"r must be in 1..{MAX_COUNT_SCALE}")
    return list(_restricted_sequences(r + 1))


def count_anonymous_walks(r: int) -> int:
    """Number of distinct anonymous walks with ``r`` steps, by exhaustive generation."""
    if not 1 <= r <= MAX_COUNT_SCALE:
        raise WalkError(f"r must be in 1..{MAX_COUNT_SCALE}")
    return sum(1 for _ in _restricted_sequences(r + 1))


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# -- export ------------------------------------------------------------------

def format_corpus_line(graph_id: int, counts: Counter) -> str:
    body = " ".join(f"{key_to_str(k)}:{counts[k]}" for k in sorted(counts))
    return f"{graph_id}\t{body}"


def write_corpus(corpus: WalkCorpus, path, header: Optional[str] = None) -> Path:
    path = Path(path)
    lines = []
    if header:
        lines.append(f"# {header}")
    lines += [format_corpus_line(gid, c) for gid, c in zip(corpus.graph_ids, corpus.per_graph)]
    path.write_text("".join(s + "\n" for s in lines), encoding="ascii")
    return path


class CorpusFormatError(ValueError):
    pass


def read_corpus_lines(path) -> tuple[list[int], list[Counter], list[str]]:
    """Parse a corpus file; returns graph ids, counters and ``#`` header lines."""
    ids, per_graph, headers = [], [], []
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.startswith("#"):
                headers.append(line[1:].strip())
                continue
            if not line.strip():
                continue
            gid_s, sep, body = line.partition("\t")
            try:
                if not sep:
                    raise ValueError("missing tab")
                gid = int(gid_s)
                c = Counter()
                for tok in body.split():
                    k, _, n = tok.rpartition(":")
                    key = str_to_key(k)
                    if not is_anonymous_walk(key) or int(n) < 1:
                        raise ValueError(f"bad token {tok!r}")
                    c[key] += int(n)
            except ValueError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: {exc}") from None
            ids.append(gid)
            per_graph.append(c)
    return ids, per_graph, headers
