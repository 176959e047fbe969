"""PV-DBOW fingerprints trained with negative sampling.

Each graph is a document and each anonymous walk a word. For a graph vector
``G`` and an occurring walk vector ``a_j`` with negatives ``a_k`` the pair
objective

    J = log sigmoid(a_j . G) + sum_k log sigmoid(-a_k . G)

is maximized by SGD; the reported loss is ``-J``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numba
import numpy as np

from .walks import WalkCorpus

logger = logging.getLogger(__name__)

NEGATIVE_MODES = ("global-uniform", "global-unigram75", "within-graph")


class TrainingError(RuntimeError):
    pass


class NoNegativesError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    d: int = 128
    K: int = 5
    alpha0: float = 0.025
    epochs: int = 10
    seed: int = 0
    negative_mode: str = "global-uniform"
    init_std: float = 0.1
    min_alpha_ratio: float = 0.01
    deterministic: bool = True
    normalize: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.negative_mode not in NEGATIVE_MODES:
            raise ValueError(f"negative_mode must be one of {NEGATIVE_MODES}")


@dataclass
class EmbeddingModel:
    graph_vectors: np.ndarray
    walk_vectors: np.ndarray
    config: TrainConfig
    final_loss: Optional[float] = None
    epoch_losses: list = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.graph_vectors.shape[1]

    def save(self, path) -> Path:
        path = Path(path)
        with open(path, "wb") as fh:
            np.savez(fh, graph_vectors=self.graph_vectors, walk_vectors=self.walk_vectors,
                     meta=np.array(json.dumps({
                         "config": asdict(self.config),
                         "final_loss": self.final_loss,
                         "epoch_losses": self.epoch_losses,
                     })))
        return path

    @classmethod
    def load(cls, path) -> "EmbeddingModel":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            return cls(data["graph_vectors"].copy(), data["walk_vectors"].copy(),
                       TrainConfig(**meta["config"]), meta["final_loss"], meta["epoch_losses"])


def init_model(n_graphs: int, vocab_size: int, cfg: TrainConfig) -> EmbeddingModel:
    """Both matrices drawn i.i.d. from ``Normal(0, cfg.init_std**2)``."""
    if n_graphs < 1 or vocab_size < 1:
        raise ValueError("n_graphs and vocab_size must be >= 1")
    rng = np.random.default_rng([cfg.seed, 0])
    G = rng.normal(0.0, cfg.init_std, size=(n_graphs, cfg.d))
    M = rng.normal(0.0, cfg.init_std, size=(vocab_size, cfg.d))
    return EmbeddingModel(G, M, cfg)


def sigmoid(x):
    """Logistic function, overflow-free for any magnitude."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def log_sigmoid(x):
    return -np.logaddexp(0.0, -np.asarray(x, dtype=float))


# -- negatives -----------------------------------------------------------------

class NegativeSampler:
    """Vectorised negative draws for one corpus.

    ``global-uniform`` draws from the vocabulary minus the target,
    ``global-unigram75`` in proportion to corpus frequency ** 0.75 (target
    excluded), and ``within-graph`` uniformly from the graph's own distinct
    walks minus the target.
    """

    def __init__(self, corpus: WalkCorpus, mode: str = "global-uniform"):
        if mode not in NEGATIVE_MODES:
            raise ValueError(f"unknown negative mode {mode!r}")
        self.mode = mode
        self.vocab_size = corpus.vocab_size
        if mode == "global-unigram75":
            w = corpus.frequencies().astype(float) ** 0.75
            self.cdf = np.cumsum(w) / w.sum()
        elif mode == "within-graph":
            members = [np.sort([corpus.vocabulary[k] for k in c]).astype(np.int64)
                       for c in corpus.per_graph]
            self.offsets = np.zeros(len(members) + 1, dtype=np.int64)
            np.cumsum([len(m) for m in members], out=self.offsets[1:])
            self.flat = np.concatenate(members) if members else np.zeros(0, dtype=np.int64)
            rows = np.repeat(np.arange(len(members)), np.diff(self.offsets))
            # globally sorted, so one searchsorted locates a target inside its graph
            self.flat_keys = rows * self.vocab_size + self.flat

    def available(self, graph_rows: np.ndarray) -> np.ndarray:
        """Whether a non-target negative exists for targets in these graphs."""
        if self.mode == "within-graph":
            return (self.offsets[graph_rows + 1] - self.offsets[graph_rows]) > 1
        return np.full(np.shape(graph_rows), self.vocab_size > 1)

    def draw(self, graph_rows, targets, K: int, rng: np.random.Generator) -> np.ndarray:
        graph_rows = np.asarray(graph_rows, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        n = targets.size
        if self.mode == "global-uniform":
            if self.vocab_size < 2:
                raise NoNegativesError("no negatives available")
            neg = rng.integers(0, self.vocab_size - 1, size=(n, K))
            neg += neg >= targets[:, None]
            return neg
        if self.mode == "global-unigram75":
            if self.vocab_size < 2:
                raise NoNegativesError("no negatives available")
            neg = np.searchsorted(self.cdf, rng.random((n, K)), side="right")
            np.minimum(neg, self.vocab_size - 1, out=neg)
            bad = neg == targets[:, None]
            while bad.any():
                redraw = np.searchsorted(self.cdf, rng.random(int(bad.sum())), side="right")
                neg[bad] = np.minimum(redraw, self.vocab_size - 1)
                bad = neg == targets[:, None]
            return neg
        start = self.offsets[graph_rows]
        tau = self.offsets[graph_rows + 1] - start
        if np.any(tau < 2):
            raise NoNegativesError("no negatives available")
        pos = np.searchsorted(self.flat_keys, graph_rows * self.vocab_size + targets) - start
        pick = np.minimum((rng.random((n, K)) * (tau - 1)[:, None]).astype(np.int64),
                          (tau - 2)[:, None])
        pick += pick >= pos[:, None]
        return self.flat[start[:, None] + pick]


def draw_negatives(vocab_size: int, corpus: WalkCorpus, graph_id: int, target: int, K: int,
                   mode: str, rng: np.random.Generator) -> np.ndarray:
    """``K`` negative walk indices for one ``(graph, target)`` pair."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if vocab_size != corpus.vocab_size:
        raise ValueError("vocab_size does not match corpus")
    row = corpus.graph_ids.index(graph_id)
    return NegativeSampler(corpus, mode).draw([row], [target], K, rng)[0]


# -- updates -------------------------------------------------------------------

def pair_gradients(G: np.ndarray, a_pos: np.ndarray, a_neg: np.ndarray):
    """Ascent gradients of the pair objective.

    Returns ``(grad_G, grad_pos, grad_neg, objective)``; ``a_neg`` has shape ``(K, d)``.
    """
    s_pos = float(a_pos @ G)
    s_neg = a_neg @ G
    g_pos = 1.0 - sigmoid(s_pos)
    g_neg = sigmoid(s_neg)
    grad_G = g_pos * a_pos - g_neg @ a_neg
    grad_pos = g_pos * G
    grad_neg = -g_neg[:, None] * G[None, :]
    objective = float(log_sigmoid(s_pos) + np.sum(log_sigmoid(-s_neg)))
    return grad_G, grad_pos, grad_neg, objective


def train_pair(model: EmbeddingModel, graph_row: int, target: int, negatives, alpha: float,
               iteration: int = 0) -> float:
    """One in-place SGD ascent step; returns the pair loss (negated objective)."""
    G = model.graph_vectors[graph_row]
    negatives = np.asarray(negatives, dtype=np.int64)
    grad_G, grad_pos, grad_neg, objective = pair_gradients(
        G, model.walk_vectors[target], model.walk_vectors[negatives])
    if not (np.isfinite(objective) and np.all(np.isfinite(grad_G))):
        raise TrainingError(f"non-finite values at iteration {iteration}")
    model.walk_vectors[target] += alpha * grad_pos
    np.add.at(model.walk_vectors, negatives, alpha * grad_neg)
    model.graph_vectors[graph_row] += alpha * grad_G
    return -objective


@numba.njit(cache=True)
def _log1pexp(x):
    # log(1 + exp(x)) without overflow
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@numba.njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@numba.njit(cache=True)
def _sgd_block(G, M, g_rows, targets, negs, alphas, active):
    """Sequential SGD over one block of tokens; returns (loss sum, bad index).

    All scores and gradients of a token use the vectors as they were before
    that token, matching :func:`train_pair`.
    """
    d = G.shape[1]
    K = negs.shape[1]
    grad_G = np.empty(d)
    coef = np.empty(K)
    total = 0.0
    for t in range(targets.shape[0]):
        if not active[t]:
            continue
        gi = g_rows[t]
        j = targets[t]
        a = alphas[t]
        s = 0.0
        for c in range(d):
            s += M[j, c] * G[gi, c]
        loss = _log1pexp(-s)
        cpos = 1.0 - _sigmoid(s)
        for k in range(K):
            m = negs[t, k]
            s = 0.0
            for c in range(d):
                s += M[m, c] * G[gi, c]
            loss += _log1pexp(s)
            coef[k] = _sigmoid(s)
        if not math.isfinite(loss):
            return total + loss, t
        total += loss
        for c in range(d):
            acc = cpos * M[j, c]
            for k in range(K):
                acc -= coef[k] * M[negs[t, k], c]
            grad_G[c] = acc
        for c in range(d):
            g = G[gi, c]
            M[j, c] += a * cpos * g
            for k in range(K):
                M[negs[t, k], c] -= a * coef[k] * g
        for c in range(d):
            G[gi, c] += a * grad_G[c]
    return total, -1


@numba.njit(parallel=True, cache=True)
def _sgd_block_parallel(G, M, g_rows, targets, negs, alphas, active, n_chunks):
    n = targets.shape[0]
    losses = np.zeros(n_chunks)
    step = (n + n_chunks - 1) // n_chunks
    for ch in numba.prange(n_chunks):
        lo = ch * step
        hi = min(n, lo + step)
        if lo < hi:
            loss, _ = _sgd_block(G, M, g_rows[lo:hi], targets[lo:hi], negs[lo:hi],
                                 alphas[lo:hi], active[lo:hi])
            losses[ch] = loss
    return losses.sum()


def _python_block(model, g_rows, targets, negs, alphas, active, offset):
    total = 0.0
    for t in range(targets.shape[0]):
        if active[t]:
            total += train_pair(model, g_rows[t], targets[t], negs[t], alphas[t], offset + t)
    return total


def train(corpus: WalkCorpus, cfg: TrainConfig, backend: str = "numba",
          block_size: int = 1 << 18, model: Optional[EmbeddingModel] = None) -> EmbeddingModel:
    """Fit graph and walk vectors on ``corpus``.

    Every ``(graph, walk)`` entry contributes ``count`` updates per epoch, in a
    freshly shuffled order. The step size decays linearly from ``alpha0`` to
    ``alpha0 * min_alpha_ratio`` over all updates. ``backend="python"`` runs the
    same schedule through :func:`train_pair` and serves as a reference.
    """
    if corpus.n_graphs < 1 or corpus.vocab_size < 1 or corpus.total_walks < 1:
        raise ValueError("corpus is empty")
    if backend not in ("numba", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if model is None:
        model = init_model(corpus.n_graphs, corpus.vocab_size, cfg)
    sampler = NegativeSampler(corpus, cfg.negative_mode)
    g_rows, w_idx, counts = corpus.entries()
    tok_g = np.repeat(g_rows, counts)
    tok_w = np.repeat(w_idx, counts)
    n_tok = tok_g.size
    active_all = sampler.available(tok_g)
    if not active_all.all():
        logger.info("%d tokens have no available negatives and are skipped",
                    int((~active_all).sum()))
    total_updates = cfg.epochs * n_tok
    alpha_min = cfg.alpha0 * cfg.min_alpha_ratio
    rng = np.random.default_rng([cfg.seed, 1])
    model.epoch_losses = []
    done = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_tok)
        ep_g, ep_w, ep_act = tok_g[order], tok_w[order], active_all[order]
        loss_sum = 0.0
        for lo in range(0, n_tok, block_size):
            hi = min(n_tok, lo + block_size)
            bg, bw, ba = ep_g[lo:hi], ep_w[lo:hi], ep_act[lo:hi]
            negs = np.zeros((hi - lo, cfg.K), dtype=np.int64)
            if ba.any():
                negs[ba] = sampler.draw(bg[ba], bw[ba], cfg.K, rng)
            progress = (done + np.arange(hi - lo)) / total_updates
            alphas = cfg.alpha0 - (cfg.alpha0 - alpha_min) * progress
            if backend == "python":
                loss_sum += _python_block(model, bg, bw, negs, alphas, ba, done)
            elif cfg.deterministic:
                loss, bad = _sgd_block(model.graph_vectors, model.walk_vectors,
                                       bg, bw, negs, alphas, ba)
                if bad >= 0:
                    raise TrainingError(f"non-finite loss at epoch {epoch}, "
                                        f"iteration {done + bad}")
                loss_sum += loss
            else:
                loss_sum += _sgd_block_parallel(model.graph_vectors, model.walk_vectors,
                                                bg, bw, negs, alphas, ba,
                                                numba.get_num_threads())
            done += hi - lo
        n_active = max(1, int(active_all.sum()))
        if not np.isfinite(loss_sum) or not np.all(np.isfinite(model.graph_vectors)):
            raise TrainingError(f"non-finite values in epoch {epoch}")
        model.epoch_losses.append(loss_sum / n_active)
        logger.debug("epoch %d loss %.6f", epoch, model.epoch_losses[-1])
    model.final_loss = model.epoch_losses[-1]
    if cfg.normalize:
        norms = np.linalg.norm(model.graph_vectors, axis=1, keepdims=True)
        model.graph_vectors /= np.where(norms > 0, norms, 1.0)
    return model


def fingerprint(model: EmbeddingModel, graph_row: int) -> np.ndarray:
    n = model.graph_vectors.shape[0]
    if not 0 <= graph_row < n:
        raise IndexError(f"graph index {graph_row} outside 0..{n - 1}")
    return model.graph_vectors[graph_row]


# -- export --------------------------------------------------------------------

def write_fingerprints_csv(path, graph_ids, labels, vectors, header: Optional[str] = None) -> Path:
    path = Path(path)
    d = vectors.shape[1]
    lines = []
    if header:
        lines.append(f"# {header}")
    lines.append(",".join(["graph_id", "label"] + [f"f{i}" for i in range(d)]))
    for gid, lab, row in zip(graph_ids, labels, vectors):
        lines.append(",".join([str(int(gid)), str(int(lab))] + [repr(float(x)) for x in row]))
    path.write_text("".join(s + "\n" for s in lines))
    return path


def write_fingerprints_jsonl(path, graph_ids, labels, vectors, header: Optional[dict] = None) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        if header:
            fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for gid, lab, row in zip(graph_ids, labels, vectors):
            fh.write(json.dumps({"graph_id": int(gid), "label": int(lab),
                                 "vector": [float(x) for x in row]}) + "\n")
    return path


def read_fingerprints_csv(path):
    """Returns ``(graph_ids, labels, vectors, headers)``."""
    headers, rows = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                headers.append(line[1:].strip())
                continue
            if line.startswith("graph_id"):
                continue
            try:
                rows.append([float(x) for x in line.split(",")])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed fingerprint row") from None
    if not rows:
        raise ValueError(f"{path}: no fingerprint rows")
    arr = np.array(rows)
    return arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2:], headers
