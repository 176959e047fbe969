"""10-fold cross-validation of fingerprints with an RBF-kernel SVM."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .metrics import classification_metrics, roc_auc
from .svm import SvmConvergenceError, decision_values, rbf_gram, squared_distances, train_svm

logger = logging.getLogger(__name__)

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_FACTORS = (1.0, 2.0, 8.0, 32.0)
REPORT_COLUMNS = ("dataset", "r", "t", "d", "C", "gamma", "fold",
                  "accuracy", "precision", "recall", "f1", "auc")
UNDEFINED = "undefined"


def kfold_indices(n: int, k: int = 10, seed: int = 0, labels=None) -> list[np.ndarray]:
    """Random partition of ``0..n-1`` into ``k`` folds whose sizes differ by at most one.

    With ``labels`` the folds are stratified: indices are shuffled within each
    class, classes are laid end to end and dealt round-robin.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot split {n} items into {k} folds")
    rng = np.random.default_rng(seed)
    if labels is None:
        order = rng.permutation(n)
    else:
        labels = np.asarray(labels)
        if labels.size != n:
            raise ValueError("labels length does not match n")
        order = np.concatenate([rng.permutation(np.flatnonzero(labels == c))
                                for c in np.unique(labels)])
    folds = [np.sort(order[i::k]) for i in range(k)]
    return folds


def _degenerate(folds, labels) -> bool:
    all_idx = np.arange(labels.size)
    for f in folds:
        train = np.setdiff1d(all_idx, f)
        if len(np.unique(labels[f])) < 2 or len(np.unique(labels[train])) < 2:
            return True
    return False


def stratified_folds(labels, k: int, seed: int, events: Optional[list] = None,
                     max_redraws: int = 100):
    """Stratified folds, re-drawn with an incremented seed while any fold is single-class."""
    labels = np.asarray(labels)
    for attempt in range(max_redraws):
        folds = kfold_indices(labels.size, k, seed + attempt, labels)
        if not _degenerate(folds, labels):
            return folds, seed + attempt
        msg = f"degenerate {k}-fold split with seed {seed + attempt}; redrawing"
        logger.info(msg)
        if events is not None:
            events.append(msg)
    raise ValueError(f"no non-degenerate {k}-fold split found after {max_redraws} seeds")


@dataclass
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    C: float
    gamma: float
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    auc: Optional[float]


@dataclass
class EvalReport:
    folds: list[FoldResult]
    config: dict
    roc_points: list = field(default_factory=list)
    pooled_auc: Optional[float] = None
    events: list = field(default_factory=list)

    def aggregate(self) -> dict:
        """Mean and (population) std per metric; undefined folds are skipped and counted."""
        out = {}
        for name in ("accuracy", "precision", "recall", "f1", "auc"):
            vals = [getattr(f, name) for f in self.folds if getattr(f, name) is not None]
            out[name] = {
                "mean": float(np.mean(vals)) if vals else None,
                "std": float(np.std(vals)) if vals else None,
                "undefined_folds": len(self.folds) - len(vals),
            }
        return out

    @property
    def mean_accuracy(self) -> float:
        return self.aggregate()["accuracy"]["mean"]

    @property
    def std_accuracy(self) -> float:
        return self.aggregate()["accuracy"]["std"]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "folds": [asdict(f) for f in self.folds],
            "aggregate": self.aggregate(),
            "pooled_auc": self.pooled_auc,
            "events": self.events,
        }

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable) + "\n")
        return path

    def csv_rows(self) -> list[dict]:
        cfg = self.config
        rows = []
        for f in self.folds:
            row = {"dataset": cfg.get("dataset", ""), "r": cfg.get("r", ""), "t": cfg.get("t", ""),
                   "d": cfg.get("d", ""), "C": f.C, "gamma": f.gamma, "fold": f.fold}
            for name in ("accuracy", "precision", "recall", "f1", "auc"):
                v = getattr(f, name)
                row[name] = UNDEFINED if v is None else repr(float(v))
            rows.append(row)
        return rows

    def write_csv(self, path, header: Optional[str] = None) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(self.csv_rows())
        return path

    def write_roc_csv(self, path, header: Optional[str] = None) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write("threshold,fpr,tpr\n")
            for thr, fpr, tpr in self.roc_points:
                fh.write(f"{thr!r},{fpr!r},{tpr!r}\n")
        return path


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


class _GramCache:
    def __init__(self, X):
        self.D = squared_distances(X)
        self.X = X
        self._cache: dict = {}

    def __call__(self, gamma: float) -> np.ndarray:
        if gamma not in self._cache:
            self._cache[gamma] = rbf_gram(self.X, gamma, self.D).gram
        return self._cache[gamma]


def _fit(K, y_pm, C, tol, max_iter):
    try:
        return train_svm(K, y_pm, C=C, tol=tol, max_iter=max_iter)
    except SvmConvergenceError as exc:
        logger.warning("%s; using last iterate", exc)
        return exc.model


def select_params(grams: _GramCache, idx, labels, c_grid, gamma_grid, seed: int,
                  inner_k: int = 3, tol: float = 1e-3, max_iter: int = 1_000_000):
    """Pick ``(C, gamma)`` by mean accuracy of an inner stratified ``inner_k``-fold CV."""
    idx = np.asarray(idx)
    y = labels[idx]
    inner, _ = stratified_folds(y, inner_k, seed)
    best, best_acc = None, -1.0
    for gamma in gamma_grid:
        K = grams(gamma)
        for C in c_grid:
            accs = []
            for f in inner:
                tr = np.setdiff1d(np.arange(idx.size), f)
                model = _fit(K[np.ix_(idx[tr], idx[tr])], 2 * y[tr] - 1, C, tol, max_iter)
                pred = decision_values(model, K[np.ix_(idx[f], idx[tr])]) > 0
                accs.append(np.mean(pred.astype(int) == y[f]))
            acc = float(np.mean(accs))
            if acc > best_acc:
                best, best_acc = (float(C), float(gamma)), acc
    return best, best_acc


def cross_validate(fingerprints, labels, c_grid: Sequence[float] = DEFAULT_C_GRID,
                   gamma_grid: Optional[Sequence[float]] = None, seed: int = 0, k: int = 10,
                   inner_k: int = 3, tol: float = 1e-3, max_iter: int = 1_000_000,
                   config: Optional[dict] = None) -> EvalReport:
    """Nested cross-validation.

    For each of ``k`` stratified outer folds, ``(C, gamma)`` is chosen by an
    inner ``inner_k``-fold CV on the training part only; the SVM is then refit
    on the whole training part and scored on the held-out fold.
    ``gamma_grid`` defaults to ``{1, 2, 8, 32} / d``.
    """
    X = np.asarray(fingerprints, dtype=float)
    labels = np.asarray(labels).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != labels.size:
        raise ValueError("fingerprints and labels disagree in length")
    if len(np.unique(labels)) < 2:
        raise ValueError("both classes must be present")
    if gamma_grid is None:
        gamma_grid = [g / X.shape[1] for g in DEFAULT_GAMMA_FACTORS]
    events: list = []
    folds, used_seed = stratified_folds(labels, k, seed, events)
    grams = _GramCache(X)
    all_idx = np.arange(labels.size)
    results, pooled_scores, pooled_labels = [], [], []
    for fi, test in enumerate(folds):
        train = np.setdiff1d(all_idx, test)
        (C, gamma), _ = select_params(grams, train, labels, c_grid, gamma_grid,
                                      seed=used_seed * 1000 + fi, inner_k=inner_k,
                                      tol=tol, max_iter=max_iter)
        K = grams(gamma)
        model = _fit(K[np.ix_(train, train)], 2 * labels[train] - 1, C, tol, max_iter)
        scores = decision_values(model, K[np.ix_(test, train)])
        pred = (scores > 0).astype(int)
        m = classification_metrics(pred, labels[test])
        auc = roc_auc(scores, labels[test])[0] if len(np.unique(labels[test])) == 2 else None
        results.append(FoldResult(fi, int(train.size), int(test.size), C, gamma,
                                  m.accuracy, m.precision, m.recall, m.f1, auc))
        pooled_scores.append(scores)
        pooled_labels.append(labels[test])
    pooled_auc, points = roc_auc(np.concatenate(pooled_scores), np.concatenate(pooled_labels))
    cfg = dict(config or {})
    cfg.update({"c_grid": [float(c) for c in c_grid], "gamma_grid": [float(g) for g in gamma_grid],
                "seed": seed, "fold_seed": used_seed, "k": k, "inner_k": inner_k, "tol": tol,
                "embedding": cfg.get("embedding", "transductive")})
    return EvalReport(results, cfg, points, pooled_auc, events)
