"""Binary classification metrics.

Precision, recall and F1 are ``None`` when their denominator is zero; callers
render that as ``undefined`` rather than 0.
"""
from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import rankdata


class Scores(NamedTuple):
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def confusion(predicted, actual) -> tuple[int, int, int, int]:
    """``(tp, fp, tn, fn)`` for 0/1 vectors."""
    p = np.asarray(predicted).astype(int)
    a = np.asarray(actual).astype(int)
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.size} predictions for {a.size} labels")
    tp = int(np.sum((p == 1) & (a == 1)))
    fp = int(np.sum((p == 1) & (a == 0)))
    tn = int(np.sum((p == 0) & (a == 0)))
    fn = int(np.sum((p == 0) & (a == 1)))
    return tp, fp, tn, fn


def classification_metrics(predicted, actual) -> Scores:
    if len(predicted) != len(actual):
        raise ValueError(f"length mismatch: {len(predicted)} predictions for {len(actual)} labels")
    if len(actual) == 0:
        raise ValueError("empty input")
    tp, fp, tn, fn = confusion(predicted, actual)
    accuracy = (tp + tn) / (tp + fp + tn + fn)
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None and recall is None:
        f1 = None
    elif tp == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Scores(accuracy, precision, recall, f1)


def roc_auc(scores, actual):
    """Area under the ROC curve and the curve itself.

    The AUC is the Mann-Whitney statistic with average ranks for ties, i.e. the
    probability that a random positive outscores a random negative, ties
    counting one half. ROC points are ``(threshold, fpr, tpr)`` at every
    distinct score, from the highest threshold down, starting at ``(inf, 0, 0)``.
    """
    s = np.asarray(scores, dtype=float)
    a = np.asarray(actual).astype(int)
    if s.shape != a.shape:
        raise ValueError("length mismatch")
    n_pos = int(a.sum())
    n_neg = a.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes")
    ranks = rankdata(s)
    auc = (ranks[a == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)

    order = np.argsort(-s, kind="mergesort")
    s_sorted, a_sorted = s[order], a[order]
    last = np.r_[np.flatnonzero(np.diff(s_sorted)), s.size - 1]
    tps = np.cumsum(a_sorted)[last]
    fps = (last + 1) - tps
    points = [(float("inf"), 0.0, 0.0)]
    points += [(float(s_sorted[k]), fp / n_neg, tp / n_pos) for k, tp, fp in zip(last, tps, fps)]
    return float(auc), points
