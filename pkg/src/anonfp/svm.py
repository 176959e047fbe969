"""RBF kernel and a binary C-SVM trained by SMO on the dual.

The dual is

    max_a  sum(a) - 1/2 a^T Q a,   Q_ij = y_i y_j K_ij
    s.t.   0 <= a_i <= C,  y^T a = 0

Working pairs are chosen as the maximal KKT-violating pair; the solver stops
when the violation gap drops below ``tol``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np


class SvmError(ValueError):
    pass


class SvmConvergenceError(RuntimeError):
    def __init__(self, message, model):
        super().__init__(message)
        self.model = model


@dataclass(frozen=True)
class KernelMatrix:
    gram: np.ndarray
    gamma: float

    def take(self, rows, cols=None) -> np.ndarray:
        cols = rows if cols is None else cols
        return self.gram[np.ix_(rows, cols)]


def squared_distances(X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Y = X if Y is None else np.asarray(Y, dtype=float)
    xx = np.einsum("ij,ij->i", X, X)
    yy = xx if Y is X else np.einsum("ij,ij->i", Y, Y)
    D = xx[:, None] + yy[None, :] - 2.0 * (X @ Y.T)
    np.maximum(D, 0.0, out=D)
    if Y is X:
        D = 0.5 * (D + D.T)
        np.fill_diagonal(D, 0.0)
    return D


def rbf_gram(X: np.ndarray, gamma: float, sq_dists: np.ndarray | None = None) -> KernelMatrix:
    """``K[i, j] = exp(-gamma * ||x_i - x_j||^2)``."""
    if not gamma > 0:
        raise SvmError("gamma must be > 0")
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise SvmError("non-finite fingerprint values")
    D = squared_distances(X) if sq_dists is None else sq_dists
    return KernelMatrix(np.exp(-gamma * D), float(gamma))


@dataclass
class SvmModel:
    alpha: np.ndarray
    b: float
    y: np.ndarray
    C: float
    n_iter: int = 0
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.alpha > 0)

    def dual_objective(self, K: np.ndarray) -> float:
        return dual_objective(self.alpha, self.y, K)


def dual_objective(alpha, y, K) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


@numba.njit(cache=True)
def _smo(K, y, C, tol, max_iter, alpha, grad, trace):
    """Run SMO in place on ``alpha``/``grad`` (grad = Q alpha - 1); returns iterations."""
    n = y.shape[0]
    it = 0
    obj = 0.0
    for t in range(n):
        obj += 0.5 * alpha[t] * (1.0 - grad[t])  # = sum(a) - a^T Q a / 2 since grad = Qa - 1
    record = trace.shape[0] > 0
    while it < max_iter:
        i = -1
        j = -1
        m_up = -np.inf
        m_low = np.inf
        for t in range(n):
            v = -y[t] * grad[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v > m_up:
                    m_up = v
                    i = t
            if (y[t] < 0 and alpha[t] < C) or (y[t] > 0 and alpha[t] > 0):
                if v < m_low:
                    m_low = v
                    j = t
        if i < 0 or j < 0 or m_up - m_low < tol:
            break
        curv = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if curv <= 0:
            curv = 1e-12
        gap = m_up - m_low
        delta = gap / curv
        # alpha_i += y_i * delta, alpha_j -= y_j * delta, both kept in [0, C]
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        if delta > lim_i:
            delta = lim_i
        if delta > lim_j:
            delta = lim_j
        if y[i] > 0:
            alpha[i] = min(C, alpha[i] + delta)
        else:
            alpha[i] = max(0.0, alpha[i] - delta)
        if y[j] > 0:
            alpha[j] = max(0.0, alpha[j] - delta)
        else:
            alpha[j] = min(C, alpha[j] + delta)
        for t in range(n):
            grad[t] += y[t] * delta * (K[t, i] - K[t, j])
        obj += gap * delta - 0.5 * curv * delta * delta
        if record and it < trace.shape[0]:
            trace[it] = obj
        it += 1
    return it


def _bias(alpha, y, grad, C) -> float:
    v = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(v[free].mean())
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    hi = v[up].max() if up.any() else v.max()
    lo = v[low].min() if low.any() else v.min()
    return float(0.5 * (hi + lo))


def train_svm(gram, labels, C: float = 1.0, tol: float = 1e-3, max_iter: int = 1_000_000,
              record_objective: bool = False) -> SvmModel:
    """Fit the dual by SMO. ``labels`` are in ``{-1, +1}``."""
    K = np.ascontiguousarray(gram.gram if isinstance(gram, KernelMatrix) else gram, dtype=float)
    y = np.asarray(labels, dtype=float)
    n = y.size
    if K.shape != (n, n):
        raise SvmError(f"gram shape {K.shape} does not match {n} labels")
    if n < 2:
        raise SvmError("need at least two training points")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise SvmError("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise SvmError("both classes must be present")
    if not C > 0:
        raise SvmError("C must be > 0")
    alpha = np.zeros(n)
    grad = -np.ones(n)
    trace = np.zeros(max_iter if record_objective else 0)
    n_iter = _smo(K, y, float(C), float(tol), int(max_iter), alpha, grad, trace)
    model = SvmModel(alpha, _bias(alpha, y, grad, C), y, float(C), int(n_iter),
                     trace[:n_iter].copy())
    if n_iter >= max_iter:
        raise SvmConvergenceError(f"SMO did not converge in {max_iter} iterations", model)
    return model


def decision_values(model: SvmModel, gram_rows) -> np.ndarray:
    """``f(x) = sum_i alpha_i y_i K(x_i, x) + b`` for rows of a test-by-train kernel."""
    K = np.asarray(gram_rows, dtype=float)
    if K.size == 0:
        return np.zeros(K.shape[0] if K.ndim == 2 else 0)
    if K.ndim != 2 or K.shape[1] != model.alpha.size:
        raise SvmError(f"kernel rows have shape {K.shape}, expected (*, {model.alpha.size})")
    return K @ (model.alpha * model.y) + model.b
