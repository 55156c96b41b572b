"""Clustering, clustering accuracy, selection precision/recall and spectral probes."""
from __future__ import annotations

import warnings
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans

from .errors import InvalidInputError
from .gates import GateParams, open_probability
from .graph import KernelConfig, as_array, gaussian_kernel, symmetric_eigen


def kmeans(X, k: int, n_init: int = 10, seed: int = 0) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding, best of ``n_init`` restarts."""
    X = as_array(X)
    if X.ndim == 1:
        X = X[:, None]
    if k < 1 or k > X.shape[0]:
        raise InvalidInputError(f"need 1 <= k <= n, got k={k}, n={X.shape[0]}")
    if X.shape[1] == 0:
        raise InvalidInputError("cannot cluster zero features")
    with warnings.catch_warnings():
        # duplicate points with k close to n trigger a ConvergenceWarning
        warnings.simplefilter("ignore")
        km = KMeans(n_clusters=k, init="k-means++", n_init=n_init, random_state=seed)
        return km.fit_predict(X).astype(int)


def spectral_clustering(X, k: int, cfg: KernelConfig = KernelConfig(), seed: int = 0,
                        n_init: int = 10) -> np.ndarray:
    """Ng-Jordan-Weiss: leading ``k`` eigenvectors of ``D^-1/2 K D^-1/2``,
    rows scaled to unit length, then k-means."""
    X = as_array(X)
    if k == 1:
        return np.zeros(X.shape[0], dtype=int)
    g = gaussian_kernel(X, cfg)
    _, vecs = symmetric_eigen(g, "rw")
    # symmetric_eigen returns D^-1/2 v; undo it to recover the NJW embedding
    U = vecs[:, :k] * np.sqrt(g.degrees)[:, None]
    U /= np.maximum(np.linalg.norm(U, axis=1, keepdims=True), 1e-300)
    return kmeans(U, k, n_init=n_init, seed=seed)


def clustering_accuracy(pred, truth) -> float:
    """Best fraction of agreement over one-to-one relabelings of ``pred``."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise InvalidInputError(f"label vectors differ in shape: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise InvalidInputError("empty label vectors")
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    confusion = np.zeros((p.max() + 1, t.max() + 1), dtype=int)
    np.add.at(confusion, (p, t), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    return float(confusion[rows, cols].sum() / pred.size)


class PrecisionRecall(NamedTuple):
    precision: float
    recall: float
    defined: bool = True


def selection_precision_recall(params_or_probs, informative: Sequence[int]) -> PrecisionRecall:
    """Soft precision/recall of a gate configuration.

    ``precision = sum_{i in S} p_i / sum_i p_i`` and
    ``recall = sum_{i in S} p_i / |S|``.  Accepts ``GateParams`` or a vector
    of open probabilities.  When every p_i is 0 precision is reported as 0
    with ``defined=False``.
    """
    if isinstance(params_or_probs, GateParams):
        p = open_probability(params_or_probs)
    else:
        p = np.asarray(params_or_probs, dtype=float)
    idx = np.asarray(sorted(set(int(i) for i in informative)), dtype=int)
    if idx.size == 0:
        raise InvalidInputError("informative set must be non-empty")
    if idx.min() < 0 or idx.max() >= p.size:
        raise InvalidInputError("informative index out of range")
    hit = float(p[idx].sum())
    total = float(p.sum())
    recall = hit / idx.size
    if total <= 0:
        return PrecisionRecall(0.0, recall, False)
    return PrecisionRecall(hit / total, recall)


def eigvec_label_correlation(X, truth, cfg: KernelConfig = KernelConfig()) -> float:
    """|Pearson correlation| between the second random-walk eigenvector and
    the +-1 coded labels of a two-class problem."""
    truth = np.asarray(truth)
    classes = np.unique(truth)
    if classes.size != 2:
        raise InvalidInputError(f"expected two classes, got {classes.size}")
    y = np.where(truth == classes[0], -1.0, 1.0)
    _, vecs = symmetric_eigen(gaussian_kernel(X, cfg), "rw")
    psi = vecs[:, 1]
    if np.std(psi) < 1e-12:
        warnings.warn("second eigenvector has zero variance; correlation set to 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    return float(abs(np.corrcoef(psi, y)[0, 1]))
