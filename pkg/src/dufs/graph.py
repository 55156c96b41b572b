"""Gaussian kernels, graph Laplacians and small dense eigendecompositions.

Conventions
-----------
``L_un = diag(D) - K`` is the unnormalized Laplacian and ``L_rw = diag(D)^-1 K``
the random-walk (row-stochastic) matrix.  Self-similarities ``K_ii = 1`` are
kept and counted in the degrees.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DegenerateBandwidthError, DegenerateGraphError, InvalidInputError

Denominator = Literal["sigma_hat", "two_sigma_sq"]

# Column-norm threshold below which a centered column is treated as constant.
CONSTANT_TOL = 1e-12
# Lower clamp for the kernel denominator when training on collapsed gated inputs.
MIN_DENOMINATOR = 1e-12


@dataclass
class DataMatrix:
    """An ``n x d`` design matrix plus the mask of zero-variance columns."""

    values: np.ndarray
    constant_columns: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.constant_columns is None:
            self.constant_columns = np.zeros(self.values.shape[1], dtype=bool)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def as_array(X) -> np.ndarray:
    if isinstance(X, DataMatrix):
        return X.values
    return np.asarray(X, dtype=float)


def preprocess(X) -> DataMatrix:
    """Center every column and scale it to unit Euclidean norm.

    Constant columns cannot be normalized; they are returned as zeros and
    flagged in ``constant_columns``.
    """
    X = np.array(as_array(X), dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {X.shape}")
    if X.shape[0] < 2:
        raise InvalidInputError("need at least two samples")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("matrix contains NaN or Inf")

    X = X - X.mean(axis=0)
    norms = np.linalg.norm(X, axis=0)
    scale = np.maximum(np.abs(X).max(axis=0), 1.0)
    constant = norms <= CONSTANT_TOL * scale
    X[:, constant] = 0.0
    X[:, ~constant] /= norms[~constant]
    return DataMatrix(X, constant)


@dataclass(frozen=True)
class GlobalBandwidth:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidInputError(f"global bandwidth must be positive, got {self.sigma}")


@dataclass(frozen=True)
class LocalMaxBandwidth:
    """Max over points of ``C * ||x_i - x_(i,k)||^2`` (k-th neighbour, self excluded)."""

    k: int = 2
    C: float = 5.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInputError(f"k must be a positive integer, got {self.k}")
        if not 1.0 <= self.C <= 5.0:
            raise InvalidInputError(f"C must lie in [1, 5], got {self.C}")


@dataclass(frozen=True)
class KernelConfig:
    bandwidth: Union[GlobalBandwidth, LocalMaxBandwidth] = LocalMaxBandwidth()
    denominator: Denominator = "sigma_hat"

    def __post_init__(self):
        if self.denominator not in ("sigma_hat", "two_sigma_sq"):
            raise InvalidInputError(f"unknown denominator convention {self.denominator!r}")


@dataclass
class GraphArtifacts:
    K: np.ndarray
    degrees: np.ndarray
    L_un: np.ndarray
    L_rw: np.ndarray
    beta: float


def squared_distances(X) -> np.ndarray:
    X = as_array(X)
    S = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(S, 0.0)
    return S


def _kth_neighbour_sqdist(S: np.ndarray, k: int) -> np.ndarray:
    n = S.shape[0]
    if k >= n:
        raise InvalidInputError(f"need k < n, got k={k}, n={n}")
    off = S.copy()
    np.fill_diagonal(off, np.inf)
    return np.partition(off, k - 1, axis=1)[:, k - 1]


def local_bandwidth(X, k: int, C: float) -> float:
    """Return ``max_i C * ||x_i - x_(i,k)||^2``.

    Raises DegenerateBandwidthError when the result is zero.
    """
    bw = _local_bandwidth_from_sqdist(squared_distances(X), k, C)
    if bw <= 0:
        raise DegenerateBandwidthError("local bandwidth is zero (coincident neighbours)")
    return bw


def _local_bandwidth_from_sqdist(S, k, C) -> float:
    return float(C * _kth_neighbour_sqdist(S, k).max())


def resolve_denominator(S: np.ndarray, cfg: KernelConfig) -> float:
    """Kernel denominator ``beta`` such that ``K = exp(-S / beta)``."""
    rule = cfg.bandwidth
    if isinstance(rule, GlobalBandwidth):
        bw = rule.sigma
    else:
        bw = _local_bandwidth_from_sqdist(S, rule.k, rule.C)
    if cfg.denominator == "two_sigma_sq":
        return 2.0 * bw * bw
    return bw


def kernel_from_sqdist(S: np.ndarray, beta: float) -> GraphArtifacts:
    K = np.exp(-S / beta)
    degrees = K.sum(axis=1)
    L_un = np.diag(degrees) - K
    L_rw = K / degrees[:, None]
    return GraphArtifacts(K, degrees, L_un, L_rw, beta)


def gaussian_kernel(X, cfg: KernelConfig = KernelConfig()) -> GraphArtifacts:
    """Build the Gaussian kernel and both Laplacians for the rows of ``X``."""
    S = squared_distances(X)
    beta = resolve_denominator(S, cfg)
    if not beta > 0:
        raise DegenerateBandwidthError("kernel bandwidth resolved to zero")
    return kernel_from_sqdist(S, beta)


def laplacian_power(L: np.ndarray, t: int) -> np.ndarray:
    if int(t) != t or t < 1:
        raise InvalidInputError(f"Laplacian power must be a positive integer, got {t}")
    out = L
    for _ in range(int(t) - 1):
        out = out @ L
    return out


def symmetric_eigen(graph: GraphArtifacts, which: Literal["rw", "un"] = "rw"):
    """Eigenpairs of ``L_rw`` (descending) or ``L_un`` (ascending).

    ``L_rw`` is similar to ``D^-1/2 K D^-1/2``; that symmetric matrix is
    decomposed and its eigenvectors mapped back by ``D^-1/2``.  Returned
    eigenvectors are columns scaled to unit Euclidean norm.
    """
    if which == "un":
        vals, vecs = np.linalg.eigh(graph.L_un)
        return vals, vecs
    if which != "rw":
        raise InvalidInputError(f"unknown Laplacian {which!r}")
    D = graph.degrees
    if np.any(D <= 0):
        raise DegenerateGraphError("graph has a vertex with zero degree")
    inv_sqrt = 1.0 / np.sqrt(D)
    A = graph.K * inv_sqrt[:, None] * inv_sqrt[None, :]
    vals, vecs = np.linalg.eigh((A + A.T) / 2)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order] * inv_sqrt[:, None]
    vecs /= np.linalg.norm(vecs, axis=0)
    return vals, vecs


def second_eigenvalue(X, cfg: KernelConfig = KernelConfig()) -> float:
    """lambda_2 of the random-walk matrix; small values mean a well-mixed graph."""
    vals, _ = symmetric_eigen(gaussian_kernel(X, cfg), "rw")
    return float(vals[1])
