"""Laplacian scores: the classic per-feature baseline and the gated trace score."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidInputError
from .graph import KernelConfig, as_array, gaussian_kernel, laplacian_power

Convention = Literal["small_is_good_lun", "large_is_good_lrw"]


@dataclass
class FeatureScores:
    scores: np.ndarray
    convention: Convention

    def ranking(self) -> np.ndarray:
        """Feature indices from best to worst; ties keep ascending index."""
        key = self.scores if self.convention == "small_is_good_lun" else -self.scores
        return np.argsort(key, kind="stable")


def laplacian_score_baseline(X, cfg: KernelConfig = KernelConfig(),
                             normalized: bool = False) -> FeatureScores:
    """Per-feature ``f^T L_un f`` with the graph built on all features.

    With ``normalized=True`` the degree-weighted variant of He et al. is
    returned instead: features are D-centered and the quadratic form is
    divided by ``f^T D f`` (0 for features that vanish after centering).
    """
    F = as_array(X)
    g = gaussian_kernel(F, cfg)
    if not normalized:
        scores = np.einsum("ij,ik,kj->j", F, g.L_un, F)
        return FeatureScores(scores, "small_is_good_lun")

    D = g.degrees
    Ft = F - (D @ F / D.sum())[None, :]
    num = np.einsum("ij,ik,kj->j", Ft, g.L_un, Ft)
    den = np.einsum("ij,i,ij->j", Ft, D, Ft)
    scores = np.divide(num, den, out=np.zeros_like(num), where=den > 1e-300)
    return FeatureScores(scores, "small_is_good_lun")


def gated_trace_score(X_gated, L: np.ndarray, m: int | None = None) -> float:
    """``Tr[X^T L X] / m`` for gated inputs and their (powered) Laplacian."""
    Xg = as_array(X_gated)
    L = np.asarray(L, dtype=float)
    if Xg.ndim != 2 or L.shape != (Xg.shape[0], Xg.shape[0]):
        raise InvalidInputError(f"shape mismatch: X {Xg.shape}, L {L.shape}")
    m = Xg.shape[0] if m is None else m
    return float(np.sum(Xg * (L @ Xg)) / m)


def per_feature_gated_scores(X, z, cfg: KernelConfig = KernelConfig(), t: int = 2) -> FeatureScores:
    """``f_j^T L^t f_j / m`` for every raw column ``f_j``, with ``L`` the
    random-walk matrix of the gated inputs ``X * z``."""
    F = as_array(X)
    z = np.asarray(z, dtype=float)
    L = laplacian_power(gaussian_kernel(F * z[None, :], cfg).L_rw, t)
    scores = np.einsum("ij,ik,kj->j", F, L, F) / F.shape[0]
    return FeatureScores(scores, "large_is_good_lrw")
