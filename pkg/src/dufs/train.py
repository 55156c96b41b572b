"""Gradient-descent training of the gate means and final feature selection."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, TrainingDivergedError
from .gates import GateParams, deterministic_gates, open_probability, sample_gates
from .graph import as_array
from .objective import TrainConfig, evaluate

log = logging.getLogger(__name__)


@dataclass
class TraceRecord:
    epoch: int
    loss: float
    sum_open_prob: float
    precision: Optional[float] = None
    recall: Optional[float] = None


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


@dataclass
class SelectionResult:
    open_probabilities: np.ndarray
    retained: np.ndarray  # 0-based feature indices
    ranking: np.ndarray   # 0-based, most probably open first


@dataclass
class TrainResult:
    params: GateParams
    trace: TrainTrace
    selection: SelectionResult


def select_features(params: GateParams, top_k: Optional[int] = None) -> SelectionResult:
    """Rank features by open probability (ties: lower index first).

    Without ``top_k`` the retained set is every feature whose deterministic
    gate ``clip(mu, 0, 1)`` is positive; with ``top_k`` it is the ``top_k``
    highest-ranked features.
    """
    p = open_probability(params)
    ranking = np.argsort(-p, kind="stable")
    if top_k is None:
        retained = np.flatnonzero(deterministic_gates(params) > 0)
    else:
        if int(top_k) != top_k or not 0 <= top_k <= params.d:
            raise InvalidInputError(f"top_k must be in [0, {params.d}], got {top_k}")
        retained = np.sort(ranking[:int(top_k)])
    return SelectionResult(p, retained, ranking)


def _precision_recall(p: np.ndarray, informative: np.ndarray):
    total = p.sum()
    hit = p[informative].sum()
    precision = float(hit / total) if total > 0 else 0.0
    return precision, float(hit / len(informative))


def unit_rms(X: np.ndarray) -> np.ndarray:
    """Columns divided by their root mean square; all-zero columns stay zero."""
    rms = np.sqrt(np.mean(X * X, axis=0))
    return X / np.where(rms > 0, rms, 1.0)


def train(X, cfg: TrainConfig = TrainConfig(),
          ground_truth: Optional[Sequence[int]] = None,
          log_every: int = 1) -> TrainResult:
    """Run SGD on the gate means starting from ``mu = 0.5``.

    Each step draws one gate realization shared by every row of the batch.
    With ``batch_size=None`` an epoch is a single full-batch step; otherwise
    rows are reshuffled each epoch and the epoch's record holds the mean
    loss over its steps.  With ``cfg.unit_variance`` the columns are first
    rescaled to unit root-mean-square so the step size does not depend on
    n.  ``ground_truth`` (0-based informative indices)
    enables the precision/recall columns of the trace.
    """
    X = as_array(X)
    n, d = X.shape
    if n < 2 or d < 1:
        raise InvalidInputError(f"need at least 2 samples and 1 feature, got {X.shape}")
    informative = None
    if ground_truth is not None:
        informative = np.asarray(sorted(set(int(i) for i in ground_truth)), dtype=int)
        if informative.size == 0 or informative.min() < 0 or informative.max() >= d:
            raise InvalidInputError("ground truth indices out of range")
    if cfg.unit_variance:
        X = unit_rms(X)

    rng = np.random.default_rng(cfg.seed)
    params = GateParams.initial(d, cfg.sigma_g)
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    trace = TrainTrace()

    for epoch in range(1, cfg.epochs + 1):
        if batch == n:
            batches = [slice(None)]
        else:
            order = rng.permutation(n)
            batches = [order[s:s + batch] for s in range(0, n, batch)]
            if len(batches) > 1 and len(batches[-1]) < 2:
                batches[-2] = np.concatenate(batches[-2:])
                batches.pop()
        losses = []
        for rows in batches:
            sample = sample_gates(params, rng)
            loss, grad = evaluate(X[rows], params, sample, cfg)
            if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
                raise TrainingDivergedError(
                    f"non-finite loss/gradient at epoch {epoch}; mu={params.mu.tolist()}",
                    epoch=epoch, mu=params.mu.copy())
            params.mu -= cfg.learning_rate * grad
            losses.append(loss)

        if epoch % log_every == 0 or epoch == cfg.epochs:
            p = open_probability(params)
            rec = TraceRecord(epoch, float(np.mean(losses)), float(p.sum()))
            if informative is not None:
                rec.precision, rec.recall = _precision_recall(p, informative)
            trace.records.append(rec)
    log.debug("trained %d epochs, final sum p = %.4f", cfg.epochs, trace.records[-1].sum_open_prob)
    return TrainResult(params, trace, select_features(params))
