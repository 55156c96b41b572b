"""The DUFS objectives and their analytic gradient with respect to the gate means.

For a batch ``X`` (m x d) and a gate realization ``z``, the gated inputs are
``Xg = X * z``; ``P`` is the random-walk matrix of ``Xg`` and ``A = P^t``.
Both losses are built on the trace score ``T = Tr[Xg^T A Xg]``:

    lambda-regularized:  -T / m + lam * sum(p)
    parameter-free:      -T / (m * sum(p) + delta)

where ``p`` are the open-gate probabilities.  The kernel denominator is
recomputed from ``Xg`` on every evaluation.  With ``bandwidth_grad`` (the
default) the gradient includes its dependence on ``z``; otherwise it is held
fixed.  A fixed denominator biases every gate towards opening, because
scaling all of ``Xg`` up sharpens the kernel, whereas the local-max rule is
scale invariant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InvalidInputError
from .gates import (DEFAULT_SIGMA_G, GateParams, GateSample, gate_subgradient_mask,
                    open_probability, open_probability_grad)
from .graph import (MIN_DENOMINATOR, GlobalBandwidth, KernelConfig, LocalMaxBandwidth, as_array,
                    resolve_denominator, squared_distances)


@dataclass(frozen=True)
class LambdaRegularized:
    lam: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidInputError(f"lambda must be non-negative, got {self.lam}")


@dataclass(frozen=True)
class ParameterFree:
    delta: float = 1e-8

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidInputError(f"delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class TrainConfig:
    loss: Union[LambdaRegularized, ParameterFree] = field(default_factory=ParameterFree)
    t: int = 2
    learning_rate: float = 1.0
    epochs: int = 5000
    batch_size: Optional[int] = None  # None means full batch
    # A narrow kernel: with wide ones a lone feature is trivially smooth on
    # its own graph and out-scores any informative pair.
    kernel: KernelConfig = field(default_factory=lambda: KernelConfig(LocalMaxBandwidth(2, 1.0)))
    seed: int = 0
    sigma_g: float = DEFAULT_SIGMA_G
    # differentiate through the data-dependent kernel denominator
    bandwidth_grad: bool = True
    # rescale columns to unit root-mean-square before training
    unit_variance: bool = True

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 1:
            raise InvalidInputError(f"t must be a positive integer, got {self.t}")
        if not self.learning_rate >= 0:
            raise InvalidInputError(f"learning rate must be non-negative, got {self.learning_rate}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise InvalidInputError(f"epochs must be a positive integer, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 2:
            raise InvalidInputError(f"batch size must be at least 2, got {self.batch_size}")
        if not self.sigma_g > 0:
            raise InvalidInputError(f"sigma_g must be positive, got {self.sigma_g}")


@dataclass
class _Forward:
    X: np.ndarray
    z: np.ndarray
    S: np.ndarray
    K: np.ndarray
    degrees: np.ndarray
    powers: list  # P^0 .. P^t
    beta: float
    trace: float
    # dbeta/dz when the denominator follows the gated data, else None
    beta_grad: Optional[np.ndarray] = None


def gated_denominator(X, z, kernel: KernelConfig) -> float:
    """Kernel denominator for the gated batch, clamped away from zero."""
    Xg = as_array(X) * np.asarray(z)[None, :]
    return max(resolve_denominator(squared_distances(Xg), kernel), MIN_DENOMINATOR)


def _denominator_and_grad(X, z, S, kernel: KernelConfig):
    """Resolved denominator and its derivative in z.

    With the local rule the bandwidth is ``C * S[i, j]`` for the single pair
    (i, its k-th neighbour j) attaining the max, so it is differentiable
    wherever that pair is unique.
    """
    rule = kernel.bandwidth
    if isinstance(rule, GlobalBandwidth):
        bw, dbw = rule.sigma, np.zeros(X.shape[1])
    else:
        if rule.k >= S.shape[0]:
            raise InvalidInputError(f"need k < batch size, got k={rule.k}, m={S.shape[0]}")
        off = S.copy()
        np.fill_diagonal(off, np.inf)
        nbr = np.argpartition(off, rule.k - 1, axis=1)[:, rule.k - 1]
        i = int(np.argmax(off[np.arange(S.shape[0]), nbr]))
        j = int(nbr[i])
        bw = rule.C * S[i, j]
        dbw = rule.C * 2.0 * z * (X[i] - X[j]) ** 2
    if kernel.denominator == "two_sigma_sq":
        beta, dbeta = 2.0 * bw * bw, 4.0 * bw * dbw
    else:
        beta, dbeta = bw, dbw
    if beta < MIN_DENOMINATOR:
        return MIN_DENOMINATOR, np.zeros_like(dbeta)
    return float(beta), dbeta


def _forward(X, z, kernel: KernelConfig, t: int, beta: Optional[float] = None,
             bandwidth_grad: bool = False) -> _Forward:
    Xg = X * z[None, :]
    S = squared_distances(Xg)
    beta_grad = None
    if beta is None:
        beta, dbeta = _denominator_and_grad(X, z, S, kernel)
        if bandwidth_grad:
            beta_grad = dbeta
    K = np.exp(-S / beta)
    D = K.sum(axis=1)
    P = K / D[:, None]
    powers = [np.eye(X.shape[0]), P]
    for _ in range(t - 1):
        powers.append(powers[-1] @ P)
    trace = float(np.sum(Xg * (powers[t] @ Xg)))
    return _Forward(X, z, S, K, D, powers, beta, trace, beta_grad)


def _trace_grad_z(fw: _Forward, t: int) -> np.ndarray:
    """dT/dz through K, D and P^t (and the denominator if ``fw.beta_grad``)."""
    X, z, K, D, Pw = fw.X, fw.z, fw.K, fw.degrees, fw.powers
    Xg = X * z[None, :]
    A = Pw[t]

    direct = np.sum(X * (A @ X), axis=0)

    # dT/dP = H^T, H = sum_s P^(t-1-s) G P^s with G = Xg Xg^T
    G = Xg @ Xg.T
    H = np.zeros_like(G)
    for s in range(t):
        H += Pw[t - 1 - s] @ G @ Pw[s]
    dP = H.T
    # P = D^-1 K, D = K 1
    c = np.sum(dP * K, axis=1) / D ** 2
    dK = dP / D[:, None] - c[:, None]
    W = dK * K
    # sum_ij W_ij (X_ik - X_jk)^2
    X2 = X * X
    spread = (W.sum(axis=1) + W.sum(axis=0)) @ X2 - 2.0 * np.sum(X * (W @ X), axis=0)
    grad = 2.0 * z * (direct - spread / fw.beta)
    if fw.beta_grad is not None:
        grad += np.sum(W * fw.S) / fw.beta ** 2 * fw.beta_grad
    return grad


def _check(X, params: GateParams, sample: GateSample):
    X = as_array(X)
    if X.ndim != 2 or X.shape[1] != params.d or sample.z.shape != (params.d,):
        raise InvalidInputError(
            f"shape mismatch: X {X.shape}, mu {params.mu.shape}, z {sample.z.shape}")
    return X


def evaluate(X, params: GateParams, sample: GateSample, cfg: TrainConfig,
             beta: Optional[float] = None, with_grad: bool = True):
    """Loss value and (optionally) its gradient w.r.t. ``params.mu``.

    ``beta`` overrides the kernel denominator; by default it is recomputed
    from the gated batch.  Returns ``(loss, grad)`` with ``grad=None`` when
    ``with_grad`` is false.
    """
    X = _check(X, params, sample)
    m = X.shape[0]
    fw = _forward(X, sample.z, cfg.kernel, cfg.t, beta, cfg.bandwidth_grad)
    p = open_probability(params)
    psum = float(p.sum())

    if isinstance(cfg.loss, LambdaRegularized):
        loss = -fw.trace / m + cfg.loss.lam * psum
    elif isinstance(cfg.loss, ParameterFree):
        denom = m * psum + cfg.loss.delta
        loss = -fw.trace / denom
    else:
        raise InvalidInputError(f"unknown loss variant {cfg.loss!r}")
    if not with_grad:
        return loss, None

    dT_dmu = _trace_grad_z(fw, cfg.t) * gate_subgradient_mask(sample)
    dp = open_probability_grad(params)
    if isinstance(cfg.loss, LambdaRegularized):
        grad = -dT_dmu / m + cfg.loss.lam * dp
    else:
        grad = -dT_dmu / denom + fw.trace * m * dp / denom ** 2
    return loss, grad


def loss_lambda(X, params, sample, cfg: TrainConfig, beta=None) -> float:
    if not isinstance(cfg.loss, LambdaRegularized):
        raise InvalidInputError("config does not select the lambda-regularized loss")
    return evaluate(X, params, sample, cfg, beta, with_grad=False)[0]


def loss_paramfree(X, params, sample, cfg: TrainConfig, beta=None) -> float:
    if not isinstance(cfg.loss, ParameterFree):
        raise InvalidInputError("config does not select the parameter-free loss")
    return evaluate(X, params, sample, cfg, beta, with_grad=False)[0]


def loss_value(X, params, sample, cfg: TrainConfig, beta=None) -> float:
    return evaluate(X, params, sample, cfg, beta, with_grad=False)[0]


def loss_gradient(X, params, sample, cfg: TrainConfig, beta=None) -> np.ndarray:
    return evaluate(X, params, sample, cfg, beta)[1]
