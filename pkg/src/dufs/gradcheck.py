"""Analytic-vs-finite-difference checks for the DUFS loss gradient."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gates import GateParams, gates_from_noise
from .graph import KernelConfig, LocalMaxBandwidth, preprocess
from .objective import (LambdaRegularized, ParameterFree, TrainConfig, evaluate,
                        gated_denominator, loss_gradient)

STEP = 1e-5
TOLERANCE = 1e-4
SMALL = 1e-8
# Keep sampled mu + eps this far from the clip boundaries so that the
# central difference never straddles a kink.
BOUNDARY_MARGIN = 1e-3


def finite_difference_gradient(X, params: GateParams, epsilon, cfg: TrainConfig,
                               beta=None, h: float = STEP) -> np.ndarray:
    """Central differences of the loss in ``mu`` at fixed noise.

    A given ``beta`` is held fixed; with ``beta=None`` the denominator is
    recomputed at every perturbed point.
    """
    grad = np.zeros(params.d)
    for k in range(params.d):
        vals = []
        for sign in (1.0, -1.0):
            mu = params.mu.copy()
            mu[k] += sign * h
            shifted = GateParams(mu, params.sigma_g)
            vals.append(evaluate(X, shifted, gates_from_noise(shifted, epsilon), cfg,
                                 beta=beta, with_grad=False)[0])
        grad[k] = (vals[0] - vals[1]) / (2 * h)
    return grad


def relative_errors(analytic, numeric, small: float = SMALL) -> np.ndarray:
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return np.where(scale < small, diff, diff / np.where(scale < small, 1.0, scale))


@dataclass
class CheckCase:
    index: int
    n: int
    d: int
    loss: str
    t: int
    max_error: float
    worst_coordinate: int
    analytic: np.ndarray = field(repr=False)
    numeric: np.ndarray = field(repr=False)


@dataclass
class GradcheckReport:
    cases: list
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(c.max_error for c in self.cases)

    @property
    def worst(self) -> CheckCase:
        return max(self.cases, key=lambda c: c.max_error)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def random_instance(rng: np.random.Generator, n: int, d: int, sigma_g: float = 0.5):
    """Random preprocessed data, gate means and interior-safe noise."""
    X = preprocess(rng.normal(size=(n, d))).values
    mu = rng.uniform(-0.3, 1.3, size=d)
    eps = rng.normal(0.0, sigma_g, size=d)
    for _ in range(100):
        u = mu + eps
        bad = (np.abs(u) < BOUNDARY_MARGIN) | (np.abs(u - 1.0) < BOUNDARY_MARGIN)
        if not bad.any():
            break
        eps[bad] = rng.normal(0.0, sigma_g, size=bad.sum())
    return X, GateParams(mu, sigma_g), eps


def run_gradcheck(n_cases: int = 50, seed: int = 0, n_range=(6, 16), d_range=(3, 8),
                  gradient_fn=loss_gradient, tolerance: float = TOLERANCE,
                  fixed_denominator: bool = True) -> GradcheckReport:
    """Compare ``gradient_fn`` against central differences on random instances.

    Cases cycle through both loss variants and t in {1, 2, 3}; the kernel uses
    the local max-neighbour bandwidth with k=2, C=5.  With
    ``fixed_denominator=False`` the kernel denominator follows the perturbed
    gates and the analytic gradient includes its derivative.
    """
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(n_cases):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        X, params, eps = random_instance(rng, n, d)
        loss = (ParameterFree(), LambdaRegularized(float(rng.uniform(0.01, 2.0))))[i % 2]
        t = 1 + (i // 2) % 3
        cfg = TrainConfig(loss=loss, t=t, kernel=KernelConfig(LocalMaxBandwidth(2, 5.0)))
        sample = gates_from_noise(params, eps)
        beta = gated_denominator(X, sample.z, cfg.kernel) if fixed_denominator else None
        analytic = gradient_fn(X, params, sample, cfg, beta=beta)
        numeric = finite_difference_gradient(X, params, eps, cfg, beta)
        err = relative_errors(analytic, numeric)
        cases.append(CheckCase(i, n, d, type(loss).__name__, t, float(err.max()),
                               int(err.argmax()), analytic, numeric))
    return GradcheckReport(cases, tolerance)
