"""Clipped-Gaussian stochastic gates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import InvalidInputError

DEFAULT_SIGMA_G = 0.5
INITIAL_MU = 0.5


@dataclass
class GateParams:
    mu: np.ndarray
    sigma_g: float = DEFAULT_SIGMA_G

    def __post_init__(self):
        self.mu = np.array(self.mu, dtype=float)
        if not self.sigma_g > 0:
            raise InvalidInputError(f"sigma_g must be positive, got {self.sigma_g}")

    @classmethod
    def initial(cls, d: int, sigma_g: float = DEFAULT_SIGMA_G) -> "GateParams":
        return cls(np.full(d, INITIAL_MU), sigma_g)

    @property
    def d(self) -> int:
        return self.mu.shape[0]


@dataclass
class GateSample:
    z: np.ndarray
    epsilon: np.ndarray
    shifted: np.ndarray  # mu + epsilon before clipping


def gates_from_noise(params: GateParams, epsilon) -> GateSample:
    epsilon = np.asarray(epsilon, dtype=float)
    shifted = params.mu + epsilon
    return GateSample(np.clip(shifted, 0.0, 1.0), epsilon, shifted)


def sample_gates(params: GateParams, rng: np.random.Generator) -> GateSample:
    eps = rng.normal(0.0, params.sigma_g, size=params.d)
    return gates_from_noise(params, eps)


def deterministic_gates(params: GateParams) -> np.ndarray:
    return np.clip(params.mu, 0.0, 1.0)


def open_probability(params: GateParams) -> np.ndarray:
    """P(Z_i > 0), i.e. the standard normal CDF at ``mu / sigma_g``."""
    return 0.5 - 0.5 * erf(-params.mu / (math.sqrt(2.0) * params.sigma_g))


def open_probability_grad(params: GateParams) -> np.ndarray:
    s = params.sigma_g
    return np.exp(-params.mu ** 2 / (2.0 * s * s)) / (math.sqrt(2.0 * math.pi) * s)


def gate_subgradient_mask(sample: GateSample) -> np.ndarray:
    """dz/dmu: 1 strictly inside (0, 1), 0 on or beyond the clip boundaries."""
    u = sample.shifted
    return ((u > 0.0) & (u < 1.0)).astype(float)
