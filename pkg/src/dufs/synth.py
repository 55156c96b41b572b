"""Synthetic benchmarks and the chi-square analysis of nuisance dimensions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import InvalidInputError
from .graph import KernelConfig, LocalMaxBandwidth

NuisanceDist = Literal["gaussian", "uniform"]
ExponentConvention = Literal["2n^2-n", "2n^2-1"]


@dataclass(frozen=True)
class TwoMoonsConfig:
    n: int = 100
    d_nuisance: int = 8
    signal_noise_var: float = 0.1
    nuisance_dist: NuisanceDist = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise InvalidInputError(f"n must be an even number >= 2, got {self.n}")
        if self.d_nuisance < 0:
            raise InvalidInputError("d_nuisance must be non-negative")
        if self.signal_noise_var < 0:
            raise InvalidInputError("signal_noise_var must be non-negative")
        if self.nuisance_dist not in ("gaussian", "uniform"):
            raise InvalidInputError(f"unknown nuisance distribution {self.nuisance_dist!r}")


@dataclass
class SyntheticData:
    X: np.ndarray
    labels: np.ndarray
    informative: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))


def gen_two_moons(cfg: TwoMoonsConfig) -> SyntheticData:
    """Two interleaved half circles in the first two columns, nuisance after.

    Upper moon: ``(cos t, sin t)``; lower moon: ``(1 - cos t, 1/2 - sin t)``,
    ``t ~ U[0, pi]``, then isotropic Gaussian noise of variance
    ``signal_noise_var``.  Nuisance columns are N(0, 1) or U(0, 1).
    """
    rng = np.random.default_rng(cfg.seed)
    half = cfg.n // 2
    theta = rng.uniform(0.0, np.pi, size=cfg.n)
    labels = np.repeat([0, 1], half)
    x = np.where(labels == 0, np.cos(theta), 1.0 - np.cos(theta))
    y = np.where(labels == 0, np.sin(theta), 0.5 - np.sin(theta))
    signal = np.column_stack([x, y])
    signal += rng.normal(0.0, math.sqrt(cfg.signal_noise_var), size=signal.shape)
    if cfg.nuisance_dist == "gaussian":
        nuisance = rng.normal(size=(cfg.n, cfg.d_nuisance))
    else:
        nuisance = rng.uniform(size=(cfg.n, cfg.d_nuisance))
    return SyntheticData(np.hstack([signal, nuisance]), labels, np.array([0, 1]))


@dataclass(frozen=True)
class TwoClusterConfig:
    n_per_cluster: int = 50
    r: float = 5.0
    d_nuisance: int = 0
    nuisance_std: float = 1.0 / math.sqrt(2.0)
    seed: int = 0

    def __post_init__(self):
        if self.n_per_cluster < 1:
            raise InvalidInputError("n_per_cluster must be >= 1")
        if self.r < 0:
            raise InvalidInputError("r must be non-negative")
        if self.d_nuisance < 0 or not self.nuisance_std > 0:
            raise InvalidInputError("invalid nuisance specification")


def gen_two_clusters(cfg: TwoClusterConfig) -> SyntheticData:
    """Two point masses at 0 and ``r`` on the first axis plus Gaussian nuisance."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_per_cluster
    labels = np.repeat([0, 1], n)
    first = np.where(labels == 0, 0.0, cfg.r)[:, None]
    nuisance = rng.normal(0.0, cfg.nuisance_std, size=(2 * n, cfg.d_nuisance))
    return SyntheticData(np.hstack([first, nuisance]), labels, np.array([0]))


@dataclass(frozen=True)
class TailBound:
    upper_threshold: float  # P(X - d >= upper_threshold) <= upper_bound
    upper_bound: float
    lower_threshold: float  # P(d - X >= lower_threshold) <= lower_bound
    lower_bound: float


def chi_square_tail_bound(d: int, gamma: float) -> TailBound:
    """Laurent-Massart deviation bounds for a chi-square with ``d`` dof."""
    if d < 1:
        raise InvalidInputError("d must be >= 1")
    if gamma < 0:
        raise InvalidInputError("gamma must be non-negative")
    root = 2.0 * math.sqrt(d * gamma)
    bound = math.exp(-gamma)
    return TailBound(root + 2.0 * gamma, bound, root, bound)


@dataclass(frozen=True)
class BoundInputs:
    r: float
    n: int
    fail_prob: float = 0.05
    exponent_convention: ExponentConvention = "2n^2-n"

    def __post_init__(self):
        if not 0 < self.fail_prob < 1:
            raise InvalidInputError("fail_prob must lie in (0, 1)")
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")
        if self.exponent_convention not in ("2n^2-n", "2n^2-1"):
            raise InvalidInputError(f"unknown exponent convention {self.exponent_convention!r}")

    @property
    def exponent(self) -> int:
        n = self.n
        return 2 * n * n - (n if self.exponent_convention == "2n^2-n" else 1)


@dataclass(frozen=True)
class BoundResult:
    gamma: float
    d_max: float
    sufficient: bool
    note: str = ""


def predicted_max_nuisance_dims(inputs: BoundInputs) -> BoundResult:
    """Largest nuisance dimension for which all nearest neighbours stay
    within their own cluster with probability at least ``1 - fail_prob``.

    ``gamma = -log(1 - (1 - eps)^(1/E))`` and
    ``d_max = ((r^2 - 2 gamma) / (4 sqrt(gamma)))^2`` (0 when ``r^2 <= 2 gamma``).
    """
    # 1 - (1-eps)^(1/E) without cancellation
    q = -math.expm1(math.log1p(-inputs.fail_prob) / inputs.exponent)
    if q <= 0.0:
        return BoundResult(math.inf, 0.0, False,
                           f"fail_prob={inputs.fail_prob!r} underflows the per-pair budget")
    gamma = -math.log(q)
    r2 = inputs.r ** 2
    if r2 <= 2.0 * gamma:
        return BoundResult(gamma, 0.0, False, "separation too small: r^2 <= 2 gamma")
    return BoundResult(gamma, ((r2 - 2.0 * gamma) / (4.0 * math.sqrt(gamma))) ** 2, True)


@dataclass
class BreakdownSweep:
    r_grid: np.ndarray
    d_grid: np.ndarray
    mean_corr: np.ndarray  # (len(r_grid), len(d_grid))
    std_corr: np.ndarray
    d_star: np.ndarray     # NaN where censored
    threshold: float

    @property
    def censored(self) -> np.ndarray:
        return np.isnan(self.d_star)

    def curve_rows(self):
        for i, r in enumerate(self.r_grid):
            for j, d in enumerate(self.d_grid):
                yield float(r), int(d), float(self.mean_corr[i, j]), float(self.std_corr[i, j])

    def loglog_slope(self) -> float:
        ok = ~self.censored & (self.r_grid > 0) & (self.d_star > 0)
        if ok.sum() < 2:
            raise InvalidInputError("need at least two uncensored points to fit a slope")
        return float(np.polyfit(np.log(self.r_grid[ok]), np.log(self.d_star[ok]), 1)[0])


def crossing_point(d_grid, mean_corr, threshold: float) -> float:
    """First d at which the curve falls below ``threshold`` (linear
    interpolation between grid points); NaN if it never does."""
    below = np.flatnonzero(np.asarray(mean_corr) < threshold)
    if below.size == 0:
        return math.nan
    j = below[0]
    if j == 0:
        return float(d_grid[0])
    d0, d1 = d_grid[j - 1], d_grid[j]
    c0, c1 = mean_corr[j - 1], mean_corr[j]
    return float(d0 + (c0 - threshold) * (d1 - d0) / (c0 - c1))


DEFAULT_SWEEP_KERNEL = KernelConfig(LocalMaxBandwidth(k=2, C=5.0))


def default_breakdown_d_grid() -> list:
    """Log-spaced nuisance dimensions wide enough for r up to about 8."""
    return sorted({int(round(v)) for v in np.geomspace(10, 60000, 50)})


def empirical_breakdown_sweep(r_grid: Sequence[float], d_grid: Sequence[int], n: int = 50,
                              threshold: float = 0.7, seeds: Sequence[int] = range(10),
                              kernel: KernelConfig = DEFAULT_SWEEP_KERNEL,
                              nuisance_std: float = 1.0 / math.sqrt(2.0)) -> BreakdownSweep:
    """Correlation of the second random-walk eigenvector with the cluster
    labels over an (r, d) grid, and the breakdown dimension per r."""
    from .evalkit import eigvec_label_correlation

    if not 0 < threshold < 1:
        raise InvalidInputError("threshold must lie in (0, 1)")
    r_grid = np.asarray(list(r_grid), dtype=float)
    d_grid = np.asarray(list(d_grid), dtype=int)
    seeds = list(seeds)
    if r_grid.size == 0 or d_grid.size == 0 or not seeds:
        raise InvalidInputError("empty sweep grid")

    corr = np.zeros((r_grid.size, d_grid.size, len(seeds)))
    for i, r in enumerate(r_grid):
        for j, d in enumerate(d_grid):
            for s, seed in enumerate(seeds):
                data = gen_two_clusters(TwoClusterConfig(n, float(r), int(d), nuisance_std, seed))
                corr[i, j, s] = eigvec_label_correlation(data.X, data.labels, kernel)
    mean, std = corr.mean(axis=2), corr.std(axis=2)
    d_star = np.array([crossing_point(d_grid, mean[i], threshold) for i in range(r_grid.size)])
    return BreakdownSweep(r_grid, d_grid, mean, std, d_star, threshold)
