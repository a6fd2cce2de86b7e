"""Target data distributions: two-mode Gaussian mixture and Curie-Weiss spins.

Both targets put weight p on a "+" mode and 1 - p on a "-" mode along the
all-ones direction r (|r|^2 = d).  The mixture has per-mode variance sigma^2;
the Curie-Weiss target draws a global field eta = +-m with m the positive
root of m = tanh(beta m), then each spin independently with mean m sgn(eta).
The bias h encodes p through a logistic map (e^{mh} / (e^{mh} + e^{-mh}) = p,
with m = 1 for the mixture).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def bias_from_weight(p: float, m: float = 1.0) -> float:
    """Invert e^{mh} / (e^{mh} + e^{-mh}) = p for h."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"mode weight p={p} needs a finite bias only for 0 < p < 1")
    if m <= 0.0:
        raise ValueError("magnetization scale m must be positive")
    return math.log(p / (1.0 - p)) / (2.0 * m)


def cw_fixed_point(beta_temp: float) -> float:
    """Positive root of m = tanh(beta m), by bisection.

    Exists only for beta_temp > 1; 64 bisection steps drive the residual far
    below 1e-12 without the convergence caveats of Newton near beta -> 1+.
    """
    if beta_temp <= 1.0:
        raise ValueError(f"no positive root of m = tanh(beta m) for beta_temp={beta_temp} <= 1")
    lo, hi = 1e-12, 1.0  # f(lo) < 0 < f(hi) for beta > 1
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        if mid - math.tanh(beta_temp * mid) < 0.0:
            lo = mid
        else:
            hi = mid
    m = 0.5 * (lo + hi)
    assert abs(m - math.tanh(beta_temp * m)) < 1e-12
    return m


@dataclass(frozen=True)
class GaussianMixtureModel:
    """p N(r, sigma^2 Id) + (1-p) N(-r, sigma^2 Id) with r = (1, ..., 1)."""

    p: float
    sigma2: float
    d: int
    h: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.sigma2 < 0.0:
            raise ValueError("sigma2 must be nonnegative")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        object.__setattr__(self, "h", bias_from_weight(self.p))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        mode = 1.0 if rng.random() < self.p else -1.0
        return mode + math.sqrt(self.sigma2) * rng.standard_normal(self.d)


@dataclass(frozen=True)
class CurieWeissModel:
    """d binary spins coupled through a hidden field eta = +-m, m = tanh(beta m)."""

    p: float
    beta_temp: float
    d: int
    m: float = field(init=False)
    h: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        m = cw_fixed_point(self.beta_temp)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "h", bias_from_weight(self.p, m))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        # P(spin = +1 | eta) = (1 + tanh(beta eta)) / 2 = (1 + m sgn(eta)) / 2
        sign = 1.0 if rng.random() < self.p else -1.0
        plus_prob = 0.5 * (1.0 + sign * self.m)
        return np.where(rng.random(self.d) < plus_prob, 1.0, -1.0)


TargetModel = GaussianMixtureModel | CurieWeissModel


def sample_target(model: TargetModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one length-d vector from the target distribution."""
    return model.sample(rng)
