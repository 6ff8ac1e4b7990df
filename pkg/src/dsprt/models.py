"""Observation models, log-likelihood ratio increments and closed-form SPRT theory.

Two regimes share one increment formula. A sensor observing ``xi ~ N(mu*h*j, h)``
under hypothesis ``j`` has log-likelihood ratio increment::

    ell = mu * xi - mu**2 * h / 2

``GaussianSampled`` uses it for genuinely discrete samples with period ``h``;
``BrownianDrift`` uses it as the exact increment over one Euler step ``h = dt``
of a Brownian motion with drift ``mu``. All logarithms are natural.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .errors import ConfigError


class ModelKind(enum.Enum):
    BROWNIAN_DRIFT = "brownian"
    GAUSSIAN_SAMPLED = "gaussian"


@dataclass(frozen=True)
class HypothesisModel:
    """Per-sensor pair H0: N(0, h) vs H1: N(mu*h, h) for each step of length ``h``."""

    kind: ModelKind
    mu: float
    h: float

    def __post_init__(self):
        if not isinstance(self.kind, ModelKind):
            object.__setattr__(self, "kind", ModelKind(self.kind))
        if not math.isfinite(self.mu):
            raise ConfigError(f"drift must be finite, got {self.mu}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigError(f"step length must be positive, got {self.h}")

    @classmethod
    def brownian(cls, mu: float, dt: float = 1e-3) -> "HypothesisModel":
        return cls(ModelKind.BROWNIAN_DRIFT, float(mu), float(dt))

    @classmethod
    def gaussian(cls, mu: float, h: float) -> "HypothesisModel":
        return cls(ModelKind.GAUSSIAN_SAMPLED, float(mu), float(h))

    @property
    def drift(self) -> float:
        """|E_j[ell]|, identical under both hypotheses."""
        return 0.5 * self.mu * self.mu * self.h

    @property
    def scale(self) -> float:
        """Standard deviation of ell under either hypothesis."""
        return abs(self.mu) * math.sqrt(self.h)

    def increment_mean(self, truth: int) -> float:
        return self.drift if truth else -self.drift

    def llr_of_observation(self, xi):
        return self.mu * xi - 0.5 * self.mu * self.mu * self.h

    def resampled(self, h: float) -> "HypothesisModel":
        """Same drift observed through steps of length ``h``."""
        return HypothesisModel(self.kind, self.mu, float(h))


@dataclass(frozen=True)
class ErrorLevels:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if self.alpha + self.beta >= 1.0:
            raise ConfigError("alpha + beta must be below 1")


@dataclass(frozen=True)
class SprtPerformance:
    e0_delay: float
    e1_delay: float
    kl0: float
    kl1: float


def llr_increment(model: HypothesisModel, draw, truth: int):
    """One increment of the local statistic from a standard normal ``draw``.

    The observation is ``xi = mu*h*truth + sqrt(h)*draw``; the returned value is
    ``mu*xi - mu**2*h/2`` written as ``(+/-)drift + scale*draw`` so that
    ``llr_increment(m, -z, 0) == -llr_increment(m, z, 1)`` holds exactly.
    """
    if truth not in (0, 1):
        raise ValueError(f"truth must be 0 or 1, got {truth}")
    s = model.mu * math.sqrt(model.h)
    if truth:
        return model.drift + s * draw
    return -model.drift + s * draw


def h_function(x: float, y: float) -> float:
    """x log(x/(1-y)) + (1-x) log((1-x)/y), the SPRT divergence at error levels."""
    if not (0.0 < x < 1.0 and 0.0 < y < 1.0):
        raise ValueError(f"h_function needs 0 < x, y < 1, got ({x}, {y})")
    return x * math.log(x / (1.0 - y)) + (1.0 - x) * math.log((1.0 - x) / y)


def wald_thresholds(levels: ErrorLevels) -> tuple[float, float]:
    """Thresholds (A, B) of the SPRT stopping on exit of (-A, B)."""
    a, b = levels.alpha, levels.beta
    return math.log((1.0 - a) / b), math.log((1.0 - b) / a)


def sprt_kl_lower_bounds(levels: ErrorLevels) -> tuple[float, float]:
    return h_function(levels.alpha, levels.beta), h_function(levels.beta, levels.alpha)


def sprt_performance_brownian(mu: Sequence[float], levels: ErrorLevels) -> SprtPerformance:
    """Exact delays and K-L divergences of the continuous-path SPRT."""
    norm2 = float(np.sum(np.square(np.asarray(mu, dtype=float))))
    if norm2 <= 0.0:
        raise ValueError("drift vector must be non-zero")
    kl0, kl1 = sprt_kl_lower_bounds(levels)
    return SprtPerformance(2.0 * kl0 / norm2, 2.0 * kl1 / norm2, kl0, kl1)


def local_error_levels(delta_lo: float, delta_hi: float) -> ErrorLevels:
    """Error levels of a continuous-path SPRT with thresholds (delta_lo, delta_hi).

    Inverts ``wald_thresholds``: ``alpha`` is the H0 probability of leaving
    through the upper threshold, ``beta`` the H1 probability of leaving below.
    """
    ea, eb = math.exp(-delta_lo), math.exp(-delta_hi)
    alpha = -math.expm1(-delta_lo) / (math.exp(delta_hi) - ea)
    beta = -math.expm1(-delta_hi) / (math.exp(delta_lo) - eb)
    return ErrorLevels(alpha, beta)


def brownian_mean_period(mu: float, delta_lo: float, delta_hi: float) -> tuple[float, float]:
    """(E0[tau], E1[tau]) for the local repeated SPRT on continuous paths."""
    perf = sprt_performance_brownian([mu], local_error_levels(delta_lo, delta_hi))
    return perf.e0_delay, perf.e1_delay


def gaussian_abs_moment(mean: float, sd: float, p: float) -> float:
    """E|X|**p for X ~ N(mean, sd**2), p > -1."""
    if sd <= 0:
        return abs(mean) ** p
    r = mean / sd
    return (sd**p * 2.0 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)
            * special.hyp1f1(-p / 2, 0.5, -0.5 * r * r))
