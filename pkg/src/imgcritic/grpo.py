"""Group-relative advantage normalization, clipped surrogate and KL penalty.

Advantages use population std with a small floor in the denominator; a
group of identical rewards yields all-zero advantages rather than 0/0.
The per-sample KL estimator is exp(d) - d - 1 with d = logp_ref - logp_new,
which is nonnegative and zero iff the log-probabilities agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# A reward group is any float sequence of length >= 2.
RewardGroup = Sequence[float]

DEFAULT_SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class SurrogateSample:
    """One sample's likelihood ratio, advantage and KL estimate."""

    ratio: float
    advantage: float
    kl: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.ratio) and self.ratio > 0.0):
            raise ValueError(f"ratio must be a positive finite real, got {self.ratio!r}")
        if not math.isfinite(self.advantage):
            raise ValueError(f"advantage must be finite, got {self.advantage!r}")
        if not (math.isfinite(self.kl) and self.kl >= 0.0):
            raise ValueError(f"kl must be a nonnegative finite real, got {self.kl!r}")


def group_advantages(
    rewards: RewardGroup, sigma_floor: float = DEFAULT_SIGMA_FLOOR
) -> np.ndarray:
    """Normalize rewards within the group: (r - mean) / max(std, floor).

    Identical rewards map to exactly zero advantages.
    """
    arr = np.asarray(rewards, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError(f"reward group must hold at least 2 rewards, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("rewards must be finite")
    if arr.max() == arr.min():
        return np.zeros_like(arr)
    centered = arr - arr.mean()
    std = float(np.sqrt(np.mean(centered * centered)))
    return centered / max(std, sigma_floor)


def clipped_surrogate(ratio: float, advantage: float, epsilon: float) -> float:
    """Pessimistic clipped objective term: min(rA, clip(r, 1-e, 1+e)A)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if ratio <= 0.0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    clipped = min(max(ratio, 1.0 - epsilon), 1.0 + epsilon)
    return min(ratio * advantage, clipped * advantage)


def kl_estimate(logp_new: float, logp_ref: float) -> float:
    """Nonnegative per-sample KL estimate from two log-probabilities."""
    if not (math.isfinite(logp_new) and math.isfinite(logp_ref)):
        raise ValueError("log-probabilities must be finite")
    delta = logp_ref - logp_new
    return math.exp(delta) - delta - 1.0


def rft_objective(
    samples: Sequence[SurrogateSample], epsilon: float, beta: float
) -> float:
    """Mean over samples of the clipped surrogate minus beta * KL."""
    if not samples:
        raise ValueError("rft_objective requires at least one sample")
    terms = [
        clipped_surrogate(s.ratio, s.advantage, epsilon) - beta * s.kl for s in samples
    ]
    return float(np.mean(terms))
