"""Jaccard similarity estimators for plain and private sketches.

Estimates are returned raw: unbiasedness requires that values outside
``[0, 1]`` are kept. Use :func:`clamp` only for display.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class SimilarityEstimate:
    value: float
    method: str
    p_col: Optional[float] = None

    def __post_init__(self):
        if self.method not in ("minhash", "rr", "laplace"):
            raise ValueError(f"unknown estimation method {self.method!r}")
        if self.p_col is not None and not 0.0 <= self.p_col <= 1.0:
            raise ValueError(f"collision rate must lie in [0, 1], got {self.p_col}")


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(getattr(x, "values", x))
    b = np.asarray(getattr(y, "values", y))
    if a.shape != b.shape:
        raise ValueError(f"sketch lengths differ: {a.shape} vs {b.shape}")
    return a, b


def collision_rate(x, y) -> float:
    a, b = _pair(x, y)
    return float(np.mean(a == b))


# The *_from_* helpers are vectorized and used directly by the experiment loops.

def minhash_from_collisions(p_col, B: int):
    return (B * np.asarray(p_col) - 1.0) / (B - 1)


def rr_from_collisions(p_col, B: int, p_star: float):
    denom = (B * p_star - 1.0) ** 2
    if denom == 0.0:
        raise ValueError("estimator undefined at zero budget (B * p_star == 1)")
    return (B - 1) * (B * np.asarray(p_col) - 1.0) / denom


def laplace_from_distance(sq_dist, K: int, B: int, scale: float):
    """Debiased estimate from the squared Euclidean distance of two noisy sketches."""
    spread = (B * B - 1) * K
    return (spread - 6.0 * np.asarray(sq_dist) + 24.0 * K * scale ** 2) / spread


def estimate_minhash(x, y, B: int) -> SimilarityEstimate:
    """Invert the range-B collision law ``p = (1 - J)/B + J``."""
    p = collision_rate(x, y)
    return SimilarityEstimate(float(minhash_from_collisions(p, B)), "minhash", p)


def estimate_rr(x, y, B: int, p_star: float) -> SimilarityEstimate:
    p = collision_rate(x, y)
    return SimilarityEstimate(float(rr_from_collisions(p, B, p_star)), "rr", p)


def estimate_laplace(x, y, B: int, scale: float) -> SimilarityEstimate:
    if scale < 0:
        raise ValueError(f"noise scale must be non-negative, got {scale}")
    a, b = _pair(x, y)
    d = float(np.sum((a.astype(np.float64) - b) ** 2))
    return SimilarityEstimate(float(laplace_from_distance(d, len(a), B, scale)), "laplace")


def rr_collision_prob(J: float, B: int, p_star: float) -> float:
    """Probability that two GRR responses agree in one slot, given true similarity J."""
    return (J + B * J * p_star * (B * p_star - 2.0) + B - 1.0) / (B * (B - 1.0))


def rr_error_bound(B: int, K: int, p_star: float, delta_fail: float) -> float:
    """Absolute-error radius of the RR estimate holding with probability 1 - delta_fail."""
    gap = B * p_star - 1.0
    if gap <= 0:
        raise ValueError(f"error bound needs B * p_star > 1, got {B * p_star}")
    num = 3.0 * math.log(1.0 / delta_fail) * B ** 3 * (1.0 + p_star * (B * p_star - 2.0))
    return math.sqrt(num / (K * gap ** 4))


def clamp(value):
    return np.clip(value, 0.0, 1.0)
