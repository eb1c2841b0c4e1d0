"""Synthetic user-vector pairs with a controlled Jaccard similarity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sketching import UserVector


@dataclass(frozen=True)
class PairSpec:
    m: int
    tau: int
    J_target: float
    seed: int = 0

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0.0 < self.J_target <= 1.0:
            raise ValueError(f"J_target must lie in (0, 1], got {self.J_target}")

    @property
    def overlap(self) -> int:
        return overlap_size(self.tau, self.J_target)


def overlap_size(tau: int, J: float) -> int:
    """Intersection size ``i`` whose ratio ``i / (2 tau - i)`` is closest to J (half-up)."""
    return int(math.floor(2 * tau * J / (1.0 + J) + 0.5))


def realized_jaccard(tau: int, i: int) -> float:
    return i / (2 * tau - i)


def gen_pair(spec: PairSpec) -> tuple[UserVector, UserVector, float]:
    """Two ``tau``-sets sharing ``spec.overlap`` items, drawn uniformly from ``[0, m)``."""
    tau, i = spec.tau, spec.overlap
    union = 2 * tau - i
    if spec.m < union:
        raise ValueError(f"universe of size {spec.m} is too small for {union} distinct items")
    rng = np.random.default_rng(spec.seed)
    pool = rng.choice(spec.m, size=union, replace=False)
    x = UserVector(pool[:tau], spec.m)
    y = UserVector(np.concatenate([pool[:i], pool[tau:]]), spec.m)
    return x, y, realized_jaccard(tau, i)


def true_jaccard(x: UserVector, y: UserVector) -> float:
    a, b = set(x.items), set(y.items)
    union = len(a | b)
    if union == 0:
        raise ValueError("Jaccard undefined on two empty sets")
    return len(a & b) / union
