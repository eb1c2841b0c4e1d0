"""Privacy-budget calculus and the two sketch perturbation mechanisms.

Neighboring inputs differ in at most ``alpha`` items and hold at least ``tau``
items each. Their sketches differ in at most ``L`` slots except with
probability ``delta``. Generalized randomized response spends ``epsilon / L``
per slot. The Laplace mechanism uses sensitivity ``(B - 1) * L``.

Note: ``sample_laplace`` is a plain inverse-CDF sampler on doubles and is not
hardened against floating-point attacks on the Laplace mechanism.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .sketching import Sketch


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float
    alpha: int
    tau: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.alpha < 1 or self.tau < 1:
            raise ValueError("alpha and tau must be positive integers")
        if self.alpha > self.tau:
            raise ValueError(f"alpha={self.alpha} > tau={self.tau}: neighboring notion is vacuous")


def diff_bound(K: int, B: int, pp: PrivacyParams, ceiled: bool = False):
    """High-probability bound on the number of differing slots between neighbors.

    ``K (a/t)(1 - 1/B) + sqrt(3 ln(1/delta) (1 - 1/B) K a/t)`` where ``a/t`` is
    ``alpha / tau``. The ceiled form is an int clamped to ``[1, K]``.
    """
    ratio = pp.alpha / pp.tau
    spread = 1.0 - 1.0 / B
    raw = K * ratio * spread + math.sqrt(3.0 * math.log(1.0 / pp.delta) * spread * K * ratio)
    if not ceiled:
        return raw
    return min(max(math.ceil(raw), 1), K)


def keep_probability(epsilon_prime: float, B: int) -> float:
    """GRR keep probability ``e^eps' / (e^eps' + B - 1)``, stable for large eps'."""
    return 1.0 / (1.0 + (B - 1) * math.exp(-epsilon_prime))


@dataclass(frozen=True)
class RRParams:
    L: int
    epsilon_prime: float
    p_star: float
    B: int
    K: int


def rr_params(K: int, B: int, pp: PrivacyParams) -> RRParams:
    L = diff_bound(K, B, pp, ceiled=True)
    eps_prime = pp.epsilon / L
    return RRParams(L=L, epsilon_prime=eps_prime, p_star=keep_probability(eps_prime, B), B=B, K=K)


@dataclass(frozen=True)
class LapParams:
    """Laplace noise calibration; ``scale = sensitivity / epsilon``."""

    sensitivity: float
    epsilon: float
    B: int
    K: int

    @property
    def scale(self) -> float:
        return self.sensitivity / self.epsilon


def laplace_params(K: int, B: int, pp: PrivacyParams) -> LapParams:
    # un-ceiled L here, unlike rr_params
    return LapParams(sensitivity=(B - 1) * diff_bound(K, B, pp), epsilon=pp.epsilon, B=B, K=K)


@dataclass(frozen=True, eq=False)
class PrivateSketchRR(Sketch):
    """Randomized-response output; same shape and wire format as :class:`Sketch`."""


@dataclass(frozen=True, eq=False)
class PrivateSketchLap:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) == 0:
            raise ValueError("sketch must be a non-empty 1-d vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("noisy sketch entries must be finite")
        object.__setattr__(self, "values", v)

    @property
    def K(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        return isinstance(other, PrivateSketchLap) and np.array_equal(self.values, other.values)

    def to_line(self) -> str:
        # repr() of a Python float is the shortest string that round-trips
        return ",".join(repr(float(v)) for v in self.values)

    @classmethod
    def from_line(cls, line: str) -> "PrivateSketchLap":
        return cls(np.array([float(tok) for tok in line.strip().split(",")]))


def grr_respond(values: np.ndarray, B: int, keep: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Apply GRR given the random choices explicitly.

    Where ``keep`` is false the slot is replaced by ``offsets[i]`` (a draw from
    ``[0, B - 1)``), shifted past the true value so that every other bucket is
    equally likely.
    """
    values = np.asarray(values, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    if np.any((offsets < 0) | (offsets >= B - 1)):
        raise ValueError(f"offsets must lie in [0, {B - 1})")
    replaced = offsets + (offsets >= values)
    return np.where(np.asarray(keep, dtype=bool), values, replaced)


def perturb_rr(s: Sketch, rp: RRParams, rng=None) -> PrivateSketchRR:
    """Keep each slot w.p. ``p_star``, else resample uniformly from the other buckets.

    ``rng`` is anything ``np.random.default_rng`` accepts.
    """
    gen = np.random.default_rng(rng)
    keep = gen.random(s.K) < rp.p_star
    offsets = gen.integers(0, rp.B - 1, size=s.K) if rp.B > 2 else np.zeros(s.K, dtype=np.int64)
    return PrivateSketchRR(grr_respond(s.values, rp.B, keep, offsets), rp.B)


def grr_likelihood(source, v, B: int, p_star: float) -> float:
    """Exact ``Pr[GRR(source) = v]`` from the per-slot product law."""
    source = np.asarray(source)
    v = np.asarray(v)
    same = int(np.sum(source == v))
    flip = (1.0 - p_star) / (B - 1)
    return p_star ** same * flip ** (len(source) - same)


def grr_max_ratio(x, y, B: int, p_star: float) -> float:
    """Max over all outputs ``v`` of ``Pr[GRR(x) = v] / Pr[GRR(y) = v]``, by enumeration."""
    return max(
        grr_likelihood(x, v, B, p_star) / grr_likelihood(y, v, B, p_star)
        for v in itertools.product(range(B), repeat=len(x))
    )


def laplace_from_uniform(u: np.ndarray, scale: float) -> np.ndarray:
    """Inverse Laplace CDF for ``u`` in the open interval (0, 1)."""
    c = np.asarray(u, dtype=np.float64) - 0.5
    return -scale * np.sign(c) * np.log1p(-2.0 * np.abs(c))


def sample_laplace(scale: float, rng=None, size=None):
    """Laplace(0, scale) via inverse CDF on a 53-bit uniform taken from 64 random bits."""
    if not scale > 0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")
    gen = np.random.default_rng(rng)
    n = 1 if size is None else size
    bits = gen.integers(0, np.iinfo(np.uint64).max, size=n, dtype=np.uint64, endpoint=True)
    # midpoint of one of 2^53 equal cells: never exactly 0 or 1
    u = ((bits >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0 ** 53
    out = laplace_from_uniform(u, scale)
    return float(out[0]) if size is None else out


def perturb_laplace(s: Sketch, lp: LapParams, rng=None, noise=None) -> PrivateSketchLap:
    """``s + Lap(scale)`` per slot. ``noise`` injects the draws explicitly."""
    if noise is None:
        noise = sample_laplace(lp.scale, rng, size=s.K)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != s.values.shape:
        raise ValueError("noise must match the sketch length")
    return PrivateSketchLap(s.values + noise)


def max_noise_bound(K: int, delta_fail: float, scale: float) -> float:
    """``ln(K / delta_fail) * scale``: the max |noise| over K slots exceeds it w.p. <= delta_fail."""
    if K < 1 or not 0 < delta_fail <= 1 or not scale > 0:
        raise ValueError("need K >= 1, delta_fail in (0, 1] and scale > 0")
    return math.log(K / delta_fail) * scale

