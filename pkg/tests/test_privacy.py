import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from private_minhash.privacy import (
    LapParams,
    PrivacyParams,
    PrivateSketchLap,
    PrivateSketchRR,
    RRParams,
    diff_bound,
    grr_likelihood,
    grr_max_ratio,
    grr_respond,
    keep_probability,
    laplace_from_uniform,
    laplace_params,
    max_noise_bound,
    perturb_laplace,
    perturb_rr,
    rr_params,
    sample_laplace,
)
from private_minhash.sketching import Sketch


def diff_bound_mp(K, B, alpha, tau, delta):
    mpmath.mp.dps = 40
    r = mpmath.mpf(alpha) / tau
    s = 1 - mpmath.mpf(1) / B
    return K * r * s + mpmath.sqrt(3 * mpmath.log(1 / mpmath.mpf(delta)) * s * K * r)


def rr_fixed(p_star, B, K):
    return RRParams(L=1, epsilon_prime=math.log(p_star * (B - 1) / (1 - p_star)) if p_star < 1 else math.inf,
                    p_star=p_star, B=B, K=K)


# -- parameter calculus ------------------------------------------------------

def test_privacy_params_validation():
    with pytest.raises(ValueError, match="vacuous"):
        PrivacyParams(1.0, 1e-4, alpha=10, tau=5)
    with pytest.raises(ValueError):
        PrivacyParams(0.0, 1e-4, 1, 5)
    with pytest.raises(ValueError):
        PrivacyParams(1.0, 1.0, 1, 5)


@pytest.mark.parametrize("K,B,alpha,tau,delta,ceiled", [
    (100, 2, 1, 500, 1e-4, 2),
    (400, 2, 1, 50, 1e-4, 15),
    (80, 3, 1, 2000, 1e-4, 1),
    (500, 5, 2, 50, 1e-3, None),
])
def test_diff_bound_matches_high_precision(K, B, alpha, tau, delta, ceiled):
    pp = PrivacyParams(4.0, delta, alpha, tau)
    expected = float(diff_bound_mp(K, B, alpha, tau, delta))
    assert diff_bound(K, B, pp) == pytest.approx(expected, rel=1e-13)
    want = min(max(math.ceil(expected), 1), K) if ceiled is None else ceiled
    assert diff_bound(K, B, pp, ceiled=True) == want


def test_diff_bound_reference_values():
    pp = PrivacyParams(4.0, 1e-4, 1, 500)
    assert diff_bound(100, 2, pp) == pytest.approx(1.7623, abs=1e-4)
    assert diff_bound(400, 2, PrivacyParams(4.0, 1e-4, 1, 50)) == pytest.approx(14.513, abs=1e-3)


def test_diff_bound_clamps():
    tiny = PrivacyParams(1.0, 0.5, 1, 10**9)
    assert diff_bound(10, 2, tiny) < 1e-3
    assert diff_bound(10, 2, tiny, ceiled=True) == 1
    huge = PrivacyParams(1.0, 1e-9, 5, 5)
    assert diff_bound(10, 5, huge) > 10
    assert diff_bound(10, 5, huge, ceiled=True) == 10


@pytest.mark.parametrize("eps_prime,B,expected", [
    (math.log(6), 3, 0.75),
    (math.log(3), 3, 0.6),
    (0.0, 4, 0.25),
    (1e-12, 2, 0.5),
])
def test_keep_probability(eps_prime, B, expected):
    assert keep_probability(eps_prime, B) == pytest.approx(expected, abs=1e-12)


def test_rr_params_splits_budget():
    pp = PrivacyParams(4.0, 1e-4, 1, 50)
    rp = rr_params(400, 2, pp)
    assert rp.L == 15
    assert rp.epsilon_prime == pytest.approx(4 / 15)
    e = math.exp(4 / 15)
    assert rp.p_star == pytest.approx(e / (e + 1))
    assert rp.p_star > 1 / 2


def test_laplace_params_use_unceiled_bound():
    pp = PrivacyParams(4.0, 1e-4, 1, 500)
    lp = laplace_params(100, 2, pp)
    assert lp.sensitivity == pytest.approx(float(diff_bound_mp(100, 2, 1, 500, 1e-4)), rel=1e-13)
    assert lp.scale == pytest.approx(0.4406, abs=1e-4)
    lp3 = laplace_params(100, 3, pp)
    assert lp3.sensitivity == pytest.approx(2 * diff_bound(100, 3, pp))


# -- randomized response -----------------------------------------------------

def test_perturb_rr_noiseless():
    s = Sketch(np.array([0, 2, 1, 1, 2]), 3)
    out = perturb_rr(s, rr_fixed(1.0, 3, 5), rng=3)
    assert np.array_equal(out.values, s.values)


def test_worked_example_rr_injected():
    x = grr_respond(np.array([2, 0, 1, 2]), 3, keep=[1, 1, 0, 1], offsets=[0, 0, 1, 0])
    y = grr_respond(np.array([2, 0, 2, 2]), 3, keep=[0, 1, 1, 1], offsets=[0, 0, 0, 0])
    assert x.tolist() == [2, 0, 2, 2]
    assert y.tolist() == [0, 0, 2, 2]


def test_replacement_never_returns_true_value():
    B = 5
    values = np.repeat(np.arange(B), B - 1)
    offsets = np.tile(np.arange(B - 1), B)
    out = grr_respond(values, B, keep=np.zeros(len(values), bool), offsets=offsets)
    assert not np.any(out == values)
    for v in range(B):
        assert sorted(out[values == v].tolist()) == [b for b in range(B) if b != v]


@pytest.mark.parametrize("K,B,p_star", [(3, 2, 0.75), (2, 3, 0.6), (3, 3, 0.9)])
def test_rr_distribution_matches_product_law(K, B, p_star):
    """Enumerate every keep/offset choice and compare with the closed form."""
    x = np.arange(K) % B
    dist = {}
    flip = (1 - p_star) / (B - 1)
    for keep in itertools.product([True, False], repeat=K):
        for offs in itertools.product(range(B - 1), repeat=K):
            prob = 1.0
            for kp in keep:
                prob *= p_star if kp else (1 - p_star)
            # offsets only matter where the slot flips
            prob *= math.prod(1 / (B - 1) for kp in keep if not kp)
            if any(o != 0 for kp, o in zip(keep, offs) if kp):
                continue
            v = tuple(grr_respond(x, B, np.array(keep), np.array(offs)).tolist())
            dist[v] = dist.get(v, 0.0) + prob
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    for v in itertools.product(range(B), repeat=K):
        same = sum(a == b for a, b in zip(x, v))
        closed = p_star ** same * flip ** (K - same)
        assert dist.get(v, 0.0) == pytest.approx(closed, abs=1e-12)
        assert grr_likelihood(x, v, B, p_star) == pytest.approx(closed, abs=1e-12)


@pytest.mark.parametrize("B", [2, 3, 7])
def test_keep_rate_marginal(B):
    R = 200_000
    p = 0.7
    s = Sketch(np.arange(R) % B, B)
    out = perturb_rr(s, rr_fixed(p, B, R), rng=12)
    rate = np.mean(out.values == s.values)
    assert abs(rate - p) <= 3 * math.sqrt(p * (1 - p) / R)
    flipped = out.values[out.values != s.values]
    assert flipped.min() >= 0 and flipped.max() < B


def test_rr_deterministic_under_seed():
    s = Sketch(np.arange(50) % 3, 3)
    rp = rr_fixed(0.6, 3, 50)
    assert perturb_rr(s, rp, rng=9) == perturb_rr(s, rp, rng=9)
    assert perturb_rr(s, rp, rng=9) != perturb_rr(s, rp, rng=10)


@settings(max_examples=40, deadline=None)
@given(K=st.integers(1, 4), B=st.sampled_from([2, 3]), eps=st.floats(0.1, 5.0), data=st.data())
def test_grr_privacy_ratio(K, B, eps, data):
    L = data.draw(st.integers(1, K))
    x = data.draw(st.lists(st.integers(0, B - 1), min_size=K, max_size=K))
    y = list(x)
    d = data.draw(st.integers(0, L))
    for i in range(d):
        y[i] = (y[i] + 1) % B
    eps_prime = eps / L
    ratio = grr_max_ratio(x, y, B, keep_probability(eps_prime, B))
    assert ratio <= math.exp(eps_prime * d) * (1 + 1e-9)
    assert ratio <= math.exp(eps) * (1 + 1e-9)


def test_grr_ratio_is_tight_for_one_difference():
    p = keep_probability(1.3, 3)
    assert grr_max_ratio([0, 1], [2, 1], 3, p) == pytest.approx(math.exp(1.3))


# -- Laplace -------------------------------------------------------------------

def test_sample_laplace_rejects_bad_scale():
    with pytest.raises(ValueError):
        sample_laplace(0.0, rng=1)
    with pytest.raises(ValueError):
        sample_laplace(-1.0, rng=1)


def test_laplace_inverse_cdf_against_scipy():
    from scipy import stats
    u = np.linspace(0.001, 0.999, 999)
    np.testing.assert_allclose(laplace_from_uniform(u, 0.7), stats.laplace(scale=0.7).ppf(u), atol=1e-12)


def test_laplace_moments():
    x = sample_laplace(1.0, rng=2024, size=1_000_000)
    assert abs(x.mean()) < 0.005
    y = sample_laplace(0.5, rng=2025, size=1_000_000)
    assert abs(y.var() - 0.5) < 0.01


def test_laplace_ks():
    from scipy import stats
    x = sample_laplace(0.3, rng=6, size=50_000)
    assert stats.kstest(x, stats.laplace(scale=0.3).cdf).pvalue > 0.001


def test_laplace_tail_bound_k1():
    x = sample_laplace(1.0, rng=77, size=1_000_000)
    assert np.mean(np.abs(x) >= math.log(1 / 0.05)) <= 0.05


def test_sample_laplace_scalar_and_deterministic():
    a = sample_laplace(1.0, rng=5)
    assert isinstance(a, float)
    assert a == sample_laplace(1.0, rng=5)


def test_perturb_laplace_vanishing_noise():
    s = Sketch(np.array([2, 0, 1, 2]), 3)
    lp = LapParams(sensitivity=1e-300, epsilon=1.0, B=3, K=4)
    out = perturb_laplace(s, lp, rng=1)
    np.testing.assert_allclose(out.values, s.values, atol=1e-250)


def test_worked_example_laplace_injected():
    s = Sketch(np.array([2, 0, 1, 2]), 3)
    lp = LapParams(sensitivity=0.1, epsilon=1.0, B=3, K=4)
    out = perturb_laplace(s, lp, noise=[-0.02, 0.02, 0.23, -0.92])
    np.testing.assert_allclose(out.values, [1.98, 0.02, 1.23, 1.08], atol=1e-12)


def test_perturb_laplace_mean_noise_zero():
    s = Sketch(np.array([0, 1, 2, 1]), 3)
    lp = LapParams(sensitivity=0.44, epsilon=1.0, B=3, K=4)
    gen = np.random.default_rng(31)
    diffs = np.array([perturb_laplace(s, lp, gen).values - s.values for _ in range(100_000)])
    assert np.all(np.abs(diffs.mean(axis=0)) < 0.02)


def test_private_lap_round_trip_is_exact():
    v = PrivateSketchLap(sample_laplace(0.37, rng=8, size=20) + 1)
    back = PrivateSketchLap.from_line(v.to_line())
    assert back == v


def test_private_lap_rejects_non_finite():
    with pytest.raises(ValueError):
        PrivateSketchLap(np.array([1.0, np.inf]))


def test_private_rr_serializes_like_sketch():
    p = PrivateSketchRR(np.array([1, 0, 2]), 3)
    assert p.to_line() == "1,0,2"
    assert PrivateSketchRR.from_line("1,0,2", 3) == p


# -- max-noise bound ---------------------------------------------------------

def test_max_noise_bound_values():
    assert max_noise_bound(1, 1 / math.e, 1.0) == pytest.approx(1.0)
    assert max_noise_bound(100, 0.04, 0.1) == pytest.approx(math.log(2500) * 0.1)
    assert max_noise_bound(100, 0.04, 0.1) == pytest.approx(0.7824, abs=1e-4)


@pytest.mark.parametrize("K", [1, 16, 100])
def test_max_noise_bound_holds(K):
    delta = 0.05
    noise = sample_laplace(0.3, rng=K, size=(20_000, K))
    frac = np.mean(np.abs(noise).max(axis=1) > max_noise_bound(K, delta, 0.3))
    assert frac <= delta
