"""Locally differentially private MinHash sketches for Jaccard similarity estimation."""
from .estimation import (
    SimilarityEstimate,
    estimate_laplace,
    estimate_minhash,
    estimate_rr,
    rr_collision_prob,
    rr_error_bound,
)
from .privacy import (
    LapParams,
    PrivacyParams,
    PrivateSketchLap,
    PrivateSketchRR,
    RRParams,
    diff_bound,
    laplace_params,
    max_noise_bound,
    perturb_laplace,
    perturb_rr,
    rr_params,
    sample_laplace,
)
from .sketching import (
    HashFamily,
    Sketch,
    TableFamily,
    UserVector,
    make_hash_family,
    minwise_value,
    range_b_sketch,
)
from .synthetic import PairSpec, gen_pair, true_jaccard

__version__ = "0.1.0"
