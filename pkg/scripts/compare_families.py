"""Keyed SplitMix64 hash family versus ideal random permutations.

For each (J, B) the script sketches one fixed pair with both families over many
independent slots and reports the collision rate against (1 - J)/B + J, and the
MAE of the plain estimator at K = 100 over repeated families. The ideal family
draws full permutations of a small universe, so the pair lives in [0, m) with
m = 256.

    python3 scripts/compare_families.py [--slots 50000] [--reps 500]
"""
import argparse
import math

import numpy as np

from private_minhash.estimation import minhash_from_collisions
from private_minhash.sketching import TableFamily, make_hash_family, sketch_items
from private_minhash.synthetic import PairSpec, gen_pair

M = 256
TAUS = {0.1: 11, 0.5: 30, 0.9: 19}


def collision_z(fam, xa, ya, q):
    n = fam.K
    rate = float(np.mean(sketch_items(fam, xa) == sketch_items(fam, ya)))
    return rate, (rate - q) / math.sqrt(q * (1 - q) / n)


def mae(make, xa, ya, J, B, K, reps):
    fam = make(K * reps)
    hits = (sketch_items(fam, xa) == sketch_items(fam, ya)).reshape(reps, K).mean(axis=1)
    err = np.abs(minhash_from_collisions(hits, B) - J)
    return float(err.mean()), float(err.std() / math.sqrt(reps))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=50_000)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    print("J,B,family,collision_rate,expected,z,mae_K100,mae_se")
    for J, tau in TAUS.items():
        x, y, Jr = gen_pair(PairSpec(m=M, tau=tau, J_target=J, seed=args.seed))
        xa, ya = x.as_array(), y.as_array()
        for B in (2, 3, 5):
            q = (1 - Jr) / B + Jr
            makers = {
                "keyed": lambda n: make_hash_family(n, B, M, args.seed),
                "ideal": lambda n: TableFamily.random(n, B, M, seed=args.seed),
            }
            for name, make in makers.items():
                rate, z = collision_z(make(args.slots), xa, ya, q)
                m, se = mae(make, xa, ya, Jr, B, 100, args.reps)
                print(f"{J},{B},{name},{rate:.5f},{q:.5f},{z:+.2f},{m:.4f},{se:.4f}")


if __name__ == "__main__":
    main()
