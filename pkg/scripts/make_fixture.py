"""Generate tests/data/mini_ratings.dat: a 20-user ratings file in hetrec layout.

Two taste clusters plus a pool of popular movies, 120 movies in all. Users
rate popular and in-cluster movies high and a few others low, so thresholding
at 4 leaves overlapping sets and many users have ten neighbors with
Jaccard >= 0.1.

    python scripts/make_fixture.py [out_path]
"""
import sys
from pathlib import Path

import numpy as np

N_USERS = 20
N_MOVIES = 120
SEED = 20240


def main(out):
    rng = np.random.default_rng(SEED)
    movie_ids = rng.choice(np.arange(1000, 9000), size=N_MOVIES, replace=False)
    popular = np.arange(8)
    clusters = [np.arange(8, 28), np.arange(28, 48)]
    lines = ["userID\tmovieID\trating"]
    for u in range(N_USERS):
        pool = clusters[u % 2]
        n_pop = int(rng.integers(3, 7))
        n_in = int(rng.integers(6, 15))
        n_out = int(rng.integers(3, 10))
        liked = np.concatenate([rng.choice(popular, size=n_pop, replace=False),
                                rng.choice(pool, size=n_in, replace=False)])
        others = np.setdiff1d(np.arange(N_MOVIES), np.concatenate([popular, pool]))
        rest = rng.choice(others, size=n_out, replace=False)
        for m in liked:
            lines.append(f"{100 + u}\t{movie_ids[m]}\t{rng.integers(6, 11) / 2}")
        for m in rest:
            lines.append(f"{100 + u}\t{movie_ids[m]}\t{rng.integers(1, 9) / 2}")
    Path(out).write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines) - 1} ratings for {N_USERS} users to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent.parent / "tests/data/mini_ratings.dat")
