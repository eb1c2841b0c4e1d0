"""Nearest-neighbor table on the hetrec-2011 MovieLens and Last.FM dumps.

Builds the four datasets (MovieLens at min size 50, 100, 500 with threshold 4;
Last.FM top-20 artists at min size 20), prints their statistics and runs the
NN experiment on each over a K grid. The result is one CSV per dataset.

    python3 scripts/run_nn_table.py DATA_DIR [--out-dir results] [--ks 50,100,200] [--bs 2,3]

DATA_DIR must contain user_ratedmovies.dat and user_artists.dat.
"""
import argparse
import sys
from pathlib import Path

from private_minhash.datasets import (
    LASTFM_HETREC,
    MOVIELENS_HETREC,
    build_threshold_vectors,
    build_topn_vectors,
    filter_min_size,
    load_ratings,
)
from private_minhash.harness import NNConfig, run_nn_experiment, write_csv


def datasets(data_dir: Path):
    movies = build_threshold_vectors(load_ratings(data_dir / "user_ratedmovies.dat", MOVIELENS_HETREC), 4.0)
    for tau in (50, 100, 500):
        yield f"movielens_tau{tau}", filter_min_size(movies, tau), tau
    artists = build_topn_vectors(load_ratings(data_dir / "user_artists.dat", LASTFM_HETREC), 20)
    yield "lastfm_tau20", filter_min_size(artists, 20), 20


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("data_dir", type=Path)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--ks", default="50,100,200,500")
    ap.add_argument("--bs", default="2,3")
    ap.add_argument("--reps", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ks = tuple(int(k) for k in args.ks.split(","))
    bs = tuple(int(b) for b in args.bs.split(","))

    for name, ds, tau in datasets(args.data_dir):
        mean, std = ds.size_stats()
        print(f"{name}: {len(ds)} users, m={ds.m}, set size {mean:.1f} (std {std:.1f})")
        cfg = NNConfig(ds, ks=ks, bs=bs, tau=tau, reps=args.reps, seed=args.seed, name=name)
        out = args.out_dir / f"{name}.csv"
        with out.open("w") as fh:
            write_csv(run_nn_experiment(cfg), fh)
        print(f"  -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
