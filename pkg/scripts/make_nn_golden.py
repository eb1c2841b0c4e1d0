"""Regenerate tests/data/nn_golden.csv, the frozen output of the fixture NN run.

Only rerun this after an intentional change to sketching, noise or ranking;
the acceptance suite compares against the file byte for byte.

    python3 scripts/make_nn_golden.py
"""
import sys
from pathlib import Path

from private_minhash.cli import main

ROOT = Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "tests" / "data" / "mini_ratings.dat"
GOLDEN = ROOT / "tests" / "data" / "nn_golden.csv"

NN_ARGS = ["nn", "--ratings", str(FIXTURE), "--schema", "movielens", "--threshold", "4",
           "--queries", "5", "--depths", "1,5,10", "--ks", "20,50", "--bs", "2,3",
           "--epsilons", "4,8", "--reps", "2", "--seed", "2024"]


if __name__ == "__main__":
    sys.exit(main(NN_ARGS + ["-o", str(GOLDEN)]))
