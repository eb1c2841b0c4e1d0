"""Command-line entry point: ``private-minhash <subcommand>``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .datasets import (
    SCHEMAS,
    DataFormatError,
    Dataset,
    build_threshold_vectors,
    build_topn_vectors,
    filter_min_size,
    load_ratings,
)
from .estimation import clamp, estimate_laplace, estimate_minhash, estimate_rr, rr_error_bound
from .privacy import (
    PrivacyParams,
    PrivateSketchLap,
    diff_bound,
    laplace_params,
    max_noise_bound,
    perturb_laplace,
    perturb_rr,
    rr_params,
)
from .sketching import Sketch, UserVector, make_hash_family, parse_int_line, range_b_sketch

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


# ---------------------------------------------------------------------------
# vector and sketch files


def read_vectors(path) -> Dataset:
    """Dataset JSON (``*.json``) or lines ``user_id<TAB>item,item,...``.

    In the line format an optional ``# m=<int>`` header fixes the universe size;
    otherwise it is one past the largest item.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return Dataset.from_json(json.loads(text), str(path))
    m = None
    parsed = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "m":
                m = int(val)
            continue
        uid, sep, items = line.partition("\t")
        if not sep:
            raise DataFormatError(f"{path}:{lineno}: expected 'user_id<TAB>items'")
        try:
            parsed.append((uid, [int(t) for t in items.split(",") if t.strip()]))
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: items must be integers") from None
    if m is None:
        m = 1 + max((max(items) for _, items in parsed if items), default=0)
    return Dataset([(uid, UserVector(items, m)) for uid, items in parsed], m, str(path))


def write_sketches(fh, header: dict, rows) -> None:
    fh.write("# private-minhash sketch\n")
    fh.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
    for uid, line in rows:
        fh.write(f"{uid}\t{line}\n")


def read_sketches(path):
    """Returns ``(header, [(user_id, values)])`` from a sketch file."""
    header = {}
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    header[k] = v
            continue
        uid, sep, body = line.partition("\t")
        if not sep:
            uid, body = str(len(rows)), line
        try:
            if header.get("mechanism") == "laplace":
                rows.append((uid, PrivateSketchLap.from_line(body).values))
            else:
                rows.append((uid, parse_int_line(body)))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    for key in ("mechanism", "B", "K"):
        if key not in header:
            raise DataFormatError(f"{path}: header lacks {key!r}")
    return header, rows


# ---------------------------------------------------------------------------
# subcommands


def cmd_params(args) -> int:
    pp = PrivacyParams(args.epsilon, args.delta, args.alpha, args.tau)
    rp = rr_params(args.K, args.B, pp)
    lp = laplace_params(args.K, args.B, pp)
    out = {
        "K": args.K, "B": args.B, "epsilon": args.epsilon, "delta": args.delta,
        "alpha": args.alpha, "tau": args.tau,
        "L_raw": diff_bound(args.K, args.B, pp),
        "L": rp.L, "epsilon_prime": rp.epsilon_prime, "p_star": rp.p_star,
        "Delta": lp.sensitivity, "laplace_scale": lp.scale,
        "delta_fail": args.delta_fail,
        "rr_error_bound": (rr_error_bound(args.B, args.K, rp.p_star, args.delta_fail)
                           if args.B * rp.p_star > 1 else math.inf),
        "max_noise_bound": max_noise_bound(args.K, args.delta_fail, lp.scale),
    }
    for k, v in out.items():
        print(f"{k}\t{v}")
    return 0


def cmd_sketch(args) -> int:
    ds = read_vectors(args.vectors)
    m = args.m or ds.m
    fam = make_hash_family(args.K, args.B, m, args.seed)
    header = {"mechanism": args.mechanism, "B": args.B, "K": args.K, "family_seed": args.seed, "m": m}
    rows = []
    if args.mechanism != "minhash":
        tau = args.tau or min(len(v) for v in ds.vectors)
        pp = PrivacyParams(args.epsilon, args.delta, args.alpha, tau)
        header.update(epsilon=args.epsilon, delta=args.delta, alpha=args.alpha, tau=tau)
        if args.mechanism == "rr":
            rp = rr_params(args.K, args.B, pp)
            header.update(L=rp.L, p_star=repr(rp.p_star))
        else:
            lp = laplace_params(args.K, args.B, pp)
            header.update(scale=repr(lp.scale))
    gen = np.random.default_rng(args.noise_seed)
    for uid, vec in ds.users:
        s = Sketch(range_b_sketch(fam, UserVector(vec.items, m)).values, args.B)
        if args.mechanism == "minhash":
            rows.append((uid, s.to_line()))
        elif args.mechanism == "rr":
            rows.append((uid, perturb_rr(s, rp, gen).to_line()))
        else:
            rows.append((uid, perturb_laplace(s, lp, gen).to_line()))
    with _open_out(args.output) as fh:
        write_sketches(fh, header, rows)
    return 0


def cmd_estimate(args) -> int:
    ha, ra = read_sketches(args.a)
    hb, rb = read_sketches(args.b)
    for key in ("mechanism", "B", "K", "family_seed", "p_star", "scale"):
        if ha.get(key) != hb.get(key):
            raise DataFormatError(f"sketch files disagree on {key}: {ha.get(key)} vs {hb.get(key)}")
    mech, B = ha["mechanism"], int(ha["B"])
    if mech == "rr":
        est = lambda x, y: estimate_rr(x, y, B, float(ha["p_star"]))
    elif mech == "laplace":
        est = lambda x, y: estimate_laplace(x, y, B, float(ha["scale"]))
    else:
        est = lambda x, y: estimate_minhash(x, y, B)
    pairs = zip(ra, rb) if args.paired else ((x, y) for x in ra for y in rb)
    with _open_out(args.output) as fh:
        fh.write("id_a,id_b,estimate\n")
        for (ua, xa), (ub, xb) in pairs:
            value = est(xa, xb).value
            if args.clamp:
                value = float(clamp(value))
            fh.write(f"{ua},{ub},{value!r}\n")
    return 0


_MAE_FLAGS = ("taus", "j_targets", "ks", "bs", "epsilons", "mechanisms", "delta", "alpha",
              "reps", "seed", "m", "name")


def cmd_mae(args) -> int:
    values = {}
    if args.config:
        values.update(harness.parse_kv_config(Path(args.config).read_text(encoding="utf-8")))
    for key in _MAE_FLAGS:
        v = getattr(args, key)
        if v is not None:
            values[key] = str(v)
    if args.clamp:
        values["clamp"] = "true"
    cfg = harness.mae_config_from_mapping(values)
    rows = harness.run_mae_experiment(cfg)
    with _open_out(args.output) as fh:
        harness.write_csv(rows, fh)
    return 0


def _load_dataset(args) -> Dataset:
    if args.dataset:
        ds = read_vectors(args.dataset)
    elif args.ratings:
        ratings = load_ratings(args.ratings, SCHEMAS[args.schema])
        if args.top_n:
            ds = build_topn_vectors(ratings, args.top_n)
        else:
            ds = build_threshold_vectors(ratings, args.threshold)
    else:
        raise UsageError("give --dataset or --ratings")
    if args.min_size:
        ds = filter_min_size(ds, args.min_size)
    return ds


def cmd_ingest(args) -> int:
    ds = _load_dataset(args)
    mean, std = ds.size_stats() if len(ds) else (0.0, 0.0)
    print(f"users\t{len(ds)}\nm\t{ds.m}\nmean_size\t{mean:.2f}\nstd_size\t{std:.2f}", file=sys.stderr)
    if args.output:
        ds.save(args.output)
    return 0


def cmd_nn(args) -> int:
    cfg = harness.NNConfig(
        dataset=_load_dataset(args), queries=args.queries, k_true=args.k_true,
        depths=tuple(int(d) for d in args.depths.split(",")), j_min=args.j_min,
        ks=harness._parse_grid(args.ks, int), bs=harness._parse_grid(args.bs, int),
        epsilons=_floats(args.epsilons), mechanisms=tuple(args.mechanisms.split(",")),
        delta=args.delta, alpha=args.alpha, tau=args.tau, reps=args.reps, seed=args.seed,
        name=args.name)
    rows = harness.run_nn_experiment(cfg)
    with _open_out(args.output) as fh:
        harness.write_csv(rows, fh)
    return 0


class _open_out:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = sys.stdout if self.path in (None, "-") else open(self.path, "w", encoding="utf-8")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()


def _privacy_flags(p, tau_required=False):
    p.add_argument("--epsilon", type=float, default=4.0)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--tau", type=int, required=tau_required, default=None)


def _dataset_flags(p):
    p.add_argument("--dataset", help="dataset JSON or vector lines file")
    p.add_argument("--ratings", help="ratings file (e.g. hetrec user_ratedmovies.dat)")
    p.add_argument("--schema", choices=sorted(SCHEMAS), default="plain")
    p.add_argument("--threshold", type=float, default=4.0)
    p.add_argument("--top-n", type=int, default=None)
    p.add_argument("--min-size", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="private-minhash", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("params", help="print L, eps', p*, Delta and error bounds")
    p.add_argument("-K", type=int, required=True)
    p.add_argument("-B", type=int, required=True)
    _privacy_flags(p, tau_required=True)
    p.add_argument("--delta-fail", type=float, default=0.05)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("sketch", help="vector file -> (private) sketch file")
    p.add_argument("vectors")
    p.add_argument("-o", "--output")
    p.add_argument("--mechanism", choices=harness.MECHANISMS, default="rr")
    p.add_argument("-K", type=int, required=True)
    p.add_argument("-B", type=int, default=2)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--seed", type=int, default=0, help="shared hash family seed")
    p.add_argument("--noise-seed", type=int, default=None)
    _privacy_flags(p)
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("estimate", help="two sketch files -> similarity estimates")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-o", "--output")
    p.add_argument("--paired", action="store_true", help="match rows by position instead of all pairs")
    p.add_argument("--clamp", action="store_true", help="clip estimates to [0, 1] (display only)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("mae", help="MAE sweep on synthetic pairs -> CSV")
    p.add_argument("--config")
    p.add_argument("-o", "--output")
    for key in _MAE_FLAGS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    p.add_argument("--clamp", action="store_true")
    p.set_defaults(func=cmd_mae)

    p = sub.add_parser("nn", help="nearest-neighbor experiment -> CSV")
    _dataset_flags(p)
    p.add_argument("-o", "--output")
    p.add_argument("--queries", type=int, default=50)
    p.add_argument("--k-true", type=int, default=10)
    p.add_argument("--depths", default="10,50,100")
    p.add_argument("--j-min", type=float, default=0.1)
    p.add_argument("--ks", default="100")
    p.add_argument("--bs", default="2")
    p.add_argument("--epsilons", default="4,8")
    p.add_argument("--mechanisms", default=",".join(harness.MECHANISMS))
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--tau", type=int, default=None)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="nn")
    p.set_defaults(func=cmd_nn)

    p = sub.add_parser("ingest", help="ratings file -> dataset JSON plus size statistics")
    _dataset_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_ingest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"private-minhash: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, ValueError, OSError) as exc:
        print(f"private-minhash: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
