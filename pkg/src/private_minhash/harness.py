"""Utility experiments: MAE sweeps on synthetic pairs and nearest-neighbor search.

Every random draw comes from a seed derived from ``(master seed, job key)``,
where the job key names the grid point, repetition and noise stream. Jobs are
therefore independent of execution order and the CSV output is reproducible
byte for byte.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from .datasets import Dataset
from .estimation import (
    clamp,
    laplace_from_distance,
    minhash_from_collisions,
    rr_from_collisions,
)
from .privacy import (
    PrivacyParams,
    laplace_params,
    perturb_laplace,
    perturb_rr,
    rr_params,
)
from .sketching import Sketch, make_hash_family, sketch_items
from .synthetic import PairSpec, gen_pair

MECHANISMS = ("minhash", "rr", "laplace")

# stream tags keep the seed spaces of different draws apart
_PAIR, _FAMILY, _RR, _LAP, _QUERY, _NN_FAMILY = range(1, 7)


def derive_seed(master: int, *key: int) -> int:
    """64-bit seed hashed from the master seed and an integer job key."""
    ss = np.random.SeedSequence([master & ((1 << 64) - 1), *key])
    return int(ss.generate_state(1, np.uint64)[0])


def _fkey(x: float) -> int:
    # floats enter seed keys as micro-units
    return int(round(x * 1_000_000))


CSV_COLUMNS = ("experiment", "mechanism", "B", "K", "epsilon", "delta", "alpha", "tau",
               "J_target", "metric", "value", "std", "reps", "note")


@dataclass
class ResultRow:
    experiment: str
    mechanism: str
    B: int
    K: int
    epsilon: Optional[float]
    delta: float
    alpha: int
    tau: int
    J_target: Optional[float]
    metric: str
    value: Optional[float]
    std: Optional[float]
    reps: int
    note: str = ""

    @property
    def skipped(self) -> bool:
        return self.value is None


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows: Iterable[ResultRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])


def rows_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def mean_absolute_error(truths: Sequence[float], estimates: Sequence[float]) -> float:
    t = np.asarray(truths, dtype=np.float64)
    e = np.asarray(estimates, dtype=np.float64)
    if t.shape != e.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {e.shape}")
    if t.size == 0:
        raise ValueError("mean absolute error of zero pairs is undefined")
    return float(np.mean(np.abs(t - e)))


# ---------------------------------------------------------------------------
# MAE sweep on synthetic pairs


@dataclass
class MAEConfig:
    taus: tuple = (50, 500, 2000)
    j_targets: tuple = (0.5,)
    ks: tuple = tuple(range(10, 501, 10))
    bs: tuple = (2, 3, 5)
    epsilons: tuple = (4.0,)
    delta: float = 1e-4
    alpha: int = 1
    mechanisms: tuple = MECHANISMS
    reps: int = 100
    seed: int = 0
    m: int = 1 << 16
    clamp: bool = False
    name: str = "mae"

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        for f in ("taus", "j_targets", "ks", "bs", "epsilons", "mechanisms"):
            if len(getattr(self, f)) == 0:
                raise ValueError(f"grid {f!r} is empty")
        unknown = set(self.mechanisms) - set(MECHANISMS)
        if unknown:
            raise ValueError(f"unknown mechanisms: {sorted(unknown)}")


def _summary(errors: list[float]) -> tuple[float, float]:
    a = np.asarray(errors)
    return float(a.mean()), float(a.std())


def run_mae_experiment(cfg: MAEConfig) -> list[ResultRow]:
    """Mean and std of ``|estimate - J_realized|`` over ``cfg.reps`` repetitions per grid point.

    Each repetition draws a fresh hash family, shared by the mechanisms at that
    grid point, and fresh noise for every (mechanism, epsilon).
    """
    rows: list[ResultRow] = []
    post = clamp if cfg.clamp else (lambda v: v)
    for tau in cfg.taus:
        for jt in cfg.j_targets:
            x, y, J = gen_pair(PairSpec(cfg.m, tau, jt, derive_seed(cfg.seed, _PAIR, tau, _fkey(jt))))
            xa, ya = x.as_array(), y.as_array()
            for B in cfg.bs:
                for K in cfg.ks:
                    rows.extend(_mae_grid_point(cfg, tau, jt, J, B, K, xa, ya, post))
    return rows


def _mae_grid_point(cfg, tau, jt, J, B, K, xa, ya, post) -> list[ResultRow]:
    def row(mech, eps, value=None, std=None, note=""):
        return ResultRow(cfg.name, mech, B, K, eps, cfg.delta, cfg.alpha, tau, jt,
                         "mae", value, std, cfg.reps, note)

    private = {}
    skipped = {}
    for eps in cfg.epsilons:
        try:
            pp = PrivacyParams(eps, cfg.delta, cfg.alpha, tau)
        except ValueError as exc:
            skipped[eps] = f"skipped: {exc}"
            continue
        private[eps] = (rr_params(K, B, pp), laplace_params(K, B, pp))

    errs = {(m, e): [] for m in cfg.mechanisms for e in private}
    plain = []
    jkey = _fkey(jt)
    for rep in range(cfg.reps):
        fam = make_hash_family(K, B, cfg.m, derive_seed(cfg.seed, _FAMILY, tau, jkey, B, K, rep))
        xs = Sketch(sketch_items(fam, xa), B)
        ys = Sketch(sketch_items(fam, ya), B)
        if "minhash" in cfg.mechanisms:
            p = np.mean(xs.values == ys.values)
            plain.append(abs(post(minhash_from_collisions(p, B)) - J))
        for eps, (rp, lp) in private.items():
            ekey = _fkey(eps)
            if "rr" in cfg.mechanisms:
                gen = np.random.default_rng(derive_seed(cfg.seed, _RR, tau, jkey, B, K, ekey, rep))
                xr, yr = perturb_rr(xs, rp, gen), perturb_rr(ys, rp, gen)
                p = np.mean(xr.values == yr.values)
                errs["rr", eps].append(abs(post(rr_from_collisions(p, B, rp.p_star)) - J))
            if "laplace" in cfg.mechanisms:
                gen = np.random.default_rng(derive_seed(cfg.seed, _LAP, tau, jkey, B, K, ekey, rep))
                xl, yl = perturb_laplace(xs, lp, gen), perturb_laplace(ys, lp, gen)
                d = float(np.sum((xl.values - yl.values) ** 2))
                errs["laplace", eps].append(abs(post(laplace_from_distance(d, K, B, lp.scale)) - J))

    out = []
    if "minhash" in cfg.mechanisms:
        out.append(row("minhash", None, *_summary(plain)))
    for mech in cfg.mechanisms:
        if mech == "minhash":
            continue
        for eps in cfg.epsilons:
            if eps in skipped:
                out.append(row(mech, eps, note=skipped[eps]))
            else:
                out.append(row(mech, eps, *_summary(errs[mech, eps])))
    return out


def best_over_k(rows: Iterable[ResultRow], mechanism: str, tau: int,
                epsilon: Optional[float] = None, bs: Optional[Iterable[int]] = None,
                J_target: Optional[float] = None) -> Optional[ResultRow]:
    """Row with the lowest MAE among matching rows, over all K (and the given B values)."""
    bs = None if bs is None else set(bs)
    cands = [r for r in rows
             if r.metric == "mae" and not r.skipped and r.mechanism == mechanism and r.tau == tau
             and (epsilon is None or r.epsilon == epsilon)
             and (bs is None or r.B in bs)
             and (J_target is None or r.J_target == J_target)]
    return min(cands, key=lambda r: (r.value, r.B, r.K), default=None)


# ---------------------------------------------------------------------------
# nearest-neighbor experiment


@dataclass
class NNConfig:
    dataset: Dataset
    queries: int = 50
    k_true: int = 10
    depths: tuple = (10, 50, 100)
    j_min: float = 0.1
    ks: tuple = (100,)
    bs: tuple = (2,)
    epsilons: tuple = (4.0, 8.0)
    mechanisms: tuple = MECHANISMS
    delta: float = 1e-4
    alpha: int = 1
    tau: Optional[int] = None  # privacy tau; defaults to the smallest set in the dataset
    reps: int = 1
    seed: int = 0
    name: str = "nn"

    def __post_init__(self):
        if self.queries < 1 or self.k_true < 1 or self.reps < 1:
            raise ValueError("queries, k_true and reps must all be at least 1")
        unknown = set(self.mechanisms) - set(MECHANISMS)
        if unknown:
            raise ValueError(f"unknown mechanisms: {sorted(unknown)}")

    @property
    def privacy_tau(self) -> int:
        if self.tau is not None:
            return self.tau
        return min(len(v) for v in self.dataset.vectors)


def jaccard_matrix(vectors) -> np.ndarray:
    """Exact pairwise Jaccard similarities of a list of :class:`UserVector`."""
    n = len(vectors)
    if n == 0:
        return np.zeros((0, 0))
    m = vectors[0].m
    indptr = np.cumsum([0] + [len(v) for v in vectors])
    indices = np.concatenate([v.as_array() for v in vectors])
    X = sparse.csr_matrix((np.ones(len(indices), dtype=np.float64), indices, indptr), shape=(n, m))
    inter = (X @ X.T).toarray()
    sizes = np.diff(indptr).astype(np.float64)
    union = sizes[:, None] + sizes[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(union > 0, inter / union, 0.0)


def rank_neighbors(scores: np.ndarray, query: int) -> np.ndarray:
    """Indices of all other points by descending score; ties go to the smaller index."""
    idx = np.arange(len(scores))
    order = np.lexsort((idx, -np.asarray(scores, dtype=np.float64)))
    return order[order != query]


def eligible_queries(sims: np.ndarray, k_true: int, j_min: float) -> np.ndarray:
    """Points whose ``k_true``-th nearest neighbor (self excluded) has similarity >= ``j_min``."""
    n = len(sims)
    if n - 1 < k_true:
        return np.array([], dtype=np.int64)
    off = sims.copy()
    np.fill_diagonal(off, -np.inf)
    kth = -np.partition(-off, k_true - 1, axis=1)[:, k_true - 1]
    return np.flatnonzero(kth >= j_min)


def select_queries(ds: Dataset, cfg: NNConfig, sims: Optional[np.ndarray] = None) -> list[str]:
    """``cfg.queries`` distinct user ids drawn uniformly from the eligible points."""
    if sims is None:
        sims = jaccard_matrix(ds.vectors)
    pool = eligible_queries(sims, cfg.k_true, cfg.j_min)
    if len(pool) < cfg.queries:
        raise ValueError(
            f"only {len(pool)} eligible query points, {cfg.queries} requested "
            f"(short by {cfg.queries - len(pool)})")
    rng = np.random.default_rng(derive_seed(cfg.seed, _QUERY))
    picked = rng.choice(pool, size=cfg.queries, replace=False)
    ids = ds.ids
    return [ids[i] for i in picked]


def recall_at_k(true_nn_id, private_topk_ids: Sequence, k: int) -> int:
    """1 if the true nearest neighbor is among the first ``k`` privately ranked ids."""
    return int(true_nn_id in list(private_topk_ids[:k]))


def approx_similarity_ratio(true_top_sims: Sequence[float], private_top_sims: Sequence[float]) -> float:
    """Sum of true similarities of the private top list over that of the true top list."""
    t = np.asarray(true_top_sims, dtype=np.float64)
    p = np.asarray(private_top_sims, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError("top lists must have equal length")
    total = t.sum()
    if total == 0:
        raise ValueError("true top list has zero similarity mass")
    return float(p.sum() / total)


def _score_all(mech: str, S: np.ndarray, q: int, B: int, scale: float, p_star: float) -> np.ndarray:
    if mech == "laplace":
        d = np.sum((S - S[q]) ** 2, axis=1)
        return laplace_from_distance(d, S.shape[1], B, scale)
    p = np.mean(S == S[q], axis=1)
    if mech == "rr":
        return rr_from_collisions(p, B, p_star)
    return minhash_from_collisions(p, B)


def run_nn_experiment(cfg: NNConfig, sims: Optional[np.ndarray] = None) -> list[ResultRow]:
    """Recall@depth and approximate similarity ratio from rankings on private sketches.

    One hash family per (K, B, repetition) is shared by all users. Rankings use
    raw estimates with no re-ranking against the true vectors.
    """
    ds = cfg.dataset
    if sims is None:
        sims = jaccard_matrix(ds.vectors)
    ids = ds.ids
    pos = {u: i for i, u in enumerate(ids)}
    queries = [pos[u] for u in select_queries(ds, cfg, sims)]
    arrays = [v.as_array() for v in ds.vectors]
    tau = cfg.privacy_tau
    n = len(ds)
    top_n = min(cfg.k_true, n - 1)

    truth = {}
    for q in queries:
        order = rank_neighbors(sims[q], q)
        truth[q] = (order[0], order[:top_n])

    metrics = [f"recall@{d}" for d in cfg.depths] + ["approx_ratio"]
    rows = []
    for B in cfg.bs:
        for K in cfg.ks:
            jobs = []  # (mechanism, epsilon, params-or-note)
            for mech in cfg.mechanisms:
                if mech == "minhash":
                    jobs.append((mech, None, None, ""))
                    continue
                for eps in cfg.epsilons:
                    try:
                        pp = PrivacyParams(eps, cfg.delta, cfg.alpha, tau)
                    except ValueError as exc:
                        jobs.append((mech, eps, None, f"skipped: {exc}"))
                        continue
                    if mech == "rr":
                        jobs.append((mech, eps, rr_params(K, B, pp), ""))
                    else:
                        jobs.append((mech, eps, laplace_params(K, B, pp), ""))
            samples = {(m, e): {name: [] for name in metrics} for m, e, _, _ in jobs}
            for rep in range(cfg.reps):
                fam = make_hash_family(K, B, ds.m, derive_seed(cfg.seed, _NN_FAMILY, K, B, rep))
                S = np.stack([sketch_items(fam, a) for a in arrays])
                for mech, eps, params, note in jobs:
                    if note:
                        continue
                    P, scale, p_star = _privatize(mech, eps, params, S, B, K, cfg.seed, rep)
                    for q in queries:
                        order = rank_neighbors(_score_all(mech, P, q, B, scale, p_star), q)
                        true_nn, true_top = truth[q]
                        got = samples[mech, eps]
                        for d in cfg.depths:
                            got[f"recall@{d}"].append(recall_at_k(true_nn, order, d))
                        got["approx_ratio"].append(
                            approx_similarity_ratio(sims[q, true_top], sims[q, order[:top_n]]))
            for mech, eps, params, note in jobs:
                for name in metrics:
                    vals = samples[mech, eps][name]
                    value, std = (None, None) if note else _summary(vals)
                    rows.append(ResultRow(cfg.name, mech, B, K, eps, cfg.delta, cfg.alpha, tau,
                                          None, name, value, std, cfg.reps, note))
    return rows


def _privatize(mech, eps, params, S, B, K, seed, rep):
    if mech == "minhash":
        return S, 0.0, 1.0
    ekey = _fkey(eps)
    if mech == "rr":
        gen = np.random.default_rng(derive_seed(seed, _RR, K, B, ekey, rep, 1))
        P = np.stack([perturb_rr(Sketch(s, B), params, gen).values for s in S])
        return P, 0.0, params.p_star
    gen = np.random.default_rng(derive_seed(seed, _LAP, K, B, ekey, rep, 1))
    P = np.stack([perturb_laplace(Sketch(s, B), params, gen).values for s in S])
    return P, params.scale, 1.0


# ---------------------------------------------------------------------------
# flat key = value config files


def parse_kv_config(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; later keys override earlier ones."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _convert(kind, text: str):
    text = text.strip()
    if kind is bool:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    return kind(text)


def _parse_grid(text: str, kind) -> tuple:
    """Comma-separated values; ``a:b:step`` expands to an inclusive integer range."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok and kind is int:
            lo, hi, step = (int(p) for p in tok.split(":"))
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(kind(tok))
    return tuple(out)


_MAE_KINDS = {"taus": int, "j_targets": float, "ks": int, "bs": int, "epsilons": float,
              "mechanisms": str}


def mae_config_from_mapping(values: dict) -> MAEConfig:
    """Build an :class:`MAEConfig` from string values (config file or CLI flags)."""
    known = {f.name: f for f in fields(MAEConfig)}
    kwargs = {}
    for key, raw in values.items():
        if key not in known:
            raise ValueError(f"unknown MAE config key {key!r}")
        if key in _MAE_KINDS:
            kwargs[key] = _parse_grid(raw, _MAE_KINDS[key])
        else:
            kind = type(known[key].default)
            kwargs[key] = _convert(kind, raw)
    return MAEConfig(**kwargs)
