"""Rating files to binary user vectors.

Covers the hetrec-2011 dumps (``user_ratedmovies.dat`` and ``user_artists.dat``)
and any delimited user/item/value file. Item ids are remapped densely to
``[0, m)`` in order of first appearance. ``m`` is therefore the number of
observed items, not the raw id space.
"""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .sketching import UserVector


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RatingsSchema:
    user_col: int = 0
    item_col: int = 1
    value_col: int = 2
    separator: Optional[str] = None  # None splits on any whitespace
    has_header: bool = False


MOVIELENS_HETREC = RatingsSchema(0, 1, 2, "\t", True)
LASTFM_HETREC = RatingsSchema(0, 1, 2, "\t", True)
SCHEMAS = {"movielens": MOVIELENS_HETREC, "lastfm": LASTFM_HETREC, "plain": RatingsSchema()}


@dataclass
class Ratings:
    triples: list[tuple[str, int, float]]
    item_ids: list[str]
    source: str = ""

    def __len__(self):
        return len(self.triples)

    @property
    def m(self) -> int:
        return len(self.item_ids)


def load_ratings(path, schema: RatingsSchema = RatingsSchema()) -> Ratings:
    """Read ``(user, item, value)`` triples; raises :class:`DataFormatError` with the line number."""
    path = Path(path)
    index: dict[str, int] = {}
    triples = []
    need = max(schema.user_col, schema.item_col, schema.value_col) + 1
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if schema.has_header and lineno == 1:
                continue
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            cols = line.split(schema.separator)
            if len(cols) < need:
                raise DataFormatError(f"{path}:{lineno}: expected at least {need} columns, got {len(cols)}")
            user, item = cols[schema.user_col].strip(), cols[schema.item_col].strip()
            try:
                value = float(cols[schema.value_col])
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}: value {cols[schema.value_col]!r} is not a number") from None
            if item not in index:
                index[item] = len(index)
            triples.append((user, index[item], value))
    return Ratings(triples, list(index), str(path))


@dataclass
class Dataset:
    users: list[tuple[str, UserVector]]
    m: int
    provenance: str = field(default="", compare=False)
    item_ids: Optional[list[str]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        ids = [u for u, _ in self.users]
        if len(set(ids)) != len(ids):
            raise DataFormatError("user ids must be unique")
        for uid, vec in self.users:
            if len(vec) == 0:
                raise DataFormatError(f"user {uid!r} has an empty vector")
            if vec.m != self.m:
                raise DataFormatError(f"user {uid!r} has universe {vec.m}, dataset has {self.m}")

    def __len__(self):
        return len(self.users)

    @property
    def ids(self) -> list[str]:
        return [u for u, _ in self.users]

    @property
    def vectors(self) -> list[UserVector]:
        return [v for _, v in self.users]

    def size_stats(self) -> tuple[float, float]:
        """Mean and population standard deviation of the set sizes."""
        sizes = [len(v) for v in self.vectors]
        return statistics.fmean(sizes), statistics.pstdev(sizes)

    def to_json(self) -> dict:
        out = {"m": self.m, "users": [{"id": u, "items": list(v.items)} for u, v in self.users]}
        if self.item_ids is not None:
            out["item_ids"] = self.item_ids
        return out

    @classmethod
    def from_json(cls, obj: dict, provenance: str = "") -> "Dataset":
        m = int(obj["m"])
        users = [(str(u["id"]), UserVector(u["items"], m)) for u in obj["users"]]
        return cls(users, m, provenance, obj.get("item_ids"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Dataset":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")), str(path))


def _group(ratings: Ratings) -> dict[str, list[tuple[int, float]]]:
    by_user: dict[str, list[tuple[int, float]]] = {}
    for user, item, value in ratings.triples:
        by_user.setdefault(user, []).append((item, value))
    return by_user


def build_threshold_vectors(ratings: Ratings, threshold: float) -> Dataset:
    """Each user's items rated at least ``threshold``; users left empty are dropped."""
    users = []
    for user, rated in _group(ratings).items():
        items = {item for item, value in rated if value >= threshold}
        if items:
            users.append((user, UserVector(items, ratings.m)))
    return Dataset(users, ratings.m, f"{ratings.source} threshold>={threshold}", ratings.item_ids)


def build_topn_vectors(ratings: Ratings, n: int) -> Dataset:
    """Each user's ``n`` highest-valued items (ties: higher value, then smaller item index)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    users = []
    for user, rated in _group(ratings).items():
        best: dict[int, float] = {}
        for item, value in rated:
            best[item] = max(value, best.get(item, value))
        ranked = sorted(best.items(), key=lambda iv: (-iv[1], iv[0]))[:n]
        users.append((user, UserVector([i for i, _ in ranked], ratings.m)))
    return Dataset(users, ratings.m, f"{ratings.source} top-{n}", ratings.item_ids)


def filter_min_size(ds: Dataset, tau_min: int) -> Dataset:
    if tau_min < 1:
        raise ValueError(f"tau_min must be positive, got {tau_min}")
    kept = [(u, v) for u, v in ds.users if len(v) >= tau_min]
    return Dataset(kept, ds.m, f"{ds.provenance} size>={tau_min}", ds.item_ids)
