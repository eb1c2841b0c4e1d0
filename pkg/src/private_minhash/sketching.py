"""Range-B MinHash families and sketches.

A range-B MinHash function is ``h_uni(h_min(x))``: ``h_min`` picks the item of
``x`` that comes first under a random order of the universe, ``h_uni`` maps that
item into one of ``B`` buckets. Two sets collide in one slot with probability
``(1 - J) / B + J``.

Two family implementations share one interface (``K``, ``B``, ``m``,
``winners(items)``, ``buckets(winners)``):

* :class:`HashFamily` derives every slot from a 64-bit master seed and realizes
  the random order as a keyed 64-bit hash. Nothing of size ``m`` is stored.
* :class:`TableFamily` holds explicit permutations and bucket tables. It is
  the ideal construction and is also how fixed outputs are injected in tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_ITEM_SALT = np.uint64(0xD1B54A32D192ED03)
_BUCKET_SALT = np.uint64(0x8CB92BA72F3D8DD7)
_MASK64 = (1 << 64) - 1

# keys * slots evaluated per chunk; bounds peak memory of one sketch call
_CHUNK_ELEMENTS = 1 << 22


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, elementwise on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def derive_seeds(master_seed: int, n: int) -> np.ndarray:
    """``n`` uint64 seeds from a SplitMix64 counter stream keyed by ``master_seed``.

    Counter ``j`` always yields the same value, so any prefix of the stream is
    stable and slots can be regenerated independently.
    """
    base = mix64(np.array([master_seed & _MASK64], dtype=np.uint64))[0]
    counters = np.arange(1, n + 1, dtype=np.uint64)
    return mix64(base + counters * _GOLDEN)


@dataclass(frozen=True)
class UserVector:
    """A user's item set over the universe ``[0, m)``.

    Items are stored sorted, so construction order never matters.
    """

    items: tuple[int, ...]
    m: int

    def __init__(self, items: Iterable[int], m: int):
        m = int(m)
        if m < 1:
            raise ValueError(f"universe size must be positive, got {m}")
        as_list = [int(i) for i in items]
        uniq = sorted(set(as_list))
        if len(uniq) != len(as_list):
            raise ValueError("item indices must be unique")
        if uniq and (uniq[0] < 0 or uniq[-1] >= m):
            raise ValueError(f"item indices must lie in [0, {m})")
        object.__setattr__(self, "items", tuple(uniq))
        object.__setattr__(self, "m", m)

    def __len__(self) -> int:
        return len(self.items)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.items, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class HashFamily:
    """``K`` keyed range-B MinHash functions, fully determined by the parameters.

    Use :func:`make_hash_family` to build one.
    """

    K: int
    B: int
    m: int
    master_seed: int
    order_seeds: np.ndarray = field(repr=False)
    bucket_seeds: np.ndarray = field(repr=False)

    def winners(self, items: np.ndarray, slots: np.ndarray | None = None) -> np.ndarray:
        """Item of ``items`` (sorted ascending) ranked first by each slot's keyed order.

        Ties in the 64-bit key go to the smaller item, which ``argmin`` gives
        for free on sorted input.
        """
        items = np.asarray(items, dtype=np.int64)
        seeds = self.order_seeds if slots is None else self.order_seeds[slots]
        item_keys = mix64(items.astype(np.uint64) + _ITEM_SALT)
        out = np.empty(len(seeds), dtype=np.int64)
        step = max(1, _CHUNK_ELEMENTS // max(1, len(items)))
        for lo in range(0, len(seeds), step):
            keys = mix64(item_keys[None, :] ^ seeds[lo:lo + step, None])
            out[lo:lo + step] = items[np.argmin(keys, axis=1)]
        return out

    def buckets(self, winners: np.ndarray, slots: np.ndarray | None = None) -> np.ndarray:
        """Map per-slot winners to ``[0, B)`` with a keyed multiply-shift reduction."""
        seeds = self.bucket_seeds if slots is None else self.bucket_seeds[slots]
        w = np.asarray(winners, dtype=np.int64).astype(np.uint64)
        h = mix64(mix64(w + _BUCKET_SALT) ^ seeds)
        # high 32 bits times B, keep the high 32 bits of the product: no modulo bias
        return (((h >> np.uint64(32)) * np.uint64(self.B)) >> np.uint64(32)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class TableFamily:
    """Range-B MinHash functions given by explicit tables.

    ``ranks[k, i]`` is the position of item ``i`` under slot ``k``'s permutation
    (lower comes first); ``bucket_table[k, i]`` is ``h_uni`` of item ``i``.
    """

    ranks: np.ndarray
    bucket_table: np.ndarray
    B: int

    def __post_init__(self):
        if self.ranks.shape != self.bucket_table.shape or self.ranks.ndim != 2:
            raise ValueError("ranks and bucket_table must both have shape (K, m)")
        if self.B < 2:
            raise ValueError("range-B MinHash needs B >= 2")
        if self.bucket_table.min() < 0 or self.bucket_table.max() >= self.B:
            raise ValueError(f"bucket_table entries must lie in [0, {self.B})")

    @property
    def K(self) -> int:
        return self.ranks.shape[0]

    @property
    def m(self) -> int:
        return self.ranks.shape[1]

    @classmethod
    def random(cls, K: int, B: int, m: int, seed) -> "TableFamily":
        """Uniform random permutations and fully random bucket maps."""
        rng = np.random.default_rng(seed)
        ranks = np.argsort(rng.random((K, m)), axis=1).argsort(axis=1)
        return cls(ranks=ranks, bucket_table=rng.integers(0, B, size=(K, m)), B=B)

    def winners(self, items: np.ndarray, slots: np.ndarray | None = None) -> np.ndarray:
        items = np.asarray(items, dtype=np.int64)
        ranks = self.ranks if slots is None else self.ranks[slots]
        return items[np.argmin(ranks[:, items], axis=1)]

    def buckets(self, winners: np.ndarray, slots: np.ndarray | None = None) -> np.ndarray:
        table = self.bucket_table if slots is None else self.bucket_table[slots]
        return table[np.arange(table.shape[0]), np.asarray(winners, dtype=np.int64)]


def make_hash_family(K: int, B: int, m: int, master_seed: int) -> HashFamily:
    if K < 1:
        raise ValueError(f"need at least one hash function, got K={K}")
    if B < 2:
        raise ValueError(f"range-B MinHash needs B >= 2, got B={B}")
    if m < 1:
        raise ValueError(f"universe size must be positive, got m={m}")
    seeds = derive_seeds(master_seed, 2 * K)
    seeds.setflags(write=False)
    return HashFamily(K=K, B=B, m=m, master_seed=int(master_seed),
                      order_seeds=seeds[0::2], bucket_seeds=seeds[1::2])


@dataclass(frozen=True, eq=False)
class Sketch:
    """Non-private sketch ``(h_1(x), ..., h_K(x))`` with entries in ``[0, B)``."""

    values: np.ndarray
    B: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.ndim != 1 or len(v) == 0:
            raise ValueError("sketch must be a non-empty 1-d vector")
        if v.min() < 0 or v.max() >= self.B:
            raise ValueError(f"sketch entries must lie in [0, {self.B})")
        object.__setattr__(self, "values", v)

    @property
    def K(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        return (isinstance(other, type(self)) and self.B == other.B
                and np.array_equal(self.values, other.values))

    def to_line(self) -> str:
        return format_int_line(self.values)

    @classmethod
    def from_line(cls, line: str, B: int):
        return cls(parse_int_line(line), B)

    def to_bytes(self) -> bytes:
        return pack_bytes(self.values, self.B)

    @classmethod
    def from_bytes(cls, data: bytes, B: int):
        return cls(np.frombuffer(data, dtype=np.uint8).astype(np.int64), B)


def format_int_line(values) -> str:
    return ",".join(str(int(v)) for v in values)


def parse_int_line(line: str) -> np.ndarray:
    line = line.strip()
    if not line:
        raise ValueError("empty sketch line")
    return np.array([int(tok) for tok in line.split(",")], dtype=np.int64)


def pack_bytes(values: np.ndarray, B: int) -> bytes:
    if B > 256:
        raise ValueError(f"compact binary form needs B <= 256, got B={B}")
    return np.asarray(values, dtype=np.uint8).tobytes()


def _check_items(family, x: UserVector) -> np.ndarray:
    if len(x) == 0:
        raise ValueError("empty set has no MinHash")
    if x.m > family.m:
        raise ValueError(f"vector universe {x.m} exceeds family universe {family.m}")
    return x.as_array()


def minwise_value(family, slot: int, x: UserVector) -> int:
    """The item of ``x`` that slot ``slot`` of the family ranks first."""
    items = _check_items(family, x)
    if not 0 <= slot < family.K:
        raise IndexError(f"slot {slot} out of range for K={family.K}")
    return int(family.winners(items, np.array([slot]))[0])


def sketch_items(family, items: np.ndarray) -> np.ndarray:
    """Bucket vector for a sorted, non-empty int array. No validation; hot path."""
    return family.buckets(family.winners(items))


def range_b_sketch(family, x: UserVector) -> Sketch:
    return Sketch(sketch_items(family, _check_items(family, x)), family.B)
