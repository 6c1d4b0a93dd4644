"""Singleton-free set partitions of the edge slots {1..k}, pairings and
non-crossing classification."""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb
from typing import Iterable, Sequence

PARTITION_CAP = 12
PAIRING_CAP = 16


@dataclass(frozen=True, eq=False)
class Partition:
    k: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(int(x) for x in b)) for b in self.blocks))
        object.__setattr__(self, "blocks", blocks)
        seen = [x for b in blocks for x in b]
        if sorted(seen) != list(range(1, self.k + 1)):
            raise ValueError(f"blocks {blocks} do not partition 1..{self.k}")
        if any(len(b) < 2 for b in blocks):
            raise ValueError(f"partition {blocks} contains a singleton")

    # Pairing is a subclass; equality ignores the class so both compare alike
    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return (self.k, self.blocks) == (other.k, other.blocks)

    def __hash__(self):
        return hash((self.k, self.blocks))

    def __lt__(self, other):
        return (self.k, self.blocks) < (other.k, other.blocks)

    @classmethod
    def of(cls, blocks: Iterable[Sequence[int]], k: int | None = None) -> "Partition":
        blocks = [tuple(b) for b in blocks]
        if k is None:
            k = sum(len(b) for b in blocks)
        return cls(k, tuple(blocks))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def is_pairing(self) -> bool:
        return all(len(b) == 2 for b in self.blocks)

    def block_of(self, slot: int) -> tuple[int, ...]:
        for b in self.blocks:
            if slot in b:
                return b
        raise KeyError(slot)

    def to_json(self) -> str:
        return format_partition(self)

    def __str__(self):
        return "{" + ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"


class Pairing(Partition):
    def __post_init__(self):
        super().__post_init__()
        if any(len(b) != 2 for b in self.blocks):
            raise ValueError(f"{self.blocks} is not a pairing")


def as_pairing(p: Partition) -> Pairing:
    return p if isinstance(p, Pairing) else Pairing(p.k, p.blocks)


def format_partition(p: Partition) -> str:
    return json.dumps([list(b) for b in p.blocks], separators=(",", ":"))


def parse_partition(text: str) -> Partition:
    """Accepts JSON ("[[1,2],[3,4]]") or the printed form ("{{1,2},{3,4}}")."""
    try:
        data = json.loads(text.strip().replace("{", "[").replace("}", "]"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"cannot parse partition {text!r}") from exc
    if not isinstance(data, list) or not all(isinstance(b, list) for b in data):
        raise ValueError(f"not a JSON array of arrays: {text!r}")
    p = Partition.of(data)
    return Pairing(p.k, p.blocks) if p.is_pairing else p


def _set_partitions(items: list[int], min_size: int):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    # choose the companions of the smallest element, then recurse on the rest
    for size in range(min_size - 1, len(rest) + 1):
        for mask in _combinations(rest, size):
            block = [first, *mask]
            left = [x for x in rest if x not in mask]
            for tail in _set_partitions(left, min_size):
                yield [block, *tail]


def _combinations(seq, r):
    if r == 0:
        yield ()
        return
    for i in range(len(seq) - r + 1):
        for tail in _combinations(seq[i + 1:], r - 1):
            yield (seq[i], *tail)


def enumerate_partitions_no_singletons(k: int) -> list[Partition]:
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > PARTITION_CAP:
        raise ValueError("expansion order too large")
    out = []
    for blocks in _set_partitions(list(range(1, k + 1)), 2):
        p = Partition(k, tuple(tuple(b) for b in blocks))
        out.append(Pairing(k, p.blocks) if p.is_pairing else p)
    return sorted(out, key=lambda p: p.blocks)


def enumerate_pairings(k: int) -> list[Pairing]:
    if k % 2:
        raise ValueError("pairings need an even number of slots")
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > PAIRING_CAP:
        raise ValueError("expansion order too large")

    def rec(items):
        if not items:
            yield []
            return
        first = items[0]
        for idx in range(1, len(items)):
            rest = items[1:idx] + items[idx + 1:]
            for tail in rec(rest):
                yield [(first, items[idx]), *tail]

    out = [Pairing(k, tuple(bl)) for bl in rec(list(range(1, k + 1)))]
    return sorted(out, key=lambda p: p.blocks)


def is_crossing(p: Partition) -> bool:
    """True if two pair blocks {a,b},{c,d} interleave as a < c < b < d."""
    pairs = [b for b in p.blocks if len(b) == 2]
    for a, b in pairs:
        for c, d in pairs:
            if a < c < b < d:
                return True
    return False


def catalan(m: int) -> int:
    if m < 0:
        raise ValueError("catalan needs m >= 0")
    return comb(2 * m, m) // (m + 1)


def count_no_singletons(k: int) -> int:
    """D(k) = sum_{j>=2} C(k-1, j-1) D(k-j), D(0) = 1."""
    d = [1]
    for m in range(1, k + 1):
        d.append(sum(comb(m - 1, j - 1) * d[m - j] for j in range(2, m + 1)))
    return d[k]


def dihedral_images(p: Partition) -> list[Partition]:
    """Images of p under rotations and reflections of the k-gon.

    Rotating the vertices shifts edge j to j+1; reflecting about vertex a_1 sends
    edge j to edge k+1-j traversed backwards, which leaves every term unchanged
    because the metric ignores the order inside an index pair.
    """
    k = p.k
    out = []
    for refl in (False, True):
        for r in range(k):
            def f(j):
                j = k + 1 - j if refl else j
                return (j - 1 + r) % k + 1
            q = Partition(k, tuple(tuple(f(x) for x in b) for b in p.blocks))
            out.append(Pairing(k, q.blocks) if q.is_pairing else q)
    return out


def dihedral_canonical(p: Partition) -> Partition:
    return min(dihedral_images(p), key=lambda q: q.blocks)


def dihedral_orbits(parts: Iterable[Partition]) -> dict[Partition, list[Partition]]:
    """Group partitions by orbit; keys are canonical representatives, in first-seen order."""
    orbits: dict[Partition, list[Partition]] = {}
    for p in parts:
        orbits.setdefault(dihedral_canonical(p), []).append(p)
    return orbits
