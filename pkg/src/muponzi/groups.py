"""Word arithmetic for the two group families used as discrete test spaces.

Free groups use lowercase letters for generators and uppercase for their
inverses; elements are freely reduced strings with ``""`` as the identity.
Free abelian groups use integer tuples.
"""

from __future__ import annotations

import string
from functools import lru_cache
from math import comb
from typing import Iterator

IDENTITY_TOKEN = "1"


class FreeGroup:
    def __init__(self, rank: int):
        if not 1 <= rank <= 26:
            raise ValueError(f"free group rank must be in [1, 26], got {rank}")
        self.rank = rank
        self.letters = string.ascii_lowercase[:rank]
        self.generators = tuple(self.letters) + tuple(self.letters.upper())

    def __repr__(self) -> str:
        return f"free({self.rank})"

    def __eq__(self, other) -> bool:
        return isinstance(other, FreeGroup) and other.rank == self.rank

    def __hash__(self) -> int:
        return hash(("free", self.rank))

    identity = ""

    def is_reduced(self, w: str) -> bool:
        if any(ch not in self.generators for ch in w):
            return False
        return all(a != b.swapcase() for a, b in zip(w, w[1:]))

    def mul(self, u: str, v: str) -> str:
        # cancel the longest inverse suffix/prefix pair
        i = 0
        n = min(len(u), len(v))
        while i < n and u[len(u) - 1 - i] == v[i].swapcase():
            i += 1
        return u[: len(u) - i] + v[i:]

    def inv(self, w: str) -> str:
        return w[::-1].swapcase()

    def length(self, w: str) -> int:
        return len(w)

    def distance(self, u: str, v: str) -> int:
        return len(self.mul(self.inv(u), v))

    def neighbors(self, w: str) -> Iterator[str]:
        for g in self.generators:
            yield self.mul(w, g)

    def parent(self, w: str) -> str:
        return w[:-1]

    def ball_size(self, radius: int) -> int:
        if radius < 0:
            return 0
        k = self.rank
        if k == 1:
            return 2 * radius + 1
        return 1 + 2 * k * ((2 * k - 1) ** radius - 1) // (2 * k - 2)

    def ball(self, radius: int) -> list[str]:
        """All reduced words of length <= radius, in shortlex order."""
        return list(_free_ball(self.rank, radius))

    def format(self, w: str) -> str:
        return w if w else IDENTITY_TOKEN

    def parse(self, text: str) -> str:
        text = text.strip()
        w = "" if text == IDENTITY_TOKEN else text
        if not self.is_reduced(w):
            raise ValueError(f"{text!r} is not a reduced word in {self!r}")
        return w


@lru_cache(maxsize=32)
def _free_ball(rank: int, radius: int) -> tuple[str, ...]:
    gens = tuple(string.ascii_lowercase[:rank]) + tuple(string.ascii_lowercase[:rank].upper())
    layer = [""]
    out = [""]
    for _ in range(radius):
        nxt = []
        for w in layer:
            for g in gens:
                if w and w[-1] == g.swapcase():
                    continue
                nxt.append(w + g)
        nxt.sort()
        out.extend(nxt)
        layer = nxt
    return tuple(out)


class FreeAbelianGroup:
    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"Z^n needs n >= 1, got {dim}")
        self.dim = dim
        gens = []
        for i in range(dim):
            for sign in (1, -1):
                e = [0] * dim
                e[i] = sign
                gens.append(tuple(e))
        self.generators = tuple(gens)
        self.identity = (0,) * dim

    def __repr__(self) -> str:
        return f"Z{self.dim}"

    def __eq__(self, other) -> bool:
        return isinstance(other, FreeAbelianGroup) and other.dim == self.dim

    def __hash__(self) -> int:
        return hash(("Z", self.dim))

    def is_reduced(self, w) -> bool:
        return isinstance(w, tuple) and len(w) == self.dim and all(isinstance(a, int) for a in w)

    def mul(self, u, v):
        return tuple(a + b for a, b in zip(u, v))

    def inv(self, w):
        return tuple(-a for a in w)

    def length(self, w) -> int:
        return sum(abs(a) for a in w)

    def distance(self, u, v) -> int:
        return sum(abs(a - b) for a, b in zip(u, v))

    def neighbors(self, w):
        for g in self.generators:
            yield self.mul(w, g)

    def ball_size(self, radius: int) -> int:
        if radius < 0:
            return 0
        n = self.dim
        return sum(2**i * comb(n, i) * comb(radius, i) for i in range(n + 1))

    def ball(self, radius: int) -> list[tuple]:
        return list(_abelian_ball(self.dim, radius))

    def format(self, w) -> str:
        return ",".join(str(a) for a in w)

    def parse(self, text: str):
        w = tuple(int(a) for a in text.strip().split(","))
        if len(w) != self.dim:
            raise ValueError(f"{text!r} is not a point of {self!r}")
        return w


@lru_cache(maxsize=32)
def _abelian_ball(dim: int, radius: int) -> tuple[tuple, ...]:
    pts = [()]
    for _ in range(dim):
        pts = [p + (a,) for p in pts for a in range(-radius, radius + 1)]
    pts = [p for p in pts if sum(abs(a) for a in p) <= radius]
    pts.sort(key=lambda p: (sum(abs(a) for a in p), p))
    return tuple(pts)


def parse_group(text: str):
    """Parse ``free(k)`` / ``F2`` / ``Z2`` / ``Zn(2)`` into a group object."""
    t = text.strip().replace(" ", "")
    low = t.lower()
    for prefix in ("free(", "zn("):
        if low.startswith(prefix) and low.endswith(")"):
            n = int(low[len(prefix):-1])
            return FreeGroup(n) if prefix == "free(" else FreeAbelianGroup(n)
    if low.startswith("f") and low[1:].isdigit():
        return FreeGroup(int(low[1:]))
    if low.startswith("z") and low[1:].isdigit():
        return FreeAbelianGroup(int(low[1:]))
    if low == "z":
        return FreeAbelianGroup(1)
    raise ValueError(f"unknown group {text!r}; expected free(k) or Zn(n)")
