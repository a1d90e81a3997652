"""Uniform chains on finite windows of uniformly locally finite spaces.

Chains are sparse dicts. Entries keep whatever number type they were built
from, so chains built from ``int``/``Fraction`` values have exact boundaries.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, TextIO

from .coarse_core import (
    MetricRadius,
    Relation,
    Window,
    box_window,
    interval_window,
)
from .groups import FreeAbelianGroup, FreeGroup

MAX_WINDOW_POINTS = 10**7


class NegativeChainError(ValueError):
    pass


@dataclass
class SparseChain0:
    entries: dict
    support_set: frozenset = None

    def __post_init__(self):
        self.entries = dict(self.entries)
        if self.support_set is None:
            self.support_set = frozenset(self.entries)
        else:
            self.support_set = frozenset(self.support_set)
            if not set(self.entries) <= self.support_set:
                raise ValueError("entries outside the declared support set")

    def __getitem__(self, s):
        return self.entries.get(s, 0)

    @property
    def bound(self):
        return max((abs(v) for v in self.entries.values()), default=0)

    def total(self):
        return sum(self.entries.values())


@dataclass
class SparseChain1:
    entries: dict
    support_entourage: Relation | None = None
    support_set: frozenset = None

    def __post_init__(self):
        self.entries = {k: v for k, v in dict(self.entries).items()}
        pts = {s for pair in self.entries for s in pair}
        if self.support_set is None:
            self.support_set = frozenset(pts)
        else:
            self.support_set = frozenset(self.support_set)
            if not pts <= self.support_set:
                raise ValueError("entry pairs outside S x S")

    def __getitem__(self, pair):
        return self.entries.get(pair, 0)

    @property
    def window(self) -> Window | None:
        return None if self.support_entourage is None else self.support_entourage.window

    @property
    def bound(self):
        return max((abs(v) for v in self.entries.values()), default=0)

    def validate(self) -> None:
        """Check that every entry pair lies in the support entourage."""
        if self.support_entourage is None:
            return
        for (a, b), v in self.entries.items():
            if v and not self.support_entourage.contains(a, b):
                raise ValueError(f"entry {(a, b)!r} outside {self.support_entourage!r}")

    def _combine(self, other: "SparseChain1", a, b) -> "SparseChain1":
        out = defaultdict(int)
        for k, v in self.entries.items():
            out[k] += a * v
        for k, v in other.entries.items():
            out[k] += b * v
        return SparseChain1(dict(out), self.support_entourage,
                            self.support_set | other.support_set)

    def __add__(self, other):
        return self._combine(other, 1, 1)

    def __sub__(self, other):
        return self._combine(other, 1, -1)

    def __rmul__(self, a):
        return SparseChain1({k: a * v for k, v in self.entries.items()},
                            self.support_entourage, self.support_set)

    def transposed(self) -> "SparseChain1":
        return SparseChain1({(b, a): v for (a, b), v in self.entries.items()},
                            self.support_entourage, self.support_set)


def boundary(theta: SparseChain1) -> SparseChain0:
    """Inflow minus outflow at each point of the support set."""
    out = {s: 0 for s in theta.support_set}
    for (s1, s2), v in theta.entries.items():
        out[s2] += v
        out[s1] -= v
    return SparseChain0(out, theta.support_set)


@dataclass
class EffectivenessCertificate:
    witness_relation: Relation | None
    min_interior_sum: object
    interior: tuple
    passed: bool
    argmin: object = None
    trusted_margin: float = 0.0
    tried: list = field(default_factory=list)

    @property
    def witness_radius(self):
        return None if self.witness_relation is None else self.witness_relation.reach

    def as_dict(self) -> dict:
        return {
            "pass": self.passed,
            "witness": repr(self.witness_relation),
            "witness_radius": _num(self.witness_radius),
            "min_interior_sum": _num(self.min_interior_sum),
            "interior_points": len(self.interior),
            "trusted_margin": _num(self.trusted_margin),
        }


def _num(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    return v


def radius_schedule(window: Window, limit: float, step: float = 1.0) -> list[MetricRadius]:
    """MetricRadius(0), MetricRadius(step), ... up to ``limit``."""
    n = int(math.floor(limit / step + 1e-9))
    return [MetricRadius(k * step, window) for k in range(n + 1)]


def check_effective(phi: SparseChain0, candidate_relations: Sequence[Relation], window: Window,
                    trusted_margin: float = 0.0) -> EffectivenessCertificate:
    """Search the candidates for a relation E with sum_{s in E_x n S} phi(s) >= 1.

    Only points at depth ``trusted_margin + reach(E)`` are quantified, so the
    sums read entries at depth >= ``trusted_margin``. Entries closer to the
    window edge than ``trusted_margin`` (where a truncated chain's boundary is
    meaningless) are never read. Entries that are read must be >= 0.
    """
    support = phi.support_set
    tried = []
    best = None
    for e in candidate_relations:
        if e.window is not window:
            raise ValueError("candidate relation lives on a different window")
        margin = trusted_margin + e.reach
        pts = window.interior(margin)
        if not pts:
            tried.append((e, None))
            continue
        worst, arg = None, None
        for x in pts:
            total = 0
            for s in e.section(x):
                if s in support:
                    v = phi.entries.get(s, 0)
                    if v < 0:
                        raise NegativeChainError(f"phi({s!r}) = {v} < 0; effective chains are non-negative")
                    total += v
            if worst is None or total < worst:
                worst, arg = total, x
        tried.append((e, worst))
        cert = EffectivenessCertificate(e, worst, pts, worst >= 1, arg, trusted_margin, tried)
        if cert.passed:
            return cert
        if best is None or worst > best.min_interior_sum:
            best = cert
    if best is None:
        return EffectivenessCertificate(None, None, (), False, None, trusted_margin, tried)
    best.tried = tried
    return best


def cayley_ball(group, radius: int, max_points: int = MAX_WINDOW_POINTS) -> Window:
    """Ball of the given word-length radius in free(k) or Z^n, with the word metric."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    size = group.ball_size(radius)
    if size > max_points:
        raise ValueError(f"ball of radius {radius} in {group!r} has {size} points (> {max_points})")
    pts = group.ball(radius)
    cache: dict = {}

    def ball(x, r):
        k = int(math.floor(r + 1e-12))
        if k not in cache:
            cache[k] = group.ball(k)
        return (group.mul(x, w) for w in cache[k])

    return Window(pts, group.distance, lambda x: radius - group.length(x), ball=ball,
                  name=f"{group!r} ball {radius}", group=group)


def free_group_scheme(k: int, radius: int) -> SparseChain1:
    """theta(s, parent(s)) = 1 on the ball of radius ``radius`` in F_k.

    Each interior non-identity vertex has 2k-1 children pushing in and one
    edge out, so its boundary is 2k-2; the identity receives 2k.
    """
    if k < 2:
        raise ValueError("free_group_scheme needs k >= 2: F_1 = Z is amenable and has no Ponzi scheme")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    group = FreeGroup(k)
    win = cayley_ball(group, radius)
    entries = {(s, group.parent(s)): 1 for s in win.points if s}
    return SparseChain1(entries, MetricRadius(1, win), frozenset(win.points))


# ---------------------------------------------------------------------------
# flux obstruction on Z^n


def _as_tuple(x):
    return x if isinstance(x, tuple) else (x,)


@dataclass
class FluxRow:
    lo: tuple
    hi: tuple
    size: int
    flux: object
    net_flow_bound: object
    crossing_pairs: int
    bound: object
    holds: bool
    refutes_unit_boundary: bool
    boundary_at_least_one: bool

    def as_dict(self) -> dict:
        return {k: (_num(v) if not isinstance(v, tuple) else list(v))
                for k, v in self.__dict__.items()}


@dataclass
class FluxReport:
    radius: int
    sup_norm: object
    oriented: bool
    rows: list

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows)

    def refutations(self) -> list[str]:
        out = []
        for r in self.rows:
            if r.refutes_unit_boundary:
                out.append(
                    f"window {r.lo}..{r.hi}: #W = {r.size} > {_num(r.bound)} = max|flux|, so no "
                    f"chain with support radius {self.radius} and net flow <= "
                    f"{_num(r.net_flow_bound)} has boundary >= 1 on all of W")
        return out


def _crossing_pairs(lo: tuple, hi: tuple, R: int) -> int:
    """Unordered pairs {x, y}, x in the box, y outside, |x - y|_1 <= R."""
    win = box_window(lo, hi)
    count = 0
    for x in win.points:
        if win.depth(x) >= R:
            continue
        for y in win._ball(x, R):
            if y != x and y not in win:
                count += 1
    return count


def flux_obstruction(theta: SparseChain1, windows: Iterable[tuple],
                     norm_bound=None) -> FluxReport:
    """Telescoping bound for boundary sums over boxes in Z^n.

    Pairs with both ends inside W cancel in sum_W boundary, so
    ``|sum_W boundary| <= max|theta(x,y) - theta(y,x)| * #crossing pairs``.
    For oriented chains (one direction per pair, e.g. flows on edges) the
    net-flow norm equals the sup norm. ``norm_bound`` replaces the chain's own
    net-flow norm in the bound (it must dominate it), so the refutations speak
    about every chain of that norm.
    """
    ent = theta.support_entourage
    if not isinstance(ent, MetricRadius):
        raise ValueError("flux_obstruction needs a metric support entourage")
    R = int(ent.r)
    metric = ent.window.metric
    for (a, b), v in theta.entries.items():
        if v and metric(a, b) > R:
            raise ValueError(f"entry {(a, b)!r} exceeds support radius {R}")
    net = {}
    for (a, b), v in theta.entries.items():
        key = (a, b) if _as_tuple(a) <= _as_tuple(b) else (b, a)
        sign = 1 if key == (a, b) else -1
        net[key] = net.get(key, 0) + sign * v
    net_norm = max((abs(v) for v in net.values()), default=0)
    if norm_bound is not None:
        if norm_bound < net_norm:
            raise ValueError(f"norm_bound {norm_bound} is below the chain's net flow {net_norm}")
        net_norm = norm_bound
    oriented = all(not (theta.entries.get((a, b), 0) and theta.entries.get((b, a), 0))
                   for a, b in theta.entries if a != b)
    bd = boundary(theta).entries
    rows = []
    for lo, hi in windows:
        lo_t, hi_t = _as_tuple(lo), _as_tuple(hi)
        inside = box_window(lo_t, hi_t)
        pts = [p if isinstance(lo, tuple) else p[0] for p in inside.points]
        flux = sum(bd.get(p, 0) for p in pts)
        ncross = _crossing_pairs(lo_t, hi_t, R)
        bound = net_norm * ncross
        rows.append(FluxRow(
            lo=lo_t, hi=hi_t, size=len(pts), flux=flux, net_flow_bound=net_norm,
            crossing_pairs=ncross, bound=bound, holds=abs(flux) <= bound,
            refutes_unit_boundary=len(pts) > bound,
            boundary_at_least_one=all(bd.get(p, 0) >= 1 for p in pts)))
    return FluxReport(R, theta.bound, oriented, rows)


def line_chain(entries: Mapping, lo: int, hi: int, R: int) -> SparseChain1:
    """Chain on the integers lo..hi with support radius R."""
    return SparseChain1(dict(entries), MetricRadius(R, interval_window(lo, hi)))


# ---------------------------------------------------------------------------
# text format: "s1 <TAB> s2 <TAB> value"


def _format_point(p, group) -> str:
    if group is None:
        return str(p)
    return group.format(p)


def _parse_point(text: str, group):
    if group is None:
        return int(text)
    return group.parse(text)


def _format_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return repr(v)


def _parse_value(text: str):
    t = text.strip()
    try:
        q = Fraction(t)
    except ValueError:
        return float(t)
    return int(q) if q.denominator == 1 else q


def write_chain(theta: SparseChain1, fh: TextIO, group=None) -> None:
    """Write one ``s1 TAB s2 TAB value`` line per non-zero entry, sorted."""
    rows = [(_format_point(a, group), _format_point(b, group), _format_value(v))
            for (a, b), v in theta.entries.items() if v]
    for a, b, v in sorted(rows):
        fh.write(f"{a}\t{b}\t{v}\n")


def read_chain(fh: TextIO, group=None) -> dict:
    """Parse the tab-separated chain format into an entries dict.

    Points are integers (``group=None``), reduced words (``1`` is the
    identity) or comma-separated integer tuples. Blank lines and ``#``
    comments are skipped.
    """
    out = {}
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
        a, b, v = parts
        key = (_parse_point(a, group), _parse_point(b, group))
        out[key] = out.get(key, 0) + _parse_value(v)
    return out


__all__ = [
    "SparseChain0", "SparseChain1", "EffectivenessCertificate", "NegativeChainError",
    "boundary", "check_effective", "radius_schedule", "cayley_ball", "free_group_scheme",
    "flux_obstruction", "FluxReport", "line_chain", "write_chain", "read_chain",
    "FreeAbelianGroup", "FreeGroup",
]
