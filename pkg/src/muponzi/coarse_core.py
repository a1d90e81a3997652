"""Controlled sets on finite windows: relation algebra, coarse-structure axiom
checks and the bornologous / effectively proper / coarsely surjective map
taxonomy.

A :class:`Window` is a finite truncation of a coarse space. Statements that
the theory makes "for all x" are checked only on ``window.interior(margin)``,
the points whose closed ``margin``-ball lies inside the window.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from . import hyperbolic

Point = Hashable


class WindowMismatch(ValueError):
    pass


class Window:
    """A finite (or, for disk windows, bounded continuous) piece of a space.

    ``depth(x)`` is the largest r such that the closed r-ball around x lies in
    the window; ``ball(x, r)`` optionally enumerates the ambient points within
    distance r of x (used to avoid quadratic section scans).
    """

    def __init__(self, points: Sequence[Point] | None, metric: Callable, depth: Callable,
                 *, ball: Callable | None = None, name: str = "", group=None):
        self.points = None if points is None else tuple(points)
        self._index = None if points is None else frozenset(self.points)
        if self._index is not None and len(self._index) != len(self.points):
            raise ValueError("window points must be distinct")
        self.metric = metric
        self.depth = depth
        self._ball = ball
        self.name = name
        self.group = group

    def __repr__(self) -> str:
        n = "continuous" if self.points is None else f"{len(self.points)} points"
        return f"Window({self.name or '?'}, {n})"

    def __len__(self) -> int:
        if self.points is None:
            raise TypeError("continuous window has no point count")
        return len(self.points)

    def __contains__(self, x) -> bool:
        if self._index is None:
            return bool(self.depth(x) >= 0)
        return x in self._index

    @property
    def discrete(self) -> bool:
        return self.points is not None

    def require(self, x) -> None:
        if x not in self:
            raise WindowMismatch(f"point {x!r} is outside {self!r}")

    def interior(self, r: float = 0.0) -> tuple:
        """Points whose closed r-ball lies inside the window."""
        if self.points is None:
            raise TypeError("interior of a continuous window is a region; use depth()")
        if r <= 0:
            return self.points
        return tuple(x for x in self.points if self.depth(x) >= r - 1e-12)

    def ball(self, x, r: float) -> list:
        """Window points within distance r of x."""
        if self._ball is not None:
            return [y for y in self._ball(x, r) if y in self._index]
        return [y for y in self.points if self.metric(x, y) <= r + 1e-12]

    def diameter(self) -> float:
        if self.points is None:
            raise TypeError("continuous window")
        return max((self.metric(x, y) for x in self.points for y in self.points), default=0.0)


def interval_window(lo: int, hi: int) -> Window:
    """The integers lo..hi with |x - y|."""
    if hi < lo:
        raise ValueError("empty interval")

    def ball(x, r):
        k = int(math.floor(r + 1e-12))
        return range(x - k, x + k + 1)

    return Window(range(lo, hi + 1), lambda x, y: abs(x - y),
                  lambda x: min(x - lo, hi - x), ball=ball, name=f"Z[{lo},{hi}]")


def box_window(lo: Sequence[int], hi: Sequence[int]) -> Window:
    """Integer box in Z^n with the l1 (word) metric."""
    lo, hi = tuple(lo), tuple(hi)
    pts = list(itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))))

    def depth(x):
        return min(min(a - l, h - a) for a, l, h in zip(x, lo, hi))

    def metric(x, y):
        return sum(abs(a - b) for a, b in zip(x, y))

    def ball(x, r):
        k = int(math.floor(r + 1e-12))
        for off in itertools.product(range(-k, k + 1), repeat=len(x)):
            if sum(abs(o) for o in off) <= k:
                yield tuple(a + o for a, o in zip(x, off))

    return Window(pts, metric, depth, ball=ball, name=f"box{lo}-{hi}")


def finite_window(points: Sequence[Point], metric: Callable, name: str = "") -> Window:
    """A finite metric space taken as a whole (every point is interior)."""
    return Window(points, metric, lambda x: math.inf, name=name)


def disk_window(R: float) -> Window:
    """The closed geodesic ball of radius R about 0 in the Poincare disk."""
    return Window(None, hyperbolic.distance, lambda z: R - hyperbolic.radius_from_origin(z),
                  name=f"D(0,{R:g})")


def disk_point_window(points: Sequence[complex], R: float, name: str = "") -> Window:
    """Finitely many disk points viewed inside the ball of radius R about 0."""
    pts = tuple(complex(hyperbolic.as_complex(p)) for p in points)
    arr = np.array(pts)

    def ball(x, r):
        d = hyperbolic.distance(complex(x), arr)
        return [pts[i] for i in np.nonzero(d <= r + 1e-12)[0]]

    return Window(pts, lambda x, y: hyperbolic.distance(x, y),
                  lambda z: R - hyperbolic.radius_from_origin(z), ball=ball,
                  name=name or f"lattice in D(0,{R:g})")


# ---------------------------------------------------------------------------
# relations


class Relation:
    window: Window

    def contains(self, x, y) -> bool:
        raise NotImplementedError

    def section(self, x) -> frozenset:
        raise NotImplementedError

    def pairs(self) -> frozenset:
        return frozenset((x, y) for x in _points(self.window) for y in self.section(x))

    @property
    def reach(self) -> float:
        """An upper bound on d(x, y) over pairs in the relation."""
        raise NotImplementedError


def _points(w: Window):
    if not w.discrete:
        raise TypeError(f"{w!r} is continuous; pair enumeration needs a finite window")
    return w.points


@dataclass(frozen=True, eq=False)
class ExplicitPairs(Relation):
    pair_set: frozenset
    window: Window

    def __post_init__(self):
        object.__setattr__(self, "pair_set", frozenset(self.pair_set))
        for x, y in self.pair_set:
            if x not in self.window or y not in self.window:
                raise WindowMismatch(f"pair {(x, y)!r} leaves {self.window!r}")
        sec: dict = {}
        for x, y in self.pair_set:
            sec.setdefault(x, set()).add(y)
        object.__setattr__(self, "_sections", {k: frozenset(v) for k, v in sec.items()})

    def __repr__(self) -> str:
        return f"ExplicitPairs({len(self.pair_set)} pairs)"

    def contains(self, x, y) -> bool:
        return (x, y) in self.pair_set

    def section(self, x) -> frozenset:
        self.window.require(x)
        return self._sections.get(x, frozenset())

    def pairs(self) -> frozenset:
        return self.pair_set

    @property
    def reach(self) -> float:
        return max((self.window.metric(x, y) for x, y in self.pair_set), default=0.0)


@dataclass(frozen=True, eq=False)
class MetricRadius(Relation):
    r: float
    window: Window

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radius must be non-negative")

    def __repr__(self) -> str:
        return f"MetricRadius({self.r:g})"

    def contains(self, x, y) -> bool:
        return bool(self.window.metric(x, y) <= self.r + 1e-12)

    def section(self, x) -> frozenset:
        self.window.require(x)
        if self.r == 0:
            return frozenset([x])
        return frozenset(self.window.ball(x, self.r))

    @property
    def reach(self) -> float:
        return self.r


@dataclass(frozen=True, eq=False)
class GroupCompact(Relation):
    """E_C = {(x, y) : x^-1 y in C} for a finite set C of group elements."""
    C: frozenset
    window: Window

    def __post_init__(self):
        object.__setattr__(self, "C", frozenset(self.C))
        if self.window.group is None:
            raise WindowMismatch("GroupCompact needs a window carrying a group")

    def __repr__(self) -> str:
        return f"GroupCompact(|C|={len(self.C)})"

    @property
    def group(self):
        return self.window.group

    def contains(self, x, y) -> bool:
        return self.group.mul(self.group.inv(x), y) in self.C

    def section(self, x) -> frozenset:
        self.window.require(x)
        return frozenset(y for y in (self.group.mul(x, c) for c in self.C) if y in self.window)

    @property
    def reach(self) -> float:
        return max((self.group.length(c) for c in self.C), default=0)


def diagonal(window: Window) -> ExplicitPairs:
    return ExplicitPairs(frozenset((x, x) for x in _points(window)), window)


def _same_window(e1: Relation, e2: Relation) -> None:
    if e1.window is not e2.window:
        raise WindowMismatch("relations live on different windows")


def compose(e1: Relation, e2: Relation) -> ExplicitPairs:
    """E1 o E2 = {(x, z) : (x, y) in E1 and (y, z) in E2 for some y in the window}."""
    _same_window(e1, e2)
    out = set()
    for x in _points(e1.window):
        for y in e1.section(x):
            for z in e2.section(y):
                out.add((x, z))
    return ExplicitPairs(frozenset(out), e1.window)


def transpose(e: Relation) -> Relation:
    if isinstance(e, MetricRadius):
        return e
    if isinstance(e, GroupCompact):
        return GroupCompact(frozenset(e.group.inv(c) for c in e.C), e.window)
    return ExplicitPairs(frozenset((y, x) for x, y in e.pairs()), e.window)


def union(e1: Relation, e2: Relation) -> Relation:
    _same_window(e1, e2)
    if isinstance(e1, MetricRadius) and isinstance(e2, MetricRadius):
        return MetricRadius(max(e1.r, e2.r), e1.window)
    if isinstance(e1, GroupCompact) and isinstance(e2, GroupCompact):
        return GroupCompact(e1.C | e2.C, e1.window)
    return ExplicitPairs(e1.pairs() | e2.pairs(), e1.window)


def section(e: Relation, x) -> frozenset:
    return e.section(x)


def pair_set(e: Relation) -> frozenset:
    return e.pairs()


def is_subset(a: Relation, b: Relation) -> tuple[bool, tuple | None]:
    """Whether a is contained in b on the window, with a counterexample pair if not.

    Metric-radius pairs are decided by radius arithmetic; everything else by
    enumerating the pairs of ``a``.
    """
    _same_window(a, b)
    if isinstance(a, MetricRadius) and isinstance(b, MetricRadius) and a.r <= b.r:
        return True, None
    for x in _points(a.window):
        for y in a.section(x):
            if not b.contains(x, y):
                return False, (x, y)
    return True, None


# ---------------------------------------------------------------------------
# coarse structure axioms


@dataclass
class AxiomCheck:
    axiom: str
    operands: tuple
    witness: Relation | None
    passed: bool
    certified_by: str = "enumeration"
    counterexample: tuple | None = None


@dataclass
class AxiomReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]


def _closure_candidates(kind: str, e1: Relation, e2: Relation | None) -> list[tuple[Relation, str]]:
    """Family members that must contain the derived set, by radius/word arithmetic."""
    if kind == "transpose":
        if isinstance(e1, MetricRadius):
            return [(MetricRadius(e1.r, e1.window), "radius arithmetic")]
        if isinstance(e1, GroupCompact):
            return [(transpose(e1), "C^-1")]
        return []
    if isinstance(e1, MetricRadius) and isinstance(e2, MetricRadius):
        r = e1.r + e2.r if kind == "product" else max(e1.r, e2.r)
        return [(MetricRadius(r, e1.window), "radius arithmetic")]
    if isinstance(e1, GroupCompact) and isinstance(e2, GroupCompact):
        g = e1.group
        if kind == "product":
            return [(GroupCompact(frozenset(g.mul(a, b) for a in e1.C for b in e2.C), e1.window),
                     "C1*C2")]
        return [(GroupCompact(e1.C | e2.C, e1.window), "C1 u C2")]
    return []


def _covering_generator(derived: Relation, candidates, generators):
    """Find a witness containing ``derived``; returns (witness, how, counterexample)."""
    counter = None
    for cand, how in candidates:
        ok, bad = is_subset(derived, cand)
        if ok:
            # metric arithmetic is a certificate; still cross-checked by enumeration
            if how == "radius arithmetic":
                ok2, bad2 = _enumerated_subset(derived, cand)
                if not ok2:
                    return None, how, bad2
            return cand, how, None
        counter = bad
    for g in generators:
        ok, bad = is_subset(derived, g)
        if ok:
            return g, "generator", None
        counter = counter or bad
    return None, "none", counter


def _enumerated_subset(a: Relation, b: Relation):
    for x in _points(a.window):
        for y in a.section(x):
            if not b.contains(x, y):
                return False, (x, y)
    return True, None


def check_coarse_axioms(generators: Sequence[Relation], window: Window) -> AxiomReport:
    """Closure witnesses for the coarse-structure axioms on a window.

    Subset stability holds by definition and is not checked. For each
    generator (pair) the transposed / united / composed relation must lie in
    a family member: for metric and group families that member is computed
    by radius (resp. word) arithmetic, otherwise it must be a listed
    generator.
    """
    if not generators:
        raise ValueError("need at least one generator")
    for g in generators:
        if g.window is not window:
            raise WindowMismatch("generator lives on a different window")
    report = AxiomReport()

    diag = diagonal(window)
    cands = []
    if any(isinstance(g, MetricRadius) for g in generators):
        cands.append((MetricRadius(0, window), "radius arithmetic"))
    gs = [g for g in generators if isinstance(g, GroupCompact)]
    if gs:
        cands.append((GroupCompact(frozenset([window.group.identity]), window), "C = {e}"))
    w, how, bad = _covering_generator(diag, cands, generators)
    report.checks.append(AxiomCheck("diagonal", (), w, w is not None, how, bad))

    for i, e in enumerate(generators):
        t = transpose(e)
        w, how, bad = _covering_generator(t, _closure_candidates("transpose", e, None), generators)
        report.checks.append(AxiomCheck("transpose", (i,), w, w is not None, how, bad))

    for i, j in itertools.product(range(len(generators)), repeat=2):
        e1, e2 = generators[i], generators[j]
        if i <= j:
            u = union(e1, e2)
            w, how, bad = _covering_generator(u, _closure_candidates("union", e1, e2), generators)
            report.checks.append(AxiomCheck("union", (i, j), w, w is not None, how, bad))
        p = compose(e1, e2)
        w, how, bad = _covering_generator(p, _closure_candidates("product", e1, e2), generators)
        report.checks.append(AxiomCheck("product", (i, j), w, w is not None, how, bad))
    return report


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class CoarseMapSpec:
    forward: Callable
    backward: Callable | None = None


@dataclass(frozen=True)
class Space:
    """A window together with finitely many generators standing in for its coarse structure."""
    window: Window
    generators: tuple

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        for g in self.generators:
            if g.window is not self.window:
                raise WindowMismatch("generator lives on a different window")


@dataclass
class MapCondition:
    name: str
    passed: bool
    witnesses: list = field(default_factory=list)
    counterexample: object = None


@dataclass
class MapReport:
    bornologous: MapCondition
    effectively_proper: MapCondition
    coarsely_surjective: MapCondition
    close_to_identity_roundtrips: MapCondition | None

    @property
    def coarse_equivalence(self) -> bool:
        return self.bornologous.passed and self.effectively_proper.passed \
            and self.coarsely_surjective.passed

    def as_dict(self) -> dict:
        out = {}
        for c in (self.bornologous, self.effectively_proper, self.coarsely_surjective,
                  self.close_to_identity_roundtrips):
            if c is not None:
                out[c.name] = c.passed
        return out


def _smallest_containing(pairs: Iterable[tuple], space: Space):
    pairs = list(pairs)
    bad = None
    for g in sorted(space.generators, key=lambda g: g.reach):
        miss = next(((x, y) for x, y in pairs if not g.contains(x, y)), None)
        if miss is None:
            return g, None
        bad = miss
    return None, bad


def default_radius_schedule(limit: float) -> list[float]:
    """0, 1/8, ..., 1, then integers up to ``limit``."""
    sched = [k / 8 for k in range(9)]
    sched += [float(k) for k in range(2, int(math.ceil(limit)) + 1)]
    return sched


def classify_map(m: CoarseMapSpec, src: Space, dst: Space, margin: float = 0.0,
                 radius_schedule: Sequence[float] | None = None) -> MapReport:
    """Test the map conditions of a coarse equivalence on windows.

    "Controlled" means contained in one of the supplied generators. Universal
    statements about target points are restricted to the dst interior at
    ``margin``; closeness of the round trips is tested on the interiors.
    """
    sw, dw = src.window, dst.window
    phi = m.forward
    image = {x: phi(x) for x in _points(sw)}
    missing = [x for x, y in image.items() if y not in dw]
    if missing:
        bad = MapCondition("bornologous", False, counterexample=("image outside dst", missing[0]))
        return MapReport(bad, MapCondition("effectively_proper", False),
                         MapCondition("coarsely_surjective", False), None)

    born = MapCondition("bornologous", True)
    for e in src.generators:
        img = {(image[x], image[y]) for x in sw.points for y in e.section(x)}
        w, bad = _smallest_containing(img, dst)
        born.witnesses.append((e, w))
        if w is None:
            born.passed = False
            born.counterexample = bad
            break

    fibres: dict = {}
    for x, y in image.items():
        fibres.setdefault(y, []).append(x)
    eff = MapCondition("effectively_proper", True)
    for f in dst.generators:
        pre = set()
        for x in sw.points:
            for y2 in f.section(image[x]):
                for x2 in fibres.get(y2, ()):
                    pre.add((x, x2))
        w, bad = _smallest_containing(pre, src)
        eff.witnesses.append((f, w))
        if w is None:
            eff.passed = False
            eff.counterexample = bad
            break

    targets = dw.interior(margin)
    img_pts = list(fibres)
    cover = max((min(dw.metric(y, p) for p in img_pts) for y in targets), default=0.0)
    if radius_schedule is None:
        radius_schedule = default_radius_schedule(dw.diameter())
    surj = MapCondition("coarsely_surjective (corrected reading)", False)
    for r in radius_schedule:
        if cover <= r + 1e-12:
            surj.passed = True
            surj.witnesses.append(MetricRadius(r, dw))
            break
    if not surj.passed:
        surj.counterexample = ("covering radius", cover)

    close = None
    if m.backward is not None:
        psi = m.backward
        close = MapCondition("close_to_identity_roundtrips", True)
        rt_src, rt_dst = [], []
        for x in sw.interior(margin):
            xx = psi(image[x])
            if xx not in sw:
                close.passed = False
                close.counterexample = ("psi(phi(x)) outside src", x)
                break
            rt_src.append((x, xx))
        for y in targets:
            x = psi(y)
            if x not in sw:
                close.passed = False
                close.counterexample = ("psi(y) outside src", y)
                break
            rt_dst.append((y, phi(x)))
        if close.passed:
            w1, bad1 = _smallest_containing(rt_src, src)
            w2, bad2 = _smallest_containing(rt_dst, dst)
            close.witnesses = [w1, w2]
            if w1 is None or w2 is None:
                close.passed = False
                close.counterexample = bad1 or bad2
    return MapReport(born, eff, surj, close)


def uniform_local_finiteness(S: Iterable, e: Relation, window: Window,
                             margin: float | None = None) -> int:
    """max over interior x of #(E_x n S)."""
    S = frozenset(S)
    for s in S:
        window.require(s)
    if margin is None:
        margin = e.reach
    pts = window.interior(margin)
    if not pts:
        raise ValueError(f"{window!r} has no points at depth {margin}")
    return max(len(e.section(x) & S) for x in pts)
