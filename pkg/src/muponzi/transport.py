"""Push-forwards of measure chains along measure-effectively-proper maps, the
quasi-lattice tiling, and the two conversions between measure Ponzi schemes
and discrete Ponzi schemes.

Discrete maps are dicts (or callables) from source points to target points.
On discrete windows every quantity is a finite sum, so rational inputs give
exact outputs.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import hyperbolic as hyp
from .coarse_core import (
    MetricRadius,
    Relation,
    Window,
    compose,
    disk_point_window,
    disk_window,
)
from .discrete_chains import (
    EffectivenessCertificate,
    NegativeChainError,
    SparseChain0,
    SparseChain1,
    boundary,
    check_effective,
    radius_schedule,
)
from .measure_chains import (
    MeasureSpec,
    MuChain0,
    MuChain1,
    boundary_closed_form,
    boundary_mu,
    counting_on,
    measure_of_section,
)


class NoFiniteConstant(ArithmeticError):
    """mu_Y(B) = 0 while mu_X(phi^-1 B) > 0."""

    def __init__(self, msg, witness):
        super().__init__(msg)
        self.witness = witness


class ZeroTargetMass(ArithmeticError):
    pass


class CoverageError(ValueError):
    def __init__(self, msg, gaps):
        super().__init__(msg)
        self.gaps = gaps


class NotConstantOnS(ValueError):
    def __init__(self, msg, worst):
        super().__init__(msg)
        self.worst = worst


def _apply(phi, x):
    return phi[x] if isinstance(phi, Mapping) else phi(x)


def _div(a, b):
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        q = Fraction(a) / Fraction(b)
        return int(q) if q.denominator == 1 else q
    return a / b


# ---------------------------------------------------------------------------
# measure-effective properness


@dataclass(frozen=True)
class PushForwardConstant:
    C: object
    witness_set: frozenset | None = None


def pushforward_measure(phi, mu_x: MeasureSpec) -> dict:
    """(phi_* mu_X)({y}) for a discrete source measure."""
    out = defaultdict(int)
    for x, w in mu_x.weights.items():
        out[_apply(phi, x)] += w
    return dict(out)


def check_measure_effectively_proper(phi, mu_x: MeasureSpec, mu_y: MeasureSpec,
                                     test_sets: Sequence | None = None) -> PushForwardConstant:
    """Smallest C with (phi_* mu_X)(B) <= C mu_Y(B) over the test sets.

    ``phi`` is a discrete map, or a :class:`Tiling` on a disk window (then
    mu_X(phi^-1 B) is a sum of tile areas). Test sets default to the
    singletons of the image.
    """
    if isinstance(phi, Tiling):
        pushed = phi.tile_measures()
    else:
        pushed = pushforward_measure(phi, mu_x)
    if test_sets is None:
        test_sets = [frozenset([y]) for y in pushed]
    best, arg = 0, None
    for B in test_sets:
        B = frozenset(B)
        num = sum(pushed.get(y, 0) for y in B)
        den = mu_y.of_set(B)
        if den == 0:
            if num > 0:
                raise NoFiniteConstant(f"mu_Y(B) = 0 but mu_X(phi^-1 B) = {num}", B)
            continue
        ratio = _div(num, den)
        if ratio > best:
            best, arg = ratio, B
    return PushForwardConstant(best, arg)


# ---------------------------------------------------------------------------
# push-forwards of chains (discrete source and target)


def _table0(f) -> dict:
    if isinstance(f, MuChain0):
        if f.table is None:
            raise TypeError("discrete push-forward needs a tabulated chain")
        return f.table
    if isinstance(f, SparseChain0):
        return f.entries
    return dict(f)


def _table1(c) -> dict:
    if isinstance(c, MuChain1):
        if c.table is None:
            raise TypeError("discrete push-forward needs a tabulated chain")
        return c.table
    if isinstance(c, SparseChain1):
        return c.entries
    return dict(c)


def pushforward_chain0(phi, f, mu_x: MeasureSpec, mu_y: MeasureSpec, C=None) -> MuChain0:
    """(phi_* f)(y) = (1 / mu_Y{y}) * sum_{phi(x) = y} f(x) mu_X{x}."""
    acc = defaultdict(int)
    for x, v in _table0(f).items():
        if v:
            acc[_apply(phi, x)] += v * mu_x.mass(x)
    out = {}
    for y, v in acc.items():
        m = mu_y.mass(y)
        if m == 0:
            if v:
                raise ZeroTargetMass(f"target point {y!r} has measure zero but receives mass {v}")
            continue
        out[y] = _div(v, m)
    pushed = MuChain0.from_table(out)
    if C is not None:
        f_bound = max((abs(v) for v in _table0(f).values()), default=0)
        if pushed.sup_bound > C * f_bound:
            raise ArithmeticError(f"||phi_* f|| = {pushed.sup_bound} exceeds C ||f|| = {C * f_bound}")
    return pushed


def pushforward_chain1(phi, c, mu_x: MeasureSpec, mu_y: MeasureSpec, C=None,
                       target_entourage: Relation | None = None) -> MuChain1:
    """(phi_* c)(y1, y2) = sum over preimages of c(x1, x2) mu{x1} mu{x2} / (mu{y1} mu{y2}).

    The support entourage defaults to the exact image pairs (phi x phi)(E_c).
    """
    acc = defaultdict(int)
    for (x1, x2), v in _table1(c).items():
        if v:
            acc[(_apply(phi, x1), _apply(phi, x2))] += v * mu_x.mass(x1) * mu_x.mass(x2)
    out = {}
    for (y1, y2), v in acc.items():
        m = mu_y.mass(y1) * mu_y.mass(y2)
        if m == 0:
            if v:
                raise ZeroTargetMass(f"target pair {(y1, y2)!r} has measure zero but receives mass")
            continue
        out[(y1, y2)] = _div(v, m)
    if target_entourage is None:
        from .coarse_core import ExplicitPairs
        target_entourage = ExplicitPairs(frozenset(k for k, v in out.items() if v), mu_y.window)
    pushed = MuChain1.from_table(out, target_entourage, tag="push-forward")
    if C is not None:
        c_bound = max((abs(v) for v in _table1(c).values()), default=0)
        if pushed.sup_bound > C * C * c_bound:
            raise ArithmeticError("push-forward exceeds the C^2 ||c|| bound")
    return pushed


def pairing0(f, g, mu: MeasureSpec):
    """<f, g> = sum f g dmu. ``g`` is a dict or callable."""
    return sum(v * _apply(g, x) * mu.mass(x) for x, v in _table0(f).items() if v)


def pairing1(c, g, mu: MeasureSpec):
    return sum(v * _apply(g, k) * mu.mass(k[0]) * mu.mass(k[1])
               for k, v in _table1(c).items() if v)


def pullback(phi, g) -> Callable:
    """g o phi on points."""
    return lambda x: _apply(g, _apply(phi, x))


def pullback2(phi, g) -> Callable:
    return lambda k: _apply(g, (_apply(phi, k[0]), _apply(phi, k[1])))


def table_boundary(table: Mapping, mu: MeasureSpec) -> dict:
    """Integral boundary of a tabulated chain against a discrete measure."""
    out = defaultdict(int)
    for (x, y), v in table.items():
        if v:
            out[y] += v * mu.mass(x)
            out[x] -= v * mu.mass(y)
    return dict(out)


@dataclass
class NormBoundReport:
    lhs0: object
    rhs0: object
    lhs1: object
    rhs1: object

    @property
    def holds(self) -> bool:
        return self.lhs0 <= self.rhs0 and self.lhs1 <= self.rhs1


def pushforward_norm_bounds(phi, mu_x: MeasureSpec, mu_y: MeasureSpec, C, f: Mapping,
                            c: Mapping) -> NormBoundReport:
    """int |f| d(phi_* mu) <= C int |f| dmu_Y, and the product version with C^2.

    ``f`` lives on Y, ``c`` on Y x Y.
    """
    pm = pushforward_measure(phi, mu_x)
    lhs0 = sum(abs(v) * pm.get(y, 0) for y, v in f.items())
    rhs0 = C * sum(abs(v) * mu_y.mass(y) for y, v in f.items())
    lhs1 = sum(abs(v) * pm.get(a, 0) * pm.get(b, 0) for (a, b), v in c.items())
    rhs1 = C * C * sum(abs(v) * mu_y.mass(a) * mu_y.mass(b) for (a, b), v in c.items())
    return NormBoundReport(lhs0, rhs0, lhs1, rhs1)


@dataclass
class CommutationReport:
    boundary_of_push: dict
    push_of_boundary: dict
    discrepancy: object
    argmax: object = None
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tolerance

    def as_dict(self) -> dict:
        return {"discrepancy": float(self.discrepancy), "tolerance": self.tolerance,
                "points": len(self.boundary_of_push), "pass": self.passed}


def check_boundary_commutes(phi, c, mu_x: MeasureSpec, mu_y: MeasureSpec) -> CommutationReport:
    """Compare boundary(phi_* c) with phi_*(boundary c), computed independently."""
    pushed = pushforward_chain1(phi, c, mu_x, mu_y)
    lhs = table_boundary(pushed.table, mu_y)
    rhs = pushforward_chain0(phi, table_boundary(_table1(c), mu_x), mu_x, mu_y).table
    worst, arg = 0, None
    for y in set(lhs) | set(rhs):
        d = abs(lhs.get(y, 0) - rhs.get(y, 0))
        if d > worst:
            worst, arg = d, y
    return CommutationReport(lhs, rhs, worst, arg)


# ---------------------------------------------------------------------------
# tilings


@dataclass
class Tiling:
    """First-hit tiling: tile(lambda) = (E0)_lambda minus the sections of earlier points.

    Discrete tilings store the tiles as point sets. Disk tilings store the
    lattice and the radius ``delta`` of E0; membership is evaluated lazily.
    """
    lattice: tuple
    base_relation: Relation
    tiles: dict | None = None
    delta: float | None = None
    mu: MeasureSpec | None = None
    spec: hyp.QuadratureSpec | None = None
    _proj: dict = field(default=None, repr=False)
    _tile_mass: dict = field(default=None, repr=False)

    def __post_init__(self):
        if self.tiles is not None:
            self._proj = {x: lam for lam, t in self.tiles.items() for x in t}
        else:
            self._arr = np.array([complex(p) for p in self.lattice])
            self._rho = hyp.radius_from_origin(self._arr)

    @property
    def discrete(self) -> bool:
        return self.tiles is not None

    def project(self, x):
        """p(x): the tile containing x. Arrays of disk points map to index arrays."""
        if self.discrete:
            return self._proj[x]
        idx = self.project_index(x)
        if np.ndim(idx) == 0:
            if idx < 0:
                raise CoverageError(f"{x!r} is not covered", [x])
            return self.lattice[int(idx)]
        return idx

    def project_index(self, w, chunk: int = 4096):
        """Index of the first lattice point within delta of w (-1 if none)."""
        w = np.asarray(hyp.as_complex(w), dtype=complex)
        scalar = w.ndim == 0
        flat = w.reshape(-1)
        out = np.full(flat.shape, -1, dtype=np.int64)
        rho = hyp.radius_from_origin(flat)
        order = np.argsort(rho)
        d = self.delta + 1e-12
        for start in range(0, len(order), chunk):
            sel = order[start:start + chunk]
            lo, hi = rho[sel[0]] - d, rho[sel[-1]] + d
            cand = np.nonzero((self._rho >= lo) & (self._rho <= hi))[0]
            if not len(cand):
                continue
            dist = hyp.distance(flat[sel][:, None], self._arr[cand][None, :])
            hit = dist <= d
            any_hit = hit.any(axis=1)
            first = cand[np.argmax(hit, axis=1)]
            out[sel] = np.where(any_hit, first, -1)
        return int(out[0]) if scalar else out.reshape(w.shape)

    def tile(self, lam):
        if self.discrete:
            return self.tiles[lam]
        # only earlier lattice points within 2 delta can carve into the tile
        i = self.lattice.index(lam)
        c = self._arr[i]
        d = self.delta + 1e-12
        prev = self._arr[:i]
        prev = prev[hyp.distance(c, prev) <= 2 * d] if i else prev

        def inside(w):
            w = np.asarray(w, dtype=complex)
            hit = hyp.distance(w, c) <= d
            if len(prev):
                hit &= ~(hyp.distance(w[..., None], prev) <= d).any(axis=-1)
            return hit
        return inside

    def tile_measures(self) -> dict:
        """mu(tile) per lattice point (quadrature on the disk)."""
        if self._tile_mass is None:
            if self.discrete:
                mu = self.mu
                self._tile_mass = {lam: (mu.of_set(t) if mu is not None else len(t))
                                   for lam, t in self.tiles.items()}
            else:
                spec = self.spec or hyp.QuadratureSpec(abs_tol=1e-5)
                self._tile_mass = {lam: hyp.area_integral(self.tile(lam), lam, self.delta, spec).value
                                   for lam in self.lattice}
        return self._tile_mass

    def as_lines(self, fmt=str) -> list[str]:
        if self.discrete:
            return [f"{fmt(lam)}\t{','.join(fmt(x) for x in sorted(self.tiles[lam], key=_sort_key))}"
                    for lam in self.lattice]
        head = [f"# delta\t{self.delta!r}", "# order\tdistance-from-origin, angle, index"]
        return head + [f"{z.real!r}\t{z.imag!r}" for z in (complex(p) for p in self.lattice)]


def _sort_key(x):
    return (0, x) if isinstance(x, (int, tuple)) else (1, str(x))


def build_tiling(lattice: Sequence, e0: Relation, order: Callable | None = None,
                 coverage_margin: float = 0.0, mu: MeasureSpec | None = None,
                 spec: hyp.QuadratureSpec | None = None) -> Tiling:
    """Tile a window by first hits of (E0)_lambda in the given total order.

    ``order`` is a sort key on lattice points; without one the list order is
    used. Discrete windows must be covered on ``window.interior(coverage_margin)``
    (CoverageError lists the gaps). On disk windows ``e0`` must be a
    MetricRadius; coverage there is a property of the net (see greedy_net).
    """
    lam = list(lattice)
    if len(set(lam)) != len(lam):
        raise ValueError("lattice points must be distinct")
    if order is not None:
        lam.sort(key=order)
    window = e0.window
    if not window.discrete:
        if not isinstance(e0, MetricRadius):
            raise TypeError("disk tilings need E0 = MetricRadius(delta)")
        return Tiling(tuple(complex(hyp.as_complex(p)) for p in lam), e0, None, e0.r, mu, spec)
    covered: set = set()
    tiles = {}
    for p in lam:
        sec = e0.section(p)
        tiles[p] = frozenset(sec - covered)
        covered |= sec
    gaps = [x for x in window.interior(coverage_margin) if x not in covered]
    if gaps:
        raise CoverageError(f"{len(gaps)} interior points are not covered; not a quasi-lattice here", gaps)
    return Tiling(tuple(lam), e0, tiles, None, mu, spec)


def disk_order_key(z) -> tuple:
    """(distance from 0, angle in [0, 2pi)) for the deterministic net order."""
    z = complex(z)
    ang = math.atan2(z.imag, z.real) % (2 * math.pi)
    return (round(float(hyp.radius_from_origin(z)), 12), round(ang, 12))


def ring_stream(R: float, h: float) -> np.ndarray:
    """Points on geodesic circles about 0 whose covering radius of D(0, R) is <= h.

    Rings sit at radial spacing <= h; on each, arc spacing is <= h, so every
    point of D(0, R) is within h/2 + h/2 of a stream point.
    """
    radii = list(np.arange(0.0, R, h)) + [R]
    pts = []
    for rho in radii:
        n = 1 if rho == 0 else max(1, math.ceil(2 * math.pi * math.sinh(rho) / h))
        th = 2 * math.pi * np.arange(n) / n
        pts.append(hyp.polar_point(np.full(n, rho), th))
    return np.concatenate(pts)


def greedy_net(R: float, delta: float, mesh: float | None = None) -> list[complex]:
    """Greedy net of D(0, R): covering radius <= delta, separation > delta - mesh.

    A stream point is accepted when it is farther than ``delta - mesh`` from
    every accepted point. Each stream point is then within delta - mesh of the
    net and each disk point within mesh of the stream, so MetricRadius(delta)
    sections of the net cover D(0, R).
    """
    if not 0 < delta:
        raise ValueError("delta must be positive")
    mesh = mesh if mesh is not None else delta / 4
    if not 0 < mesh < delta:
        raise ValueError("mesh must lie in (0, delta)")
    stream = ring_stream(R, mesh)
    rho_s = hyp.radius_from_origin(stream)
    sep = delta - mesh
    acc = np.empty(len(stream), dtype=complex)
    acc_rho = np.empty(len(stream))
    n = 0
    for z, rz in zip(stream, rho_s):
        if n:
            near = np.nonzero(acc_rho[:n] >= rz - sep - 1e-12)[0]
            if len(near) and np.min(hyp.distance(z, acc[near])) <= sep:
                continue
        acc[n], acc_rho[n] = z, rz
        n += 1
    net = [complex(z) for z in acc[:n]]
    net.sort(key=disk_order_key)
    return net


# ---------------------------------------------------------------------------
# measure Ponzi scheme -> discrete Ponzi scheme


def disk_cells(R: float, h: float):
    """Annular-sector cells of D(0, R): centers, areas, ring and sector indices.

    Ring k spans [k h', (k+1) h'] with h' = R / ceil(R / h); each ring is cut
    into n_k sectors of arc length about h at the mid radius. The area of a
    cell is dtheta (cosh b - cosh a); its center sits at the radius halving it.
    """
    K = max(1, math.ceil(R / h))
    hr = R / K
    centers, areas, ring, nk = [], [], [], []
    for k in range(K):
        a, b = k * hr, (k + 1) * hr
        mid = math.acosh((math.cosh(a) + math.cosh(b)) / 2)
        n = max(3, math.ceil(2 * math.pi * math.sinh(mid) / h))
        th = 2 * math.pi * (np.arange(n) + 0.5) / n
        centers.append(hyp.polar_point(np.full(n, mid), th))
        areas.append(np.full(n, 2 * math.pi / n * (math.cosh(b) - math.cosh(a))))
        ring.append(np.full(n, k))
        nk.append(n)
    return np.concatenate(centers), np.concatenate(areas), np.concatenate(ring), nk


def _scheme_cell_pairs(centers, ring, nk):
    blocks = list(iter_scheme_cell_pairs(centers, nk))
    return np.concatenate([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])


def iter_scheme_cell_pairs(centers, nk):
    """Blocks of cell pairs (i, j) with c(x_i, x_j) = 1 for the hyperbolic scheme.

    Candidate partners in ring l of a cell in ring k form a contiguous arc of
    sectors, found from the law of cosines; the exact predicate is then
    applied to the candidates.
    """
    starts = np.concatenate([[0], np.cumsum(nk)])
    rho = hyp.radius_from_origin(centers)
    ang = np.angle(centers)
    K = len(nk)
    rk = np.array([rho[starts[k]] for k in range(K)])
    c1 = math.cosh(1.0)
    for k in range(K):
        ik = np.arange(starts[k], starts[k + 1])
        for l in range(K):
            if rk[l] > rk[k] + 1e-12 or rk[k] - rk[l] > 1.0:
                continue
            sa, sb = math.sinh(rk[k]), math.sinh(rk[l])
            if sa * sb < 1e-15:
                phi_max = math.pi
            else:
                cosv = (math.cosh(rk[k]) * math.cosh(rk[l]) - c1) / (sa * sb)
                phi_max = math.pi if cosv <= -1 else (math.acos(min(1.0, cosv)) if cosv < 1 else 0.0)
            n = nk[l]
            step = 2 * math.pi / n
            span = min(n, 2 * int(math.ceil(phi_max / step)) + 3)
            base = np.floor((ang[ik] % (2 * math.pi)) / step - 0.5).astype(np.int64) - span // 2
            offs = (base[:, None] + np.arange(span)[None, :]) % n
            if span == n:
                offs = np.broadcast_to(np.arange(n), (len(ik), n))
            jj = starts[l] + offs
            ii = np.broadcast_to(ik[:, None], jj.shape)
            d = hyp.distance(centers[ii], centers[jj])
            keep = d <= 1.0
            yield ii[keep], jj[keep]


@dataclass
class ConversionResult:
    chain: SparseChain1
    certificate: EffectivenessCertificate
    window: Window
    trusted: tuple
    scale: float
    margin: float | None
    tile_check: CommutationReport | None = None
    cells: int = 0

    def as_dict(self) -> dict:
        d = {
            "lattice_points": len(self.window.points),
            "trusted_points": len(self.trusted),
            "chain_entries": len(self.chain.entries),
            "cells": self.cells,
            "scale": self.scale,
            "margin": self.margin,
            "certificate": self.certificate.as_dict(),
        }
        if self.tile_check is not None:
            d["tile_check"] = self.tile_check.as_dict()
        return d


def _cell_subsamples(R: float, h: float, m: int):
    """m x m sub-points per cell (in the same order as :func:`disk_cells`)."""
    K = max(1, math.ceil(R / h))
    hr = R / K
    out = []
    for k in range(K):
        a, b = k * hr, (k + 1) * hr
        mid = math.acosh((math.cosh(a) + math.cosh(b)) / 2)
        n = max(3, math.ceil(2 * math.pi * math.sinh(mid) / h))
        # radii splitting the ring into m equal-area bands, angles at sub-sector midpoints
        ch = math.cosh(a) + (math.cosh(b) - math.cosh(a)) * (np.arange(m) + 0.5) / m
        rs = np.arccosh(ch)
        th = 2 * math.pi * (np.arange(n)[:, None] + (np.arange(m)[None, :] + 0.5) / m) / n
        pts = hyp.polar_point(rs[None, None, :], th[:, :, None])
        out.append(pts.reshape(n, m * m))
    return np.concatenate(out)


def cell_ownership(tiling: "Tiling", R: float, h: float, m: int = 4):
    """Fraction of each cell's area in each tile, from m x m equal-area sub-points.

    Returns (cell, tile, fraction) arrays sorted by cell.
    """
    sub = _cell_subsamples(R, h, m)
    owner = tiling.project_index(sub)
    if np.any(owner < 0):
        raise CoverageError("cells outside every tile; the net does not cover the window",
                            [complex(z) for z in sub[owner < 0][:10]])
    n_cells = sub.shape[0]
    n_lat = len(tiling.lattice)
    key = (np.arange(n_cells)[:, None] * n_lat + owner).reshape(-1)
    uniq, counts = np.unique(key, return_counts=True)
    return uniq // n_lat, uniq % n_lat, counts / (m * m)


def mu_ps_to_ponzi_disk(tiling: Tiling, R: float, epsilon: float, cell_size: float = 0.07,
                        witness_limit: float = 2.0, witness_step: float = 0.25,
                        spec: hyp.QuadratureSpec | None = None, tile_samples: int = 30,
                        subsamples: int = 4) -> ConversionResult:
    """Push the hyperbolic scheme c/epsilon through the tiling projection.

    The 4-D integrals (p_* c)(l1, l2) = int_{tile l1 x tile l2} c are computed
    on the cell discretization of D(0, R): c is evaluated at cell centers and
    each cell's area is split between tiles by sub-sampling. The pushed
    boundary is trusted at lattice points with d(0, l) + delta + 1 <= R, so
    the effectiveness search runs with ``trusted_margin = 1 + delta``. For up
    to ``tile_samples`` trusted points the pushed boundary is compared with
    the quadrature of the closed form over the tile.
    """
    centers, areas, _, nk = disk_cells(R, cell_size)
    cell, tile_idx, frac = cell_ownership(tiling, R, cell_size, subsamples)
    ptr = np.searchsorted(cell, np.arange(len(centers) + 1))
    cnt = np.diff(ptr)
    n_lat = len(tiling.lattice)
    dense = np.zeros(n_lat * n_lat)
    inflow = np.zeros(len(centers))
    outflow = np.zeros(len(centers))
    for ii, jj in iter_scheme_cell_pairs(centers, nk):
        inflow += np.bincount(jj, weights=areas[ii], minlength=len(centers))
        outflow += np.bincount(ii, weights=areas[jj], minlength=len(centers))
        # expand each cell pair over the owners of both cells
        rep_i = cnt[ii]
        pi = np.repeat(np.arange(len(ii)), rep_i)
        oi = ptr[ii][pi] + (np.arange(len(pi)) - np.repeat(np.cumsum(rep_i) - rep_i, rep_i))
        rep_j = cnt[jj[pi]]
        pj = np.repeat(np.arange(len(pi)), rep_j)
        oj = ptr[jj[pi]][pj] + (np.arange(len(pj)) - np.repeat(np.cumsum(rep_j) - rep_j, rep_j))
        oi = oi[pj]
        pair = pi[pj]
        vals = areas[ii[pair]] * frac[oi] * areas[jj[pair]] * frac[oj] / epsilon
        dense += np.bincount(tile_idx[oi] * n_lat + tile_idx[oj], weights=vals, minlength=n_lat * n_lat)
    nz = np.nonzero(dense)[0]
    uniq, sums = nz, dense[nz]
    lat = tiling.lattice
    entries = {(lat[int(k // n_lat)], lat[int(k % n_lat)]): float(v)
               for k, v in zip(uniq, sums) if k // n_lat != k % n_lat}
    win = disk_point_window(lat, R, name=f"{n_lat}-point net of D(0,{R:g})")
    margin_pts = 1.0 + tiling.delta
    chain = SparseChain1(entries, MetricRadius(1.0 + 2 * tiling.delta, win), frozenset(win.points))
    phi = boundary(chain)
    cands = radius_schedule(win, witness_limit, witness_step)
    cert = check_effective(phi, cands, win, trusted_margin=margin_pts)
    margin = float(cert.min_interior_sum) - 1 if cert.min_interior_sum is not None else None
    trusted = win.interior(margin_pts)

    tile_check = None
    if tile_samples and trusted:
        spec = spec or hyp.QuadratureSpec(abs_tol=1e-5)
        # per-cell error of the discretized boundary against the closed form
        rho = hyp.radius_from_origin(centers)
        inner = rho <= R - 1.0
        cell_err = float(np.max(np.abs((inflow - outflow)[inner] - boundary_closed_form(rho[inner]))))
        picks = trusted[:: max(1, len(trusted) // tile_samples)][:tile_samples]
        lhs, rhs = {}, {}
        worst, arg, tol = 0.0, None, 0.0
        for lam in picks:
            pred = tiling.tile(lam)
            lhs[lam] = phi[lam]
            q = hyp.integrate_ball(lambda w: np.asarray(pred(w), dtype=float), lam, tiling.delta, spec,
                                   weight=lambda w: boundary_closed_form(hyp.radius_from_origin(w)))
            area = hyp.area_integral(pred, lam, tiling.delta, spec).value
            rhs[lam] = q.value / epsilon
            tol = max(tol, tile_tolerance(cell_err, area, cell_size, subsamples, tiling.delta, epsilon)
                      + 2 * spec.abs_tol / epsilon)
            d = abs(lhs[lam] - rhs[lam])
            if d > worst:
                worst, arg = d, lam
        tile_check = CommutationReport(lhs, rhs, worst, arg, tol)
    return ConversionResult(chain, cert, win, trusted, 1 / epsilon, margin, tile_check, len(centers))


def tile_tolerance(cell_err: float, tile_area: float, cell_size: float, subsamples: int,
                   delta: float, epsilon: float) -> float:
    """Discretization slack for comparing a pushed boundary with its tile integral.

    Two sources: the per-cell boundary error times the tile area, and the
    ownership split, whose error is confined to a band of width about one
    sub-cell diameter along the tile edge (length <= 2 pi sinh delta), weighted
    by sup |boundary| = mu(B_1).
    """
    band = 2 * math.pi * math.sinh(delta) * math.sqrt(2) * cell_size / subsamples
    return (cell_err * tile_area + hyp.ball_volume(1.0) * band) / epsilon


def mu_ps_to_ponzi(c, tiling: Tiling, mu: MeasureSpec, candidates: Sequence[Relation] | None = None,
                   trusted_margin: float = 0.0) -> ConversionResult:
    """Discrete version: push a tabulated chain through the tiling projection
    onto counting measure on the lattice, then certify effectiveness."""
    lat_window = _lattice_window(tiling)
    target = counting_on(tiling.lattice, lat_window)
    pushed = pushforward_chain1(tiling.project, c, mu, target)
    chain = SparseChain1(dict(pushed.table), None, frozenset(tiling.lattice))
    phi = boundary(chain)
    if candidates is None:
        candidates = radius_schedule(lat_window, lat_window.diameter(), 1.0)
    else:
        candidates = list(candidates)
    try:
        cert = check_effective(phi, candidates, lat_window, trusted_margin)
    except NegativeChainError:
        # a negative pushed boundary on the trusted interior: report it as the failure witness
        trusted = lat_window.interior(trusted_margin)
        worst = min(trusted, key=lambda x: phi[x])
        cert = EffectivenessCertificate(None, phi[worst], trusted, False, worst, trusted_margin)
    margin = (cert.min_interior_sum - 1) if cert.min_interior_sum is not None else None
    return ConversionResult(chain, cert, lat_window, lat_window.interior(trusted_margin), 1, margin)


def _lattice_window(tiling: Tiling) -> Window:
    base = tiling.base_relation.window
    from .coarse_core import Window as W
    return W(tiling.lattice, base.metric, base.depth, name=f"lattice of {base.name}",
             group=base.group)


def tile_boundary_sums(tiling: Tiling, c, mu: MeasureSpec) -> dict:
    """sum_{x in tile(l)} (boundary c)(x) mu{x}: the push of the boundary."""
    bd = table_boundary(_table1(c), mu)
    return {lam: sum(bd.get(x, 0) * mu.mass(x) for x in tiling.tiles[lam]) for lam in tiling.lattice}


# ---------------------------------------------------------------------------
# discrete Ponzi scheme -> measure Ponzi scheme


def constant_on_S_check(e: Relation, S, mu: MeasureSpec, spec: hyp.QuadratureSpec | None = None,
                        rel_tol: float = 1e-6):
    """C with mu(E_s) = C for all s in S, or NotConstantOnS naming the worst s."""
    S = list(S)
    if not S:
        raise ValueError("S is empty")
    spec = spec or hyp.QuadratureSpec(abs_tol=1e-5)
    vals = {s: measure_of_section(mu, e, s, spec) for s in S}
    ref = vals[S[0]]
    tol = rel_tol * abs(ref) if mu.discrete else 10 * spec.abs_tol
    worst = max(S, key=lambda s: abs(vals[s] - ref))
    if abs(vals[worst] - ref) > tol:
        raise NotConstantOnS(f"mu(E_s) = {vals[worst]} at s = {worst!r} but {ref} at s = {S[0]!r}", worst)
    if mu.discrete:
        return ref
    return float(np.mean(list(vals.values())))


@dataclass
class LiftResult:
    chain: MuChain1
    scaled: MuChain1
    C: object
    residual: float
    samples: int
    certificate_min: object = None
    witness: Relation | None = None
    passed: bool = False

    def as_dict(self) -> dict:
        f = (lambda v: v if v is None or isinstance(v, (int, float)) else float(v))
        return {"C": f(self.C), "identity_residual": f(self.residual), "samples": self.samples,
                "certificate_min": f(self.certificate_min),
                "witness": repr(self.witness) if self.witness is not None else None,
                "pass": self.passed}


def _lift_table(theta: SparseChain1, e: Relation) -> dict:
    out = defaultdict(int)
    for (s1, s2), v in theta.entries.items():
        if v:
            for x in e.section(s1):
                for y in e.section(s2):
                    out[(x, y)] += v
    return {k: v for k, v in out.items() if v}


def _lift_density(theta: SparseChain1, r0: float):
    pairs = [(complex(a), complex(b), v) for (a, b), v in theta.entries.items() if v]
    A = np.array([p[0] for p in pairs])
    B = np.array([p[1] for p in pairs])
    V = np.array([float(p[2]) for p in pairs])

    def density(x, y):
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        shape = np.broadcast(x, y).shape
        xs = np.broadcast_to(x, shape).reshape(-1)
        ys = np.broadcast_to(y, shape).reshape(-1)
        inx = hyp.distance(xs[:, None], A[None, :]) <= r0
        iny = hyp.distance(ys[:, None], B[None, :]) <= r0
        return ((inx & iny) @ V).reshape(shape)
    return density


def ponzi_to_mu_ps(theta: SparseChain1, e: Relation, mu: MeasureSpec, samples=None,
                   spec: hyp.QuadratureSpec | None = None,
                   theta_certificate: EffectivenessCertificate | None = None,
                   trusted_margin: float = 0.0) -> LiftResult:
    """Lift theta to c(x, y) = sum theta(s1, s2) chi_{E_s1}(x) chi_{E_s2}(y).

    Verifies boundary(c)(x) = C sum_s boundary(theta)(s) chi_{E_s}(x) at the
    sample points (all points of E[S] on discrete windows) and returns c / C^2.
    With a certificate for theta, the mu-effectiveness of c / C^2 is checked
    with witness E' o E.
    """
    spec = spec or hyp.QuadratureSpec(abs_tol=1e-5)
    S = list(theta.support_set)
    C = constant_on_S_check(e, S, mu, spec)
    bd_theta = boundary(theta).entries

    if mu.discrete:
        table = _lift_table(theta, e)
        reach = 2 * e.reach + max((mu.window.metric(a, b) for a, b in table), default=0)
        ent = _support_relation(table, mu.window)
        chain = MuChain1.from_table(table, ent, tag="lift")
        if samples is None:
            samples = sorted({x for s in S for x in e.section(s)}, key=_sort_key)

        def rhs(x):
            return C * sum(bd_theta.get(s, 0) for s in S if e.contains(s, x))
        bd_c = table_boundary(table, mu)
        residual = max((abs(bd_c.get(x, 0) - rhs(x)) for x in samples), default=0)
        scaled = chain.scaled(Fraction(1, 1) / (C * C) if isinstance(C, (int, Fraction)) else 1 / C ** 2)
    else:
        r0 = e.reach
        dens = _lift_density(theta, r0)
        span = max((hyp.distance(complex(a), complex(b)) for (a, b) in theta.entries), default=0)
        reach = 2 * r0 + float(span)
        chain = MuChain1(dens, float(max(abs(v) for v in theta.entries.values())),
                         MetricRadius(reach, mu.window), tag="lift")
        if samples is None:
            raise ValueError("disk lifts need explicit sample points")
        Sa = np.array([complex(s) for s in S])
        bd = np.array([float(bd_theta.get(s, 0)) for s in S])
        residual = 0.0
        for x in samples:
            xc = complex(hyp.as_complex(x))
            lhs = boundary_mu(chain, mu, xc, spec)
            r = C * float(bd[hyp.distance(xc, Sa) <= r0].sum())
            residual = max(residual, abs(lhs - r))
        scaled = chain.scaled(1 / C ** 2)

    cert_min, witness = None, None
    if theta_certificate is not None and theta_certificate.witness_relation is not None:
        witness = _compose_witness(theta_certificate.witness_relation, e, mu.window)
        if mu.discrete:
            sbd = table_boundary(scaled.table, mu)
            pts = mu.window.interior(trusted_margin + witness.reach + e.reach)
            vals = [sum(sbd.get(y, 0) * mu.mass(y) for y in witness.section(x)) for x in pts]
            cert_min = min(vals) if vals else None
    tol = 0 if mu.discrete else 10 * spec.abs_tol
    passed = residual <= tol and (theta_certificate is None or (cert_min is not None and cert_min >= 1))
    return LiftResult(chain, scaled, C, residual, len(samples), cert_min, witness, passed)


def _support_relation(table, window):
    from .coarse_core import ExplicitPairs
    return ExplicitPairs(frozenset(table), window)


def _compose_witness(e_prime: Relation, e: Relation, window: Window) -> Relation:
    """A relation containing E' o E on the window."""
    if isinstance(e_prime, MetricRadius) and isinstance(e, MetricRadius):
        return MetricRadius(e_prime.r + e.r, window)
    if e_prime.window is window and e.window is window:
        return compose(e_prime, e)
    return MetricRadius(e_prime.reach + e.reach, window)


def hyperbolic_lift_fixture(r0: float = 0.5, n_samples: int = 50, seed: int = 0, R: float = 4.0):
    """A small chain on disk points together with E = MetricRadius(r0) and sample points.

    S is the origin plus a hexagon at distance 1.2; theta carries random
    integers in [-2, 2] on pairs at distance <= 1.3. Samples are drawn
    uniformly (in area) from D(0, 2).
    """
    rng = np.random.default_rng(seed)
    S = [0j] + [complex(hyp.polar_point(1.2, k * math.pi / 3)) for k in range(6)]
    entries = {}
    for a in S:
        for b in S:
            if a != b and hyp.distance(a, b) <= 1.3:
                v = int(rng.integers(-2, 3))
                if v:
                    entries[(a, b)] = v
    window = disk_window(R)
    theta = SparseChain1(entries, None, frozenset(S))
    u = rng.random(n_samples)
    rho = np.arccosh(1 + u * (math.cosh(2.0) - 1))
    th = 2 * math.pi * rng.random(n_samples)
    samples = [complex(z) for z in hyp.polar_point(rho, th)]
    from .measure_chains import hyperbolic_area
    return theta, MetricRadius(r0, window), hyperbolic_area(window), samples
