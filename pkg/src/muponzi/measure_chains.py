"""Measure chains: bounded densities on X x X with a controlled support, their
integral boundary, and the hyperbolic-plane scheme

    c(z, z') = 1  if d(z, z') <= 1 and d(z, 0) >= d(z', 0),  else 0,

whose boundary is a radial function with a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import hyperbolic as hyp
from .coarse_core import MetricRadius, Relation, Window, disk_window, transpose
from .discrete_chains import SparseChain1


@dataclass(frozen=True)
class MeasureSpec:
    """``hyperbolic_area`` on a disk window, or (weighted) counting measure on S."""
    kind: str
    window: Window
    weights: Mapping | None = None

    def __post_init__(self):
        if self.kind not in ("hyperbolic_area", "counting", "weighted_counting"):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == "hyperbolic_area":
            if self.window.discrete:
                raise ValueError("hyperbolic_area lives on a continuous disk window")
        else:
            if self.weights is None:
                raise ValueError("counting measures need a support set")
            if any(w < 0 for w in self.weights.values()):
                raise ValueError("counting weights must be non-negative")

    @property
    def discrete(self) -> bool:
        return self.kind != "hyperbolic_area"

    @property
    def support(self):
        return self.weights.keys()

    def mass(self, x):
        return self.weights.get(x, 0)

    def of_set(self, points) -> object:
        return sum(self.weights.get(p, 0) for p in points)


def hyperbolic_area(window: Window | None = None, R: float = 30.0) -> MeasureSpec:
    return MeasureSpec("hyperbolic_area", window if window is not None else disk_window(R))


def counting_on(S, window: Window) -> MeasureSpec:
    """Counting measure restricted to S."""
    for s in S:
        window.require(s)
    return MeasureSpec("counting", window, {s: 1 for s in S})


def weighted_counting(weights: Mapping, window: Window) -> MeasureSpec:
    return MeasureSpec("weighted_counting", window, dict(weights))


@dataclass
class MuChain1:
    """Bounded density on X x X vanishing outside ``support_entourage``.

    For discrete measures ``table`` may hold the non-zero values explicitly.
    For disk windows ``density`` must be numpy-vectorised.
    """
    density: Callable
    sup_bound: float
    support_entourage: Relation
    tag: str = ""
    table: dict | None = None

    @classmethod
    def from_table(cls, entries: Mapping, support_entourage: Relation, tag: str = "") -> "MuChain1":
        entries = {k: v for k, v in entries.items() if v}
        bound = max((abs(v) for v in entries.values()), default=0)
        return cls(lambda x, y: entries.get((x, y), 0), bound, support_entourage, tag, entries)

    @classmethod
    def from_sparse(cls, theta: SparseChain1, tag: str = "") -> "MuChain1":
        return cls.from_table(theta.entries, theta.support_entourage, tag)

    def scaled(self, a) -> "MuChain1":
        if self.table is not None:
            return MuChain1.from_table({k: a * v for k, v in self.table.items()},
                                       self.support_entourage, self.tag)
        dens = self.density
        return MuChain1(lambda x, y: a * dens(x, y), abs(a) * self.sup_bound,
                        self.support_entourage, self.tag)


@dataclass
class MuChain0:
    evaluator: Callable
    sup_bound: float
    table: dict | None = None

    @classmethod
    def from_table(cls, entries: Mapping) -> "MuChain0":
        entries = dict(entries)
        bound = max((abs(v) for v in entries.values()), default=0)
        return cls(lambda x: entries.get(x, 0), bound, entries)

    def __call__(self, x):
        return self.evaluator(x)


# ---------------------------------------------------------------------------


def measure_of_section(mu: MeasureSpec, e: Relation, x, spec: hyp.QuadratureSpec | None = None):
    """mu(E_x): exact for counting measures, quadrature on the disk."""
    if mu.discrete:
        return mu.of_set(e.section(x))
    spec = spec or hyp.QuadratureSpec()
    if isinstance(e, MetricRadius):
        return hyp.area_integral(lambda w: hyp.distance(x, w) <= e.r, x, e.r, spec).value
    reach = e.reach
    if not math.isfinite(reach):
        raise ValueError(f"section of {e!r} is unbounded")
    return hyp.area_integral(lambda w: e.contains(x, w), x, reach, spec).value


def uniformity_check(mu: MeasureSpec, e: Relation, samples, spec: hyp.QuadratureSpec | None = None):
    """sup over samples of mu(E_x); returns (sup, argmax)."""
    best, arg = None, None
    for x in samples:
        v = measure_of_section(mu, e, x, spec)
        if best is None or v > best:
            best, arg = v, x
    if best is None:
        raise ValueError("no sample points")
    return best, arg


def boundary_mu(c: MuChain1, mu: MeasureSpec, x, spec: hyp.QuadratureSpec | None = None):
    """int c(y, x) dmu(y) - int c(x, y) dmu(y).

    Discrete measures: exact sums over the sections of E_c^T and E_c at x.
    Disk: one quadrature of the piecewise-constant y -> c(y, x) - c(x, y) over
    the ball of radius reach(E_c) about x.
    """
    e = c.support_entourage
    if mu.discrete:
        mu.window.require(x)
        w = mu.weights
        inflow = sum(c.density(y, x) * w[y] for y in transpose(e).section(x) if y in w)
        outflow = sum(c.density(x, y) * w[y] for y in e.section(x) if y in w)
        return inflow - outflow
    spec = spec or hyp.QuadratureSpec()
    x = complex(hyp.as_complex(x))

    def net(y):
        return np.asarray(c.density(y, x), dtype=float) - np.asarray(c.density(x, y), dtype=float)

    return hyp.integrate_ball(net, x, e.reach, spec).value


def boundary_bound(c: MuChain1, mu: MeasureSpec, x, spec: hyp.QuadratureSpec | None = None):
    """||c||_inf (mu((E_c^T)_x) + mu((E_c)_x)), the a-priori bound on |boundary(x)|."""
    e = c.support_entourage
    if not mu.discrete and isinstance(e, MetricRadius):
        return c.sup_bound * 2 * hyp.ball_volume(e.r)
    return c.sup_bound * (measure_of_section(mu, transpose(e), x, spec)
                          + measure_of_section(mu, e, x, spec))


# ---------------------------------------------------------------------------
# the hyperbolic scheme


def hyperbolic_scheme(z1, z2):
    """1 where d(z1, z2) <= 1 and d(z1, 0) >= d(z2, 0), else 0 (vectorised)."""
    z1 = hyp.as_complex(z1)
    z2 = hyp.as_complex(z2)
    close = hyp.distance(z1, z2) <= 1.0
    # |z| is monotone in d(0, z), so compare moduli directly
    outer = np.abs(z1) >= np.abs(z2)
    out = (close & outer).astype(int) if np.ndim(close) or np.ndim(outer) else int(close and outer)
    return out


def hyperbolic_scheme_chain(window: Window | None = None) -> MuChain1:
    window = window if window is not None else disk_window(30.0)
    return MuChain1(hyperbolic_scheme, 1.0, MetricRadius(1.0, window), tag="hyperbolic scheme")


CASE_SPLIT = 0.5


def boundary_closed_form(r, split: float = CASE_SPLIT):
    """Boundary of the hyperbolic scheme at a point with d(0, z) = r.

    r <= split: 2 pi (cosh 1 - 1) - 4 pi (cosh r - 1)   (outflow region is B_r(0))
    r >  split: 2 pi (cosh 1 - 1) - 2 * lens area       (outflow region is a lens)
    The lens only exists for r > 1/2, so a split below 1/2 raises on (split, 1/2].
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise hyp.GeometryError("r must be non-negative")
    ball = hyp.ball_volume(1.0)
    out = np.empty_like(arr)
    flat = arr.reshape(-1)
    res = out.reshape(-1)
    for i, v in enumerate(flat):
        if v <= split:
            res[i] = ball - 4 * math.pi * (math.cosh(v) - 1)
        else:
            res[i] = ball - 2 * hyp.lens_geometry(float(v)).lens_area
    return out if out.ndim else float(out)


def case1_value(r: float) -> float:
    """2 pi (cosh 1 - 1) - 4 pi (cosh r - 1)."""
    return hyp.ball_volume(1.0) - 4 * math.pi * (math.cosh(r) - 1)


def case2_value(r: float) -> float:
    """The lens branch extended to r = 1/2, where the lens degenerates to B_{1/2}(0).

    Same stable angle formulas as :func:`hyperbolic.lens_geometry`; at r = 1/2
    they give alpha = pi and beta = 0.
    """
    if r < 0.5:
        raise hyp.GeometryError(f"the lens branch needs r >= 1/2, got {r}")
    alpha = 2.0 * math.asin(min(1.0, math.sinh(0.5) / math.sinh(r)))
    t, T = math.tanh(0.5), math.tanh(r)
    beta = math.atan2(math.sqrt(max(0.0, (T - t) * (T + t))), t)
    lens = 2 * alpha * math.cosh(r) + 2 * beta * (math.cosh(1.0) + 1) - 2 * math.pi
    return hyp.ball_volume(1.0) - 2 * lens


def arctan_tail_constant() -> float:
    """(1+e)^2 arctan((e-1)/(2 sqrt e)) / (2e) - (e-1)/e."""
    e = math.e
    return (1 + e) ** 2 * math.atan((e - 1) / (2 * math.sqrt(e))) / (2 * e) - (e - 1) / e


def closed_form_limit() -> float:
    """lim_{r -> inf} of the r > 1/2 branch: 4 arctan(sinh 1/2)(cosh 1 + 1) - 8 sinh 1/2.

    Uses alpha cosh r -> 2 sinh(1/2) and beta -> pi/2 - arctan(sinh 1/2).
    """
    return 4 * math.atan(math.sinh(0.5)) * (math.cosh(1.0) + 1) - 8 * math.sinh(0.5)


def epsilon_bound() -> float:
    """min(value at r = 1/2 of the small-r branch, tail constant)."""
    case1 = hyp.ball_volume(1.0) - 4 * math.pi * (math.cosh(0.5) - 1)
    return min(case1, arctan_tail_constant())


@dataclass
class MuPSCertificate:
    points: list
    values: list
    min_value: float
    argmin: object
    epsilon: float
    scaled_min: float
    witness: Relation | None
    witness_integral_min: float | None
    residuals: list = field(default_factory=list)
    bound_ok: bool = True
    tol: float = 0.0
    residual_tol: float | None = None
    passed: bool = False

    @property
    def max_residual(self):
        return max((abs(r) for r in self.residuals), default=0.0)

    def as_dict(self) -> dict:
        f = _jsonable
        return {
            "pass": self.passed,
            "grid_points": len(self.points),
            "min_boundary": f(self.min_value),
            "argmin": f(self.argmin),
            "epsilon": f(self.epsilon),
            "scaled_min": f(self.scaled_min),
            "witness": repr(self.witness),
            "witness_integral_min": f(self.witness_integral_min),
            "max_residual": f(self.max_residual) if self.residuals else None,
            "residual_tol": self.residual_tol,
            "well_definedness_bound_ok": self.bound_ok,
        }


def _ratio(a, b):
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return Fraction(a) / Fraction(b)
    return float(a) / float(b)


def _jsonable(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def verify_mu_ps(c: MuChain1, mu: MeasureSpec, grid: Sequence, e_witness: Relation,
                 spec: hyp.QuadratureSpec | None = None, epsilon=None,
                 closed_form: Callable | None = None, residual_tol: float = 1e-4,
                 grid_margin: float | None = None, witness_check: bool = True,
                 workers: int = 1) -> MuPSCertificate:
    """Evaluate the boundary of ``c`` on a grid and certify c/epsilon as effective.

    * ``min boundary >= epsilon * (1 - abs_tol)`` on the grid;
    * the quadrature path agrees with ``closed_form(d(0, x))`` within
      ``residual_tol`` (disk case, when a closed form is given);
    * the section integral of boundary(c/epsilon) over the witness relation is
      >= 1 at every grid point. On the disk this integral uses the closed
      form (or, failing that, the grid minimum as a pointwise lower bound);
      for counting measures it is an exact sum.
    """
    spec = spec or hyp.QuadratureSpec(abs_tol=1e-5)
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")
    margin = c.support_entourage.reach if grid_margin is None else grid_margin
    for x in grid:
        if mu.window.depth(x) < margin - 1e-12:
            raise ValueError(f"grid point {x!r} is not in the window interior (margin {margin})")

    if workers > 1 and not mu.discrete:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as ex:
            values = list(ex.map(lambda x: boundary_mu(c, mu, x, spec), grid))
    else:
        values = [boundary_mu(c, mu, x, spec) for x in grid]
    i_min = min(range(len(values)), key=lambda i: values[i])
    vmin = values[i_min]
    if epsilon is None:
        epsilon = vmin if vmin > 0 else 0

    bound_ok = True
    if c.sup_bound:
        for x, v in zip(grid, values):
            if abs(v) > boundary_bound(c, mu, x, spec) + 10 * spec.abs_tol:
                bound_ok = False

    residuals = []
    if closed_form is not None and not mu.discrete:
        residuals = [v - closed_form(hyp.radius_from_origin(x)) for x, v in zip(grid, values)]

    tol = 0 if mu.discrete else spec.abs_tol
    ok = epsilon > 0 and vmin >= epsilon * (1 - tol)
    scaled_min = _ratio(vmin, epsilon) if epsilon else 0

    witness_min = None
    if witness_check and epsilon:
        if mu.discrete:
            # only grid points whose witness section stays at trusted depth
            bd = dict(zip(grid, values))
            deep = [x for x in grid if mu.window.depth(x) >= margin + e_witness.reach - 1e-12]
            sums = []
            for x in deep:
                s = 0
                for y in e_witness.section(x):
                    if y in mu.weights:
                        v = bd[y] if y in bd else boundary_mu(c, mu, y, spec)
                        s += v * mu.weights[y]
                sums.append(_ratio(s, epsilon))
            witness_min = min(sums) if sums else None
        elif closed_form is not None:
            r_w = e_witness.reach
            sums = []
            for x in grid:
                xc = complex(hyp.as_complex(x))
                q = hyp.integrate_ball(lambda w, xc=xc: hyp.distance(xc, w) <= r_w, xc, r_w, spec,
                                       weight=lambda w: closed_form(hyp.radius_from_origin(w)))
                sums.append(q.value / epsilon)
            witness_min = min(sums)
        else:
            witness_min = min(scaled_min * measure_of_section(mu, e_witness, x, spec) for x in grid)
        ok = ok and witness_min is not None and witness_min >= 1
    if residuals:
        ok = ok and max(abs(r) for r in residuals) <= residual_tol
    ok = ok and bound_ok
    return MuPSCertificate(grid, values, vmin, grid[i_min], epsilon, scaled_min, e_witness,
                           witness_min, residuals, bound_ok, tol,
                           residual_tol if residuals else None, bool(ok))
